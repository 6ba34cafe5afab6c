"""Central finite-difference verification of analytic gradients.

Works on anything exposing forward/backward plus params()/grads() dicts
(a Sequential or a whole network).  Runs in whatever dtype the fragment
was built with; use float64 for meaningful tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loss import weighted_softmax_xent


@dataclass
class GradCheckReport:
    max_rel_err: float
    per_tensor: dict[str, float]

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_err <= tolerance


def _rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(1.0, abs(a), abs(n))


def grad_check(net, x, rng, labels=None, weights=None, l2_lambda=0.0,
               l2_keys=(), h=1e-3, max_probes=150, train=True) -> GradCheckReport:
    """Compare backward() output against central differences of the loss.

    With ``labels`` the loss is the weighted softmax cross entropy
    (plus optional L2 over ``l2_keys`` parameters); without labels a fixed
    random linear projection of the output is used as the scalar head.
    """
    x = np.array(x, np.float64)
    proj = None

    def loss_of(inp):
        y = net.forward(inp, train=train)
        nonlocal proj
        if labels is None:
            if proj is None:
                proj = rng.standard_normal(y.shape)
            return float((proj * y).sum()), proj
        l2 = [net.params()[k] for k in l2_keys]
        val, dlogits = weighted_softmax_xent(y, labels, weights, l2_lambda, l2)
        return val, dlogits

    _, dy = loss_of(x)
    dx = net.backward(np.array(dy, np.float64))
    analytic = dict(net.grads())
    if l2_lambda:
        for k in l2_keys:
            analytic[k] = analytic[k] + 2.0 * l2_lambda * net.params()[k]
    analytic["<input>"] = dx

    tensors = {"<input>": x}
    tensors.update(net.params())
    per_tensor = {}
    for name, tensor in tensors.items():
        flat = tensor.reshape(-1)
        n = flat.size
        idx = np.arange(n) if n <= max_probes else np.sort(
            rng.choice(n, size=max_probes, replace=False))
        worst = 0.0
        ana_flat = analytic[name].reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            fp, _ = loss_of(x)
            flat[i] = orig - h
            fm, _ = loss_of(x)
            flat[i] = orig
            worst = max(worst, _rel_err(float(ana_flat[i]), (fp - fm) / (2.0 * h)))
        per_tensor[name] = worst
    return GradCheckReport(max(per_tensor.values()), per_tensor)
