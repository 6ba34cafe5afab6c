"""Minimal dense-array neural engine: layers with hand-written backward
passes, weighted softmax cross entropy, Adam, He initialization, and a
finite-difference gradient checker."""

from .gradcheck import GradCheckReport, grad_check
from .layers import (BatchNorm2d, Conv2d, CropConcat, Dropout, MaxPool2,
                     ReLU, Sequential, UpConv2d, he_init)
from .loss import log_softmax, softmax, weighted_softmax_xent
from .optim import Adam

__all__ = [
    "Adam", "BatchNorm2d", "Conv2d", "CropConcat", "Dropout", "GradCheckReport",
    "MaxPool2", "ReLU", "Sequential", "UpConv2d", "grad_check", "he_init",
    "log_softmax", "softmax", "weighted_softmax_xent",
]
