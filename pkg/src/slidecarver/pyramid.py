"""Multiresolution slide container and its on-disk format.

A pyramid is a directory holding one binary P6 PPM per level plus a
``manifest.txt`` describing level geometry, pixel spacing and the sentinel
color used for not-scanned regions.  Ground-truth masks ride along as
binary P5 PGM files (255 = tissue, 0 = background).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent on-disk data."""


@dataclass(frozen=True)
class Level:
    width: int
    height: int
    spacing_x: float
    spacing_y: float
    pixels: np.ndarray  # (height, width, 3) uint8, read-only


@dataclass(frozen=True)
class PyramidImage:
    levels: list[Level]
    empty_color: tuple[int, int, int] = (0, 0, 0)


@dataclass(frozen=True)
class Patch:
    pixels: np.ndarray  # (h, w, 3) uint8
    level: int
    x: int
    y: int
    is_empty: bool


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _read_token(f) -> bytes:
    """Read one whitespace-delimited PNM header token, skipping # comments."""
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise DataError("truncated PNM header")
        if c == b"#":
            while c not in (b"\n", b""):
                c = f.read(1)
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def _read_pnm(path: str, magic: bytes) -> np.ndarray:
    with open(path, "rb") as f:
        if f.read(2) != magic:
            raise DataError(f"{path}: not a {magic.decode()} file")
        w = int(_read_token(f))
        h = int(_read_token(f))
        maxval = int(_read_token(f))
        if maxval != 255:
            raise DataError(f"{path}: unsupported maxval {maxval}")
        nch = 3 if magic == b"P6" else 1
        data = f.read(w * h * nch)
    if len(data) != w * h * nch:
        raise DataError(f"{path}: truncated pixel payload")
    arr = np.frombuffer(data, dtype=np.uint8).reshape(h, w, nch)
    return arr[:, :, 0] if nch == 1 else arr


def read_ppm(path: str) -> np.ndarray:
    """Read a binary P6 PPM into an (h, w, 3) uint8 array."""
    return _read_pnm(path, b"P6")


def write_ppm(path: str, pixels: np.ndarray) -> None:
    px = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w, _ = px.shape
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(px.tobytes())


def load_mask(path: str) -> np.ndarray:
    """Read a P5 PGM mask into a {0,1} uint8 raster (255 in file = 1)."""
    raw = _read_pnm(path, b"P5")
    bad = ~np.isin(raw, (0, 255))
    if bad.any():
        raise DataError(f"{path}: mask holds values other than 0/255")
    return (raw == 255).astype(np.uint8)


def save_mask(path: str, mask: np.ndarray) -> None:
    m = np.asarray(mask)
    h, w = m.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write((m.astype(np.uint8) * 255).tobytes())


def _check_invariants(levels: list[Level]) -> None:
    for i in range(1, len(levels)):
        a, b = levels[i - 1], levels[i]
        if b.spacing_x != 2 * a.spacing_x or b.spacing_y != 2 * a.spacing_y:
            raise DataError(
                f"level {i}: spacing {b.spacing_x}x{b.spacing_y} is not double "
                f"of level {i - 1} ({a.spacing_x}x{a.spacing_y})"
            )
        if abs(b.width - a.width // 2) > 1 or abs(b.height - a.height // 2) > 1:
            raise DataError(f"level {i}: size {b.width}x{b.height} does not halve level {i - 1}")


def load_pyramid(path: str) -> PyramidImage:
    """Load a pyramid directory (manifest.txt plus one PPM per level)."""
    manifest = os.path.join(path, "manifest.txt")
    if not os.path.isfile(manifest):
        raise DataError(f"{path}: missing manifest.txt")
    with open(manifest, "r", encoding="ascii") as f:
        lines = [ln.split() for ln in f if ln.strip()]
    try:
        assert lines[0][0] == "levels"
        n = int(lines[0][1])
        assert lines[1][0] == "empty_color"
        empty = tuple(int(v) for v in lines[1][1:4])
        entries = lines[2:]
        assert len(entries) == n
    except (AssertionError, IndexError, ValueError) as e:
        raise DataError(f"{manifest}: malformed manifest") from e

    levels = []
    for ent in entries:
        if len(ent) != 7 or ent[0] != "level":
            raise DataError(f"{manifest}: malformed level line {ent!r}")
        idx, w, h = int(ent[1]), int(ent[2]), int(ent[3])
        sx, sy = float(ent[4]), float(ent[5])
        if idx != len(levels):
            raise DataError(f"{manifest}: level indices out of order")
        px = read_ppm(os.path.join(path, ent[6]))
        if px.shape[0] != h or px.shape[1] != w:
            raise DataError(f"level {idx}: PPM is {px.shape[1]}x{px.shape[0]}, manifest says {w}x{h}")
        levels.append(Level(w, h, sx, sy, _freeze(px)))
    _check_invariants(levels)
    return PyramidImage(levels, empty)


def save_pyramid(p: PyramidImage, path: str) -> None:
    """Write a pyramid directory in the manifest + P6 PPM layout."""
    os.makedirs(path, exist_ok=True)
    lines = [f"levels {len(p.levels)}", "empty_color %d %d %d" % p.empty_color]
    for i, lv in enumerate(p.levels):
        name = f"level_{i}.ppm"
        write_ppm(os.path.join(path, name), lv.pixels)
        lines.append(f"level {i} {lv.width} {lv.height} {lv.spacing_x!r} {lv.spacing_y!r} {name}")
    with open(os.path.join(path, "manifest.txt"), "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def find_level(p: PyramidImage, spacing: float) -> int:
    """Index of the level whose x-spacing matches ``spacing`` (rel tol 1e-9)."""
    for i, lv in enumerate(p.levels):
        if math.isclose(lv.spacing_x, spacing, rel_tol=1e-9):
            return i
    raise DataError(f"no level with spacing {spacing} (have "
                    f"{[lv.spacing_x for lv in p.levels]})")


def read_region(p: PyramidImage, level: int, x: int, y: int, w: int, h: int) -> Patch:
    """Extract a w-by-h patch; pixels outside the level are the sentinel color."""
    if not 0 <= level < len(p.levels):
        raise ValueError(f"level {level} does not exist")
    if w <= 0 or h <= 0:
        raise ValueError("patch size must be positive")
    lv = p.levels[level]
    out = np.empty((h, w, 3), np.uint8)
    out[:] = p.empty_color
    x0, x1 = max(x, 0), min(x + w, lv.width)
    y0, y1 = max(y, 0), min(y + h, lv.height)
    if x0 < x1 and y0 < y1:
        out[y0 - y : y1 - y, x0 - x : x1 - x] = lv.pixels[y0:y1, x0:x1]
    is_empty = bool((out == np.array(p.empty_color, np.uint8)).all())
    return Patch(_freeze(out), level, x, y, is_empty)


def _box_mean_2x2(px: np.ndarray) -> np.ndarray:
    """2x2 block mean with round-half-up; odd trailing row/column use the
    1x2 / 2x1 / 1x1 block that actually exists."""
    h, w = px.shape[:2]
    h2, w2 = (h + 1) // 2, (w + 1) // 2
    acc = np.zeros((h2, w2, 3), np.uint32)
    cnt = np.zeros((h2, w2, 1), np.uint32)
    for dy in (0, 1):
        for dx in (0, 1):
            part = px[dy::2, dx::2]
            acc[: part.shape[0], : part.shape[1]] += part
            cnt[: part.shape[0], : part.shape[1]] += 1
    return ((2 * acc + cnt) // (2 * cnt)).astype(np.uint8)


def build_pyramid(base: Level, n_levels: int,
                  empty_color: tuple[int, int, int] = (0, 0, 0)) -> PyramidImage:
    """Grow a pyramid from a base level by repeated 2x2 box-mean downsampling."""
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    levels = [Level(base.width, base.height, base.spacing_x, base.spacing_y,
                    _freeze(np.array(base.pixels, np.uint8)))]
    for _ in range(n_levels - 1):
        prev = levels[-1]
        if prev.width < 1 or prev.height < 1:
            raise ValueError("cannot downsample below one pixel")
        px = _box_mean_2x2(prev.pixels)
        levels.append(Level(px.shape[1], px.shape[0],
                            prev.spacing_x * 2, prev.spacing_y * 2, _freeze(px)))
    return PyramidImage(levels, empty_color)
