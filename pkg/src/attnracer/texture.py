"""Procedural surface textures and image-space lighting fields.

All texture noise is a pure function of world coordinates and an integer
seed (splitmix-style lattice hashing), so frames are reproducible without
any RNG state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SURFACES = ("asphalt", "concrete", "carpet", "wood")
LIGHTINGS = ("uniform", "gradient", "spotlight")


@dataclass(frozen=True)
class DomainAppearance:
    surface: str = "asphalt"
    lighting: str = "uniform"
    strength: float = 1.0   # overall lighting gain
    seed: int = 0           # texture phase

    def __post_init__(self):
        if self.surface not in SURFACES:
            raise ValueError(f"surface must be one of {SURFACES}, "
                             f"got {self.surface!r}")
        if self.lighting not in LIGHTINGS:
            raise ValueError(f"lighting must be one of {LIGHTINGS}, "
                             f"got {self.lighting!r}")


def appearance_preset(name: str) -> DomainAppearance:
    """'surface' or 'surface:lighting', e.g. 'wood' or 'concrete:spotlight'."""
    surface, _, lighting = name.partition(":")
    return DomainAppearance(surface=surface, lighting=lighting or "uniform")


# ---------------------------------------------------------------------------
# lattice hash noise

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xBF58476D1CE4E5B9)
_M3 = np.uint64(0x94D049BB133111EB)


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Uniform [0,1) from integer lattice coordinates."""
    seed_term = np.uint64((seed * 0x94D049BB133111EB) % (1 << 64))
    z = (ix.astype(np.int64).view(np.uint64) * _M1
         + iy.astype(np.int64).view(np.uint64) * _M2
         + seed_term)
    z ^= z >> np.uint64(30)
    z *= _M2
    z ^= z >> np.uint64(27)
    z *= _M3
    z ^= z >> np.uint64(31)
    return z.astype(np.float64) / 2.0 ** 64


def value_noise(x: np.ndarray, y: np.ndarray, fx: float, fy: float,
                seed: int) -> np.ndarray:
    """Bilinear lattice noise in [0,1); fx/fy are cells per meter."""
    xs = np.asarray(x, dtype=np.float64) * fx
    ys = np.asarray(y, dtype=np.float64) * fy
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    tx = xs - x0
    ty = ys - y0
    x0i = x0.astype(np.int64)
    y0i = y0.astype(np.int64)
    n00 = _hash01(x0i, y0i, seed)
    n10 = _hash01(x0i + 1, y0i, seed)
    n01 = _hash01(x0i, y0i + 1, seed)
    n11 = _hash01(x0i + 1, y0i + 1, seed)
    top = n00 + (n10 - n00) * tx
    bot = n01 + (n11 - n01) * tx
    return top + (bot - top) * ty


# ---------------------------------------------------------------------------
# surfaces

_BASE_RGB = {
    "asphalt": (0.17, 0.17, 0.19),
    "concrete": (0.56, 0.55, 0.52),
    "carpet": (0.34, 0.10, 0.12),
    "wood": (0.46, 0.30, 0.15),
}


def surface_rgb(surface: str, x: np.ndarray, y: np.ndarray,
                seed: int) -> np.ndarray:
    """Per-point RGB in [0,1] for world coordinates; shape x.shape + (3,)."""
    if surface not in SURFACES:
        raise ValueError(f"unknown surface {surface!r}")
    base = np.array(_BASE_RGB[surface])
    if surface == "asphalt":
        g = (0.06 * (value_noise(x, y, 45, 45, seed) - 0.5)
             + 0.04 * (value_noise(x, y, 160, 160, seed + 1) - 0.5))
        rgb = base + g[..., None]
    elif surface == "concrete":
        g = (0.10 * (value_noise(x, y, 7, 7, seed) - 0.5)
             + 0.06 * (value_noise(x, y, 55, 55, seed + 1) - 0.5))
        rgb = base + g[..., None]
    elif surface == "carpet":
        g = 0.10 * (value_noise(x, y, 90, 90, seed) - 0.5)
        rgb = base + g[..., None]
        rgb[..., 0] += 0.04 * (value_noise(x, y, 30, 30, seed + 2) - 0.5)
    else:  # wood: plank strips along x with anisotropic grain
        plank = np.floor(np.asarray(y, dtype=np.float64) / 0.12)
        shade = 0.12 * (_hash01(plank.astype(np.int64),
                                np.zeros_like(plank, dtype=np.int64),
                                seed + 3) - 0.5)
        grain = 0.08 * (value_noise(x, y, 3, 60, seed) - 0.5)
        rgb = base + (shade + grain)[..., None]
        rgb[..., 2] -= 0.02 * value_noise(x, y, 12, 12, seed + 4)
    return np.clip(rgb, 0.0, 1.0)


# ---------------------------------------------------------------------------
# lighting

def light_field(lighting: str, height: int, width: int,
                strength: float = 1.0) -> np.ndarray:
    """(H, W) multiplicative brightness field."""
    if lighting == "uniform":
        field = np.ones((height, width))
    elif lighting == "gradient":
        # dim left edge to bright right edge
        ramp = np.linspace(0.55, 1.15, width)
        field = np.broadcast_to(ramp, (height, width)).copy()
    elif lighting == "spotlight":
        # bright pool centered slightly above mid-image, dark ambient
        v, u = np.mgrid[0:height, 0:width]
        cu, cv = (width - 1) / 2.0, (height - 1) * 0.42
        sigma = 0.30 * width
        r2 = (u - cu) ** 2 + (v - cv) ** 2
        field = 0.45 + 0.85 * np.exp(-r2 / (2 * sigma * sigma))
    else:
        raise ValueError(f"unknown lighting {lighting!r}")
    return field * strength
