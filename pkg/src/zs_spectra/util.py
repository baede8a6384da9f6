"""Shared small helpers: rectangles in the complex plane and deterministic
low-discrepancy point sets (the package never uses a random number generator,
so repeated runs are bit-identical).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# R2 low-discrepancy constants (inverse powers of the plastic number).
_R2_A1 = 0.7548776662466927
_R2_A2 = 0.5698402909980532


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [re_min, re_max] x [im_min, im_max]."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("degenerate rectangle")

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max),
                       0.5 * (self.im_min + self.im_max))

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def corners(self) -> list[complex]:
        """Counterclockwise corners starting at lower-left."""
        return [complex(self.re_min, self.im_min),
                complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max),
                complex(self.re_min, self.im_max)]

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= z.real <= self.re_max + pad
                and self.im_min - pad <= z.imag <= self.im_max + pad)

    def dilated(self, factor: float) -> "Rectangle":
        dw = 0.5 * self.width * factor
        dh = 0.5 * self.height * factor
        return Rectangle(self.re_min - dw, self.re_max + dw,
                         self.im_min - dh, self.im_max + dh)

    def split(self, at: float = 0.5) -> tuple["Rectangle", "Rectangle"]:
        """Split across the longer side at relative position ``at``."""
        if self.width >= self.height:
            cut = self.re_min + at * self.width
            return (Rectangle(self.re_min, cut, self.im_min, self.im_max),
                    Rectangle(cut, self.re_max, self.im_min, self.im_max))
        cut = self.im_min + at * self.height
        return (Rectangle(self.re_min, self.re_max, self.im_min, cut),
                Rectangle(self.re_min, self.re_max, cut, self.im_max))


def golden_points(n: int, rect: Rectangle, offset: int = 0) -> np.ndarray:
    """n deterministic quasi-random complex points inside ``rect``.

    Uses the additive R2 sequence; successive calls with different offsets
    continue the same sequence.
    """
    k = np.arange(offset + 1, offset + n + 1, dtype=float)
    u = np.mod(0.5 + k * _R2_A1, 1.0)
    v = np.mod(0.5 + k * _R2_A2, 1.0)
    return (rect.re_min + u * (rect.re_max - rect.re_min)
            + 1j * (rect.im_min + v * (rect.im_max - rect.im_min)))


def golden_reals(n: int, lo: float, hi: float, offset: int = 0) -> np.ndarray:
    """n deterministic quasi-random reals in [lo, hi)."""
    k = np.arange(offset + 1, offset + n + 1, dtype=float)
    u = np.mod(0.5 + k * 0.6180339887498949, 1.0)
    return lo + u * (hi - lo)


def dedupe_points(zs: np.ndarray, radius_fn=None) -> np.ndarray:
    """Remove near-duplicates; keeps the first representative of each cluster.

    radius_fn(z) gives the merge radius around z; defaults to 1e-8*(1+|z|).
    """
    if radius_fn is None:
        radius_fn = lambda z: 1e-8 * (1.0 + abs(z))
    order = np.lexsort((zs.imag, zs.real))
    kept: list[complex] = []
    for idx in order:
        z = zs[idx]
        r = radius_fn(z)
        if not any(abs(z - w) <= r for w in kept if abs(z.real - w.real) <= r):
            kept.append(z)
    return np.array(kept, dtype=complex)
