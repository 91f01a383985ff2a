"""Orthonormal 2-D Haar transform in the usual multiresolution layout.

After ``L`` levels the approximation band sits in the top-left
``(m / 2**L, n / 2**L)`` corner; each level's details fill the three
remaining quadrants of its block (low/high along rows, then columns).
Filters are normalized by ``1/sqrt(2)``: approx = (even + odd)/sqrt(2),
detail = (even - odd)/sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WaveletCoeffs", "HaarTransform", "dwt", "idwt", "max_levels", "default_levels"]

_R2 = np.sqrt(0.5)


@dataclass(frozen=True)
class WaveletCoeffs:
    data: np.ndarray
    levels: int

    @property
    def shape(self):
        return self.data.shape


def max_levels(shape) -> int:
    levels = 0
    m, n = shape
    while m % 2 == 0 and n % 2 == 0 and m > 1 and n > 1:
        m //= 2
        n //= 2
        levels += 1
    return levels


def default_levels(shape) -> int:
    # a 512x512 image keeps a 32x32 coarse band
    return min(4, max_levels(shape))


def _check(shape, levels):
    if levels < 0:
        raise ValueError("levels must be non-negative")
    f = 2**levels
    if shape[0] % f or shape[1] % f:
        raise ValueError(f"shape {shape} is not divisible by 2**{levels}")


def _analysis_axis(x, axis):
    even = x.take(np.arange(0, x.shape[axis], 2), axis=axis)
    odd = x.take(np.arange(1, x.shape[axis], 2), axis=axis)
    return np.concatenate([(even + odd) * _R2, (even - odd) * _R2], axis=axis)


def _synthesis_axis(c, axis):
    half = c.shape[axis] // 2
    low = c.take(np.arange(half), axis=axis)
    high = c.take(np.arange(half, 2 * half), axis=axis)
    out = np.empty_like(c)
    idx = [slice(None)] * c.ndim
    idx[axis] = slice(0, None, 2)
    out[tuple(idx)] = (low + high) * _R2
    idx[axis] = slice(1, None, 2)
    out[tuple(idx)] = (low - high) * _R2
    return out


def dwt(img, levels: int) -> WaveletCoeffs:
    """Analysis transform ``W^H x``."""
    c = np.array(img, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("expected a 2-D image")
    _check(c.shape, levels)
    m, n = c.shape
    for _ in range(levels):
        block = c[:m, :n]
        c[:m, :n] = _analysis_axis(_analysis_axis(block, 0), 1)
        m //= 2
        n //= 2
    return WaveletCoeffs(c, levels)


def idwt(coeffs: WaveletCoeffs) -> np.ndarray:
    """Synthesis transform ``W theta``."""
    c = np.array(coeffs.data, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("malformed coefficient layout")
    _check(c.shape, coeffs.levels)
    for level in range(coeffs.levels - 1, -1, -1):
        m = c.shape[0] >> level
        n = c.shape[1] >> level
        c[:m, :n] = _synthesis_axis(_synthesis_axis(c[:m, :n], 1), 0)
    return c


class HaarTransform:
    """Orthonormal analysis/synthesis pair with a fixed depth."""

    def __init__(self, levels: int):
        self.levels = int(levels)

    def forward(self, x) -> np.ndarray:
        return dwt(x, self.levels).data

    def inverse(self, c) -> np.ndarray:
        return idwt(WaveletCoeffs(np.asarray(c), self.levels))

    def __repr__(self):
        return f"HaarTransform(levels={self.levels})"
