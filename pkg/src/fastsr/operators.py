"""Structured linear operators of the observation model ``y = S H x + n``.

All operators act on 2-D ``(rows, cols)`` arrays with periodic boundaries.
Each has a dense-matrix mirror (``dense_*``) acting on row-major vectors,
intended for verification on small grids.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ._fft import fft2, ifft2, irfft2, real_part, rfft2

__all__ = [
    "SpectralBlur",
    "Decimator",
    "GradientPair",
    "psf_to_otf",
    "apply_blur",
    "decimate",
    "upsample_zero",
    "mask_sbar",
    "build_gradients",
    "gradient",
    "gradient_adjoint",
    "gaussian_kernel",
    "load_kernel",
    "dft_matrix",
    "dense_blur",
    "dense_decimation",
    "dense_gradients",
]


def _as_2d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SpectralBlur:
    """Frequency response of a cyclic blur on an ``(mh, nh)`` grid."""

    otf: np.ndarray
    psf_support: tuple[int, int] = (1, 1)
    psf: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        otf = np.asarray(self.otf, dtype=np.complex128)
        if otf.ndim != 2:
            raise ValueError("otf must be 2-D")
        if not np.all(np.isfinite(otf)):
            raise ValueError("otf entries must be finite")
        otf.setflags(write=False)
        object.__setattr__(self, "otf", otf)

    @property
    def shape(self) -> tuple[int, int]:
        return self.otf.shape

    @cached_property
    def half_otf(self) -> np.ndarray | None:
        """Non-negative column frequencies of a conjugate-symmetric otf, else None."""
        mh, nh = self.shape
        mirror = np.conj(np.roll(self.otf[::-1, ::-1], (1, 1), axis=(0, 1)))
        scale = max(float(np.abs(self.otf).max()), 1e-300)
        if np.abs(mirror - self.otf).max() > 1e-12 * scale:
            return None
        half = np.ascontiguousarray(self.otf[:, : nh // 2 + 1])
        half.setflags(write=False)
        return half

    @cached_property
    def memo(self) -> dict:
        """Per-instance cache for quantities derived from the otf."""
        return {}

    @classmethod
    def identity(cls, shape) -> "SpectralBlur":
        return cls(np.ones(shape, dtype=np.complex128), (1, 1))


@dataclass(frozen=True)
class Decimator:
    """Integer decimation by ``dr`` rows and ``dc`` columns.

    ``S`` keeps the top-left sample of every ``dr x dc`` cell.
    """

    dr: int
    dc: int
    ml: int
    nl: int

    def __post_init__(self):
        for name in ("dr", "dc", "ml", "nl"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @classmethod
    def for_hr(cls, hr_shape, dr: int, dc: int | None = None) -> "Decimator":
        dc = dr if dc is None else dc
        mh, nh = hr_shape
        if mh % dr or nh % dc:
            raise ValueError(f"HR shape {hr_shape} is not divisible by ({dr}, {dc})")
        return cls(dr, dc, mh // dr, nh // dc)

    @property
    def d(self) -> int:
        return self.dr * self.dc

    @property
    def hr_shape(self) -> tuple[int, int]:
        return (self.ml * self.dr, self.nl * self.dc)

    @property
    def lr_shape(self) -> tuple[int, int]:
        return (self.ml, self.nl)


@dataclass(frozen=True)
class GradientPair:
    """Frequency responses of the periodic forward differences."""

    sigma_h: np.ndarray
    sigma_v: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.sigma_h.shape


# -- blur ----------------------------------------------------------------------


def _center(psf_shape):
    # odd sizes: (size - 1) / 2, even sizes: size / 2
    return tuple(s // 2 for s in psf_shape)


def _embed_psf(psf: np.ndarray, shape) -> np.ndarray:
    """Zero-pad ``psf`` to ``shape`` with its centre tap moved to (0, 0)."""
    canvas = np.zeros(shape, dtype=np.float64)
    canvas[: psf.shape[0], : psf.shape[1]] = psf
    cr, cc = _center(psf.shape)
    return np.roll(canvas, (-cr, -cc), axis=(0, 1))


def psf_to_otf(psf, shape) -> SpectralBlur:
    """Transfer function of the cyclic convolution with ``psf`` on ``shape``."""
    psf = np.asarray(psf, dtype=np.float64)
    if psf.ndim != 2 or psf.size == 0:
        raise ValueError("psf must be a non-empty 2-D array")
    mh, nh = shape
    if psf.shape[0] > mh or psf.shape[1] > nh:
        raise ValueError(f"psf {psf.shape} is larger than the target grid {tuple(shape)}")
    return SpectralBlur(fft2(_embed_psf(psf, (mh, nh))), psf.shape, psf.copy())


def apply_blur(blur: SpectralBlur, x, adjoint: bool = False) -> np.ndarray:
    """``H x`` (or ``H^H x`` with ``adjoint=True``) via the FFT."""
    x = _as_2d(x)
    if x.shape != blur.shape:
        raise ValueError(f"image shape {x.shape} does not match blur grid {blur.shape}")
    half = blur.half_otf
    if half is not None:
        # real kernel: the half spectrum suffices and the output is real by construction
        gain = np.conj(half) if adjoint else half
        return irfft2(gain * rfft2(x), x.shape)
    gain = np.conj(blur.otf) if adjoint else blur.otf
    out = ifft2(gain * fft2(x))
    return real_part(out, np.linalg.norm(x), rtol=1e-10)


# -- decimation ----------------------------------------------------------------


def decimate(dec: Decimator, x) -> np.ndarray:
    """``S x``: keep ``x[i*dr, j*dc]``."""
    x = _as_2d(x)
    if x.shape != dec.hr_shape:
        raise ValueError(f"image shape {x.shape} does not match HR grid {dec.hr_shape}")
    return x[:: dec.dr, :: dec.dc].copy()


def upsample_zero(dec: Decimator, y) -> np.ndarray:
    """``S^H y``: zero-filled interpolation onto the HR grid."""
    y = _as_2d(y)
    if y.shape != dec.lr_shape:
        raise ValueError(f"image shape {y.shape} does not match LR grid {dec.lr_shape}")
    out = np.zeros(dec.hr_shape, dtype=np.float64)
    out[:: dec.dr, :: dec.dc] = y
    return out


def mask_sbar(dec: Decimator, x) -> np.ndarray:
    """``S^H S x``: zero every sample not kept by the decimation."""
    return upsample_zero(dec, decimate(dec, x))


# -- gradients -----------------------------------------------------------------


def build_gradients(mh: int, nh: int) -> GradientPair:
    """Diagonals ``Sigma_h``, ``Sigma_v`` of the periodic forward differences.

    ``Dh`` differences along rows (first axis), ``Dv`` along columns.
    """
    p = np.arange(mh)[:, None]
    q = np.arange(nh)[None, :]
    sigma_h = np.broadcast_to(np.exp(2j * np.pi * p / mh) - 1.0, (mh, nh)).copy()
    sigma_v = np.broadcast_to(np.exp(2j * np.pi * q / nh) - 1.0, (mh, nh)).copy()
    # exact zeros at the roots, not 1e-16 leftovers
    sigma_h[0, :] = 0.0
    sigma_v[:, 0] = 0.0
    return GradientPair(sigma_h, sigma_v)


def gradient(x) -> tuple[np.ndarray, np.ndarray]:
    """``(Dh x, Dv x)`` with periodic forward differences."""
    x = _as_2d(x)
    return np.roll(x, -1, axis=0) - x, np.roll(x, -1, axis=1) - x


def gradient_adjoint(gh, gv) -> np.ndarray:
    """``Dh^T gh + Dv^T gv``."""
    gh = _as_2d(gh)
    gv = _as_2d(gv)
    return (np.roll(gh, 1, axis=0) - gh) + (np.roll(gv, 1, axis=1) - gv)


# -- kernels -------------------------------------------------------------------


def gaussian_kernel(rows: int, cols: int, variance: float) -> np.ndarray:
    """Normalized, centred Gaussian with the given per-axis variance."""
    if rows < 1 or cols < 1:
        raise ValueError("kernel size must be positive")
    if variance <= 0:
        raise ValueError("variance must be positive")
    cr, cc = _center((rows, cols))
    i = np.arange(rows)[:, None] - cr
    j = np.arange(cols)[None, :] - cc
    k = np.exp(-(i**2 + j**2) / (2.0 * variance))
    return k / k.sum()


_GAUSS_SPEC = re.compile(r"^gaussian:(\d+)x(\d+):([0-9.eE+-]+)$")


def load_kernel(spec: str) -> np.ndarray:
    """Resolve a kernel specification.

    Either a built-in ``gaussian:RxC:VAR`` or a text file whose first line
    is ``rows cols`` followed by row-major values.
    """
    match = _GAUSS_SPEC.match(spec.strip())
    if match:
        rows, cols, var = int(match[1]), int(match[2]), float(match[3])
        return gaussian_kernel(rows, cols, var)
    if spec.strip() in ("identity", "delta"):
        return np.ones((1, 1))
    path = Path(spec)
    if not path.exists():
        raise FileNotFoundError(f"kernel file not found: {spec}")
    tokens = path.read_text().split()
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
        values = np.array([float(t) for t in tokens[2:]])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed kernel file {spec}: {exc}") from None
    if rows < 1 or cols < 1 or values.size != rows * cols:
        raise ValueError(f"kernel file {spec} declares {rows}x{cols} but holds {values.size} values")
    return values.reshape(rows, cols)


# -- dense mirrors -------------------------------------------------------------


def dft_matrix(mh: int, nh: int) -> np.ndarray:
    """Unitary 2-D DFT acting on row-major vectors of an ``(mh, nh)`` grid."""

    def f1(n):
        k = np.arange(n)
        return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)

    return np.kron(f1(mh), f1(nh))


def dense_blur(psf, shape=None) -> np.ndarray:
    """BCCB matrix ``H`` built entry by entry from its first column ``h``.

    ``psf`` may be a kernel array (``shape`` required) or a
    :class:`SpectralBlur`; without a stored kernel, ``h`` is recovered
    from the transfer function.
    """
    if isinstance(psf, SpectralBlur):
        blur = psf
        shape = blur.shape
        if blur.psf is not None:
            h = _embed_psf(blur.psf, shape)
        else:
            h = real_part(ifft2(blur.otf), 1.0, rtol=1e-8)
    else:
        h = _embed_psf(np.asarray(psf, dtype=np.float64), shape)
    mh, nh = shape
    i = np.arange(mh)
    j = np.arange(nh)
    # H[(i1,j1), (i2,j2)] = h[(i1 - i2) mod mh, (j1 - j2) mod nh]
    di = (i[:, None] - i[None, :]) % mh
    dj = (j[:, None] - j[None, :]) % nh
    big = h[di[:, None, :, None], dj[None, :, None, :]]
    return big.reshape(mh * nh, mh * nh)


def dense_decimation(dec: Decimator) -> np.ndarray:
    """Selection matrix ``S`` of shape ``(Nl, Nh)``."""
    mh, nh = dec.hr_shape
    nl_total = dec.ml * dec.nl
    s = np.zeros((nl_total, mh * nh))
    rows = np.arange(dec.ml)[:, None] * dec.dr
    cols = np.arange(dec.nl)[None, :] * dec.dc
    s[np.arange(nl_total), (rows * nh + cols).reshape(-1)] = 1.0
    return s


def dense_gradients(mh: int, nh: int) -> tuple[np.ndarray, np.ndarray]:
    """Circulant forward-difference matrices ``(Dh, Dv)``."""
    n = mh * nh
    idx = np.arange(n).reshape(mh, nh)
    eye = np.eye(n)
    dh = eye[np.roll(idx, -1, axis=0).reshape(-1)] - eye
    dv = eye[np.roll(idx, -1, axis=1).reshape(-1)] - eye
    return dh, dv
