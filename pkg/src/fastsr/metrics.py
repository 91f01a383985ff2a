"""Reconstruction quality metrics: RMSE, PSNR, ISNR and MSSIM."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["MetricsReport", "compute_metrics", "rmse", "psnr", "isnr", "mssim"]

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(reference, estimate):
    x = np.asarray(reference, dtype=np.float64)
    xh = np.asarray(estimate, dtype=np.float64)
    if x.shape != xh.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xh.shape}")
    return x, xh


def rmse(reference, estimate, normalized: bool = False) -> float:
    """``||x - xhat||_2``, or ``sqrt(mean((x - xhat)**2))`` when ``normalized``."""
    x, xh = _pair(reference, estimate)
    err = float(np.linalg.norm(x - xh))
    return err / math.sqrt(x.size) if normalized else err


def psnr(reference, estimate) -> float:
    """Peak over both images divided by the per-pixel RMS error, in dB."""
    x, xh = _pair(reference, estimate)
    err = rmse(x, xh, normalized=True)
    if err == 0.0:
        return math.inf
    peak = max(float(x.max()), float(xh.max()))
    return 20.0 * math.log10(peak / err)


def isnr(reference, estimate, baseline) -> float:
    """Improvement of ``estimate`` over ``baseline`` in dB."""
    x, xh = _pair(reference, estimate)
    _, yb = _pair(reference, baseline)
    den = float(np.sum((x - xh) ** 2))
    num = float(np.sum((x - yb) ** 2))
    if den == 0.0:
        return math.inf
    if num == 0.0:
        return -math.inf
    return 10.0 * math.log10(num / den)


def _window_sums(a, w):
    """Sums of ``a`` over every ``w[0] x w[1]`` window fully inside the image."""
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    c[1:, 1:] = a.cumsum(0).cumsum(1)
    r, k = w
    return c[r:, k:] - c[:-r, k:] - c[r:, :-k] + c[:-r, :-k]


def mssim(reference, estimate, dynamic_range: float, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all sliding ``window x window`` blocks (uniform weights)."""
    x, xh = _pair(reference, estimate)
    w = (min(window, x.shape[0]), min(window, x.shape[1]))
    n = w[0] * w[1]
    mu_x = _window_sums(x, w) / n
    mu_y = _window_sums(xh, w) / n
    var_x = np.maximum(_window_sums(x * x, w) / n - mu_x**2, 0.0)
    var_y = np.maximum(_window_sums(xh * xh, w) / n - mu_y**2, 0.0)
    cov = _window_sums(x * xh, w) / n - mu_x * mu_y
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2
    ssim = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2))
    return float(np.clip(ssim.mean(), -1.0, 1.0))


def _json_number(v):
    if v is None:
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    psnr_db: float
    isnr_db: float | None
    mssim: float

    def to_dict(self):
        return {
            "rmse": _json_number(self.rmse),
            "psnr_db": _json_number(self.psnr_db),
            "isnr_db": _json_number(self.isnr_db),
            "mssim": _json_number(self.mssim),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def compute_metrics(
    reference,
    estimate,
    interp_baseline=None,
    value_scale: float | None = None,
    normalized_rmse: bool = False,
    want_isnr: bool | None = None,
) -> MetricsReport:
    """All metrics for ``estimate`` against ``reference``.

    ``rmse`` is the plain Euclidean error norm unless ``normalized_rmse``.
    ISNR needs ``interp_baseline``; asking for it (``want_isnr=True``)
    without one raises ``ValueError``. ``value_scale`` is the SSIM dynamic
    range (defaults to ``reference.value_scale`` or 1.0).
    """
    if want_isnr and interp_baseline is None:
        raise ValueError("ISNR requires an interpolation baseline")
    if value_scale is None:
        value_scale = getattr(reference, "value_scale", 1.0)
    x, xh = _pair(reference, estimate)
    return MetricsReport(
        rmse=rmse(x, xh, normalized=normalized_rmse),
        psnr_db=psnr(x, xh),
        isnr_db=None if interp_baseline is None else isnr(x, xh, interp_baseline),
        mssim=mssim(x, xh, value_scale),
    )
