"""ADMM for non-quadratic priors with a closed-form x-update.

Solves ``min_x 1/2 ||y - S H x||^2 + tau * phi(A x)`` by splitting
``u = A x``. Each x-update is a quadratic SR problem

    min_x 1/2 ||y - S H x||^2 + mu/2 ||A x - (u - dual)||^2

handled by :class:`fastsr.spectral.SolverPlan` without inner iterations.
Two priors are provided: isotropic total variation (``A`` = periodic
forward differences) and the l1 norm of orthonormal Haar coefficients.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import kernels
from .baselines import bicubic_upsample
from .metrics import psnr as _psnr
from .operators import (
    Decimator,
    SpectralBlur,
    apply_blur,
    build_gradients,
    decimate,
    gradient,
    gradient_adjoint,
    upsample_zero,
)
from .spectral import SolverPlan
from .wavelet import HaarTransform, default_levels

__all__ = [
    "TV",
    "WaveletL1",
    "AdmmConfig",
    "AdmmState",
    "TraceRow",
    "prox_tv_vector",
    "prox_l1",
    "objective",
    "admm_solve",
    "write_trace_csv",
    "TV_DC_FLOOR",
]

# cap on the DC weight mu * psi^-1 in the TV x-update system; the weight is
# TV_DC_FLOOR * min(1, mu), small next to both the data term and mu * |sigma|^2
TV_DC_FLOOR = 1e-8


def prox_tv_vector(nu, threshold: float):
    """Per-pixel shrinkage of the 2-vector ``(nu_h[i], nu_v[i])`` by ``threshold``.

    Returns ``max(0, |nu[i]| - threshold) * nu[i] / |nu[i]|`` with ``0/0 := 0``.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    nu_h, nu_v = nu
    return kernels.vector_shrink(nu_h, nu_v, threshold)


def prox_l1(nu, threshold: float):
    """Soft thresholding ``sign(nu) * max(0, |nu| - threshold)``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return kernels.soft_threshold(nu, threshold)


@dataclass(frozen=True)
class TV:
    """Isotropic total variation, ``sum_i sqrt((Dh x)_i^2 + (Dv x)_i^2)``."""

    def apply(self, x):
        return gradient(x)

    def adjoint(self, u):
        return gradient_adjoint(*u)

    def penalty(self, ax) -> float:
        return float(np.sum(np.hypot(ax[0], ax[1])))

    def prox(self, nu, threshold):
        return prox_tv_vector(nu, threshold)

    def psi(self, shape, mu):
        g = build_gradients(*shape)
        energy = np.abs(g.sigma_h) ** 2 + np.abs(g.sigma_v) ** 2
        energy[0, 0] = TV_DC_FLOOR * min(1.0, 1.0 / mu)
        return 1.0 / energy

    @staticmethod
    def combine(a, b, op):
        return op(a[0], b[0]), op(a[1], b[1])

    @staticmethod
    def norm(u) -> float:
        return math.hypot(np.linalg.norm(u[0]), np.linalg.norm(u[1]))


@dataclass(frozen=True)
class WaveletL1:
    """``||W^H x||_1`` with an orthonormal Haar transform."""

    levels: int | None = None

    def _transform(self, shape):
        return HaarTransform(default_levels(shape) if self.levels is None else self.levels)

    def apply(self, x):
        return self._transform(x.shape).forward(x)

    def adjoint(self, u):
        return self._transform(u.shape).inverse(u)

    def penalty(self, ax) -> float:
        return float(np.sum(np.abs(ax)))

    def prox(self, nu, threshold):
        return prox_l1(nu, threshold)

    def psi(self, shape, mu):
        return None

    @staticmethod
    def combine(a, b, op):
        return op(a, b)

    @staticmethod
    def norm(u) -> float:
        return float(np.linalg.norm(u))


@dataclass(frozen=True)
class AdmmConfig:
    """Solver settings. ``mu=None`` selects ``10 * tau``."""

    tau: float
    mu: float | None = None
    max_iters: int = 1000
    rel_obj_tol: float = 1e-5
    record_trace: bool = True

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.rel_obj_tol <= 0:
            raise ValueError("rel_obj_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.penalty > 0:
            raise ValueError("mu must be positive (and tau > 0 when mu is not given)")

    @property
    def penalty(self) -> float:
        return 10.0 * self.tau if self.mu is None else float(self.mu)


class TraceRow(NamedTuple):
    iter: int
    time_s: float
    objective: float
    psnr: float | None


@dataclass
class AdmmState:
    x: np.ndarray
    u: object
    dual: object
    mu: float
    iter: int = 0
    converged: bool = False
    trace: list = field(default_factory=list)

    def split_residual(self, regularizer) -> float:
        """``||A x - u|| / ||u||``."""
        ax = regularizer.apply(self.x)
        diff = regularizer.combine(ax, self.u, np.subtract)
        return regularizer.norm(diff) / max(regularizer.norm(self.u), 1e-300)


def objective(x, y, blur: SpectralBlur, dec: Decimator, regularizer, tau: float) -> float:
    """``1/2 ||y - S H x||^2 + tau * phi(A x)``."""
    x = np.asarray(x, dtype=np.float64)
    resid = np.asarray(y, dtype=np.float64) - decimate(dec, apply_blur(blur, x))
    value = 0.5 * float(np.sum(resid**2))
    if tau:
        value += tau * regularizer.penalty(regularizer.apply(x))
    return value


def admm_solve(
    y,
    blur: SpectralBlur,
    dec: Decimator,
    regularizer,
    cfg: AdmmConfig,
    reference=None,
    x0=None,
    callback: Callable[[AdmmState], None] | None = None,
):
    """Run ADMM until the relative objective change drops below ``cfg.rel_obj_tol``.

    Parameters
    ----------
    y : ndarray
        LR observation.
    regularizer : TV or WaveletL1
    reference : ndarray, optional
        Ground truth; enables the PSNR column of the trace.
    x0 : ndarray, optional
        Initial HR guess; bicubic interpolation of ``y`` by default. The
        auxiliary variable starts at ``A x0`` and the dual at zero.
    callback : callable, optional
        Called with the state after every iteration.

    Returns
    -------
    (ndarray, AdmmState)
        Final estimate and solver state (``state.trace`` holds per-iteration
        ``TraceRow`` entries when ``cfg.record_trace``).
    """
    y = np.asarray(y, dtype=np.float64)
    mu = cfg.penalty
    tau = cfg.tau
    if x0 is None:
        x0 = bicubic_upsample(y, dec.dr, dec.dc)
    x0 = np.asarray(x0, dtype=np.float64)
    plan = SolverPlan(blur, dec, regularizer.psi(dec.hr_shape, mu))
    back = apply_blur(blur, upsample_zero(dec, y), adjoint=True)

    u = regularizer.apply(x0)
    dual = regularizer.combine(u, u, lambda a, b: np.zeros_like(a))
    state = AdmmState(x=x0, u=u, dual=dual, mu=mu)

    start = time.monotonic()
    f_prev = None
    for k in range(1, cfg.max_iters + 1):
        target = regularizer.combine(state.u, state.dual, np.subtract)
        x = plan.solve(back + mu * regularizer.adjoint(target), mu)
        ax = regularizer.apply(x)
        nu = regularizer.combine(ax, state.dual, np.add)
        u = regularizer.prox(nu, tau / mu)
        dual = regularizer.combine(nu, u, np.subtract)

        f = objective(x, y, blur, dec, regularizer, tau)
        if not math.isfinite(f):
            raise FloatingPointError(f"objective became non-finite at iteration {k}")
        state.x, state.u, state.dual, state.iter = x, u, dual, k
        if cfg.record_trace:
            score = _psnr(reference, x) if reference is not None else None
            state.trace.append(TraceRow(k, time.monotonic() - start, f, score))
        if callback is not None:
            callback(state)
        if f_prev is not None and f_prev > 0 and abs(f - f_prev) / f_prev < cfg.rel_obj_tol:
            state.converged = True
            break
        if f_prev is not None and f_prev == 0 and f == 0:
            state.converged = True
            break
        f_prev = f
    return state.x, state


def write_trace_csv(trace, path_or_file) -> None:
    """Write trace rows as ``iter,time_s,objective,psnr`` CSV."""
    lines = ["iter,time_s,objective,psnr"]
    for row in trace:
        score = "" if row.psnr is None else repr(float(row.psnr))
        lines.append(f"{row.iter},{row.time_s!r},{row.objective!r},{score}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
