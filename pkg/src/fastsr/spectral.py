"""Closed-form FFT-domain solver for quadratic super-resolution problems.

Solves

    min_x  1/2 ||y - S H x||^2 + tau ||A x - v||^2

with ``H`` a cyclic blur, ``S`` an integer decimation and ``A^H A``
diagonalized by the 2-D DFT. Decimation folds the ``d = dr * dc`` HR
frequencies of an alias class onto one LR frequency, which makes
``F S^H S F^H`` block structured; combined with the Woodbury identity the
normal equations reduce to one rank-one update per alias class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._fft import fft2, ifft2, irfft2, real_part, rfft2
from .operators import (
    Decimator,
    SpectralBlur,
    apply_blur,
    build_gradients,
    gradient,
    gradient_adjoint,
    mask_sbar,
    upsample_zero,
)

__all__ = [
    "LambdaBar",
    "PsiDiagonal",
    "IdentityReg",
    "GradientReg",
    "TransformReg",
    "L2Problem",
    "SolverPlan",
    "build_lambda_bar",
    "build_psi",
    "make_plan",
    "solve_l2",
    "solve_l2_image",
    "class_energy",
    "solve_l2_gradient",
    "back_project",
    "normal_operator",
    "normal_rhs",
    "normal_residual",
]

DEFAULT_SIGMA = 1e-8


@dataclass(frozen=True)
class LambdaBar:
    """Blur gains grouped by alias class.

    ``blocks[l, k]`` is the gain of HR frequency ``frequency_map[l, k]``
    (row-major flat index) which folds onto LR frequency ``l``.
    """

    blocks: np.ndarray
    frequency_map: np.ndarray

    @property
    def d(self) -> int:
        return self.blocks.shape[1]

    def gram(self) -> np.ndarray:
        """``(1/d) Lbar^H Lbar`` scattered onto the HR frequency grid (dense)."""
        nh_total = self.blocks.size
        out = np.zeros((nh_total, nh_total), dtype=np.complex128)
        for row_idx, row_gain in zip(self.frequency_map, self.blocks):
            out[np.ix_(row_idx, row_idx)] = np.outer(np.conj(row_gain), row_gain) / self.d
        return out


@dataclass(frozen=True)
class PsiDiagonal:
    """Per-frequency diagonal of ``F (A^H A)^-1 F^H``."""

    psi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=np.float64)
        if not np.all(np.isfinite(psi)) or not np.all(psi > 0):
            raise ValueError("psi must be finite and strictly positive")
        object.__setattr__(self, "psi", psi)


def alias_frequency_map(dec: Decimator) -> np.ndarray:
    """``(Nl, d)`` table of HR flat frequency indices per LR frequency.

    HR frequency ``(p + a*ml, q + b*nl)`` maps to LR frequency ``(p, q)``
    with block index ``a*dc + b``.
    """
    ml, nl, dr, dc = dec.ml, dec.nl, dec.dr, dec.dc
    nh = nl * dc
    p = np.arange(ml)[:, None, None, None]
    q = np.arange(nl)[None, :, None, None]
    a = np.arange(dr)[None, None, :, None]
    b = np.arange(dc)[None, None, None, :]
    idx = (p + a * ml) * nh + (q + b * nl)
    return idx.reshape(ml * nl, dr * dc)


def build_lambda_bar(blur: SpectralBlur, dec: Decimator) -> LambdaBar:
    if blur.shape != dec.hr_shape:
        raise ValueError(f"blur grid {blur.shape} does not match HR grid {dec.hr_shape}")
    fmap = alias_frequency_map(dec)
    return LambdaBar(blur.otf.reshape(-1)[fmap], fmap)


# -- regularizers --------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReg:
    """``A = I``, ``v = xbar``."""

    xbar: np.ndarray


@dataclass(frozen=True)
class GradientReg:
    """``A = [Dh; Dv]``, ``v = (v_h, v_v)``, plus ``sigma ||x||^2`` to fix the DC null space."""

    v_h: np.ndarray
    v_v: np.ndarray
    sigma: float = DEFAULT_SIGMA


@dataclass(frozen=True)
class TransformReg:
    """``A = T`` for an orthonormal analysis transform ``T``; ``v`` are coefficients.

    ``transform`` needs ``forward(x)`` (analysis) and ``inverse(c)`` (synthesis).
    """

    transform: object
    coeffs: np.ndarray


def _check_orthonormal(transform, shape, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    c = np.asarray(transform.forward(x))
    back = np.asarray(transform.inverse(c))
    nx = np.linalg.norm(x)
    if abs(np.linalg.norm(c) - nx) > 1e-8 * nx or np.linalg.norm(back - x) > 1e-8 * nx:
        raise ValueError("TransformReg requires an orthonormal transform")


def build_psi(reg, shape) -> PsiDiagonal:
    """Diagonal of ``F (A^H A)^-1 F^H`` for the supported regularizers."""
    mh, nh = shape
    if isinstance(reg, (IdentityReg, TransformReg)):
        if isinstance(reg, TransformReg):
            _check_orthonormal(reg.transform, shape)
        return PsiDiagonal(np.ones(shape))
    if isinstance(reg, GradientReg):
        if reg.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if reg.sigma == 0:
            raise ValueError("sigma = 0 leaves A^H A singular at DC; use sigma > 0")
        g = build_gradients(mh, nh)
        energy = np.abs(g.sigma_h) ** 2 + np.abs(g.sigma_v) ** 2 + reg.sigma
        return PsiDiagonal(1.0 / energy)
    raise TypeError(f"unsupported regularizer {type(reg).__name__}")


def _reg_adjoint(reg, shape) -> np.ndarray:
    """``A^H v``."""
    if isinstance(reg, IdentityReg):
        return np.asarray(reg.xbar, dtype=np.float64)
    if isinstance(reg, GradientReg):
        return gradient_adjoint(reg.v_h, reg.v_v)
    if isinstance(reg, TransformReg):
        return np.asarray(reg.transform.inverse(reg.coeffs), dtype=np.float64)
    raise TypeError(f"unsupported regularizer {type(reg).__name__}")


def _reg_normal(reg, x) -> np.ndarray:
    """``A^H A x`` (including the sigma term for gradients)."""
    if isinstance(reg, GradientReg):
        gh, gv = gradient(x)
        return gradient_adjoint(gh, gv) + reg.sigma * x
    return x


# -- problem and plan ----------------------------------------------------------


@dataclass(frozen=True)
class L2Problem:
    y: np.ndarray
    blur: SpectralBlur
    dec: Decimator
    reg: object
    tau: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "y", y)
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if y.shape != self.dec.lr_shape:
            raise ValueError(f"observation shape {y.shape} does not match LR grid {self.dec.lr_shape}")
        if self.blur.shape != self.dec.hr_shape:
            raise ValueError(f"blur grid {self.blur.shape} does not match HR grid {self.dec.hr_shape}")


@dataclass(frozen=True)
class SolverPlan:
    """Reusable factorization: blur, decimator and ``psi`` (``None`` means ``psi = 1``)."""

    blur: SpectralBlur
    dec: Decimator
    psi: np.ndarray | None = None
    _lambda_bar: list = field(default_factory=list, repr=False, compare=False)

    @property
    def lambda_bar(self) -> LambdaBar:
        if not self._lambda_bar:
            self._lambda_bar.append(build_lambda_bar(self.blur, self.dec))
        return self._lambda_bar[0]

    def solve_spectrum(self, fr: np.ndarray, two_tau: float) -> np.ndarray:
        """Apply ``(1/d Lbar^H Lbar + two_tau Psi^-1)^-1`` to a spectrum."""
        dec = self.dec
        if self.psi is None:
            return kernels.alias_solve_identity(
                self.blur.otf, fr, dec.ml, dec.nl, dec.dr, dec.dc, two_tau
            )
        return kernels.alias_solve(
            self.blur.otf, self.psi, fr, dec.ml, dec.nl, dec.dr, dec.dc, two_tau
        )

    def solve(self, r: np.ndarray, two_tau: float) -> np.ndarray:
        x = ifft2(self.solve_spectrum(fft2(r), two_tau))
        return real_part(x, np.linalg.norm(x), rtol=1e-9)


def make_plan(blur: SpectralBlur, dec: Decimator, reg=None, psi=None) -> SolverPlan:
    if blur.shape != dec.hr_shape:
        raise ValueError(f"blur grid {blur.shape} does not match HR grid {dec.hr_shape}")
    if psi is None and reg is not None:
        psi = build_psi(reg, dec.hr_shape)
    if isinstance(psi, PsiDiagonal):
        psi = psi.psi
    return SolverPlan(blur, dec, psi)


def normal_rhs(problem: L2Problem) -> np.ndarray:
    """``r = H^H S^H y + 2 tau A^H v``."""
    back = apply_blur(problem.blur, upsample_zero(problem.dec, problem.y), adjoint=True)
    return back + 2.0 * problem.tau * _reg_adjoint(problem.reg, problem.dec.hr_shape)


def normal_operator(problem: L2Problem, x) -> np.ndarray:
    """``(H^H S^H S H + 2 tau A^H A) x``."""
    blur, dec = problem.blur, problem.dec
    data = apply_blur(blur, mask_sbar(dec, apply_blur(blur, x)), adjoint=True)
    return data + 2.0 * problem.tau * _reg_normal(problem.reg, np.asarray(x, dtype=np.float64))


def normal_residual(problem: L2Problem, x) -> float:
    """Relative residual ``||N x - r|| / ||r||`` of the normal equations."""
    r = normal_rhs(problem)
    return float(np.linalg.norm(normal_operator(problem, x) - r) / np.linalg.norm(r))


def solve_l2(problem: L2Problem, plan: SolverPlan | None = None) -> np.ndarray:
    """Exact minimizer of the quadratic problem, non-iteratively."""
    if plan is None:
        plan = make_plan(problem.blur, problem.dec, problem.reg)
    elif plan.dec != problem.dec or plan.blur.shape != problem.blur.shape:
        raise ValueError("plan does not match problem dimensions")
    return plan.solve(normal_rhs(problem), 2.0 * problem.tau)


def class_energy(blur: SpectralBlur, dec: Decimator) -> np.ndarray:
    """``D[p, q] = sum |otf|^2`` over the alias class of LR frequency ``(p, q)``."""
    key = ("class_energy", dec.dr, dec.dc)
    if key not in blur.memo:
        e = blur.otf.real**2 + blur.otf.imag**2
        e = e.reshape(dec.dr, dec.ml, dec.dc, dec.nl).sum(axis=(0, 2))
        e.setflags(write=False)
        blur.memo[key] = e
    return blur.memo[key]


def _conj_half(blur: SpectralBlur) -> np.ndarray:
    if "conj_half" not in blur.memo:
        c = np.conj(blur.half_otf)
        c.setflags(write=False)
        blur.memo["conj_half"] = c
    return blur.memo["conj_half"]


def solve_l2_image(y, blur: SpectralBlur, dec: Decimator, xbar, tau: float) -> np.ndarray:
    """Quadratic SR toward a prior image ``xbar``.

    With ``A = I`` the per-class system is a scalar division:
    ``x = (r - F^H Lbar^H (2 tau d + Lbar Lbar^H)^-1 Lbar F r) / (2 tau)``.
    Substituting ``r = H^H S^H y + 2 tau xbar`` gives the equivalent
    correction form used here,

        x = xbar + H^H S^H F_l^-1 [ d F_l(y - S H xbar) / (2 tau d + D) ]

    with ``F_l`` the LR-grid DFT and ``D`` from :func:`class_energy`, which
    needs three real HR-sized FFTs for a real kernel.
    """
    problem = L2Problem(y, blur, dec, IdentityReg(xbar), tau)
    xbar = np.asarray(problem.reg.xbar, dtype=np.float64)
    if xbar.shape != dec.hr_shape:
        raise ValueError(f"prior shape {xbar.shape} does not match HR grid {dec.hr_shape}")
    two_tau = 2.0 * tau
    half = blur.half_otf
    if half is None:
        r = normal_rhs(problem)
        fr = fft2(r)
        x = ifft2(kernels.alias_solve_identity(blur.otf, fr, dec.ml, dec.nl, dec.dr, dec.dc, two_tau))
        return real_part(x, np.linalg.norm(r) / two_tau, rtol=1e-9)
    d = dec.d
    dr, ml, nl = dec.dr, dec.ml, dec.nl
    fx = rfft2(xbar)
    cols = half.shape[1]
    # S H xbar: fold the rows of the spectrum over the alias classes, then a
    # small inverse FFT and column decimation
    folded = (half * fx).reshape(dr, ml, cols).sum(axis=0)
    sh = irfft2(folded, (ml, xbar.shape[1]))[:, :: dec.dc] / dr
    corr = d * fft2(problem.y - sh) / (two_tau * d + class_energy(blur, dec))
    # F S^H w tiles the LR spectrum of w over the alias classes
    corr = corr[:, np.arange(cols) % nl]
    step = _conj_half(blur).reshape(dr, ml, cols) * corr
    fx += step.reshape(fx.shape)
    return irfft2(fx, xbar.shape)


def solve_l2_gradient(y, blur, dec, grad_field, tau: float, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Quadratic SR toward a target gradient field ``(v_h, v_v)``."""
    v_h, v_v = grad_field
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return solve_l2(L2Problem(y, blur, dec, GradientReg(np.asarray(v_h), np.asarray(v_v), sigma), tau))


def back_project(y, blur, dec, x0, tau: float) -> np.ndarray:
    """Project an external HR estimate ``x0`` onto the observation model."""
    return solve_l2_image(y, blur, dec, x0, tau)
