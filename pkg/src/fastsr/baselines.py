"""Reference solvers: dense normal equations, conjugate gradient, bicubic."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import dense_blur, dense_decimation, dense_gradients
from .spectral import GradientReg, IdentityReg, L2Problem, TransformReg

__all__ = [
    "DenseProblem",
    "ConvergenceError",
    "dense_solve",
    "cg_solve",
    "bicubic_upsample",
    "keys_weight",
]

MAX_DENSE = 4096


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DenseProblem:
    """Explicit matrices of a quadratic SR problem.

    ``shift`` adds ``shift * I`` to ``A^T A`` (the gradient prior's sigma).
    """

    H: np.ndarray
    S: np.ndarray
    A: np.ndarray
    y: np.ndarray
    v: np.ndarray
    shift: float = 0.0

    @classmethod
    def from_problem(cls, problem: L2Problem) -> "DenseProblem":
        mh, nh = problem.dec.hr_shape
        n = mh * nh
        if n > MAX_DENSE:
            raise ValueError(f"dense problems are limited to {MAX_DENSE} unknowns, got {n}")
        H = dense_blur(problem.blur)
        S = dense_decimation(problem.dec)
        reg = problem.reg
        shift = 0.0
        if isinstance(reg, IdentityReg):
            A = np.eye(n)
            v = np.asarray(reg.xbar, dtype=np.float64).reshape(-1)
        elif isinstance(reg, GradientReg):
            dh, dv = dense_gradients(mh, nh)
            A = np.vstack([dh, dv])
            v = np.concatenate([np.ravel(reg.v_h), np.ravel(reg.v_v)])
            shift = reg.sigma
        elif isinstance(reg, TransformReg):
            eye = np.eye(n)
            A = np.stack([np.ravel(reg.transform.forward(e.reshape(mh, nh))) for e in eye], axis=1)
            v = np.ravel(reg.coeffs)
        else:
            raise TypeError(f"unsupported regularizer {type(reg).__name__}")
        return cls(H, S, A, problem.y.reshape(-1), v, shift)

    def normal_matrix(self, tau: float) -> np.ndarray:
        SH = self.S @ self.H
        return SH.T @ SH + 2.0 * tau * (self.A.T @ self.A + self.shift * np.eye(self.H.shape[0]))

    def rhs(self, tau: float) -> np.ndarray:
        return (self.S @ self.H).T @ self.y + 2.0 * tau * (self.A.T @ self.v)


def dense_solve(p: DenseProblem, tau: float, method: str = "cholesky") -> np.ndarray:
    """Direct solve of the normal equations, ``O(Nh^3)``.

    ``method`` is ``"cholesky"`` or ``"lu"``; both raise
    ``numpy.linalg.LinAlgError`` on a singular system.
    """
    M = p.normal_matrix(tau)
    r = p.rhs(tau)
    if method == "cholesky":
        try:
            factor = scipy.linalg.cho_factor(M, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"normal matrix is not positive definite: {exc}") from None
        return scipy.linalg.cho_solve(factor, r)
    if method == "lu":
        with warnings.catch_warnings():
            # singularity is reported below as LinAlgError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
        if np.any(np.abs(np.diag(lu)) <= 1e-14 * np.abs(lu).max()):
            raise np.linalg.LinAlgError("normal matrix is singular")
        return scipy.linalg.lu_solve((lu, piv), r)
    raise ValueError(f"unknown method {method!r}")


def cg_solve(apply_normal_op, r, tol: float = 1e-8, max_iters: int = 1000, x0=None, return_info=False):
    """Conjugate gradient for ``N x = r`` with ``N`` symmetric positive definite.

    Stops once ``||r - N x|| <= tol * ||r||``. Raises
    :class:`ConvergenceError` if that does not happen within
    ``max_iters`` iterations.
    """
    r = np.asarray(r, dtype=np.float64)
    x = np.zeros_like(r) if x0 is None else np.array(x0, dtype=np.float64)
    res = r - apply_normal_op(x) if x0 is not None else r.copy()
    target = tol * np.linalg.norm(r)
    rs = float(np.vdot(res, res).real)
    p = res.copy()
    it = 0
    while np.sqrt(rs) > target:
        if it >= max_iters:
            raise ConvergenceError(
                f"CG did not reach tol={tol:g} in {max_iters} iterations "
                f"(relative residual {np.sqrt(rs) / np.linalg.norm(r):.3e})"
            )
        Np = apply_normal_op(p)
        alpha = rs / float(np.vdot(p, Np).real)
        x += alpha * p
        res -= alpha * Np
        rs_new = float(np.vdot(res, res).real)
        p = res + (rs_new / rs) * p
        rs = rs_new
        it += 1
    if return_info:
        return x, it
    return x


def keys_weight(t, a: float = -0.5):
    """Keys cubic convolution kernel."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    w = np.zeros_like(t)
    near = t <= 1
    far = (t > 1) & (t < 2)
    w[near] = (a + 2) * t[near] ** 3 - (a + 3) * t[near] ** 2 + 1
    w[far] = a * t[far] ** 3 - 5 * a * t[far] ** 2 + 8 * a * t[far] - 4 * a
    return w


def _interp_matrix(n_in: int, factor: int) -> np.ndarray:
    # LR sample i sits on HR sample i * factor (same phase as decimation)
    n_out = n_in * factor
    s = np.arange(n_out) / factor
    base = np.floor(s).astype(int)
    frac = s - base
    W = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for offset in (-1, 0, 1, 2):
        idx = np.clip(base + offset, 0, n_in - 1)
        np.add.at(W, (rows, idx), keys_weight(frac - offset))
    return W


def bicubic_upsample(y, dr: int, dc: int | None = None) -> np.ndarray:
    """Keys (a = -0.5) bicubic interpolation with edge clamping."""
    dc = dr if dc is None else dc
    if dr < 1 or dc < 1:
        raise ValueError("factors must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    return _interp_matrix(y.shape[0], dr) @ y @ _interp_matrix(y.shape[1], dc).T
