"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop by
loop and is picked up by :mod:`fastsr.kernels` when compiled.
"""

import numpy as np


def _to_classes(a, ml, nl, dr, dc):
    # (dr*ml, dc*nl) -> (ml, nl, d) with block index a*dc + b
    return a.reshape(dr, ml, dc, nl).transpose(1, 3, 0, 2).reshape(ml, nl, dr * dc)


def _from_classes(a, ml, nl, dr, dc):
    return a.reshape(ml, nl, dr, dc).transpose(2, 0, 3, 1).reshape(dr * ml, dc * nl)


def _leave_one_out(a):
    """``out[..., k] = sum_{j != k} a[..., j]`` without subtracting ``a[..., k]``."""
    pre = np.cumsum(a, axis=-1)
    pre = np.concatenate([np.zeros_like(a[..., :1]), pre[..., :-1]], axis=-1)
    suf = np.cumsum(a[..., ::-1], axis=-1)[..., ::-1]
    suf = np.concatenate([suf[..., 1:], np.zeros_like(a[..., :1])], axis=-1)
    return pre + suf


def alias_solve(otf, psi, rhs, ml, nl, dr, dc, two_tau):
    """Solve ``((1/d) conj(L) L^T + two_tau * diag(1/psi)) X = R`` per alias class.

    ``otf``, ``psi`` and ``rhs`` live on the full ``(dr*ml, dc*nl)``
    frequency grid; HR frequency ``(p + a*ml, q + b*nl)`` belongs to the
    class of LR frequency ``(p, q)``. This is the Woodbury closed form
    with the own-term cancellation done symbolically, so a huge ``psi``
    entry (e.g. a DC floor) does not cost precision.
    """
    d = dr * dc
    lam = _to_classes(otf, ml, nl, dr, dc)
    r = _to_classes(rhs, ml, nl, dr, dc)
    if psi is None:
        p = np.ones(lam.shape)
    else:
        p = _to_classes(psi, ml, nl, dr, dc)
    a = p * (lam.real**2 + lam.imag**2)
    b = lam * p * r
    base = two_tau * d
    den = base + a.sum(axis=-1, keepdims=True)
    x = p * (r * (base + _leave_one_out(a)) - np.conj(lam) * _leave_one_out(b)) / (two_tau * den)
    return _from_classes(x, ml, nl, dr, dc)


def alias_solve_identity(otf, rhs, ml, nl, dr, dc, two_tau):
    """Special case ``psi = 1``: ``X = (R - conj(L) (L^T R) / (two_tau d + |L|^2)) / two_tau``."""
    d = dr * dc
    lam = otf.reshape(dr, ml, dc, nl)
    r = rhs.reshape(dr, ml, dc, nl)
    num = (lam * r).sum(axis=(0, 2))
    den = two_tau * d + (lam.real**2 + lam.imag**2).sum(axis=(0, 2))
    x = (r - np.conj(lam) * (num / den)[None, :, None, :]) / two_tau
    return x.reshape(dr * ml, dc * nl)


def vector_shrink(nu_h, nu_v, threshold):
    norm = np.hypot(nu_h, nu_v)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > threshold, 1.0 - threshold / norm, 0.0)
    return scale * nu_h, scale * nu_v


def soft_threshold(nu, threshold):
    return np.sign(nu) * np.maximum(np.abs(nu) - threshold, 0.0)
