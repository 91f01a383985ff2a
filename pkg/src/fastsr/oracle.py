"""Dense-matrix verification of the spectral solver's algebra.

Every check builds explicit matrices on small grids and compares them with
the structured fast path:

* alias folding: ``F Sbar F^H`` is ``1/d`` on each alias class and zero
  elsewhere;
* the transfer-weighted version ``L^H F Sbar F^H L = (1/d) Lbar^H Lbar``;
* the Woodbury inverse identity used to shrink the normal equations;
* the closed-form solve against a dense factorization of the normal
  equations, for all three regularizer kinds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .baselines import DenseProblem, dense_solve
from .operators import Decimator, dense_decimation, dft_matrix, psf_to_otf
from .spectral import (
    GradientReg,
    IdentityReg,
    L2Problem,
    TransformReg,
    alias_frequency_map,
    build_lambda_bar,
    solve_l2,
)
from .wavelet import HaarTransform, max_levels

__all__ = [
    "CheckResult",
    "alias_fold_error",
    "weighted_fold_error",
    "woodbury_error",
    "closed_form_error",
    "random_instance",
    "run_suite",
    "corrupt_map",
]

FOLD_TOL = 1e-10
WOODBURY_TOL = 1e-9
SOLVE_TOL = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    count: int

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst={self.worst:.3e} tol={self.tol:.0e} cases={self.count}"


def corrupt_map(freq_map: np.ndarray) -> np.ndarray:
    """Swap two HR frequencies between the first two alias classes (negative control)."""
    bad = freq_map.copy()
    if bad.shape[0] > 1:
        bad[0, 0], bad[1, 0] = bad[1, 0], bad[0, 0]
    else:
        bad[0, 0] = (bad[0, 0] + 1) % bad.size
    return bad


def _class_pattern(freq_map: np.ndarray, n: int, d: int) -> np.ndarray:
    """Dense ``1/d`` on every pair of frequencies sharing a class."""
    label = np.full(n, -1)
    for k, idx in enumerate(freq_map):
        label[idx] = k
    return (label[:, None] == label[None, :]) / d


def alias_fold_error(mh: int, nh: int, dr: int, dc: int, freq_map=None, F=None) -> float:
    """Max abs deviation of dense ``F Sbar F^H`` from the class pattern."""
    dec = Decimator.for_hr((mh, nh), dr, dc)
    F = dft_matrix(mh, nh) if F is None else F
    # Sbar = S^T S, so F Sbar F^H = (F S^T)(F S^T)^H; S^T only selects columns
    FS = F[:, np.nonzero(dense_decimation(dec))[1]]
    fold = FS @ FS.conj().T
    fmap = alias_frequency_map(dec) if freq_map is None else freq_map
    return float(np.abs(fold - _class_pattern(fmap, mh * nh, dec.d)).max())


def weighted_fold_error(blur, dec: Decimator, freq_map=None) -> float:
    """Max abs deviation of ``L^H F Sbar F^H L`` from ``(1/d) Lbar^H Lbar``."""
    mh, nh = dec.hr_shape
    F = dft_matrix(mh, nh)
    S = dense_decimation(dec)
    lam = np.diag(blur.otf.reshape(-1))
    lhs = lam.conj().T @ F @ (S.T @ S) @ F.conj().T @ lam
    lb = build_lambda_bar(blur, dec)
    if freq_map is not None:
        lb = type(lb)(blur.otf.reshape(-1)[freq_map], freq_map)
    return float(np.abs(lhs - lb.gram()).max())


def woodbury_error(n_l: int, d: int, rng) -> float:
    """Relative gap between both sides of the Woodbury inverse identity.

    Uses the solver's shapes: ``A1`` positive diagonal (``Nh x Nh``),
    ``A2 = Lbar^H``, ``A3 = I/d``, ``A4 = Lbar`` with ``Lbar`` random
    complex ``Nl x Nh``.
    """
    n_h = n_l * d
    a1 = np.diag(rng.uniform(0.1, 10.0, n_h))
    lb = rng.standard_normal((n_l, n_h)) + 1j * rng.standard_normal((n_l, n_h))
    a2, a3, a4 = lb.conj().T, np.eye(n_l) / d, lb
    lhs = np.linalg.inv(a1 + a2 @ a3 @ a4)
    a1i = np.diag(1.0 / np.diag(a1))
    inner = np.linalg.inv(np.linalg.inv(a3) + a4 @ a1i @ a2)
    rhs = a1i - a1i @ a2 @ inner @ a4 @ a1i
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


def random_instance(rng, max_unknowns: int = 1024, kind: str | None = None, min_side: int = 8):
    """Random ``L2Problem`` on an HR grid from ``min_side`` to 32 per side.

    Grids never exceed ``max_unknowns`` pixels.
    """
    factors = [(1, 1), (2, 2), (2, 3), (4, 4)]
    if max_unknowns < 4:
        raise ValueError("max_unknowns must be >= 4")
    while True:
        dr, dc = factors[rng.integers(len(factors))]
        ml = int(rng.integers(max(1, -(-min_side // dr)), 32 // dr + 1))
        nl = int(rng.integers(max(1, -(-min_side // dc)), 32 // dc + 1))
        if kind == "transform":
            # Haar needs even sizes
            ml += (ml * dr) % 2
            nl += (nl * dc) % 2
        mh, nh = ml * dr, nl * dc
        if mh * nh <= max_unknowns and mh <= 32 and nh <= 32:
            break
    ks = int(rng.integers(1, min(5, mh, nh) + 1))
    kc = int(rng.integers(1, min(5, mh, nh) + 1))
    psf = rng.random((ks, kc)) + 0.05
    psf /= psf.sum()
    blur = psf_to_otf(psf, (mh, nh))
    dec = Decimator.for_hr((mh, nh), dr, dc)
    y = rng.random((ml, nl))
    tau = float(10 ** rng.uniform(-3, 1))
    kind = kind or ("identity", "gradient", "transform")[rng.integers(3)]
    if kind == "identity":
        reg = IdentityReg(rng.random((mh, nh)))
    elif kind == "gradient":
        sigma = float(10 ** rng.uniform(-8, -1))
        reg = GradientReg(rng.standard_normal((mh, nh)), rng.standard_normal((mh, nh)), sigma)
    else:
        levels = max(1, min(2, max_levels((mh, nh))))
        reg = TransformReg(HaarTransform(levels), rng.standard_normal((mh, nh)))
    return L2Problem(y, blur, dec, reg, tau)


def closed_form_error(problem: L2Problem) -> float:
    """Relative l2 gap between the spectral solve and a dense Cholesky solve."""
    ref = dense_solve(DenseProblem.from_problem(problem), problem.tau).reshape(problem.dec.hr_shape)
    x = solve_l2(problem)
    return float(np.linalg.norm(x - ref) / np.linalg.norm(ref))


def _divisors(n):
    return [k for k in range(1, n + 1) if n % k == 0]


def _fold_configs(max_unknowns: int):
    """Every ``(mh, nh, dr, dc)`` with ``mh * nh <= max_unknowns`` and exact division."""
    for mh in range(1, max_unknowns + 1):
        for nh in range(1, max_unknowns // mh + 1):
            for dr, dc in itertools.product(_divisors(mh), _divisors(nh)):
                yield mh, nh, dr, dc


def run_suite(max_size: int = 256, corrupt_frequency_map: bool = False, seed: int = 0,
              solve_cases: int = 50, woodbury_cases: int = 20):
    """Run every identity check on problems with at most ``max_size`` unknowns.

    Returns a list of :class:`CheckResult`. ``corrupt_frequency_map`` feeds a
    deliberately wrong alias grouping into the folding checks.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    rng = np.random.default_rng(seed)
    results = []

    worst, count = 0.0, 0
    cache = {}
    for mh, nh, dr, dc in _fold_configs(max_size):
        if (mh, nh) not in cache:
            cache = {(mh, nh): dft_matrix(mh, nh)}
        fmap = None
        if corrupt_frequency_map:
            fmap = corrupt_map(alias_frequency_map(Decimator.for_hr((mh, nh), dr, dc)))
        worst = max(worst, alias_fold_error(mh, nh, dr, dc, fmap, F=cache[(mh, nh)]))
        count += 1
    results.append(CheckResult("alias-fold", worst <= FOLD_TOL, worst, FOLD_TOL, count))

    worst, count = 0.0, 0
    configs = [c for c in _fold_configs(min(max_size, 144)) if c[2] * c[3] > 1]
    picks = rng.choice(len(configs), size=min(40, len(configs)), replace=False) if configs else []
    for i in sorted(picks):
        mh, nh, dr, dc = configs[i]
        dec = Decimator.for_hr((mh, nh), dr, dc)
        psf = rng.random((min(3, mh), min(3, nh)))
        blur = psf_to_otf(psf / psf.sum(), (mh, nh))
        fmap = corrupt_map(alias_frequency_map(dec)) if corrupt_frequency_map else None
        worst = max(worst, weighted_fold_error(blur, dec, fmap))
        count += 1
    results.append(CheckResult("weighted-fold", worst <= FOLD_TOL, worst, FOLD_TOL, count))

    worst, count = 0.0, 0
    sizes = [(nl, d) for nl in range(1, 17) for d in (1, 2, 4, 6, 16) if nl * d <= min(64, max_size)]
    for k in range(woodbury_cases):
        n_l, d = sizes[k % len(sizes)]
        worst = max(worst, woodbury_error(n_l, d, rng))
        count += 1
    results.append(CheckResult("woodbury", worst <= WOODBURY_TOL, worst, WOODBURY_TOL, count))

    worst, count = 0.0, 0
    kinds = ("identity", "gradient", "transform")
    min_side = 8 if max_size >= 64 else 2
    for k in range(solve_cases):
        problem = random_instance(rng, max_unknowns=max(max_size, 4), kind=kinds[k % 3], min_side=min_side)
        worst = max(worst, closed_form_error(problem))
        count += 1
    results.append(CheckResult("closed-form", worst <= SOLVE_TOL, worst, SOLVE_TOL, count))
    return results
