"""Desk-scale experiment protocol: tau sweeps and timing scaling tables."""

from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .admm import TV, AdmmConfig, WaveletL1, admm_solve
from .baselines import bicubic_upsample
from .degradation import DegradationSpec, degrade
from .metrics import psnr, rmse
from .operators import Decimator, gradient, load_kernel, psf_to_otf
from .spectral import back_project, solve_l2_gradient, solve_l2_image

__all__ = [
    "METHODS",
    "SolverSpec",
    "run_solver",
    "sweep_tau",
    "scaling_bench",
    "write_csv",
    "SWEEP_HEADER",
    "SCALING_HEADER",
]

METHODS = ("l2-image", "l2-gradient", "backproject", "admm-tv", "admm-l1")
SWEEP_HEADER = ("tau", "rmse", "psnr", "time_s", "status")
SCALING_HEADER = ("Nh", "time_s", "time_ratio")


@dataclass(frozen=True)
class SolverSpec:
    """Which solver to run and where its prior comes from.

    ``prior`` selects ``x̄``/``x0``/gradient field: ``"truth"`` uses the
    ground truth (an oracle prior), ``"bicubic"`` the interpolated
    observation.
    """

    method: str = "l2-image"
    prior: str = "bicubic"
    sigma: float = 1e-8
    mu_factor: float = 10.0
    rel_obj_tol: float = 1e-5
    max_iters: int = 1000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.prior not in ("truth", "bicubic"):
            raise ValueError(f"unknown prior {self.prior!r}")


def run_solver(solver: SolverSpec, y, blur, dec, tau: float, x_true=None):
    """Dispatch one solve. ``x_true`` is needed only for ``prior="truth"``."""
    if solver.prior == "truth":
        if x_true is None:
            raise ValueError("prior='truth' requires the ground truth")
        prior = np.asarray(x_true, dtype=np.float64)
    else:
        prior = bicubic_upsample(y, dec.dr, dec.dc)
    m = solver.method
    if m == "l2-image":
        return solve_l2_image(y, blur, dec, prior, tau)
    if m == "backproject":
        return back_project(y, blur, dec, prior, tau)
    if m == "l2-gradient":
        return solve_l2_gradient(y, blur, dec, gradient(prior), tau, solver.sigma)
    cfg = AdmmConfig(
        tau=tau,
        mu=solver.mu_factor * tau,
        rel_obj_tol=solver.rel_obj_tol,
        max_iters=solver.max_iters,
        record_trace=False,
    )
    reg = TV() if m == "admm-tv" else WaveletL1()
    x, _ = admm_solve(y, blur, dec, reg, cfg)
    return x


def sweep_tau(x_true, spec: DegradationSpec, solver: SolverSpec, tau_grid):
    """Degrade once with ``spec`` and solve for every ``tau``.

    Returns a list of dicts with keys ``SWEEP_HEADER``. A solver error
    marks its row ``failed: ...`` with NaN metrics and the sweep goes on.
    """
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise ValueError("tau grid is empty")
    if any(not t > 0 for t in taus):
        raise ValueError("tau values must be positive")
    x_true = np.asarray(x_true, dtype=np.float64)
    y, _ = degrade(x_true, spec)
    dec = Decimator.for_hr(x_true.shape, spec.dr, spec.dc)
    blur = psf_to_otf(load_kernel(spec.kernel), x_true.shape)
    rows = []
    for tau in taus:
        t0 = time.perf_counter()
        try:
            x = run_solver(solver, y, blur, dec, tau, x_true)
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            rows.append(dict(tau=tau, rmse=math.nan, psnr=math.nan, time_s=math.nan, status=f"failed: {exc}"))
            continue
        elapsed = time.perf_counter() - t0
        rows.append(dict(tau=tau, rmse=rmse(x_true, x), psnr=psnr(x_true, x), time_s=elapsed, status="ok"))
    return rows


def scaling_bench(
    sizes, spec: DegradationSpec, repeats: int = 5, tau: float = 0.1, image=None, min_sample_s: float = 0.05
):
    """Median wall time of ``solve_l2_image`` per HR size.

    Parameters
    ----------
    sizes : sequence of int or (int, int)
        HR sizes; squares when given as ints.
    image : callable, optional
        ``image(m, n) -> ndarray``; a procedural scene by default.
    min_sample_s : float
        Each of the ``repeats`` samples averages enough back-to-back solves
        to last at least this long, which keeps small sizes out of timer noise.

    Returns
    -------
    list of dict
        Keys ``Nh``, ``time_s``, ``time_ratio`` (``None`` on the first row).
    """
    from .corpus import scene

    make = scene if image is None else image
    rows = []
    prev = None
    for size in sizes:
        m, n = (size, size) if np.isscalar(size) else size
        if m % spec.dr or n % spec.dc:
            raise ValueError(f"size {m}x{n} not divisible by {spec.dr}x{spec.dc}")
        x = make(m, n)
        y, _ = degrade(x, spec)
        dec = Decimator.for_hr((m, n), spec.dr, spec.dc)
        blur = psf_to_otf(load_kernel(spec.kernel), (m, n))
        xbar = bicubic_upsample(y, spec.dr, spec.dc)
        t0 = time.perf_counter()
        solve_l2_image(y, blur, dec, xbar, tau)  # warm-up
        # batch fast solves so each sample spans >= min_sample_s
        number = max(1, math.ceil(min_sample_s / max(time.perf_counter() - t0, 1e-9)))
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            for _ in range(number):
                solve_l2_image(y, blur, dec, xbar, tau)
            times.append((time.perf_counter() - t0) / number)
        med = statistics.median(times)
        rows.append(dict(Nh=m * n, time_s=med, time_ratio=None if prev is None else med / prev))
        prev = med
    return rows


def write_csv(rows, header, path_or_file) -> None:
    """Write dict rows with the given column order; ``None`` becomes blank."""

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if row[k] is None else row[k] for k in header])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)
