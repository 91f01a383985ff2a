"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line with the measured value and its
tolerance, then asserts. Run with ``pytest tests/test_acceptance.py -s`` to
see the lines.
"""

import filecmp
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from fastsr.admm import TV, AdmmConfig, WaveletL1, admm_solve, prox_l1, prox_tv_vector
from fastsr.baselines import bicubic_upsample, cg_solve
from fastsr.bench import scaling_bench
from fastsr.corpus import checkerboard, mosaic, scene, shapes
from fastsr.degradation import DegradationSpec, degrade, measured_bsnr
from fastsr.image import Image, write_image
from fastsr.metrics import psnr
from fastsr.operators import Decimator, dft_matrix, gradient, load_kernel, psf_to_otf
from fastsr.oracle import (
    _fold_configs,
    alias_fold_error,
    closed_form_error,
    random_instance,
    woodbury_error,
)

from fastsr.spectral import GradientReg, L2Problem, normal_operator, normal_rhs, solve_l2_gradient, solve_l2_image

pytestmark = pytest.mark.slow

KERNEL = "gaussian:9x9:3"


def report(number, name, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} [{number}] {name}: {detail}")
    assert ok, f"criterion {number} ({name}) failed: {detail}"


def _setup(x, dr, dc, bsnr=30.0, seed=0):
    spec = DegradationSpec(KERNEL, dr, dc, bsnr, seed)
    y, _ = degrade(x, spec)
    dec = Decimator.for_hr(x.shape, dr, dc)
    blur = psf_to_otf(load_kernel(KERNEL), x.shape)
    return y, blur, dec


def test_01_closed_form_matches_dense_solve():
    rng = np.random.default_rng(2024)
    kinds = ("identity", "gradient", "transform")
    t0 = time.perf_counter()
    errs, seen = [], set()
    for k in range(60):
        problem = random_instance(rng, kind=kinds[k % 3])
        seen.add((kinds[k % 3], problem.dec.dr, problem.dec.dc))
        errs.append(closed_form_error(problem))
    elapsed = time.perf_counter() - t0
    worst = max(errs)
    ok = worst <= 1e-8 and elapsed < 30.0 and len(errs) >= 50
    report(1, "closed form vs dense solve", ok,
           f"{len(errs)} instances, worst rel err {worst:.2e} (tol 1e-8), {elapsed:.1f} s (limit 30 s), "
           f"{len(seen)} kind/factor combinations")


def test_02_alias_fold_exhaustive():
    worst, count, cache = 0.0, 0, {}
    for mh, nh, dr, dc in _fold_configs(256):
        if (mh, nh) not in cache:
            cache = {(mh, nh): dft_matrix(mh, nh)}
        worst = max(worst, alias_fold_error(mh, nh, dr, dc, F=cache[(mh, nh)]))
        count += 1
    report(2, "alias folding identity", worst <= 1e-10,
           f"{count} grids/factor pairs with Nh <= 256, max abs err {worst:.2e} (tol 1e-10)")


def test_03_woodbury_identity():
    rng = np.random.default_rng(7)
    sizes = [(n_l, d) for n_l in (1, 2, 4, 8, 16) for d in (1, 2, 4, 6) if n_l * d <= 64]
    errs = [woodbury_error(*sizes[k % len(sizes)], rng) for k in range(20)]
    report(3, "Woodbury identity", max(errs) <= 1e-9,
           f"20 instances up to 64x64, worst rel err {max(errs):.2e} (tol 1e-9)")


def test_04_truth_prior_reconstruction_512():
    x = scene(512, 512)
    y, blur, dec = _setup(x, 4, 4)
    solve_l2_image(y, blur, dec, x, 0.1)  # warm caches
    times = []
    for _ in range(5):
        t0 = time.perf_counter()
        est = solve_l2_image(y, blur, dec, x, 0.1)
        times.append(time.perf_counter() - t0)
    score = psnr(x, est)
    elapsed = float(np.median(times))
    report(4, "512x512 truth-prior solve", score >= 50.0 and elapsed < 1.0,
           f"PSNR {score:.2f} dB (min 50), median time {elapsed * 1e3:.1f} ms (limit 1000 ms)")


def test_05_gradient_solver_matches_cg():
    x = scene(64, 64)
    y, blur, dec = _setup(x, 2, 2)
    field = gradient(x)
    tau, sigma = 1e-3, 1e-8
    est = solve_l2_gradient(y, blur, dec, field, tau, sigma)
    problem = L2Problem(y, blur, dec, GradientReg(*field, sigma), tau)
    ref, iters = cg_solve(lambda v: normal_operator(problem, v), normal_rhs(problem), tol=1e-8,
                          max_iters=10000, return_info=True)
    err = float(np.linalg.norm(est - ref) / np.linalg.norm(ref))
    gap = abs(psnr(x, est) - psnr(x, ref))
    report(5, "gradient prior vs CG", err < 1e-6 and gap < 0.01,
           f"rel err {err:.2e} (tol 1e-6), PSNR gap {gap:.5f} dB (tol 0.01), "
           f"PSNR {psnr(x, est):.2f} dB, CG iterations {iters}")


def _admm_suite(reg, images):
    tau = 3e-4
    rows = []
    for name, x in images:
        y, blur, dec = _setup(x, 2, 2)
        est, state = admm_solve(y, blur, dec, reg, AdmmConfig(tau=tau, mu=100 * tau, max_iters=3000))
        f = [r.objective for r in state.trace]
        change = abs(f[-1] - f[-2]) / f[-2]
        gain = psnr(x, est) - psnr(x, bicubic_upsample(y, 2, 2))
        rows.append((name, gain, change, state.split_residual(reg), state.iter, state.converged))
    return rows


def _suite_report(number, title, rows):
    ok = all(g >= 1.5 and c < 1e-5 and s < 1e-3 and conv for _, g, c, s, _, conv in rows)
    for name, g, c, s, it, conv in rows:
        print(f"    {name:>16}: gain {g:+.2f} dB, obj change {c:.1e}, split {s:.1e}, {it} iters")
    worst = min(r[1] for r in rows)
    report(number, title, ok,
           f"{len(rows)} images, min gain {worst:+.2f} dB (min +1.5), "
           f"max obj change {max(r[2] for r in rows):.1e} (tol 1e-5), "
           f"max split residual {max(r[3] for r in rows):.1e} (tol 1e-3)")


def test_06_admm_tv_suite():
    images = [(f"mosaic-{s}", mosaic(64, 64, seed=s)) for s in range(5)]
    images += [(f"shapes-{s}", shapes(64, 64, seed=s)) for s in range(3)]
    images.append(("checkerboard", checkerboard(64)))
    _suite_report(6, "ADMM total variation suite", _admm_suite(TV(), images))


def _vector_prox_grid(nu, lam):
    """Coarse-to-fine grid minimization of lam*|u| + |u - nu|^2 / 2 per row of ``nu``.

    Each level's grid lies on multiples of its step, so the kink at the
    origin is always a candidate.
    """
    offsets = np.arange(-20, 21)
    gh, gv = np.meshgrid(offsets, offsets, indexing="ij")
    centre = nu / 2
    step = (np.linalg.norm(nu, axis=1) + 1e-3) / 20
    while True:
        centre = np.round(centre / step[:, None]) * step[:, None]
        uh = centre[:, 0, None, None] + step[:, None, None] * gh
        uv = centre[:, 1, None, None] + step[:, None, None] * gv
        cost = lam[:, None, None] * np.hypot(uh, uv) + 0.5 * ((uh - nu[:, 0, None, None]) ** 2
                                                                + (uv - nu[:, 1, None, None]) ** 2)
        flat = cost.reshape(len(nu), -1).argmin(axis=1)
        idx = np.arange(len(nu))
        centre = np.stack([uh.reshape(len(nu), -1)[idx, flat], uv.reshape(len(nu), -1)[idx, flat]], axis=1)
        if step.max() <= 1e-4:
            return centre
        step = np.maximum(step / 4, 1e-5)


def test_07_admm_l1_suite_and_prox_oracles():
    rng = np.random.default_rng(11)
    # scalar soft threshold against a dense 1e-3 grid
    nu = rng.uniform(-4, 4, 10_000)
    lam = rng.uniform(0, 2, 10_000)
    grid = np.arange(-5.0, 5.0 + 5e-4, 1e-3)
    worst_l1 = 0.0
    for chunk in np.array_split(np.arange(nu.size), 40):
        cost = lam[chunk, None] * np.abs(grid) + 0.5 * (grid - nu[chunk, None]) ** 2
        best = grid[cost.argmin(axis=1)]
        got = np.array([prox_l1(np.array([n]), t)[0] for n, t in zip(nu[chunk], lam[chunk])])
        worst_l1 = max(worst_l1, float(np.abs(got - best).max()))
    # vector shrinkage against a refined 2-D grid
    vec = rng.uniform(-3, 3, (10_000, 2))
    lam2 = rng.uniform(0, 2, 10_000)
    worst_tv = 0.0
    for chunk in np.array_split(np.arange(len(vec)), 20):
        best = _vector_prox_grid(vec[chunk], lam2[chunk])
        h = np.empty(len(chunk))
        v = np.empty(len(chunk))
        for i, k in enumerate(chunk):
            a, b = prox_tv_vector((vec[k:k + 1, 0], vec[k:k + 1, 1]), lam2[k])
            h[i], v[i] = a[0], b[0]
        worst_tv = max(worst_tv, float(np.abs(np.stack([h, v], axis=1) - best).max()))
    prox_ok = worst_l1 <= 1e-3 and worst_tv <= 1e-3
    print(f"\n    prox oracles: soft threshold worst {worst_l1:.1e}, vector shrink worst {worst_tv:.1e} (tol 1e-3)")

    images = [(f"mosaic-{s}", mosaic(64, 64, seed=s)) for s in range(5)]
    images.append(("checkerboard", checkerboard(64)))
    rows = _admm_suite(WaveletL1(), images)
    if not prox_ok:
        report(7, "ADMM wavelet l1 suite", False, f"prox oracle mismatch {max(worst_l1, worst_tv):.1e}")
    _suite_report(7, "ADMM wavelet l1 suite (+ prox oracles on 1e4 samples)", rows)


def test_08_scaling():
    spec = DegradationSpec(KERNEL, 4, 4, 30.0, 0)
    rows = scaling_bench([128, 256, 512], spec, repeats=5)
    ratios = [r["time_ratio"] for r in rows[1:]]
    # consecutive sizes differ by 4x in area, i.e. two area doublings
    per_doubling = [q ** 0.5 for q in ratios]
    times = ", ".join(f"{r['Nh']}: {r['time_s'] * 1e3:.2f} ms" for r in rows)
    report(8, "solve time scaling", max(per_doubling) <= 2.6,
           f"{times}; 4x-area ratios {', '.join(f'{q:.2f}' for q in ratios)}, "
           f"per 2x area {', '.join(f'{q:.2f}' for q in per_doubling)} (max 2.6)")


def test_09_bsnr_calibration():
    x = scene(512, 512)
    clean, _ = degrade(x, DegradationSpec(KERNEL, 4, 4, math.inf, 0))
    values = []
    for seed in range(10):
        noisy, _ = degrade(x, DegradationSpec(KERNEL, 4, 4, 30.0, seed))
        values.append(measured_bsnr(clean, noisy))
    dev = max(abs(v - 30.0) for v in values)
    report(9, "BSNR calibration", dev <= 0.3,
           f"10 seeds, realized {min(values):.2f}..{max(values):.2f} dB, max deviation {dev:.3f} dB (tol 0.3)")


def _cli(*args, cwd):
    env = dict(os.environ)
    out = subprocess.run([sys.executable, "-m", "fastsr.cli", *map(str, args)], cwd=cwd, env=env,
                         capture_output=True)
    assert out.returncode == 0, out.stderr.decode()
    return out.stdout


def test_10_cli_determinism(tmp_path):
    hr = tmp_path / "hr.pgm"
    write_image(Image(scene(64, 64) * 255.0, 255.0), hr, bits=16)
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        _cli("degrade", "--input", hr, "--output", d / "lr.pgm", "--dx", 2, "--dy", 2, "--seed", 9, cwd=d)
        stdout = [
            _cli("sr", "--input", d / "lr.pgm", "--output", d / f"{m}.pgm", "--method", m, "--tau", 1e-2,
                 "--dx", 2, "--dy", 2, "--max-iters", 50, "--reference", hr, cwd=d)
            for m in ("l2-image", "l2-gradient", "backproject", "admm-tv", "admm-l1")
        ]
        outputs.append(stdout)
    names = ["lr.pgm", "lr.pgm.json", "l2-image.pgm", "l2-gradient.pgm", "backproject.pgm", "admm-tv.pgm",
             "admm-l1.pgm"]
    same = [filecmp.cmp(tmp_path / "a" / n, tmp_path / "b" / n, shallow=False) for n in names]
    ok = all(same) and outputs[0] == outputs[1]
    report(10, "CLI determinism", ok,
           f"{sum(same)}/{len(names)} output files byte-identical, metrics stdout identical: "
           f"{outputs[0] == outputs[1]}")
