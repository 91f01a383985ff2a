"""Compiled versus numpy kernels, and end-to-end solver timings per backend.

Run ``python3 benchmarks/bench_kernels.py [--sizes 128,256,512]``. Prints a
CSV on stdout: ``case,size,backend,time_ms,speedup``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fastsr import kernels
from fastsr.operators import Decimator, build_gradients, load_kernel, psf_to_otf


def best_ms(fn, budget=0.2):
    fn()
    t = timeit.timeit(fn, number=1)
    number = max(1, int(budget / max(t, 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=5)) / number * 1e3


def kernel_cases(m, rng):
    dec = Decimator.for_hr((m, m), 4, 4)
    otf = psf_to_otf(load_kernel("gaussian:9x9:3"), (m, m)).otf
    rhs = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    g = build_gradients(m, m)
    psi = 1.0 / (np.abs(g.sigma_h) ** 2 + np.abs(g.sigma_v) ** 2 + 1e-8)
    nu_h, nu_v = rng.standard_normal((2, m, m))
    args = (dec.ml, dec.nl, dec.dr, dec.dc, 0.2)
    return {
        "alias_solve": lambda impl: kernels.alias_solve(otf, psi, rhs, *args, impl=impl),
        "alias_solve_identity": lambda impl: kernels.alias_solve_identity(otf, rhs, *args, impl=impl),
        "vector_shrink": lambda impl: kernels.vector_shrink(nu_h, nu_v, 0.5, impl=impl),
        "soft_threshold": lambda impl: kernels.soft_threshold(nu_h, 0.5, impl=impl),
    }


END_TO_END = r"""
import sys, time
import numpy as np
from fastsr import kernels
from fastsr.admm import TV, AdmmConfig, admm_solve
from fastsr.corpus import scene
from fastsr.degradation import DegradationSpec, degrade
from fastsr.operators import Decimator, load_kernel, psf_to_otf
m = int(sys.argv[1])
x = scene(m)
spec = DegradationSpec(dr=4, dc=4)
y, _ = degrade(x, spec)
dec = Decimator.for_hr(x.shape, 4, 4)
blur = psf_to_otf(load_kernel(spec.kernel), x.shape)
cfg = AdmmConfig(tau=3e-4, mu=3e-2, max_iters=50, rel_obj_tol=1e-12, record_trace=False)
admm_solve(y, blur, dec, TV(), cfg)
t0 = time.perf_counter()
admm_solve(y, blur, dec, TV(), cfg)
print(kernels.BACKEND, (time.perf_counter() - t0) * 1e3 / 50)
"""


def end_to_end(m, pure):
    env = dict(os.environ)
    if pure:
        env["FSR_PURE_PYTHON"] = "1"
    else:
        env.pop("FSR_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END, str(m)], env=env, capture_output=True, text=True, check=True)
    backend, ms = out.stdout.split()
    return backend, float(ms)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="128,256,512")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    if "cython" not in kernels.IMPLEMENTATIONS:
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
    rng = np.random.default_rng(0)
    print("case,size,backend,time_ms,speedup")
    for m in sizes:
        for name, fn in kernel_cases(m, rng).items():
            base = best_ms(lambda: fn(kernels.IMPLEMENTATIONS["python"]))
            print(f"{name},{m},python,{base:.4f},1.00")
            if "cython" in kernels.IMPLEMENTATIONS:
                fast = best_ms(lambda: fn(kernels.IMPLEMENTATIONS["cython"]))
                print(f"{name},{m},cython,{fast:.4f},{base / fast:.2f}")
        py_backend, base = end_to_end(m, pure=True)
        print(f"admm_tv_iteration,{m},{py_backend},{base:.4f},1.00")
        backend, ms = end_to_end(m, pure=False)
        if backend != py_backend:
            print(f"admm_tv_iteration,{m},{backend},{ms:.4f},{base / ms:.2f}")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
