"""Command-line entry point.

Exit codes: 0 ok, 1 verification failure, 2 usage, 3 IO, 4 numerical.
Payloads (JSON, CSV) go to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .admm import TV, AdmmConfig, WaveletL1, admm_solve, write_trace_csv
from .baselines import ConvergenceError, bicubic_upsample
from .bench import (
    METHODS,
    SCALING_HEADER,
    SWEEP_HEADER,
    SolverSpec,
    scaling_bench,
    sweep_tau,
    write_csv,
)
from .corpus import CORPUS, make_image
from .degradation import DegradationSpec, degrade
from .image import (
    Image,
    ImageFormatError,
    combine_luminance,
    extract_luminance,
    load_image,
    load_rgb,
    write_image,
    write_rgb,
)
from .metrics import compute_metrics
from .operators import Decimator, gradient, load_kernel, psf_to_otf
from .oracle import run_suite
from .spectral import back_project, solve_l2_gradient, solve_l2_image

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"fastsr: {msg}", file=sys.stderr)


def _bsnr(text: str) -> float:
    if text.lower() in ("inf", "+inf", "none"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid BSNR {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _float_list(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None


def _int_list(text: str):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None


def _add_model_flags(p):
    p.add_argument("--kernel", default="gaussian:9x9:3", help="blur spec or kernel file (default gaussian:9x9:3)")
    p.add_argument("--dx", type=_positive_int, default=4, help="column decimation factor")
    p.add_argument("--dy", type=_positive_int, default=4, help="row decimation factor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastsr", description="Fast single-image super-resolution.")
    parser.add_argument("--version", action="version", version=f"fastsr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="simulate y = S H x + n")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_model_flags(p)
    p.add_argument("--bsnr", type=_bsnr, default=30.0, help="blurred-signal-to-noise ratio in dB, or inf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=int, choices=(8, 16), default=16, help="bit depth for PGM/PNG output")
    p.add_argument("--sidecar", help="JSON sidecar path (default: OUTPUT.json)")

    p = sub.add_parser("sr", help="super-resolve an LR observation")
    p.add_argument("--input", required=True, help="LR image (grayscale, or RGB PNG for luminance-only SR)")
    p.add_argument("--output", required=True)
    p.add_argument("--method", required=True, help="one of " + ", ".join(METHODS))
    _add_model_flags(p)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--xbar", help="prior HR image for l2-image (default: bicubic)")
    p.add_argument("--gradfield", help="HR image whose gradient is the target, or .npz with arrays h, v")
    p.add_argument("--x0", help="external HR estimate for backproject (default: bicubic)")
    p.add_argument("--mu", type=float, help="ADMM penalty (default 10 * tau)")
    p.add_argument("--sigma", type=float, default=1e-8, help="gradient prior DC floor")
    p.add_argument("--tol", type=float, default=1e-5, help="ADMM relative objective tolerance")
    p.add_argument("--max-iters", type=_positive_int, default=1000)
    p.add_argument("--trace", help="write the ADMM iteration CSV here")
    p.add_argument("--reference", help="ground truth; prints a metrics JSON line")
    p.add_argument("--strict", action="store_true", help="exit 4 if ADMM stops at --max-iters")
    p.add_argument("--bits", type=int, choices=(8, 16), default=16)

    p = sub.add_parser("oracle", help="dense-vs-spectral verification suite")
    p.add_argument("--max-size", type=_positive_int, default=256, help="largest number of unknowns (default 256)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-frequency-map", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("metrics", help="quality metrics of an estimate")
    p.add_argument("--reference", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--baseline", help="interpolated baseline for ISNR")
    p.add_argument("--normalized", action="store_true", help="report sqrt(MSE) instead of the error norm")

    p = sub.add_parser("bench", help="tau sweeps and timing scaling")
    bsub = p.add_subparsers(dest="bench_command", required=True)
    b = bsub.add_parser("sweep", help="metrics over a tau grid")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--input", help="ground-truth image file")
    src.add_argument("--image", default="scene", help="procedural image: " + ", ".join(CORPUS))
    b.add_argument("--size", type=_positive_int, default=64, help="procedural image size")
    b.add_argument("--method", default="l2-image")
    b.add_argument("--prior", choices=("bicubic", "truth"), default="bicubic")
    b.add_argument("--taus", type=_float_list, default=[1e-3, 1e-2, 1e-1, 1.0])
    _add_model_flags(b)
    b.add_argument("--bsnr", type=_bsnr, default=30.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--output", help="CSV path (default stdout)")
    s = bsub.add_parser("scaling", help="solve time versus HR size")
    s.add_argument("--sizes", type=_int_list, default=[128, 256, 512])
    _add_model_flags(s)
    s.add_argument("--repeats", type=_positive_int, default=5)
    s.add_argument("--output", help="CSV path (default stdout)")
    return parser


def _spec(args, bsnr=math.inf, seed=0) -> DegradationSpec:
    return DegradationSpec(kernel=args.kernel, dr=args.dy, dc=args.dx, bsnr_db=bsnr, rng_seed=seed)


def _model(args, hr_shape):
    psf = load_kernel(args.kernel)
    dec = Decimator.for_hr(hr_shape, args.dy, args.dx)
    return psf_to_otf(psf, hr_shape), dec


def cmd_degrade(args) -> int:
    img = load_image(args.input)
    m, n = img.shape
    if m % args.dy or n % args.dx:
        raise UsageError(f"image {m}x{n} is not divisible by {args.dy}x{args.dx}")
    spec = _spec(args, args.bsnr, args.seed)
    y, sigma = degrade(img.pixels, spec)
    write_image(Image(y, img.value_scale), args.output, bits=args.bits)
    sidecar = Path(args.sidecar) if args.sidecar else Path(str(args.output) + ".json")
    meta = {
        "sigma_n": sigma,
        "spec": spec.to_dict(),
        "hr_shape": [m, n],
        "lr_shape": list(y.shape),
        "value_scale": img.value_scale,
    }
    sidecar.write_text(json.dumps(meta, sort_keys=True) + "\n")
    return EXIT_OK


def _load_hr(path, shape, scale, what):
    img = load_image(path, value_scale=scale)
    if img.shape != shape:
        raise UsageError(f"{what} is {img.shape[0]}x{img.shape[1]}, expected {shape[0]}x{shape[1]}")
    return img.pixels


def _grad_field(path, shape, scale):
    if str(path).lower().endswith(".npz"):
        with np.load(path) as data:
            if "h" not in data or "v" not in data:
                raise UsageError("gradient .npz needs arrays 'h' and 'v'")
            gh, gv = np.asarray(data["h"], dtype=np.float64), np.asarray(data["v"], dtype=np.float64)
        if gh.shape != shape or gv.shape != shape:
            raise UsageError("gradient field does not match the HR grid")
        return gh, gv
    return gradient(_load_hr(path, shape, scale, "--gradfield"))


def _super_resolve(args, y, scale):
    ml, nl = y.shape
    hr_shape = (ml * args.dy, nl * args.dx)
    blur, dec = _model(args, hr_shape)
    bicubic = bicubic_upsample(y, dec.dr, dec.dc)
    method = args.method
    if method == "l2-image":
        xbar = bicubic if args.xbar is None else _load_hr(args.xbar, hr_shape, scale, "--xbar")
        return solve_l2_image(y, blur, dec, xbar, args.tau), bicubic, None
    if method == "backproject":
        x0 = bicubic if args.x0 is None else _load_hr(args.x0, hr_shape, scale, "--x0")
        return back_project(y, blur, dec, x0, args.tau), bicubic, None
    if method == "l2-gradient":
        field = gradient(bicubic) if args.gradfield is None else _grad_field(args.gradfield, hr_shape, scale)
        return solve_l2_gradient(y, blur, dec, field, args.tau, args.sigma), bicubic, None
    cfg = AdmmConfig(tau=args.tau, mu=args.mu, max_iters=args.max_iters, rel_obj_tol=args.tol)
    reg = TV() if method == "admm-tv" else WaveletL1()
    reference = None
    if args.reference is not None:
        reference = _load_hr(args.reference, hr_shape, scale, "--reference")
    x, state = admm_solve(y, blur, dec, reg, cfg, reference=reference, x0=bicubic)
    if args.strict and not state.converged:
        raise ConvergenceError(f"ADMM did not converge within {cfg.max_iters} iterations")
    return x, bicubic, state


def cmd_sr(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    if not args.tau > 0:
        raise UsageError("--tau must be positive")
    if args.mu is not None and not args.mu > 0:
        raise UsageError("--mu must be positive")
    path = Path(args.input)
    chroma = None
    if path.suffix.lower() == ".png":
        try:
            rgb, scale = load_rgb(path)
        except ImageFormatError:
            rgb = None
        if rgb is not None:
            lum, chroma = extract_luminance(rgb, scale)
            img = lum
    if chroma is None:
        img = load_image(path)
    scale = img.value_scale
    x, bicubic, state = _super_resolve(args, img.pixels, scale)
    if chroma is not None:
        up = [bicubic_upsample(c, args.dy, args.dx) for c in chroma]
        write_rgb(combine_luminance(x, up[0], up[1], scale), args.output, scale)
    else:
        write_image(Image(x, scale), args.output, bits=args.bits)
    if args.trace:
        if state is None:
            _err("--trace ignored: only ADMM methods iterate")
        else:
            write_trace_csv(state.trace, args.trace)
    if args.reference:
        ref = load_image(args.reference, value_scale=scale)
        if ref.shape != x.shape:
            raise UsageError("reference does not match the HR grid")
        report = compute_metrics(ref, x, interp_baseline=bicubic, value_scale=scale)
        print(report.to_json())
    return EXIT_OK


def cmd_oracle(args) -> int:
    results = run_suite(max_size=args.max_size, corrupt_frequency_map=args.corrupt_frequency_map, seed=args.seed)
    for r in results:
        print(json.dumps({"check": r.name, "passed": r.passed, "worst": r.worst, "tol": r.tol, "cases": r.count}))
        print(r.line(), file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_metrics(args) -> int:
    ref = load_image(args.reference)
    est = load_image(args.estimate, value_scale=ref.value_scale)
    if est.shape != ref.shape:
        raise UsageError(f"estimate {est.shape} does not match reference {ref.shape}")
    baseline = None
    if args.baseline:
        baseline = load_image(args.baseline, value_scale=ref.value_scale)
        if baseline.shape != ref.shape:
            raise UsageError("baseline does not match reference")
    report = compute_metrics(ref, est, interp_baseline=baseline, normalized_rmse=args.normalized)
    print(report.to_json())
    return EXIT_OK


def _emit_csv(rows, header, output):
    if output:
        write_csv(rows, header, output)
    else:
        write_csv(rows, header, sys.stdout)


def cmd_bench(args) -> int:
    if args.bench_command == "sweep":
        if args.method not in METHODS:
            raise UsageError(f"unknown method {args.method!r}")
        if args.input:
            x = load_image(args.input).pixels
        else:
            x = make_image(args.image, args.size)
        spec = _spec(args, args.bsnr, args.seed)
        rows = sweep_tau(x, spec, SolverSpec(method=args.method, prior=args.prior), args.taus)
        _emit_csv(rows, SWEEP_HEADER, args.output)
    else:
        rows = scaling_bench(args.sizes, _spec(args), repeats=args.repeats)
        _emit_csv(rows, SCALING_HEADER, args.output)
    return EXIT_OK


COMMANDS = {
    "degrade": cmd_degrade,
    "sr": cmd_sr,
    "oracle": cmd_oracle,
    "metrics": cmd_metrics,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError, ImageFormatError) as exc:
        _err(f"IO error: {exc}")
        return EXIT_IO
    except OSError as exc:
        _err(f"IO error: {exc}")
        return EXIT_IO
    except (FloatingPointError, ConvergenceError, np.linalg.LinAlgError, ZeroDivisionError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
