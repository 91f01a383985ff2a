"""Fast single-image super-resolution with closed-form FFT-domain solvers.

The quadratic solvers live in :mod:`fastsr.spectral`, the ADMM wrappers
for TV and wavelet-l1 priors in :mod:`fastsr.admm`.
"""

__version__ = "0.1.0"

from .admm import TV, AdmmConfig, AdmmState, WaveletL1, admm_solve, objective, prox_l1, prox_tv_vector
from .baselines import DenseProblem, bicubic_upsample, cg_solve, dense_solve
from .degradation import DegradationSpec, degrade
from .image import Image, extract_luminance, load_image, write_image
from .kernels import BACKEND
from .metrics import MetricsReport, compute_metrics
from .operators import (
    Decimator,
    GradientPair,
    SpectralBlur,
    apply_blur,
    build_gradients,
    decimate,
    mask_sbar,
    psf_to_otf,
    upsample_zero,
)
from .spectral import (
    GradientReg,
    IdentityReg,
    L2Problem,
    LambdaBar,
    PsiDiagonal,
    TransformReg,
    back_project,
    build_lambda_bar,
    build_psi,
    solve_l2,
    solve_l2_gradient,
    solve_l2_image,
)
from .wavelet import HaarTransform, WaveletCoeffs, dwt, idwt

__all__ = [
    "BACKEND",
    "TV",
    "AdmmConfig",
    "AdmmState",
    "WaveletL1",
    "admm_solve",
    "objective",
    "prox_l1",
    "prox_tv_vector",
    "DenseProblem",
    "bicubic_upsample",
    "cg_solve",
    "dense_solve",
    "DegradationSpec",
    "degrade",
    "Image",
    "extract_luminance",
    "load_image",
    "write_image",
    "MetricsReport",
    "compute_metrics",
    "Decimator",
    "GradientPair",
    "SpectralBlur",
    "apply_blur",
    "build_gradients",
    "decimate",
    "mask_sbar",
    "psf_to_otf",
    "upsample_zero",
    "GradientReg",
    "IdentityReg",
    "L2Problem",
    "LambdaBar",
    "PsiDiagonal",
    "TransformReg",
    "back_project",
    "build_lambda_bar",
    "build_psi",
    "solve_l2",
    "solve_l2_gradient",
    "solve_l2_image",
    "HaarTransform",
    "WaveletCoeffs",
    "dwt",
    "idwt",
]
