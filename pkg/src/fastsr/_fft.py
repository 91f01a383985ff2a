"""Thin FFT wrappers honouring the FSR_THREADS cap."""

import os

import scipy.fft


def _workers():
    value = os.environ.get("FSR_THREADS")
    if not value:
        return None
    try:
        return max(1, int(value))
    except ValueError:
        return None


def fft2(x):
    return scipy.fft.fft2(x, workers=_workers())


def ifft2(x):
    return scipy.fft.ifft2(x, workers=_workers())


def rfft2(x):
    return scipy.fft.rfft2(x, workers=_workers())


def irfft2(x, shape):
    return scipy.fft.irfft2(x, s=shape, workers=_workers())


def real_part(z, ref_norm, rtol=1e-9):
    """Return ``z.real`` after checking the imaginary residue is negligible."""
    residue = float(abs(z.imag).max()) if z.size else 0.0
    if residue > rtol * max(ref_norm, 1e-300) and residue > 1e-300:
        raise FloatingPointError(
            f"imaginary residue {residue:.3e} exceeds {rtol:g} * {ref_norm:.3e}"
        )
    return z.real.copy()
