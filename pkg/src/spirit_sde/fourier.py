"""Centered, unitary 2D Fourier transforms and complex inner products.

k-space is stored DC-centered: the zero-frequency sample sits at index
(N // 2, M // 2) of the last two axes.  Transforms are orthonormal, so
Parseval holds exactly and fft2c/ifft2c are mutual inverses.
"""

import numpy as np

_AXES = (-2, -1)


def _check_spatial(x):
    x = np.asarray(x)
    if x.ndim < 2 or x.shape[-1] < 2 or x.shape[-2] < 2:
        raise ValueError(f"need at least 2x2 spatial extents, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite entries in input array")
    return np.asarray(x, dtype=np.complex128)


def fft2c(img):
    """Centered orthonormal 2D FFT over the last two axes."""
    img = _check_spatial(img)
    tmp = np.fft.ifftshift(img, axes=_AXES)
    tmp = np.fft.fft2(tmp, axes=_AXES, norm="ortho")
    return np.fft.fftshift(tmp, axes=_AXES)


def ifft2c(ksp):
    """Inverse of fft2c (centered orthonormal 2D IFFT over the last two axes)."""
    ksp = _check_spatial(ksp)
    tmp = np.fft.ifftshift(ksp, axes=_AXES)
    tmp = np.fft.ifft2(tmp, axes=_AXES, norm="ortho")
    return np.fft.fftshift(tmp, axes=_AXES)


def inner(a, b):
    """Complex inner product sum(conj(a) * b) over all entries."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))
