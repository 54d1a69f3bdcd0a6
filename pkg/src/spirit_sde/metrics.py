"""Image quality metrics on magnitude images: NMSE, PSNR, SSIM.

All metrics accept an optional ROI rectangle (row0, row1, col0, col1) given
as half-open bounds; evaluation is restricted to it.  Complex inputs are
rejected: callers evaluate on sum-of-squares magnitude output.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate

PSNR_CAP_DB = 300.0
_SSIM_WIN = 11
_SSIM_SIGMA = 1.5


@dataclass(frozen=True)
class EvalReport:
    nmse: float
    psnr_db: float
    ssim: float
    roi: Optional[tuple] = None


def _prepare(ref, test, roi):
    ref = np.asarray(ref)
    test = np.asarray(test)
    if np.iscomplexobj(ref) or np.iscomplexobj(test):
        raise ValueError("metrics expect real magnitude images")
    if ref.shape != test.shape or ref.ndim != 2:
        raise ValueError(f"need matching 2D images, got {ref.shape} and {test.shape}")
    if roi is not None:
        r0, r1, c0, c1 = roi
        ref = ref[r0:r1, c0:c1]
        test = test[r0:r1, c0:c1]
        if ref.size == 0:
            raise ValueError("empty ROI")
    return ref.astype(np.float64), test.astype(np.float64)


def nmse(ref, test, roi=None):
    """Normalized mean square error ||test - ref||^2 / ||ref||^2 over the ROI."""
    ref, test = _prepare(ref, test, roi)
    den = float(np.sum(ref**2))
    if den == 0:
        raise ValueError("reference is identically zero on the ROI")
    return float(np.sum((test - ref) ** 2)) / den


def psnr(ref, test, roi=None):
    """Peak signal-to-noise ratio in dB, peak taken from the reference.

    Identical inputs return the 300 dB sentinel.
    """
    ref, test = _prepare(ref, test, roi)
    mse = float(np.mean((test - ref) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    peak = float(np.max(np.abs(ref)))
    return min(10.0 * np.log10(peak**2 / mse), PSNR_CAP_DB)


def _gaussian_window():
    x = np.arange(_SSIM_WIN) - _SSIM_WIN // 2
    g = np.exp(-(x**2) / (2 * _SSIM_SIGMA**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(ref, test, roi=None):
    """Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03).

    The dynamic range L is taken from the reference over the ROI, and the
    mean is over windows fully inside the ROI.
    """
    ref, test = _prepare(ref, test, roi)
    if min(ref.shape) < _SSIM_WIN:
        raise ValueError(f"ROI smaller than the {_SSIM_WIN}x{_SSIM_WIN} SSIM window")
    L = float(ref.max() - ref.min())
    if L == 0:
        L = max(float(np.abs(ref).max()), np.finfo(float).eps)
    c1 = (0.01 * L) ** 2
    c2 = (0.03 * L) ** 2

    w = _gaussian_window()
    mu_r = correlate(ref, w, mode="nearest")
    mu_t = correlate(test, w, mode="nearest")
    var_r = correlate(ref * ref, w, mode="nearest") - mu_r**2
    var_t = correlate(test * test, w, mode="nearest") - mu_t**2
    cov = correlate(ref * test, w, mode="nearest") - mu_r * mu_t

    ssim_map = ((2 * mu_r * mu_t + c1) * (2 * cov + c2)) / (
        (mu_r**2 + mu_t**2 + c1) * (var_r + var_t + c2)
    )
    pad = _SSIM_WIN // 2
    return float(np.mean(ssim_map[pad:-pad, pad:-pad]))


def evaluate(ref, test, roi=None) -> EvalReport:
    """All three metrics in one report."""
    return EvalReport(
        nmse=nmse(ref, test, roi),
        psnr_db=psnr(ref, test, roi),
        ssim=ssim(ref, test, roi),
        roi=tuple(roi) if roi is not None else None,
    )
