"""SPIRiT kernel calibration and the self-consistency operators G and Psi.

The interpolation kernel G predicts every k-space sample from its full
multi-coil neighborhood (the target coil's own center tap is constrained to
zero).  Application uses circular boundaries, so G is diagonalized by the
centered FFT: in the image domain it is a pixelwise nc x nc matrix multiply.
That makes the image-domain normal operator

    Psi = F^-1 (G - I)^H (G - I) F

a pure pixelwise PSD matrix application, exact and cheap.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .fourier import fft2c, ifft2c


@dataclass
class SpiritKernel:
    """Calibrated k-space interpolation weights.

    weights[t, s, a, b] multiplies source coil s at offset (a - kr//2, b - kc//2)
    when predicting target coil t.  weights[t, t, kr//2, kc//2] is exactly 0.
    """

    weights: np.ndarray            # (nc, nc, kr, kc) complex128
    kernel_size: tuple
    tikhonov: float
    calib_residual: float
    _ops_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        kr, kc = self.kernel_size
        if kr % 2 == 0 or kc % 2 == 0:
            raise ValueError("kernel extents must be odd")
        w = np.asarray(self.weights, dtype=np.complex128)
        if w.shape[0] != w.shape[1] or w.shape[2:] != (kr, kc):
            raise ValueError(f"bad weight shape {w.shape} for kernel size {self.kernel_size}")
        center = w[np.arange(w.shape[0]), np.arange(w.shape[0]), kr // 2, kc // 2]
        if np.any(center != 0):
            raise ValueError("target-coil center taps must be zero")
        if not (np.isfinite(self.calib_residual) and self.calib_residual >= 0):
            raise ValueError("calib_residual must be finite and >= 0")
        object.__setattr__(self, "weights", w)

    @property
    def nc(self):
        return self.weights.shape[0]


def _neighborhood_matrix(acs, kernel_size):
    """Rows of all full-kernel multi-coil neighborhoods over interior ACS points.

    Returns (A, centers) where A is (n_points, nc*kr*kc) with column order
    (coil, a, b) row-major, and centers is (n_points, nc) holding the ACS value
    at each interior point per coil.
    """
    nc, ar, ac = acs.shape
    kr, kc = kernel_size
    nr, ncols = ar - kr + 1, ac - kc + 1
    cols = []
    for c in range(nc):
        for a in range(kr):
            for b in range(kc):
                cols.append(acs[c, a : a + nr, b : b + ncols].ravel())
    A = np.stack(cols, axis=1)
    cr, cc = kr // 2, kc // 2
    centers = np.stack(
        [acs[c, cr : cr + nr, cc : cc + ncols].ravel() for c in range(nc)], axis=1
    )
    return A, centers


def calibrate(acs, kernel_size=(5, 5), tikhonov=1e-4):
    """Fit SPIRiT weights on a fully-sampled ACS block.

    One Tikhonov-regularized least-squares problem per target coil, each
    excluding that coil's center tap.  The regularizer is `tikhonov` times the
    mean diagonal of the calibration Gram matrix, so it is scale invariant.
    Records the joint relative fit residual as `calib_residual`.
    """
    acs = np.asarray(acs, dtype=np.complex128)
    if acs.ndim != 3:
        raise ValueError(f"expected (coil, row, col) ACS data, got shape {acs.shape}")
    nc, ar, ac = acs.shape
    kr, kc = kernel_size
    if ar < kr + 4 or ac < kc + 4:
        raise ValueError(f"ACS {ar}x{ac} too small for kernel {kr}x{kc} (need +4 margin)")
    if tikhonov < 0:
        raise ValueError("tikhonov must be >= 0")

    A, centers = _neighborhood_matrix(acs, kernel_size)
    gram = A.conj().T @ A
    n_unknowns = gram.shape[0] - 1
    lam = tikhonov * np.real(np.trace(gram)) / gram.shape[0]

    cr, cc = kr // 2, kc // 2
    weights = np.zeros((nc, nc, kr, kc), dtype=np.complex128)
    res_num = 0.0
    res_den = 0.0
    for t in range(nc):
        drop = (t * kr + cr) * kc + cc
        keep = np.delete(np.arange(gram.shape[0]), drop)
        G_t = gram[np.ix_(keep, keep)]
        rhs = A[:, keep].conj().T @ centers[:, t]
        if lam > 0:
            G_t = G_t + lam * np.eye(n_unknowns)
        try:
            cho = scipy.linalg.cho_factor(G_t)
            w = scipy.linalg.cho_solve(cho, rhs)
        except np.linalg.LinAlgError:
            if tikhonov == 0:
                raise NumericalError(
                    f"rank-deficient calibration for target coil {t} with tikhonov = 0"
                ) from None
            w, *_ = np.linalg.lstsq(G_t, rhs, rcond=None)
        if tikhonov == 0:
            # Cholesky can slip through near-singular systems; reject them.
            eig = np.linalg.eigvalsh(G_t)
            if eig[0] <= 0 or eig[-1] / eig[0] > 1e12:
                raise NumericalError(
                    f"calibration system for target coil {t} is numerically rank deficient"
                )
        flat = np.zeros(gram.shape[0], dtype=np.complex128)
        flat[keep] = w
        weights[t] = flat.reshape(nc, kr, kc)
        fit = A[:, keep] @ w
        res_num += float(np.sum(np.abs(fit - centers[:, t]) ** 2))
        res_den += float(np.sum(np.abs(centers[:, t]) ** 2))

    residual = float(np.sqrt(res_num / res_den)) if res_den > 0 else 0.0
    return SpiritKernel(
        weights=weights,
        kernel_size=tuple(kernel_size),
        tikhonov=float(tikhonov),
        calib_residual=residual,
    )


def _image_multipliers(kern: SpiritKernel, shape):
    """Image-domain pixelwise matrix of G for a given spatial shape.

    Built numerically: the circular k-space correlation is applied to the
    k-space of the all-ones image per source coil, and transformed back.
    Returns m with (G khat)_t = F( sum_s m[t, s] * F^-1(khat)_s ).
    """
    rows, cols = shape
    kr, kc = kern.kernel_size
    cr, cc = kr // 2, kc // 2
    nc = kern.nc
    ones_k = fft2c(np.ones((rows, cols)))
    m = np.zeros((nc, nc, rows, cols), dtype=np.complex128)
    for s in range(nc):
        acc = np.zeros((nc, rows, cols), dtype=np.complex128)
        for a in range(kr):
            for b in range(kc):
                shifted = np.roll(ones_k, (-(a - cr), -(b - cc)), axis=(0, 1))
                acc += kern.weights[:, s, a, b, None, None] * shifted
        m[:, s] = ifft2c(acc)
    return m


def _ops(kern: SpiritKernel, shape):
    shape = tuple(shape)
    ops = kern._ops_cache.get(shape)
    if ops is None:
        m = _image_multipliers(kern, shape)
        eye = np.zeros_like(m)
        idx = np.arange(kern.nc)
        eye[idx, idx] = 1.0
        gmi = m - eye                                    # image-domain G - I
        gmi_h = np.conj(np.swapaxes(gmi, 0, 1))          # (G - I)^H
        psi = np.einsum("strc,surc->turc", np.conj(gmi), gmi)
        ops = {"m": m, "gmi": gmi, "gmi_h": gmi_h, "psi": psi}
        kern._ops_cache[shape] = ops
    return ops


def _pixelwise(mat, x):
    return np.einsum("tsrc,...src->...trc", mat, x)


def _check_coils(x, kern):
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-3] != kern.nc:
        raise ValueError(f"coil count {x.shape[-3]} does not match kernel ({kern.nc})")
    return x


def apply_G(ksp, kern: SpiritKernel):
    """Apply the interpolation kernel to multi-coil k-space (circular boundary)."""
    ksp = _check_coils(ksp, kern)
    ops = _ops(kern, ksp.shape[-2:])
    return fft2c(_pixelwise(ops["m"], ifft2c(ksp)))


def adjoint_of_G_minus_I(ksp, kern: SpiritKernel):
    """Exact adjoint of (apply_G - identity) on multi-coil k-space."""
    ksp = _check_coils(ksp, kern)
    ops = _ops(kern, ksp.shape[-2:])
    return fft2c(_pixelwise(ops["gmi_h"], ifft2c(ksp)))


def apply_psi(xc, kern: SpiritKernel):
    """Image-domain self-consistency normal operator F^-1 (G-I)^H (G-I) F."""
    xc = _check_coils(xc, kern)
    ops = _ops(kern, xc.shape[-2:])
    return _pixelwise(ops["psi"], xc)
