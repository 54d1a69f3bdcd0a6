"""Non-diffusion reconstruction baselines.

cg_spirit solves the penalized self-consistency problem

    min_khat ||(G - I) khat||^2 + lambda_dc ||M khat - y||^2

over multi-coil k-space by conjugate gradient on its normal equations.
gd_spirit runs the explicit two-step-size descent iteration on the same
objective parameterized in the image domain.  Both return coil images.
"""

from dataclasses import dataclass

import numpy as np

from .encoding import CoilSensitivities, MeasuredData, adjoint_A
from .errors import NumericalError
from .fourier import fft2c, ifft2c, inner
from .spirit import SpiritKernel, adjoint_of_G_minus_I, apply_G, apply_psi

_INCREASE_SLACK = 1e-8


@dataclass(frozen=True)
class ClassicConfig:
    lambda_dc: float = 1.0
    max_iters: int = 400
    tol: float = 1e-8
    step_eta: float = 0.6
    step_lambda: float = 0.6

    def __post_init__(self):
        if min(self.lambda_dc, self.max_iters, self.tol, self.step_eta, self.step_lambda) <= 0:
            raise ValueError("all ClassicConfig fields must be positive")
        if self.tol >= 1:
            raise ValueError("tol must be < 1")


def zero_filled(y: MeasuredData, S: CoilSensitivities):
    """Adjoint reconstruction A^H y (the standard no-prior baseline)."""
    return adjoint_A(y.y, S, y.mask)


def spirit_objective(khat, y: MeasuredData, kern: SpiritKernel, lambda_dc):
    """Penalized objective ||(G-I)khat||^2 + lambda_dc ||M khat - y||^2."""
    sc = apply_G(khat, kern) - khat
    dc = np.where(y.mask.mask, khat, 0.0) - y.y
    return float(np.sum(np.abs(sc) ** 2) + lambda_dc * np.sum(np.abs(dc) ** 2))


def cg_spirit(y: MeasuredData, kern: SpiritKernel, S: CoilSensitivities, cfg: ClassicConfig,
              record=None):
    """Conjugate gradient on the normal equations of the penalized objective.

    Starts from the zero-filled k-space and stops once the residual of the
    normal equations (half the objective gradient) has dropped by `tol`
    relative to its value at the start.  Raises NumericalError if the
    objective ever increases beyond a 1e-8 relative slack.  Appends
    (iteration, objective, gradient_ratio, dc_residual) rows to `record`
    when given.
    """
    if y.nc != kern.nc:
        raise ValueError("measurement coil count does not match kernel")
    lam = cfg.lambda_dc
    mask = y.mask.mask

    def normal_op(k):
        return adjoint_of_G_minus_I(apply_G(k, kern) - k, kern) + lam * np.where(mask, k, 0.0)

    b = lam * y.y
    x = y.y.copy()
    r = b - normal_op(x)
    p = r.copy()
    rs = np.real(inner(r, r))
    rs0 = rs
    ynorm2 = float(np.sum(np.abs(y.y) ** 2))

    def objective(xk, rk):
        # J = x^H A x - 2 Re<b, x> + lam ||y||^2, and A x = b - r.
        return float(-np.real(inner(xk, rk)) - np.real(inner(b, xk)) + lam * ynorm2)

    obj = objective(x, r)
    if record is not None:
        record.append((0, obj, 1.0, _dc_residual(x, y)))

    for it in range(1, cfg.max_iters + 1):
        if rs <= cfg.tol**2 * rs0:
            break
        Ap = normal_op(p)
        alpha = rs / np.real(inner(p, Ap))
        x = x + alpha * p
        r = r - alpha * Ap
        rs_new = np.real(inner(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
        new_obj = objective(x, r)
        if new_obj > obj * (1 + _INCREASE_SLACK) + _INCREASE_SLACK:
            raise NumericalError(
                f"cg_spirit objective increased at iteration {it}: {obj:.6e} -> {new_obj:.6e}"
            )
        obj = new_obj
        if record is not None:
            record.append((it, obj, float(np.sqrt(rs / rs0)), _dc_residual(x, y)))

    return ifft2c(x)


def _dc_residual(khat, y: MeasuredData):
    num = float(np.linalg.norm(np.where(y.mask.mask, khat, 0.0) - y.y))
    den = float(np.linalg.norm(y.y))
    return num / den if den > 0 else num


def gd_spirit(y: MeasuredData, kern: SpiritKernel, S: CoilSensitivities, cfg: ClassicConfig,
              record=None, x0=None):
    """Explicit descent iteration on coil images.

    Each step subtracts step_eta * Psi(x) and step_lambda * A^H(A x - y),
    where A here is the per-coil masked Fourier encoding.  The monitored
    objective uses the data weight step_lambda / step_eta implied by the two
    step sizes.  Divergence (objective increase) raises NumericalError.

    Starts from the zero-filled coil images unless `x0` is given (the same
    starting point cg_spirit uses, so the two solvers agree on the weakly
    determined modes as well).
    """
    if y.nc != kern.nc:
        raise ValueError("measurement coil count does not match kernel")
    mask = y.mask.mask
    lam_eff = cfg.step_lambda / cfg.step_eta

    xc = ifft2c(y.y) if x0 is None else np.asarray(x0, dtype=np.complex128).copy()
    ynorm = float(np.linalg.norm(y.y))
    obj_prev = None
    grad0 = None

    for it in range(cfg.max_iters + 1):
        khat = fft2c(xc)
        g_sc = apply_psi(xc, kern)
        dc = np.where(mask, khat, 0.0) - y.y
        # ||(G-I) F x||^2 = Re<x, Psi x>, so the objective costs nothing extra.
        obj = float(np.real(inner(xc, g_sc)) + lam_eff * np.sum(np.abs(dc) ** 2))
        if obj_prev is not None and obj > obj_prev * (1 + _INCREASE_SLACK) + _INCREASE_SLACK:
            raise NumericalError(
                f"gd_spirit diverged at iteration {it}: objective {obj_prev:.6e} -> {obj:.6e} "
                f"(step sizes too large)"
            )
        obj_prev = obj
        g_dc = ifft2c(dc)
        halfgrad = g_sc + lam_eff * g_dc
        gnorm = float(np.linalg.norm(halfgrad))
        if grad0 is None:
            grad0 = gnorm if gnorm > 0 else 1.0
        if record is not None:
            dcr = float(np.linalg.norm(dc)) / ynorm if ynorm > 0 else 0.0
            record.append((it, obj, gnorm / grad0, dcr))
        if it == cfg.max_iters or gnorm <= cfg.tol * grad0:
            break
        xc = xc - cfg.step_eta * g_sc - cfg.step_lambda * g_dc

    return xc
