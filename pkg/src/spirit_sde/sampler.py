"""Predictor-corrector sampling for the self-consistency diffusion model,
plus the CSM-merging VE-SDE baseline.

Conventions resolved from the printed algorithm:
  * the data-consistency direction m is computed on the combined image and
    re-expanded through S so coil-space updates are dimensionally consistent;
  * the predictor is the reverse-SDE Euler step (self-consistency drift acts
    as a descent correction) with its score/noise coefficients taken from the
    exact kernel variance increments;
  * the adaptive weights eps = lambda1 |g|/|m|, eps1 = 2 (r |z|/|g|)^2 and
    eps2 = lambda2 |g|/|m| are recomputed every step; vanishing |m| or |g|
    zeroes the corresponding weight instead of dividing by zero.
"""

from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionState, NoiseSchedule, complex_noise, reverse_step
from .encoding import (CoilSensitivities, MeasuredData, adjoint_A, coil_combine,
                       coil_expand, coil_project, forward_A)
from .errors import NumericalError
from .fourier import fft2c
from .score import ScoreFunction, combined_score
from .spirit import SpiritKernel, apply_psi


@dataclass(frozen=True)
class SamplerConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    r: float = 0.16
    n_steps: int = 1000
    m_corrector: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be >= 0")
        if self.r <= 0:
            raise ValueError("r must be > 0")
        if self.n_steps < 1 or self.m_corrector < 0:
            raise ValueError("need n_steps >= 1 and m_corrector >= 0")


def guidance_m(xc, y: MeasuredData, S: CoilSensitivities):
    """Data-consistency direction of Algorithm line m = S* F^-1(M F(S x) - y),
    re-expanded to coil space."""
    u = coil_combine(xc, S)
    resid = forward_A(u, S, y.mask) - y.y
    return coil_expand(adjoint_A(resid, S, y.mask), S)


def _safe_ratio(num, den):
    return num / den if den > 0 else 0.0


def pc_sample(score: ScoreFunction, y: MeasuredData, kern: SpiritKernel,
              S: CoilSensitivities, sched: NoiseSchedule, cfg: SamplerConfig,
              record=None):
    """Predictor-corrector reconstruction; returns coil images.

    Appends (i, |g|, |m|, eps, eps1, eps2, residual) per predictor level to
    `record` when given (eps1/eps2 from the last corrector step, 0 if none).
    """
    if y.nc != kern.nc or y.nc != S.nc:
        raise ValueError("coil counts of measurement, kernel, and maps must agree")
    if y.mask.shape != S.shape:
        raise ValueError("spatial extents of measurement and maps must agree")
    rng = np.random.default_rng(cfg.seed)
    N = cfg.n_steps
    shape = (y.nc,) + y.mask.shape
    ynorm = float(np.linalg.norm(y.y))

    sig1 = float(np.sqrt(sched.sigma_sq(1.0)))
    x = sig1 * coil_project(complex_noise(rng, shape), S)
    state = DiffusionState(t=1.0, xc=x)

    for i in range(N - 1, -1, -1):
        t_hi = (i + 1) / N
        dt = 1.0 / N
        z = complex_noise(rng, shape)
        g = score.evaluate(state.xc, t_hi)
        m = guidance_m(state.xc, y, S)
        eps = cfg.lambda1 * _safe_ratio(np.linalg.norm(g), np.linalg.norm(m))
        state = reverse_step(state, g - eps * m, sched, kern, S, dt, z)

        eps1 = eps2 = 0.0
        for _ in range(cfg.m_corrector):
            z = complex_noise(rng, shape)
            g = score.evaluate(state.xc, state.t)
            m = guidance_m(state.xc, y, S)
            gn = float(np.linalg.norm(g))
            eps1 = 2.0 * (cfg.r * _safe_ratio(np.linalg.norm(z), gn)) ** 2 if gn > 0 else 0.0
            eps2 = cfg.lambda2 * _safe_ratio(gn, np.linalg.norm(m))
            xc = state.xc
            if sched.eta0 != 0.0:
                xc = xc - dt * (sched.eta0 / 2.0) * apply_psi(xc, kern)
            xc = xc + eps1 * coil_project(g - eps2 * m, S)
            xc = xc + np.sqrt(2.0 * eps1) * coil_project(z, S)
            state = DiffusionState(t=state.t, xc=xc)

        if not np.all(np.isfinite(state.xc)):
            raise NumericalError(f"pc_sample diverged at predictor level {i}")
        if record is not None:
            resid = float(np.linalg.norm(y.mask.mask * fft2c(state.xc) - y.y)) / ynorm
            record.append((i, float(np.linalg.norm(g)), float(np.linalg.norm(m)),
                           float(eps), float(eps1), float(eps2), resid))

    return state.xc


def ve_sde_sample(score: ScoreFunction, y: MeasuredData, S: CoilSensitivities,
                  sched: NoiseSchedule, cfg: SamplerConfig, record=None):
    """CSM-based variance-exploding baseline on the combined image."""
    if y.nc != S.nc or y.mask.shape != S.shape:
        raise ValueError("measurement and maps must agree in coils and extents")
    rng = np.random.default_rng(cfg.seed)
    N = cfg.n_steps
    shape = y.mask.shape
    ynorm = float(np.linalg.norm(y.y))

    u = float(np.sqrt(sched.sigma_sq(1.0))) * complex_noise(rng, shape)

    for i in range(N - 1, -1, -1):
        t_hi = (i + 1) / N
        t_lo = i / N
        dvar = float(sched.sigma_sq(t_hi) - sched.sigma_sq(t_lo))
        z = complex_noise(rng, shape)
        g = combined_score(score, u, t_hi, S)
        m = adjoint_A(forward_A(u, S, y.mask) - y.y, S, y.mask)
        eps = cfg.lambda1 * _safe_ratio(np.linalg.norm(g), np.linalg.norm(m))
        u = u + dvar * (g - eps * m) + np.sqrt(dvar) * z

        eps1 = eps2 = 0.0
        for _ in range(cfg.m_corrector):
            z = complex_noise(rng, shape)
            g = combined_score(score, u, t_lo, S)
            m = adjoint_A(forward_A(u, S, y.mask) - y.y, S, y.mask)
            gn = float(np.linalg.norm(g))
            eps1 = 2.0 * (cfg.r * _safe_ratio(np.linalg.norm(z), gn)) ** 2 if gn > 0 else 0.0
            eps2 = cfg.lambda2 * _safe_ratio(gn, np.linalg.norm(m))
            u = u + eps1 * (g - eps2 * m) + np.sqrt(2.0 * eps1) * z

        if not np.all(np.isfinite(u)):
            raise NumericalError(f"ve_sde_sample diverged at predictor level {i}")
        if record is not None:
            resid = float(np.linalg.norm(forward_A(u, S, y.mask) - y.y)) / ynorm
            record.append((i, float(np.linalg.norm(g)), float(np.linalg.norm(m)),
                           float(eps), float(eps1), float(eps2), resid))

    return u
