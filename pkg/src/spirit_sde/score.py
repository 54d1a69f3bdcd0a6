"""Score functions and the denoising score-matching loss.

Deep score networks are out of scope; the pluggable scores here are
closed-form Gaussian models, which make the loss machinery verifiable
exactly.  The loss follows the coil-combined residual form

    E_t E_x0 E_z || sigma * S* s(x(t), t) + S* z ||^2,

with unit time weighting and t drawn uniformly on [t_min, 1].
"""

import abc
from dataclasses import dataclass

import numpy as np

from .diffusion import NoiseSchedule, complex_noise, perturb, sigma_at
from .encoding import CoilSensitivities, coil_combine, coil_expand, coil_project

DEFAULT_T_MIN = 1e-3


class ScoreFunction(abc.ABC):
    """Estimate of the marginal score, evaluated on coil images."""

    @abc.abstractmethod
    def evaluate(self, xt, t):
        """Score estimate at coil images `xt` and time `t`; same shape as `xt`."""

    def __call__(self, xt, t):
        return self.evaluate(xt, t)


@dataclass(frozen=True)
class GaussianPrior:
    """Coil-consistent Gaussian test prior with scalar combined-domain variance."""

    mean: np.ndarray          # (nc, rows, cols), coil-consistent
    v0: float

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError("v0 must be > 0")
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.complex128))


class _GaussianScore(ScoreFunction):
    """Score of a coil-consistent Gaussian marginal: -S S*(x - mean) / (v0 + sigma(t)^2)."""

    def __init__(self, mean, v0, sched: NoiseSchedule, S: CoilSensitivities):
        self.mean = np.asarray(mean, dtype=np.complex128)
        self.v0 = float(v0)
        self.sched = sched
        self.S = S

    def evaluate(self, xt, t):
        var = self.v0 + self.sched.sigma_sq(t)
        return -coil_project(np.asarray(xt, dtype=np.complex128) - self.mean, self.S) / var


def analytic_gaussian_score(prior: GaussianPrior, sched: NoiseSchedule,
                            S: CoilSensitivities) -> ScoreFunction:
    """Exact score for data drawn from `prior` under the perturbation kernel."""
    mean_proj = coil_project(prior.mean, S)
    if np.linalg.norm(mean_proj - prior.mean) > 1e-10 * max(np.linalg.norm(prior.mean), 1.0):
        raise ValueError("prior mean is not coil-consistent")
    return _GaussianScore(prior.mean, prior.v0, sched, S)


def dsm_loss(sf: ScoreFunction, batch, sched: NoiseSchedule, S: CoilSensitivities,
             n_time_draws, seed=0, t_min=DEFAULT_T_MIN, use_projected_form=False):
    """Monte-Carlo denoising score-matching loss, deterministic per seed.

    Each draw takes the next sample from `batch` (cyclically), a uniform
    t in [t_min, 1], and a unit complex Gaussian z.  With
    `use_projected_form`, the model term is S* S S* s instead of S* s;
    the two agree because S* S S* = S*.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    rng = np.random.default_rng(seed)
    total = 0.0
    for i in range(n_time_draws):
        x0 = np.asarray(batch[i % len(batch)], dtype=np.complex128)
        t = rng.uniform(t_min, 1.0)
        z = complex_noise(rng, x0.shape)
        xt = perturb(x0, sched, t, S, z)
        s_val = sf.evaluate(xt, t)
        if use_projected_form:
            s_val = coil_project(s_val, S)
        resid = sigma_at(sched, t) * coil_combine(s_val, S) + coil_combine(z, S)
        total += float(np.sum(np.abs(resid) ** 2))
    return total / n_time_draws


def fit_linear_score(dataset, sched: NoiseSchedule, S: CoilSensitivities,
                     ridge=1e-3) -> ScoreFunction:
    """Fit the scalar Gaussian score family s(x, t) = -S S*(x - m) / (v0 + sigma(t)^2).

    m is the dataset mean and v0 the empirical combined-domain variance,
    floored at `ridge`.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    stack = np.stack([np.asarray(x, dtype=np.complex128) for x in dataset])
    mean = stack.mean(axis=0)
    combined = coil_combine(stack, S)
    cmean = combined.mean(axis=0)
    v0 = float(np.mean(np.abs(combined - cmean) ** 2))
    v0 = max(v0, float(ridge))
    return _GaussianScore(mean, v0, sched, S)


def combined_score(sf: ScoreFunction, u, t, S: CoilSensitivities):
    """Evaluate a coil-space score on a combined image: S* s(S u, t)."""
    return coil_combine(sf.evaluate(coil_expand(u, S), t), S)
