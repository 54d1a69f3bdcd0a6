"""Noise schedule, perturbation kernel, and SDE simulation.

The forward process drifts with (eta/2) Psi and injects noise only inside the
coil-consistent subspace (through S S*), so the closed-form perturbation
kernel is

    x(t) | x(0)  ~  N(x(0), sigma(t)^2 S S*),
    sigma(t)^2 = 1/2 * int_0^t beta(tau) exp(int_tau^t eta(s) ds) dtau.

Noise convention: a unit complex Gaussian z has E|z|^2 = 1 per entry
(real and imaginary parts each N(0, 1/2)).  Euler-Maruyama realizes the
kernel exactly by injecting variance sigma^2(t_{k+1}) - sigma^2(t_k) per
step, which equals the continuous diffusion power d(sigma^2)/dt =
beta/2 + eta0 * sigma^2 in the limit.
"""

from dataclasses import dataclass, field

import numpy as np

from .encoding import CoilSensitivities, coil_project
from .errors import NumericalError
from .spirit import SpiritKernel, apply_psi

_N_QUAD = 4096


@dataclass
class NoiseSchedule:
    """Linear beta schedule with constant eta and quadrature-evaluated sigma."""

    beta_min: float = 0.01
    beta_max: float = 348.0
    eta0: float = 0.0
    n_steps: int = 1000
    _tau: np.ndarray = field(init=False, repr=False, compare=False)
    _cumq: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.beta_min < 0 or self.beta_max < self.beta_min:
            raise ValueError("need 0 <= beta_min <= beta_max")
        if self.eta0 < 0:
            raise ValueError("eta0 must be >= 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        # sigma^2(t) = 1/2 e^{eta0 t} q(t),  q(t) = int_0^t beta(tau) e^{-eta0 tau} dtau,
        # accumulated by the trapezoid rule on a fine grid.
        tau = np.linspace(0.0, 1.0, _N_QUAD + 1)
        f = self.beta(tau) * np.exp(-self.eta0 * tau)
        cumq = np.concatenate(([0.0], np.cumsum((f[1:] + f[:-1]) * 0.5 * np.diff(tau))))
        self._tau = tau
        self._cumq = cumq

    def beta(self, t):
        return self.beta_min + np.asarray(t, dtype=float) * (self.beta_max - self.beta_min)

    def eta(self, t):
        return self.eta0 * np.ones_like(np.asarray(t, dtype=float))

    def sigma_sq(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > 1):
            raise ValueError("t must lie in [0, 1]")
        idx = np.searchsorted(self._tau, t, side="right") - 1
        idx = np.clip(idx, 0, _N_QUAD)
        t0 = self._tau[idx]
        f0 = self.beta(t0) * np.exp(-self.eta0 * t0)
        ft = self.beta(t) * np.exp(-self.eta0 * t)
        q = self._cumq[idx] + 0.5 * (f0 + ft) * (t - t0)
        return 0.5 * np.exp(self.eta0 * t) * q

    @property
    def grid(self):
        """Schedule time grid t_i = i / n_steps, i = 0..n_steps."""
        return np.arange(self.n_steps + 1) / self.n_steps

    @property
    def sigma_table(self):
        """sigma at the n_steps grid points t_i = i / n_steps, i = 1..n_steps."""
        return np.sqrt(self.sigma_sq(self.grid[1:]))


def sigma_at(sched: NoiseSchedule, t):
    """Perturbation-kernel standard deviation sigma(t)."""
    return float(np.sqrt(sched.sigma_sq(t)))


@dataclass(frozen=True)
class DiffusionState:
    t: float
    xc: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t = {self.t} outside [0, 1]")
        if not np.all(np.isfinite(self.xc)):
            raise ValueError("non-finite state")


def complex_noise(rng, shape):
    """Unit complex Gaussian, E|z|^2 = 1 per entry."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def perturb(x0, sched: NoiseSchedule, t, S: CoilSensitivities, z):
    """Draw from the perturbation kernel: x0 + sigma(t) * S S* z."""
    x0 = np.asarray(x0, dtype=np.complex128)
    return x0 + sigma_at(sched, t) * coil_project(z, S)


def forward_em(x0, sched: NoiseSchedule, kern: SpiritKernel, S: CoilSensitivities,
               n_steps, seed=0):
    """Euler-Maruyama simulation of the forward process; returns the trajectory."""
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=np.complex128)
    limit = 1e6 * (np.linalg.norm(x0) + 1.0)
    dt = 1.0 / n_steps
    traj = [DiffusionState(t=0.0, xc=x0)]
    x = x0
    s2_prev = 0.0
    for k in range(n_steps):
        t = k * dt
        s2_next = float(sched.sigma_sq((k + 1) * dt))
        amp = np.sqrt(max(s2_next - s2_prev, 0.0))
        drift = 0.0
        if sched.eta0 != 0.0:
            drift = (sched.eta0 / 2.0) * apply_psi(x, kern) * dt
        x = x + drift + amp * coil_project(complex_noise(rng, x.shape), S)
        if np.linalg.norm(x) > limit:
            raise NumericalError(f"forward_em unstable at step {k + 1} (norm blow-up)")
        traj.append(DiffusionState(t=(k + 1) * dt, xc=x))
        s2_prev = s2_next
    return traj


def forward_em_ensemble(x0, sched: NoiseSchedule, kern: SpiritKernel, S: CoilSensitivities,
                        n_steps, n_paths, seed=0):
    """Terminal states of `n_paths` independent forward simulations (batched).

    The projected noise S S* z is drawn through the exact reparameterization
    maps * w with w = S* z a unit complex Gaussian on the image grid, which
    halves the work without changing the law of the process.
    """
    rng = np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=np.complex128)
    x = np.broadcast_to(x0, (n_paths,) + x0.shape).copy()
    dt = 1.0 / n_steps
    s2_prev = 0.0
    for k in range(n_steps):
        s2_next = float(sched.sigma_sq((k + 1) * dt))
        amp = np.sqrt(max(s2_next - s2_prev, 0.0))
        if sched.eta0 != 0.0:
            x += (sched.eta0 * dt / 2.0) * apply_psi(x, kern)
        w = complex_noise(rng, (n_paths,) + S.shape)
        x += amp * (w[:, None, :, :] * S.maps)
        s2_prev = s2_next
    return x


def reverse_step(state: DiffusionState, score_value, sched: NoiseSchedule,
                 kern: SpiritKernel, S: CoilSensitivities, dt, z):
    """One Euler-Maruyama step of the reverse process, from t to t - dt.

    The score coefficient and the injected noise variance both use the exact
    kernel increment sigma^2(t) - sigma^2(t - dt), so a predictor wired with a
    guidance-augmented score is identical to this step.
    """
    t = state.t
    if dt <= 0 or t - dt < -1e-12:
        raise ValueError("dt must be positive and not step below t = 0")
    t_new = max(t - dt, 0.0)
    dvar = float(sched.sigma_sq(t) - sched.sigma_sq(t_new))
    x = state.xc
    if sched.eta0 != 0.0:
        x = x - dt * (sched.eta0 / 2.0) * apply_psi(x, kern)
    x = x + dvar * coil_project(np.asarray(score_value, dtype=np.complex128), S)
    x = x + np.sqrt(dvar) * coil_project(z, S)
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"reverse_step produced non-finite state at t = {t:.4f}")
    return DiffusionState(t=t_new, xc=x)
