"""Synthetic data generation: phantoms, coil maps, undersampling masks, measurements.

Everything is deterministic given its seed; masks are exact-count so the
realized acceleration matches the request.
"""

from dataclasses import dataclass

import numpy as np

from .encoding import CoilSensitivities, MeasuredData, SamplingMask, coil_expand
from .fourier import fft2c

PHANTOM_KINDS = ("shepp-logan", "smooth-blobs")
MASK_PATTERNS = ("uniform-cartesian", "variable-density-random")

# Standard ellipse table (value, a, b, x0, y0, angle_deg) with high-contrast
# intensities; axes and centers in [-1, 1] coordinates.
_SL_ELLIPSES = [
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
]


@dataclass(frozen=True)
class PhantomSpec:
    size: tuple = (64, 64)
    kind: str = "shepp-logan"
    seed: int = 0

    def __post_init__(self):
        if self.size[0] < 16 or self.size[1] < 16:
            raise ValueError("phantom extents must be >= 16")
        if self.kind not in PHANTOM_KINDS:
            raise ValueError(f"unsupported phantom kind {self.kind!r}")


@dataclass(frozen=True)
class MaskSpec:
    pattern: str = "variable-density-random"
    acceleration: float = 4.0
    acs: tuple = (16, 16)
    seed: int = 0
    density_exponent: float = 2.0

    def __post_init__(self):
        if self.pattern not in MASK_PATTERNS:
            raise ValueError(f"unsupported mask pattern {self.pattern!r}")
        if self.acceleration < 1.0:
            raise ValueError("acceleration must be >= 1")


def _grid(size):
    rows, cols = size
    u = np.linspace(-1.0, 1.0, rows)
    v = np.linspace(-1.0, 1.0, cols)
    return np.meshgrid(u, v, indexing="ij")


def _smooth_phase(size, rng):
    # Low-order polynomial phase so the data is genuinely complex.
    u, v = _grid(size)
    c = rng.uniform(-1.0, 1.0, size=6)
    phase = np.pi * (
        0.25 * c[0] + c[1] * u + c[2] * v + 0.5 * (c[3] * u * v + c[4] * u**2 + c[5] * v**2)
    )
    return np.exp(1j * phase)


def make_phantom(spec: PhantomSpec):
    """Complex 2D phantom with magnitude normalized to max 1.0."""
    rng = np.random.default_rng(spec.seed)
    u, v = _grid(spec.size)
    mag = np.zeros(spec.size)
    if spec.kind == "shepp-logan":
        for val, a, b, x0, y0, ang in _SL_ELLIPSES:
            th = np.deg2rad(ang)
            # image row axis is -y, col axis is +x in the usual convention
            x = v - x0
            y = -u - y0
            xr = x * np.cos(th) + y * np.sin(th)
            yr = -x * np.sin(th) + y * np.cos(th)
            mag += val * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
        mag = np.clip(mag, 0.0, None)
    else:  # smooth-blobs
        n_blobs = 6
        for _ in range(n_blobs):
            cx, cy = rng.uniform(-0.6, 0.6, size=2)
            w = rng.uniform(0.15, 0.45)
            amp = rng.uniform(0.3, 1.0)
            mag += amp * np.exp(-((u - cx) ** 2 + (v - cy) ** 2) / (2 * w**2))
    mag /= mag.max()
    return mag * _smooth_phase(spec.size, rng)


def make_coil_maps(size, nc, seed=0):
    """Smooth synthetic coil profiles: Gaussian bumps on a ring with linear phase."""
    if nc < 1:
        raise ValueError("need at least one coil")
    rng = np.random.default_rng(seed)
    u, v = _grid(size)
    raw = np.zeros((nc,) + tuple(size), dtype=np.complex128)
    for c in range(nc):
        ang = 2 * np.pi * c / nc + rng.uniform(-0.2, 0.2)
        cx, cy = 0.75 * np.cos(ang), 0.75 * np.sin(ang)
        width = 0.8 + rng.uniform(-0.1, 0.1)
        mag = np.exp(-((u - cx) ** 2 + (v - cy) ** 2) / (2 * width**2))
        k = rng.uniform(-1.5, 1.5, size=2)
        phase = np.pi * (k[0] * u + k[1] * v) + rng.uniform(0, 2 * np.pi)
        raw[c] = mag * np.exp(1j * phase)
    return CoilSensitivities.from_maps(raw)


def _acs_bounds(size, acs):
    rows, cols = size
    ar, ac = acs
    if ar > rows or ac > cols:
        raise ValueError("ACS extents exceed image extents")
    r0 = rows // 2 - ar // 2
    c0 = cols // 2 - ac // 2
    return r0, r0 + ar, c0, c0 + ac


def make_mask(spec: MaskSpec, size):
    """Sampling mask with fully-sampled ACS block and the requested acceleration."""
    rows, cols = size
    r0, r1, c0, c1 = _acs_bounds(size, spec.acs)
    mask = np.zeros((rows, cols), dtype=bool)
    mask[r0:r1, c0:c1] = True

    total = rows * cols
    target = int(round(total / spec.acceleration))
    n_acs = int(mask.sum())

    if spec.acceleration == 1.0:
        mask[:] = True
    elif spec.pattern == "uniform-cartesian":
        # Sample every k-th phase-encode line (full rows), k chosen so the
        # realized acceleration is as close as possible to the request once
        # the ACS block is accounted for.
        best = None
        for k in range(1, rows + 1):
            trial = mask.copy()
            trial[::k, :] = True
            acc = total / trial.sum()
            err = abs(acc - spec.acceleration)
            if best is None or err < best[0]:
                best = (err, k)
        mask[:: best[1], :] = True
    else:  # variable-density-random
        rng = np.random.default_rng(spec.seed)
        u, v = _grid(size)
        r = np.sqrt(u**2 + v**2)
        floor = max(np.hypot((r1 - r0) / rows, (c1 - c0) / cols), 0.05)
        weights = np.minimum(1.0, (floor / np.maximum(r, 1e-6)) ** spec.density_exponent)
        weights[mask] = 0.0
        need = max(target - n_acs, 0)
        candidates = np.flatnonzero(~mask.ravel())
        p = weights.ravel()[candidates]
        p /= p.sum()
        chosen = rng.choice(candidates, size=min(need, candidates.size), replace=False, p=p)
        mask.ravel()[chosen] = True

    out = SamplingMask(mask=mask, acs=(r0, r1, c0, c1))
    realized = out.acceleration
    if abs(realized - spec.acceleration) > 0.1 * spec.acceleration:
        raise ValueError(
            f"realized acceleration {realized:.2f} misses request {spec.acceleration} by >10%"
        )
    return out


def synthesize_measurement(x, S: CoilSensitivities, mask: SamplingMask, noise_std=0.0, seed=0):
    """Forward-model measurement y = M(F S x + n), complex Gaussian n."""
    ksp = fft2c(coil_expand(x, S))
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        noise = noise_std * (
            rng.standard_normal(ksp.shape) + 1j * rng.standard_normal(ksp.shape)
        )
        ksp = ksp + noise
    y = np.where(mask.mask, ksp, 0.0)
    return MeasuredData(y=y, mask=mask, noise_std=float(noise_std))
