"""Multi-coil MRI encoding: sensitivity weighting, sampling masks, A = M F S.

Coil arrays are (coil, row, col); all operators broadcast over leading batch
axes.  Sensitivities are normalized pixelwise at construction so that the
coil-combine of a coil-expand is the identity on the support.
"""

from dataclasses import dataclass

import numpy as np

from .fourier import fft2c, ifft2c

_NORM_TOL = 1e-10


@dataclass(frozen=True)
class CoilSensitivities:
    """Pixelwise coil weights with sum_c |s_c|^2 = 1 on the support."""

    maps: np.ndarray          # (nc, rows, cols) complex128
    support: np.ndarray       # (rows, cols) bool

    @classmethod
    def from_maps(cls, raw):
        """Normalize raw complex maps pixelwise; zero-total pixels leave the support."""
        raw = np.asarray(raw, dtype=np.complex128)
        if raw.ndim != 3:
            raise ValueError(f"expected (coil, row, col) maps, got shape {raw.shape}")
        total = np.sum(np.abs(raw) ** 2, axis=0)
        support = total > 1e-24
        scale = np.where(support, np.sqrt(np.where(support, total, 1.0)), np.inf)
        maps = raw / scale
        return cls(maps=maps, support=support)

    def __post_init__(self):
        total = np.sum(np.abs(self.maps) ** 2, axis=0)
        bad = np.abs(np.where(self.support, total - 1.0, total))
        if bad.max() > _NORM_TOL:
            raise ValueError("sensitivity maps are not normalized to S*S = I")

    @property
    def nc(self):
        return self.maps.shape[0]

    @property
    def shape(self):
        return self.maps.shape[1:]


@dataclass(frozen=True)
class SamplingMask:
    """Binary k-space sampling pattern with a fully-sampled ACS rectangle.

    `acs` is (row0, row1, col0, col1) as half-open index bounds.
    """

    mask: np.ndarray                      # (rows, cols) bool
    acs: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.dtype != np.bool_:
            vals = np.unique(m)
            if not np.all(np.isin(vals, (0, 1))):
                raise ValueError("mask entries must be 0 or 1")
            object.__setattr__(self, "mask", m.astype(bool))
        r0, r1, c0, c1 = self.acs
        if not np.all(self.mask[r0:r1, c0:c1]):
            raise ValueError("ACS region is not fully sampled")
        if not self.mask.any():
            raise ValueError("empty sampling mask")

    @property
    def acceleration(self):
        return self.mask.size / int(self.mask.sum())

    @property
    def shape(self):
        return self.mask.shape


@dataclass(frozen=True)
class MeasuredData:
    """Acquired multi-coil k-space, zero at unsampled locations."""

    y: np.ndarray             # (nc, rows, cols) complex128
    mask: SamplingMask
    noise_std: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.complex128)
        object.__setattr__(self, "y", y)
        if y.ndim != 3 or y.shape[1:] != self.mask.shape:
            raise ValueError(f"measurement shape {y.shape} does not match mask {self.mask.shape}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if np.any(y[:, ~self.mask.mask] != 0):
            raise ValueError("measurement has nonzero entries at unsampled locations")

    @property
    def nc(self):
        return self.y.shape[0]


def _check_spatial_match(x, S):
    if np.asarray(x).shape[-2:] != S.shape:
        raise ValueError(f"spatial shape {np.asarray(x).shape[-2:]} does not match maps {S.shape}")


def coil_expand(x, S: CoilSensitivities):
    """Weight a combined image by each coil map: (..., r, c) -> (..., nc, r, c)."""
    x = np.asarray(x, dtype=np.complex128)
    _check_spatial_match(x, S)
    return x[..., None, :, :] * S.maps


def coil_combine(xc, S: CoilSensitivities):
    """Adjoint of coil_expand: sum_c conj(s_c) * x_c, (..., nc, r, c) -> (..., r, c)."""
    xc = np.asarray(xc, dtype=np.complex128)
    _check_spatial_match(xc, S)
    if xc.shape[-3] != S.nc:
        raise ValueError(f"coil count {xc.shape[-3]} does not match maps {S.nc}")
    return np.sum(np.conj(S.maps) * xc, axis=-3)


def coil_project(xc, S: CoilSensitivities):
    """Orthogonal projection S S* onto the coil-consistent subspace."""
    return coil_expand(coil_combine(xc, S), S)


def forward_A(x, S: CoilSensitivities, mask: SamplingMask):
    """Encoding operator A = M F S applied to a combined image."""
    return mask.mask * fft2c(coil_expand(x, S))


def adjoint_A(y, S: CoilSensitivities, mask: SamplingMask):
    """Adjoint A^H = S* F^-1 M applied to multi-coil k-space."""
    return coil_combine(ifft2c(mask.mask * np.asarray(y, dtype=np.complex128)), S)


def sos_combine(xc):
    """Sum-of-squares magnitude image: sqrt(sum_c |x_c|^2)."""
    xc = np.asarray(xc)
    return np.sqrt(np.sum(np.abs(xc) ** 2, axis=-3))
