"""Self-consistency driven diffusion reconstruction for multi-coil MRI."""

from .classic import ClassicConfig, cg_spirit, gd_spirit, spirit_objective, zero_filled
from .config import ExperimentConfig, load_config
from .cxt1 import read_cxt1, write_cxt1
from .diffusion import (DiffusionState, NoiseSchedule, complex_noise, forward_em,
                        forward_em_ensemble, perturb, reverse_step, sigma_at)
from .encoding import (CoilSensitivities, MeasuredData, SamplingMask, adjoint_A,
                       coil_combine, coil_expand, coil_project, forward_A, sos_combine)
from .errors import ConfigError, NumericalError
from .fourier import fft2c, ifft2c, inner
from .metrics import EvalReport, evaluate, nmse, psnr, ssim
from .sampler import SamplerConfig, guidance_m, pc_sample, ve_sde_sample
from .score import (GaussianPrior, ScoreFunction, analytic_gaussian_score,
                    combined_score, dsm_loss, fit_linear_score)
from .simulation import (MaskSpec, PhantomSpec, make_coil_maps, make_mask,
                         make_phantom, synthesize_measurement)
from .spirit import SpiritKernel, adjoint_of_G_minus_I, apply_G, apply_psi, calibrate

__version__ = "0.1.0"
