"""Experiment configuration: YAML with nested sections, validated into dataclasses."""

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .classic import ClassicConfig
from .diffusion import NoiseSchedule
from .errors import ConfigError
from .sampler import SamplerConfig
from .simulation import MaskSpec, PhantomSpec

METHODS = ("zero-filled", "cg-spirit", "gd-spirit", "spirit-diffusion", "ve-sde")


@dataclass(frozen=True)
class CoilSpec:
    count: int = 8
    seed: int = 2025


@dataclass(frozen=True)
class SpiritSpec:
    kernel_size: tuple = (5, 5)
    tikhonov: float = 1e-4


@dataclass(frozen=True)
class ScoreFitSpec:
    train_samples: int = 48
    train_kind: str = "smooth-blobs"
    train_seed: int = 9000
    ridge: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    coils: CoilSpec = field(default_factory=CoilSpec)
    mask: MaskSpec = field(default_factory=MaskSpec)
    noise_std: float = 0.0
    spirit: SpiritSpec = field(default_factory=SpiritSpec)
    schedule: dict = field(default_factory=dict)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    classic: ClassicConfig = field(default_factory=ClassicConfig)
    score: ScoreFitSpec = field(default_factory=ScoreFitSpec)
    methods: tuple = ("zero-filled",)
    output_dir: str = "out"
    roi: tuple = None
    error_window: float = 0.2
    measure_seed: int = 31415

    def make_schedule(self) -> NoiseSchedule:
        return NoiseSchedule(**self.schedule)


def _section(raw, name):
    sec = raw.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return sec


def _build(cls, raw, name, tuple_keys=()):
    sec = _section(raw, name)
    try:
        for key in tuple_keys:
            if key in sec:
                sec[key] = tuple(sec[key])
        return cls(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section '{name}': {exc}") from exc


def config_from_dict(raw: dict) -> ExperimentConfig:
    known = {"phantom", "coils", "mask", "noise_std", "spirit", "schedule", "sampler",
             "classic", "score", "methods", "output_dir", "roi", "error_window",
             "measure_seed"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")

    methods = raw.get("methods", ["zero-filled"])
    if not methods:
        raise ConfigError("'methods' must be non-empty")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method '{m}' (choose from {', '.join(METHODS)})")

    schedule = _section(raw, "schedule")
    try:
        NoiseSchedule(**schedule)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section 'schedule': {exc}") from exc

    roi = raw.get("roi")
    if roi is not None:
        roi = tuple(int(v) for v in roi)
        if len(roi) != 4:
            raise ConfigError("'roi' must be [row0, row1, col0, col1]")

    try:
        noise_std = float(raw.get("noise_std", 0.0))
        error_window = float(raw.get("error_window", 0.2))
        measure_seed = int(raw.get("measure_seed", 31415))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scalar value: {exc}") from exc
    if noise_std < 0:
        raise ConfigError("'noise_std' must be >= 0")
    if error_window <= 0:
        raise ConfigError("'error_window' must be > 0")

    return ExperimentConfig(
        phantom=_build(PhantomSpec, raw, "phantom", tuple_keys=("size",)),
        coils=_build(CoilSpec, raw, "coils"),
        mask=_build(MaskSpec, raw, "mask", tuple_keys=("acs",)),
        noise_std=noise_std,
        spirit=_build(SpiritSpec, raw, "spirit", tuple_keys=("kernel_size",)),
        schedule=schedule,
        sampler=_build(SamplerConfig, raw, "sampler"),
        classic=_build(ClassicConfig, raw, "classic"),
        score=_build(ScoreFitSpec, raw, "score"),
        methods=tuple(methods),
        output_dir=str(raw.get("output_dir", "out")),
        roi=roi,
        error_window=error_window,
        measure_seed=measure_seed,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-dict form of a config (for metadata and re-runs)."""
    return {
        "phantom": {"size": list(cfg.phantom.size), "kind": cfg.phantom.kind,
                    "seed": cfg.phantom.seed},
        "coils": {"count": cfg.coils.count, "seed": cfg.coils.seed},
        "mask": {"pattern": cfg.mask.pattern, "acceleration": cfg.mask.acceleration,
                 "acs": list(cfg.mask.acs), "seed": cfg.mask.seed,
                 "density_exponent": cfg.mask.density_exponent},
        "noise_std": cfg.noise_std,
        "spirit": {"kernel_size": list(cfg.spirit.kernel_size), "tikhonov": cfg.spirit.tikhonov},
        "schedule": dict(cfg.schedule),
        "sampler": {"lambda1": cfg.sampler.lambda1, "lambda2": cfg.sampler.lambda2,
                    "r": cfg.sampler.r, "n_steps": cfg.sampler.n_steps,
                    "m_corrector": cfg.sampler.m_corrector, "seed": cfg.sampler.seed},
        "classic": {"lambda_dc": cfg.classic.lambda_dc, "max_iters": cfg.classic.max_iters,
                    "tol": cfg.classic.tol, "step_eta": cfg.classic.step_eta,
                    "step_lambda": cfg.classic.step_lambda},
        "score": {"train_samples": cfg.score.train_samples, "train_kind": cfg.score.train_kind,
                  "train_seed": cfg.score.train_seed, "ridge": cfg.score.ridge},
        "methods": list(cfg.methods),
        "output_dir": cfg.output_dir,
        "roi": list(cfg.roi) if cfg.roi is not None else None,
        "error_window": cfg.error_window,
        "measure_seed": cfg.measure_seed,
    }
