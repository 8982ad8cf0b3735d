"""Experiment configuration: a flat YAML mapping with unit-suffixed keys.

Example::

    scenario: scaling_study
    n_list: [1, 2, 3, 4, 6, 8]
    t2_single_s: 0.095        # or sigma2_rad2_per_s2
    gamma_per_s: 100.0
    shots_per_setting: 100
    n_phi_settings: 25
    n_wait_times: 8
    seed: 1234
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .noise import NOISE_KINDS, NoiseParams

SCENARIOS = ("ghz_characterize", "ghz_decay", "scaling_study", "dfs_contrast")
DETECTIONS = ("camera", "pmt")

# single-qubit coherence time after the field-noise reduction (95 ms)
MEASURED_T2_SINGLE_S = 0.095
DEFAULT_GAMMA_PER_S = 100.0
MEASURED_T1_S = 1.17


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int
    n: int | None = None
    n_list: list[int] | None = None
    sigma2_rad2_per_s2: float | None = None
    t2_single_s: float | None = None
    gamma_per_s: float = DEFAULT_GAMMA_PER_S
    noise_kind: str = "ou"
    t1_s: float | None = None
    wait_times_s: list[float] | None = None
    n_wait_times: int = 8
    wait_span_coherence_times: list[float] = field(default_factory=lambda: [0.1, 3.0])
    shots_per_setting: int = 100
    n_phi_settings: int | None = None
    population_shots: int | None = None
    detection: str = "camera"
    pmt_lambda_ion_counts: float = 20.0
    pmt_lambda_bg_counts: float = 1.0
    prep_populations: float | None = None
    prep_coherence: float | None = None
    ms_crosscheck: bool = False
    bootstrap_resamples: int = 1000
    analytic: bool = False
    write_raw: bool = True
    out_dir: str = "out"

    @property
    def noise(self) -> NoiseParams:
        if self.sigma2_rad2_per_s2 is not None:
            return NoiseParams(self.sigma2_rad2_per_s2, self.gamma_per_s, self.noise_kind)
        t2 = self.t2_single_s if self.t2_single_s is not None else MEASURED_T2_SINGLE_S
        return NoiseParams.from_single_qubit_t2(t2, self.gamma_per_s, self.noise_kind)

    @property
    def t1(self) -> float:
        return float("inf") if self.t1_s is None else self.t1_s

    def phi_settings(self, n: int) -> int:
        return self.n_phi_settings if self.n_phi_settings is not None else 3 * n + 1

    def population_shot_count(self, n: int) -> int:
        if self.population_shots is not None:
            return self.population_shots
        return self.shots_per_setting * self.phi_settings(n)

    def qubit_counts(self) -> list[int]:
        if self.n_list is not None:
            return list(self.n_list)
        return [self.n]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _validate(cfg: ExperimentConfig) -> dict[str, str]:
    err: dict[str, str] = {}
    if cfg.scenario not in SCENARIOS:
        err["scenario"] = f"must be one of {SCENARIOS}"
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        err["seed"] = "must be a non-negative integer"
    if cfg.scenario == "scaling_study":
        if not cfg.n_list:
            err["n_list"] = "required for scaling_study"
        elif 1 not in cfg.n_list:
            err["n_list"] = "must include the single-qubit reference N=1"
    elif cfg.n is None and not cfg.n_list:
        err["n"] = "required"
    for name in ("n",):
        v = getattr(cfg, name)
        if v is not None and (not isinstance(v, int) or not 1 <= v <= 14):
            err[name] = "must be an integer in [1, 14]"
    if cfg.n_list is not None and any(not isinstance(v, int) or not 1 <= v <= 14 for v in cfg.n_list):
        err["n_list"] = "entries must be integers in [1, 14]"
    if cfg.scenario == "dfs_contrast" and cfg.n is not None and cfg.n % 2:
        err["n"] = "dfs_contrast needs an even qubit count"
    if cfg.noise_kind not in NOISE_KINDS:
        err["noise_kind"] = f"must be one of {NOISE_KINDS}"
    if cfg.sigma2_rad2_per_s2 is not None and cfg.sigma2_rad2_per_s2 < 0:
        err["sigma2_rad2_per_s2"] = "must be >= 0"
    if cfg.t2_single_s is not None and cfg.t2_single_s <= 0:
        err["t2_single_s"] = "must be > 0"
    if cfg.sigma2_rad2_per_s2 is not None and cfg.t2_single_s is not None:
        err["t2_single_s"] = "give either sigma2_rad2_per_s2 or t2_single_s, not both"
    if not cfg.gamma_per_s > 0 and cfg.noise_kind != "static":
        err["gamma_per_s"] = "must be > 0"
    if cfg.t1_s is not None and not cfg.t1_s > 0:
        err["t1_s"] = "must be > 0 (omit for no decay)"
    if cfg.wait_times_s is not None:
        if not cfg.wait_times_s or any(t < 0 for t in cfg.wait_times_s):
            err["wait_times_s"] = "must be a nonempty list of times >= 0"
        elif any(b <= a for a, b in zip(cfg.wait_times_s, cfg.wait_times_s[1:])):
            err["wait_times_s"] = "must be strictly increasing"
    if cfg.n_wait_times < 3:
        err["n_wait_times"] = "must be >= 3"
    span = cfg.wait_span_coherence_times
    if len(span) != 2 or not 0 < span[0] < span[1]:
        err["wait_span_coherence_times"] = "must be [lo, hi] with 0 < lo < hi"
    if cfg.shots_per_setting < 1:
        err["shots_per_setting"] = "must be >= 1"
    if cfg.n_phi_settings is not None and cfg.n_phi_settings < 3:
        err["n_phi_settings"] = "must be >= 3"
    if cfg.population_shots is not None and cfg.population_shots < 1:
        err["population_shots"] = "must be >= 1"
    if cfg.detection not in DETECTIONS:
        err["detection"] = f"must be one of {DETECTIONS}"
    if not cfg.pmt_lambda_ion_counts > 0:
        err["pmt_lambda_ion_counts"] = "must be > 0"
    if not cfg.pmt_lambda_bg_counts >= 0:
        err["pmt_lambda_bg_counts"] = "must be >= 0"
    if cfg.prep_populations is not None and not 0 <= cfg.prep_populations <= 1:
        err["prep_populations"] = "must lie in [0, 1]"
    if cfg.prep_coherence is not None:
        top = cfg.prep_populations if cfg.prep_populations is not None else 1.0
        if not 0 <= cfg.prep_coherence <= top:
            err["prep_coherence"] = "must lie in [0, prep_populations]"
    if cfg.bootstrap_resamples < 0:
        err["bootstrap_resamples"] = "must be >= 0"
    return err


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError({"<root>": "config must be a mapping"})
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError({k: "unknown key" for k in unknown})
    missing = [k for k in ("scenario", "seed") if k not in data]
    if missing:
        raise ConfigError({k: "required" for k in missing})
    try:
        cfg = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError({"<root>": str(exc)}) from exc
    errors = _validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError({"<file>": str(exc)}) from exc
    data = dict(data or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_dict(data)
