"""TOML experiment configuration."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..datasets import MSDConfig, PendulumConfig, WaveConfig
from ..phin import LossWeights
from ..training import TrainConfig

MODEL_MODES = ("phin", "aphin_linear", "aphin_nonlinear")
DATASET_CONFIGS = {"msd": MSDConfig, "pendulum": PendulumConfig, "wave": WaveConfig}


class ConfigError(ValueError):
    pass


@dataclass
class DatasetSection:
    kind: str
    params: dict = field(default_factory=dict)
    path: str | None = None
    scale_states: bool = True
    normalize_mu: bool = True
    normalize_u: bool = True


@dataclass
class ModelSection:
    mode: str
    r: int
    n_v: int | None = None
    layers: list[int] = field(default_factory=list)
    hyper_layers: list[int] = field(default_factory=list)
    eps: float = 1e-6
    frozen_Q: bool = False
    init_scale: float = 0.1


@dataclass
class ExperimentConfig:
    dataset: DatasetSection
    model: ModelSection
    loss: LossWeights
    train: TrainConfig
    output_dir: str | None = None
    name: str = "experiment"
    source_bytes: bytes = b""

    @property
    def seed(self) -> int:
        return self.train.seed


def _take(section: dict, cls, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def parse_config(text: bytes | str, name: str = "experiment") -> ExperimentConfig:
    raw = text.encode() if isinstance(text, str) else text
    try:
        doc = tomllib.loads(raw.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    for key in ("dataset", "model"):
        if key not in doc:
            raise ConfigError(f"missing [{key}] section")
    unknown = set(doc) - {"dataset", "model", "loss", "optimizer", "run"}
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")

    ds = _take(dict(doc["dataset"]), DatasetSection, "dataset")
    model = _take(dict(doc["model"]), ModelSection, "model")
    loss = _take(dict(doc.get("loss", {})), LossWeights, "loss")
    opt = dict(doc.get("optimizer", {}))
    es = dict(opt.pop("early_stopping", {}))
    run = dict(doc.get("run", {}))
    seed = run.pop("seed", 0)
    output_dir = run.pop("output_dir", None)
    name = run.pop("name", name)
    if run:
        raise ConfigError(f"unknown key(s) in [run]: {sorted(run)}")
    train = _take({**opt, **es, "seed": seed}, TrainConfig, "optimizer")
    cfg = ExperimentConfig(ds, model, loss, train, output_dir, name, raw)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(raw, p.stem)


def validate(cfg: ExperimentConfig) -> None:
    """Cross-field checks that need no data."""
    d, m = cfg.dataset, cfg.model
    if d.kind not in DATASET_CONFIGS:
        raise ConfigError(f"dataset.kind must be one of {sorted(DATASET_CONFIGS)}, got {d.kind!r}")
    if d.path is None:
        try:
            DATASET_CONFIGS[d.kind](**d.params)
        except TypeError as exc:
            raise ConfigError(f"[dataset.params]: {exc}") from exc
    if m.mode not in MODEL_MODES:
        raise ConfigError(f"model.mode must be one of {MODEL_MODES}, got {m.mode!r}")
    if m.r < 1:
        raise ConfigError("model.r must be >= 1")
    if m.mode == "aphin_nonlinear" and not m.layers:
        raise ConfigError("aphin_nonlinear needs model.layers")
    if m.n_v is not None and m.n_v < m.r:
        raise ConfigError(f"model.n_v={m.n_v} is smaller than r={m.r}")
    if m.mode == "phin" and (cfg.loss.rec or cfg.loss.con) and cfg.loss.ph == 0:
        raise ConfigError("phin mode trains on the pH loss; set loss.ph > 0")


def resolve_output_dir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get("PH_IDENT_OUT", "runs")) / cfg.name
