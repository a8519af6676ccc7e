from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiment import RunArtifacts, build_model, run_experiment
from .export import export_csv, verify_manifest, write_manifest
from .main import main
from .plot import Series, error_plot, render_plot

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunArtifacts",
    "Series",
    "build_model",
    "error_plot",
    "export_csv",
    "load_config",
    "main",
    "parse_config",
    "render_plot",
    "run_experiment",
    "verify_manifest",
    "write_manifest",
]
