from .core import Simulation, TrajectoryDataset
from .halton import halton, halton_points, scale_to_box
from .io import blob_sha1, format_csv, read_csv, read_dataset, write_dataset
from .msd import MSDConfig, MSDParameters, damped_harmonic_input, generate_msd, msd_reference_system
from .pendulum import (
    PendulumConfig,
    generate_pendulum,
    pendulum_cartesian_derivative,
    pendulum_energy,
    pendulum_rhs,
    pendulum_to_cartesian,
)
from .preprocessing import (
    DegenerateScalingError,
    Scalers,
    apply_scalers,
    central_differences,
    fit_scalers,
    invert_scalers,
    normalize_dataset,
)
from .wave import WaveConfig, generate_wave_standin, heat_input, wave_system


DATASET_KINDS = ("msd", "pendulum", "wave")


def generate(kind: str, **params):
    """``(train, test)`` for ``kind`` in ``msd``, ``pendulum``, ``wave``."""
    makers = {
        "msd": (MSDConfig, generate_msd),
        "pendulum": (PendulumConfig, generate_pendulum),
        "wave": (WaveConfig, generate_wave_standin),
    }
    if kind not in makers:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {sorted(makers)}")
    cfg_cls, fn = makers[kind]
    return fn(cfg_cls(**params))
