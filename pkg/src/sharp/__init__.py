"""Spectrum-aware dynamic RoPE extrapolation for diffusion transformers."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DataError,
    DomainError,
    InvalidBaseError,
    InvalidDimensionError,
    InvalidPromotionError,
    InvalidScheduleError,
    NonFiniteError,
    SharpError,
)
from .extrapolation import (  # noqa: E402
    MethodSpec,
    PromotionContext,
    ScheduleSpec,
    dynamic_bounds,
    frequency_ratio,
    kappa,
    ramp,
    rescale_table,
    schedule_trace,
)
from .rope import (  # noqa: E402
    FrequencyTable,
    GridPosition,
    apply_rotary,
    build_frequency_table,
    relative_score,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DomainError",
    "FrequencyTable",
    "GridPosition",
    "InvalidBaseError",
    "InvalidDimensionError",
    "InvalidPromotionError",
    "InvalidScheduleError",
    "MethodSpec",
    "NonFiniteError",
    "PromotionContext",
    "ScheduleSpec",
    "SharpError",
    "apply_rotary",
    "build_frequency_table",
    "dynamic_bounds",
    "frequency_ratio",
    "kappa",
    "ramp",
    "relative_score",
    "rescale_table",
    "schedule_trace",
]
