"""Static and time-dependent RoPE frequency rescaling.

Static rules (``direct``, ``pi``, ``ntk``, ``yarn``) produce one table per
promotion. The dynamic ``sharp`` rule shrinks YaRN's ramp band by a schedule
value ``kappa(t)`` so that, late in denoising (``t -> 0``), every frequency
pair returns to its native value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    DomainError,
    InvalidDimensionError,
    InvalidPromotionError,
    InvalidScheduleError,
)
from .rope import FrequencyTable, axis_thetas

FAMILIES = ("static", "linear", "cosine", "rational")
METHODS = ("direct", "pi", "ntk", "yarn", "sharp")

DEFAULT_ALPHA_S = 3.0
DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 32.0


@dataclass(frozen=True)
class ScheduleSpec:
    family: str = "rational"
    alpha_s: float = DEFAULT_ALPHA_S
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidScheduleError(f"unknown schedule family {self.family!r}; choose from {FAMILIES}")
        if not self.alpha_s >= 1:
            raise InvalidScheduleError(f"alpha_s must be >= 1, got {self.alpha_s}")
        if not (0 <= self.alpha < self.beta):
            raise InvalidScheduleError(f"ramp bounds need 0 <= alpha < beta, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class MethodSpec:
    kind: str = "sharp"
    schedule: ScheduleSpec | None = None
    yarn_bounds: tuple[float, float] = (DEFAULT_ALPHA, DEFAULT_BETA)

    def __post_init__(self):
        if self.kind not in METHODS:
            raise InvalidScheduleError(f"unknown method {self.kind!r}; choose from {METHODS}")
        if self.kind == "sharp" and self.schedule is None:
            object.__setattr__(self, "schedule", ScheduleSpec())
        lo, hi = self.yarn_bounds
        if not (0 <= lo < hi):
            raise InvalidScheduleError(f"ramp bounds need 0 <= alpha < beta, got {self.yarn_bounds}")
        object.__setattr__(self, "yarn_bounds", (float(lo), float(hi)))

    @property
    def is_dynamic(self) -> bool:
        return self.kind == "sharp"

    @classmethod
    def sharp(cls, alpha_s=DEFAULT_ALPHA_S, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA, family="rational"):
        return cls("sharp", ScheduleSpec(family, alpha_s, alpha, beta))

    @classmethod
    def yarn(cls, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA):
        return cls("yarn", yarn_bounds=(alpha, beta))


@dataclass(frozen=True)
class PromotionContext:
    """Training and target token extents, ``(height, width)``."""

    train_extent: tuple[float, float]
    target_extent: tuple[float, float]

    def __post_init__(self):
        train = tuple(float(x) for x in self.train_extent)
        target = tuple(float(x) for x in self.target_extent)
        if len(train) != len(target) or not train:
            raise InvalidPromotionError("train and target extents need the same number of axes")
        if any(x <= 0 for x in train + target):
            raise InvalidPromotionError("extents must be positive")
        object.__setattr__(self, "train_extent", train)
        object.__setattr__(self, "target_extent", target)
        if any(s < 1 for s in self.s_per_axis):
            raise InvalidPromotionError(f"target must not be smaller than train, got s={self.s_per_axis}")

    @property
    def s_per_axis(self) -> tuple[float, ...]:
        return tuple(b / a for a, b in zip(self.train_extent, self.target_extent))

    @classmethod
    def square(cls, train: float, s: float) -> PromotionContext:
        return cls((train, train), (train * s, train * s))


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"timestep must lie in [0, 1], got {t}")
    return t


def kappa(schedule: ScheduleSpec, t: float) -> float:
    """Schedule value in [0, 1]; every family gives exactly 1 at ``t = 1``."""
    t = _check_t(t)
    if schedule.alpha_s < 1:
        raise InvalidScheduleError(f"alpha_s must be >= 1, got {schedule.alpha_s}")
    fam = schedule.family
    if fam == "static" or t == 1.0:
        return 1.0
    if fam == "linear":
        k = t
    elif fam == "cosine":
        k = 0.5 * (1.0 - math.cos(math.pi * t))
    else:
        a = schedule.alpha_s
        k = t / (a - (a - 1.0) * t)
    return min(1.0, max(0.0, k))


def dynamic_bounds(schedule: ScheduleSpec, t: float) -> tuple[float, float]:
    k = kappa(schedule, t)
    return schedule.alpha * k, schedule.beta * k


def ratios(table: FrequencyTable, ctx: PromotionContext, axis: int) -> np.ndarray:
    """``L_target / wavelength`` for every pair on ``axis``."""
    return ctx.target_extent[axis] / table.wavelengths[axis]


def frequency_ratio(table: FrequencyTable, ctx: PromotionContext, axis: int, d: int) -> float:
    n = table.axis_dims[axis] // 2
    if not 0 <= d < n:
        raise IndexError(f"pair index {d} out of range for axis {axis} ({n} pairs)")
    return float(ratios(table, ctx, axis)[d])


def ramp(r: float, alpha_t: float, beta_t: float) -> float:
    """Linear ramp from 0 at ``alpha_t`` to 1 at ``beta_t``.

    A band narrower than 1e-9 degenerates to a step at ``beta_t``.
    """
    if r < 0:
        raise DomainError(f"frequency ratio must be non-negative, got {r}")
    if not 0 <= alpha_t <= beta_t:
        raise DomainError(f"need 0 <= alpha_t <= beta_t, got ({alpha_t}, {beta_t})")
    if beta_t - alpha_t < 1e-9:
        return 1.0 if r >= beta_t else 0.0
    return min(1.0, max(0.0, (r - alpha_t) / (beta_t - alpha_t)))


def ramp_bounds(method: MethodSpec, t: float | None) -> tuple[float, float] | None:
    """Band used by the blend methods at ``t``; None for non-blend methods."""
    if method.kind == "yarn":
        return method.yarn_bounds
    if method.kind == "sharp":
        return dynamic_bounds(method.schedule, 1.0 if t is None else t)
    return None


def blend_weights(table: FrequencyTable, ctx: PromotionContext, method: MethodSpec, t: float | None = None):
    """Per-axis ramp values; direct -> 1, pi -> 0, ntk -> nan."""
    bounds = ramp_bounds(method, t)
    out = []
    for i in range(table.n_axes):
        r = ratios(table, ctx, i)
        if bounds is not None:
            out.append(np.array([ramp(x, *bounds) for x in r]))
        else:
            fill = {"direct": 1.0, "pi": 0.0}.get(method.kind, math.nan)
            out.append(np.full(r.shape, fill))
    return out


def _check_axes(table: FrequencyTable, ctx: PromotionContext):
    if len(ctx.target_extent) != table.n_axes:
        raise InvalidDimensionError(f"context has {len(ctx.target_extent)} axes, table has {table.n_axes}")


def rescale_table(table: FrequencyTable, ctx: PromotionContext, method: MethodSpec, t: float | None = None) -> FrequencyTable:
    """Rescaled frequencies for ``method``; ``t`` matters only for ``sharp``."""
    _check_axes(table, ctx)
    kind = method.kind
    s_axes = ctx.s_per_axis
    if any(s < 1 for s in s_axes):
        raise InvalidPromotionError(f"promotion factor must be >= 1, got {s_axes}")
    if kind == "sharp" and t is None:
        raise DomainError("sharp rescaling needs a timestep")
    if kind == "direct":
        return table.with_thetas(table.thetas)
    if kind == "pi":
        return table.with_thetas([th / s for th, s in zip(table.thetas, s_axes)])
    if kind == "ntk":
        new = []
        for d, s in zip(table.axis_dims, s_axes):
            if d <= 2:
                raise InvalidDimensionError(f"NTK-aware scaling needs axis dim > 2, got {d}")
            new.append(axis_thetas(d, table.base * s ** (d / (d - 2))))
        return table.with_thetas(new)
    lo, hi = ramp_bounds(method, t)
    if kind == "sharp":
        _check_t(t)
    new = [
        kernels.blend_frequencies(np.ascontiguousarray(th), np.ascontiguousarray(ratios(table, ctx, i)), float(s), lo, hi)
        for i, (th, s) in enumerate(zip(table.thetas, s_axes))
    ]
    return table.with_thetas(new)


@dataclass(frozen=True)
class TraceRow:
    step: int
    t: float
    kappa: float
    alpha_t: float
    beta_t: float
    table: FrequencyTable

    @property
    def h(self) -> np.ndarray:
        return self.table.flat()


def schedule_trace(table: FrequencyTable, ctx: PromotionContext, method: MethodSpec, timesteps: Iterable[float]) -> list[TraceRow]:
    """One row per timestep. Non-sharp methods report ``kappa = 1``; their
    bounds are the static YaRN band, or nan when there is no ramp."""
    ts = [float(t) for t in timesteps]
    if not ts:
        raise DomainError("timestep list is empty")
    for t in ts:
        _check_t(t)
    if any(b > a for a, b in zip(ts, ts[1:])):
        raise DomainError("timesteps must be in descending order")
    rows = []
    for n, t in enumerate(ts):
        if method.kind == "sharp":
            k = kappa(method.schedule, t)
            lo, hi = dynamic_bounds(method.schedule, t)
        else:
            k = 1.0
            lo, hi = method.yarn_bounds if method.kind == "yarn" else (math.nan, math.nan)
        rows.append(TraceRow(n, t, k, lo, hi, rescale_table(table, ctx, method, t)))
    return rows


def method_from_options(method: str, alpha_s=None, alpha=None, beta=None, family=None) -> MethodSpec:
    alpha_s = DEFAULT_ALPHA_S if alpha_s is None else float(alpha_s)
    alpha = DEFAULT_ALPHA if alpha is None else float(alpha)
    beta = DEFAULT_BETA if beta is None else float(beta)
    if method == "sharp":
        return MethodSpec("sharp", ScheduleSpec(family or "rational", alpha_s, alpha, beta))
    return MethodSpec(method, yarn_bounds=(alpha, beta))


def parse_extent(value) -> tuple[float, float]:
    """``"64x48"``, ``"64,48"`` or ``"64"`` (square)."""
    if isinstance(value, (tuple, list)):
        parts = list(value)
    else:
        parts = str(value).lower().replace("x", ",").split(",")
    parts = [float(p) for p in parts if str(p).strip()]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise InvalidPromotionError(f"cannot parse extent {value!r}")
    return (parts[0], parts[1])


def parse_int_list(value) -> tuple[int, ...]:
    if isinstance(value, (tuple, list)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).replace("x", ",").split(",") if v.strip())


def load_config(path) -> dict[str, str]:
    """Read a ``key = value`` file. ``#`` starts a comment; keys use underscores."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidScheduleError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def dump_config(cfg: dict) -> str:
    lines = []
    for key in sorted(cfg):
        value = cfg[key]
        if value is None:
            continue
        if isinstance(value, (tuple, list)):
            value = ",".join(_fmt_cfg(v) for v in value)
        else:
            value = _fmt_cfg(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _fmt_cfg(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class ExtrapolationConfig:
    method: MethodSpec
    table: FrequencyTable
    ctx: PromotionContext


def config_from_mapping(cfg: dict) -> ExtrapolationConfig:
    """Build method, base table and context from config keys."""
    from .rope import DEFAULT_AXIS_DIMS, DEFAULT_BASE, build_frequency_table

    method = method_from_options(
        str(cfg.get("method", "sharp")),
        cfg.get("alpha_s"),
        cfg.get("alpha"),
        cfg.get("beta"),
        cfg.get("family"),
    )
    dims = parse_int_list(cfg.get("axis_dims", DEFAULT_AXIS_DIMS))
    table = build_frequency_table(dims, float(cfg.get("base", DEFAULT_BASE)))
    train = parse_extent(cfg.get("train_extent", "64x64"))
    target = parse_extent(cfg.get("target_extent", "128x128"))
    return ExtrapolationConfig(method, table, PromotionContext(train, target))


def promotion_for_table(table: FrequencyTable, train: Sequence[float], target: Sequence[float]) -> PromotionContext:
    ctx = PromotionContext(tuple(train), tuple(target))
    _check_axes(table, ctx)
    return ctx
