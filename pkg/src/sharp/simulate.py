"""Denoising-loop simulation with pluggable x0-predicting denoisers.

The sampler integrates the linear flow ``x_t = (1-t) x0 + t eps`` backwards
with Euler steps, recomputing the RoPE frequency table at every step. The
bundled :class:`SpectralOracleDenoiser` is the per-frequency Wiener estimator
under a known clean spectrum, which makes the spectral recovery behaviour
checkable without a trained network.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import DataError, DomainError, InvalidDimensionError, NonFiniteError
from .extrapolation import (
    MethodSpec,
    PromotionContext,
    TraceRow,
    dynamic_bounds,
    kappa,
    rescale_table,
)
from .rope import FrequencyTable, build_frequency_table
from .spectral import F_MAX, SpectrumModel, radial_frequency_grid


@dataclass(frozen=True)
class TimestepGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if len(v) < 2:
            raise DomainError("need at least one step (two timesteps)")
        if v[0] != 1.0 or v[-1] != 0.0:
            raise DomainError(f"timesteps must start at 1 and end at 0, got {v[0]} .. {v[-1]}")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise DomainError("timesteps must be strictly descending")
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, n_steps: int = 50) -> TimestepGrid:
        if n_steps < 1:
            raise DomainError("n_steps must be >= 1")
        v = np.linspace(1.0, 0.0, n_steps + 1)
        v[0], v[-1] = 1.0, 0.0
        return cls(tuple(v))

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def loop_times(self) -> tuple[float, ...]:
        """Times at which the denoiser is called (``t_N = 0`` excluded)."""
        return self.values[:-1]


@dataclass
class LatentField:
    grid: np.ndarray
    seed: int | None = None
    spectrum: str | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        if self.grid.ndim != 2:
            raise InvalidDimensionError(f"latent must be 2-D, got {self.grid.shape}")
        if not np.all(np.isfinite(self.grid)):
            raise DataError("latent contains non-finite values")


class DenoiserHook(Protocol):
    def __call__(self, x_t: np.ndarray, t: float, table: FrequencyTable, conditioning=None) -> np.ndarray:
        """Return the predicted clean latent."""


def _grid(x):
    return x.grid if isinstance(x, LatentField) else np.asarray(x, dtype=np.float64)


def forward_mixture(x0, eps, t: float) -> LatentField:
    a, b = _grid(x0), _grid(eps)
    if a.shape != b.shape:
        raise InvalidDimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    t = float(t)
    if not 0 <= t <= 1:
        raise DomainError(f"t outside [0, 1]: {t}")
    return LatentField((1 - t) * a + t * b)


def _spectrum_fn(spectrum) -> Callable:
    if isinstance(spectrum, SpectrumModel):
        return spectrum.S_unchecked
    if callable(spectrum):
        return spectrum
    value = float(spectrum)
    return lambda f: np.full(np.shape(f), value)


def spectrum_on_grid(spectrum, shape) -> np.ndarray:
    """S evaluated on the FFT grid; corners beyond Nyquist use ``S(0.5)``, DC is 0."""
    f = np.minimum(radial_frequency_grid(*shape), F_MAX)
    f[0, 0] = F_MAX  # placeholder, zeroed below
    S = np.asarray(_spectrum_fn(spectrum)(f), dtype=np.float64) * np.ones(shape)
    S[0, 0] = 0.0
    return S


def synth_field(spectrum, extent, seed: int) -> LatentField:
    """Zero-mean Gaussian field whose expected periodogram is ``S(|f|)``."""
    h, w = (int(x) for x in extent)
    S = spectrum_on_grid(spectrum, (h, w))
    if not np.all(np.isfinite(S)) or np.any(S < 0) or not np.any(S > 0):
        raise DomainError("spectrum must be finite, non-negative and not identically zero")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((h, w))
    x = np.fft.ifft2(np.fft.fft2(white) * np.sqrt(S)).real
    tag = spectrum.name if isinstance(spectrum, SpectrumModel) else None
    return LatentField(x, seed, tag)


class SpectralOracleDenoiser:
    """Per-frequency Wiener estimate of x0 given ``x_t``.

    gain(f, t) = (1-t) S / ((1-t)^2 S + t^2 C_eps)
    """

    def __init__(self, model: SpectrumModel, extent):
        self.model = model
        self.shape = tuple(int(x) for x in extent)
        self.S = spectrum_on_grid(model, self.shape)

    def gain(self, t: float) -> np.ndarray:
        num = (1 - t) * self.S
        den = (1 - t) ** 2 * self.S + t ** 2 * self.model.c_eps
        return np.divide(num, den, out=np.zeros_like(num), where=den > 0)

    def __call__(self, x_t, t, table=None, conditioning=None):
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.shape != self.shape:
            raise InvalidDimensionError(f"oracle built for {self.shape}, got {x_t.shape}")
        return np.fft.ifft2(np.fft.fft2(x_t) * self.gain(float(t))).real


@dataclass
class InferenceResult:
    field: LatentField
    trace: list[TraceRow]


TRACE_HEADER = ("step", "t", "kappa", "alpha_t", "beta_t")


def trace_rows(trace: Sequence[TraceRow]):
    return [(r.step, r.t, r.kappa, r.alpha_t, r.beta_t) for r in trace]


def _trace_row(n, t, table, ctx, method) -> TraceRow:
    if method.kind == "sharp":
        k = kappa(method.schedule, t)
        lo, hi = dynamic_bounds(method.schedule, t)
    else:
        k = 1.0
        lo, hi = method.yarn_bounds if method.kind == "yarn" else (math.nan, math.nan)
    return TraceRow(n, t, k, lo, hi, rescale_table(table, ctx, method, t))


def run_inference(denoiser: DenoiserHook, ctx: PromotionContext, method: MethodSpec,
                  steps: TimestepGrid, seed: int, table: FrequencyTable | None = None,
                  conditioning=None, callback=None) -> InferenceResult:
    """Euler integration from pure noise at the target extent down to t = 0.

    ``callback(n, t, x_t, x0_hat)`` is invoked after each denoiser call.
    """
    table = build_frequency_table() if table is None else table
    shape = tuple(int(round(x)) for x in ctx.target_extent)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    ts = steps.values
    trace = []
    for n in range(steps.n_steps):
        t, t_next = ts[n], ts[n + 1]
        row = _trace_row(n, t, table, ctx, method)
        trace.append(row)
        x0_hat = np.asarray(denoiser(x, t, row.table, conditioning), dtype=np.float64)
        if x0_hat.shape != x.shape or not np.all(np.isfinite(x0_hat)):
            raise NonFiniteError(n)
        if callback is not None:
            callback(n, t, x, x0_hat)
        x = x + (t_next - t) * (x - x0_hat) / t
    return InferenceResult(LatentField(x, seed), trace)


DEFAULT_PROBE_BANDS = ((0.0, 1 / 16), (1 / 16, 1 / 8), (1 / 8, 1 / 4), (1 / 4, 0.5))


@dataclass
class CrystallizationReport:
    bands: tuple[tuple[float, float], ...]
    crossing_mean: np.ndarray
    crossing_std: np.ndarray
    predicted: np.ndarray
    band_S: np.ndarray
    per_seed: np.ndarray = field(repr=False)


def _crossing(ts: np.ndarray, snr: np.ndarray) -> float:
    """First time (descending ``ts``) at which ``snr`` reaches 1."""
    above = np.nonzero(snr >= 1.0)[0]
    if above.size == 0:
        return math.nan
    i = int(above[0])
    if i == 0:
        return float(ts[0])
    s0, s1 = snr[i - 1], snr[i]
    if s0 > 0:
        a, b, y = math.log(s0), math.log(s1), 0.0
    else:
        a, b, y = s0, s1, 1.0
    frac = (y - a) / (b - a) if b != a else 0.0
    return float(ts[i - 1] + frac * (ts[i] - ts[i - 1]))


def crystallization_probe(model: SpectrumModel, steps: TimestepGrid, extent, seeds: Sequence[int],
                          bands=DEFAULT_PROBE_BANDS, method: MethodSpec | None = None,
                          ctx: PromotionContext | None = None, jobs: int = 1) -> CrystallizationReport:
    """Empirical per-band times at which the oracle's recovered signal overtakes its error.

    For each seed a clean field is drawn from ``model`` and corrupted along
    the sampler's timestep grid. At every step the oracle estimate ``x0_hat``
    is compared with the truth; the band SNR is explained power over residual
    power, ``(|x0|^2 - |x0_hat - x0|^2) / |x0_hat - x0|^2``, whose expectation
    is the signal-dominance ratio. Crossing times of SNR = 1 are averaged over
    seeds and paired with the closed-form critical time of each band's mean S.
    """
    if len(seeds) < 20:
        raise DomainError(f"need at least 20 seeds, got {len(seeds)}")
    if not model.c_eps > 1e-12:
        raise DomainError("noise constant must be positive")
    shape = tuple(int(x) for x in extent)
    method = MethodSpec("direct") if method is None else method
    ctx = PromotionContext(shape, shape) if ctx is None else ctx
    table = build_frequency_table()
    oracle = SpectralOracleDenoiser(model, shape)
    fgrid = radial_frequency_grid(*shape)
    masks = [(fgrid > lo) & (fgrid <= hi) for lo, hi in bands]
    if any(not m.any() for m in masks):
        raise DomainError("a probe band contains no frequencies at this extent")
    band_S = np.array([oracle.S[m].mean() for m in masks])
    ts = np.asarray(steps.loop_times)
    tables = [rescale_table(table, ctx, method, t) for t in ts]

    def one(seed):
        x0 = synth_field(model, shape, seed).grid
        eps = np.random.default_rng([seed, 1]).standard_normal(shape)
        X0 = np.fft.fft2(x0)
        p0 = np.array([np.sum(np.abs(X0[m]) ** 2) for m in masks])
        snr = np.zeros((len(masks), len(ts)))
        for n, t in enumerate(ts):
            xt = forward_mixture(x0, eps, t).grid
            err = np.fft.fft2(oracle(xt, t, tables[n]) - x0)
            pe = np.array([np.sum(np.abs(err[m]) ** 2) for m in masks])
            snr[:, n] = (p0 - pe) / pe
        return [_crossing(ts, snr[b]) for b in range(len(masks))]

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as pool:
            per_seed = np.array(list(pool.map(one, seeds)))
    else:
        per_seed = np.array([one(s) for s in seeds])
    predicted = np.sqrt(band_S) / (np.sqrt(band_S) + math.sqrt(model.c_eps))
    return CrystallizationReport(tuple(bands), per_seed.mean(axis=0), per_seed.std(axis=0),
                                 predicted, band_S, per_seed)


def _median_time(fn, reps: int) -> float:
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def overhead_benchmark(ctx: PromotionContext, method: MethodSpec, steps: TimestepGrid, reps: int = 20,
                       table: FrequencyTable | None = None, seed: int = 0) -> dict:
    """Median per-step rescaling cost against one dense attention-score pass.

    The score pass is ``Q @ K.T`` in float32 for every token of the target grid.
    """
    if reps < 10:
        raise DomainError(f"need at least 10 repetitions, got {reps}")
    from . import kernels
    from .rope import apply_rotary_grid, grid_positions

    table = build_frequency_table() if table is None else table
    h, w = (int(round(x)) for x in ctx.target_extent)
    n_tokens = h * w
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n_tokens, table.dim)).astype(np.float32)
    k = rng.standard_normal((n_tokens, table.dim)).astype(np.float32)
    ts = steps.loop_times

    def per_step(m):
        def run():
            for t in ts:
                rescale_table(table, ctx, m, t)
        return _median_time(run, reps) / len(ts)

    rescale = per_step(method)
    bounds = (method.schedule.alpha, method.schedule.beta) if method.kind == "sharp" else method.yarn_bounds
    static = per_step(MethodSpec("yarn", yarn_bounds=bounds))
    attention = _median_time(lambda: q @ k.T, reps)
    pos = grid_positions(h, w)
    qd = q.astype(np.float64)
    rotary = _median_time(lambda: apply_rotary_grid(qd, pos, table), max(10, reps // 4))
    return {
        "backend": kernels.BACKEND,
        "method": method.kind,
        "tokens": n_tokens,
        "dim": table.dim,
        "steps": steps.n_steps,
        "reps": reps,
        "rescale_median_s": rescale,
        "static_rescale_median_s": static,
        "attention_median_s": attention,
        "rotary_apply_median_s": rotary,
        "ratio": rescale / attention,
        "dynamic_vs_static": rescale / static,
    }
