"""Positional drift of attention scores under frequency rescaling.

Drift is measured on content-free random unit query/key pairs. The
reference is the score surface over in-range offsets ``0 .. L_train - 1`` with
the native table; a method is scored by its surface at the proportionally
stretched offsets ``s * offset`` on the target grid. Softmax rows use the
usual ``1/sqrt(D)`` temperature with vectors at the typical norm ``sqrt(D)``
of unit-variance features.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidDimensionError
from .extrapolation import MethodSpec, PromotionContext, rescale_table
from .rope import FrequencyTable

DEFAULT_PROBE_TIMES = (1.0, 0.75, 0.5, 0.25, 0.0)


def _pair_coefficients(q, k, table: FrequencyTable, axis: int):
    start = sum(table.axis_dims[:axis])
    seg = slice(start, start + table.axis_dims[axis])
    qa, qb = q[seg][0::2], q[seg][1::2]
    ka, kb = k[seg][0::2], k[seg][1::2]
    return np.ascontiguousarray(qa * ka + qb * kb), np.ascontiguousarray(qb * ka - qa * kb)


def _check_pair(q, k, table):
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != (table.dim,) or k.shape != (table.dim,):
        raise InvalidDimensionError(f"q {q.shape} and k {k.shape} must both have length {table.dim}")
    return q, k


def axis_curves(q, k, table: FrequencyTable, offsets: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-axis score contributions at real-valued key offsets (query at 0)."""
    q, k = _check_pair(q, k, table)
    out = []
    for a, off in enumerate(offsets):
        cc, cs = _pair_coefficients(q, k, table, a)
        out.append(kernels.pair_scores(cc, cs, np.ascontiguousarray(table.thetas[a]),
                                       np.ascontiguousarray(off, dtype=np.float64)))
    return out


def score_curve(q, k, table: FrequencyTable, max_offset: int, axis: int = 0) -> np.ndarray:
    """Relative scores for key offsets ``0 .. max_offset`` along ``axis``."""
    if max_offset < 1:
        raise ValueError(f"max_offset must be >= 1, got {max_offset}")
    offsets = [np.zeros(1) for _ in range(table.n_axes)]
    offsets[axis] = np.arange(max_offset + 1, dtype=np.float64)
    curves = axis_curves(q, k, table, offsets)
    return sum(c if i == axis else c[0] for i, c in enumerate(curves))


def score_surface(q, k, table: FrequencyTable, offsets: Sequence[np.ndarray]) -> np.ndarray:
    """Scores over the outer product of per-axis offsets (2-D tables)."""
    curves = axis_curves(q, k, table, offsets)
    surf = curves[0]
    for c in curves[1:]:
        surf = np.add.outer(surf, c)
    return surf


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True)
class ProbeConfig:
    table: FrequencyTable
    ctx: PromotionContext
    methods: tuple[MethodSpec, ...]
    n_probes: int = 64
    seed: int = 0
    timesteps: tuple[float, ...] = DEFAULT_PROBE_TIMES

    def __post_init__(self):
        if self.n_probes < 1:
            raise ValueError("need at least one probe vector")
        if isinstance(self.methods, MethodSpec):
            object.__setattr__(self, "methods", (self.methods,))


@dataclass(frozen=True)
class ProbeEntry:
    method: str
    s: tuple[float, ...]
    t: float | None
    max_dev: float
    mean_tv: float

    def as_json(self) -> dict:
        d = asdict(self)
        d["s"] = list(self.s)
        return d


@dataclass
class ProbeReport:
    entries: list[ProbeEntry] = field(default_factory=list)

    def get(self, method: str, t: float | None = None) -> ProbeEntry:
        for e in self.entries:
            if e.method == method and (t is None or e.t == t):
                return e
        raise KeyError((method, t))

    def as_json(self) -> list[dict]:
        return [e.as_json() for e in self.entries]


def _probe_vectors(n: int, dim: int, seed: int):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((2 * n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v[:n], v[n:]


def ood_drift(config: ProbeConfig) -> ProbeReport:
    """Max score deviation and mean softmax TV distance per method and timestep."""
    table, ctx = config.table, config.ctx
    if len(ctx.train_extent) != table.n_axes:
        raise InvalidDimensionError("context and table disagree on the number of axes")
    s = ctx.s_per_axis
    ref_off = [np.arange(int(round(L)), dtype=np.float64) for L in ctx.train_extent]
    tgt_off = [o * sa for o, sa in zip(ref_off, s)]
    qs, ks = _probe_vectors(config.n_probes, table.dim, config.seed)
    temp = math.sqrt(table.dim)  # (sqrt(D) q) . (sqrt(D) k) / sqrt(D)

    refs = []
    for q, k in zip(qs, ks):
        surf = score_surface(q, k, table, ref_off)
        refs.append((surf, _softmax(temp * surf.ravel())))

    jobs = []
    for m in config.methods:
        times = config.timesteps if m.kind == "sharp" else (None,)
        for t in times:
            jobs.append((m, t))

    report = ProbeReport()
    for m, t in jobs:
        scaled = rescale_table(table, ctx, m, t)
        devs, tvs = [], []
        for (q, k), (ref_surf, ref_p) in zip(zip(qs, ks), refs):
            surf = score_surface(q, k, scaled, tgt_off)
            devs.append(float(np.max(np.abs(surf - ref_surf))))
            tvs.append(0.5 * float(np.abs(_softmax(temp * surf.ravel()) - ref_p).sum()))
        report.entries.append(ProbeEntry(m.kind, tuple(s), t, max(devs), float(np.mean(tvs))))
    return report
