"""Axial rotary position embeddings over a 2-D token grid.

A vector of length ``sum(axis_dims)`` is split into one contiguous segment per
spatial axis. Inside a segment, feature pairs ``(v[2j], v[2j+1])`` are rotated
by ``theta_j * p`` where ``p`` is the token coordinate along that axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, InvalidBaseError, InvalidDimensionError

DEFAULT_AXIS_DIMS = (32, 32)
DEFAULT_BASE = 10000.0


class GridPosition(NamedTuple):
    """Integer token coordinate; ``extent`` (height, width) is optional."""

    row: int
    col: int
    extent: tuple[int, int] | None = None

    def coords(self) -> tuple[int, int]:
        if self.extent is not None:
            h, w = self.extent
            if not (0 <= self.row < h and 0 <= self.col < w):
                raise DomainError(f"position ({self.row}, {self.col}) outside extent {self.extent}")
        return (self.row, self.col)


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Per-axis rotary frequencies.

    ``thetas[i][j]`` is the angular frequency (radians per token) of pair ``j``
    on axis ``i``. Tables are immutable; rescaling produces a new table.
    """

    axis_dims: tuple[int, ...]
    base: float
    thetas: tuple[np.ndarray, ...]
    wavelengths: tuple[np.ndarray, ...] = field(init=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.axis_dims)
        thetas = tuple(_readonly(t) for t in self.thetas)
        if len(dims) != len(thetas):
            raise InvalidDimensionError("one theta array per axis required")
        for d, th in zip(dims, thetas):
            if d < 2 or d % 2:
                raise InvalidDimensionError(f"axis dim must be even and >= 2, got {d}")
            if th.shape != (d // 2,):
                raise InvalidDimensionError(f"axis dim {d} needs {d // 2} frequencies, got {th.shape}")
            if not np.all(np.isfinite(th)) or np.any(th <= 0):
                raise DomainError("frequencies must be positive and finite")
            if np.any(np.diff(th) >= 0):
                raise DomainError("frequencies must be strictly decreasing within an axis")
        object.__setattr__(self, "axis_dims", dims)
        object.__setattr__(self, "base", float(self.base))
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "wavelengths", tuple(_readonly(2 * math.pi / t) for t in thetas))

    @property
    def n_axes(self) -> int:
        return len(self.axis_dims)

    @property
    def dim(self) -> int:
        return sum(self.axis_dims)

    def flat(self) -> np.ndarray:
        """All frequencies concatenated in vector-layout order."""
        return np.concatenate(self.thetas)

    def with_thetas(self, thetas: Sequence[np.ndarray], base: float | None = None) -> FrequencyTable:
        return FrequencyTable(self.axis_dims, self.base if base is None else base, tuple(thetas))

    def same_values(self, other: FrequencyTable) -> bool:
        return self.axis_dims == other.axis_dims and np.array_equal(self.flat(), other.flat())


def axis_thetas(dim: int, base: float) -> np.ndarray:
    """``base ** (-2j / dim)`` for ``j = 0 .. dim/2 - 1``."""
    return base ** (-np.arange(0, dim, 2, dtype=np.float64) / dim)


def build_frequency_table(axis_dims: Sequence[int] = DEFAULT_AXIS_DIMS, base: float = DEFAULT_BASE) -> FrequencyTable:
    dims = tuple(axis_dims)
    if not dims:
        raise InvalidDimensionError("at least one axis is required")
    for d in dims:
        if int(d) != d or d < 2 or d % 2:
            raise InvalidDimensionError(f"axis dim must be even and >= 2, got {d}")
    if not base > 1:
        raise InvalidBaseError(f"base must exceed 1, got {base}")
    return FrequencyTable(dims, base, tuple(axis_thetas(int(d), base) for d in dims))


def _as_coords(pos, n_axes: int) -> np.ndarray:
    if isinstance(pos, GridPosition):
        pos = pos.coords()
    coords = np.asarray(pos, dtype=np.float64).reshape(-1)
    if coords.shape[0] != n_axes:
        raise InvalidDimensionError(f"expected {n_axes} coordinates, got {coords.shape[0]}")
    if np.any(coords != np.round(coords)):
        raise DomainError(f"positions must be integer token indices, got {tuple(coords)}")
    if np.any(coords < 0):
        raise DomainError("positions must be non-negative")
    return coords


def _angles(coords: np.ndarray, table: FrequencyTable) -> np.ndarray:
    """(n, dim/2) rotation angles for an (n, n_axes) array of coordinates."""
    cols = [np.outer(coords[:, i], th) for i, th in enumerate(table.thetas)]
    return np.ascontiguousarray(np.concatenate(cols, axis=1))


def rotate(values, angles) -> np.ndarray:
    """Rotate consecutive feature pairs of ``values`` by ``angles`` (radians).

    Works on a single vector or a batch of row vectors. Unlike
    :func:`apply_rotary` the angles are arbitrary reals.
    """
    v = np.asarray(values, dtype=np.float64)
    a = np.asarray(angles, dtype=np.float64)
    single = v.ndim == 1
    v2 = np.ascontiguousarray(np.atleast_2d(v))
    a2 = np.ascontiguousarray(np.broadcast_to(np.atleast_2d(a), (v2.shape[0], a.shape[-1])))
    if v2.shape[1] != 2 * a2.shape[1]:
        raise InvalidDimensionError(f"{v2.shape[1]} features cannot take {a2.shape[1]} pair angles")
    out = kernels.rotate_pairs(v2, a2)
    return out[0] if single else out


def apply_rotary(vector, pos, table: FrequencyTable) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (table.dim,):
        raise InvalidDimensionError(f"vector length {v.shape} does not match table dim {table.dim}")
    coords = _as_coords(pos, table.n_axes)
    return rotate(v, _angles(coords[None, :], table)[0])


def apply_rotary_grid(values, positions, table: FrequencyTable) -> np.ndarray:
    """Batched :func:`apply_rotary`: ``values`` is (n, dim), ``positions`` (n, n_axes)."""
    v = np.ascontiguousarray(values, dtype=np.float64)
    p = np.asarray(positions, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != table.dim:
        raise InvalidDimensionError(f"values must be (n, {table.dim}), got {v.shape}")
    if p.shape != (v.shape[0], table.n_axes):
        raise InvalidDimensionError(f"positions must be ({v.shape[0]}, {table.n_axes}), got {p.shape}")
    if np.any(p != np.round(p)) or np.any(p < 0):
        raise DomainError("positions must be non-negative integers")
    return kernels.rotate_pairs(v, _angles(p, table))


def grid_positions(height: int, width: int) -> np.ndarray:
    """Row-major (height*width, 2) array of token coordinates."""
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1).astype(np.float64)


def relative_score(q, k, pos_q, pos_k, table: FrequencyTable) -> float:
    """Inner product of the rotated query and key."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != k.shape:
        raise InvalidDimensionError(f"query {q.shape} and key {k.shape} differ in shape")
    return float(apply_rotary(q, pos_q, table) @ apply_rotary(k, pos_k, table))
