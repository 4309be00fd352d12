"""Spectral model of flow-matching corruption and the radial PSD pipeline.

Frequencies in the model are normalized (cycles per pixel, ``0 < f <= 0.5``).
Empirical spectra are indexed by integer radius in cycles per image.
Periodograms are normalized by the window energy, so unit-variance white
noise has expected power 1 in every bin; under that convention the noise
constant of a standard normal latent is ``C_eps = 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DataError, DomainError

log = logging.getLogger(__name__)

F_MAX = 0.5
DEFAULT_RESIZE = 512
DEFAULT_BASELINE = (2, 10)
DEFAULT_BANDS = {"low": (2, 16), "mid": (16, 96), "high": (96, 240)}


class SpectrumModel:
    """Clean-data PSD ``S(f)`` and white-noise level ``C_eps``.

    ``S`` is either a callable on normalized frequency or a tabulated
    ``(freqs, values)`` pair (linearly interpolated). Positivity and
    non-increase are checked on a grid at construction unless
    ``check=False``.
    """

    def __init__(self, S, c_eps: float = 1.0, check: bool = True, name: str = "custom"):
        if not c_eps > 0 or not math.isfinite(c_eps):
            raise DomainError(f"noise constant must be positive, got {c_eps}")
        self.c_eps = float(c_eps)
        self.name = name
        if callable(S):
            self._fn = S
        else:
            fx, sx = (np.asarray(a, dtype=np.float64) for a in S)
            if fx.ndim != 1 or fx.shape != sx.shape or fx.size < 1 or np.any(np.diff(fx) <= 0):
                raise DomainError("tabulated spectrum needs matching, strictly increasing frequencies")
            self._fn = lambda f: np.interp(f, fx, sx)
        if check:
            grid = np.linspace(F_MAX / 256, F_MAX, 256)
            vals = np.asarray(self._fn(grid), dtype=np.float64)
            if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
                raise DomainError("S(f) must be positive on (0, 0.5]")
            if np.any(np.diff(vals) > 1e-12 * np.abs(vals[:-1])):
                raise DomainError("S(f) must be non-increasing in f")

    def S(self, f):
        f_arr = np.asarray(f, dtype=np.float64)
        if np.any(f_arr <= 0) or np.any(f_arr > F_MAX):
            raise DomainError(f"frequency outside (0, 0.5]: {f}")
        out = np.asarray(self._fn(f_arr), dtype=np.float64)
        return float(out) if out.ndim == 0 else out

    def S_unchecked(self, f):
        return np.asarray(self._fn(np.asarray(f, dtype=np.float64)), dtype=np.float64)

    @classmethod
    def constant(cls, value: float, c_eps: float = 1.0):
        return cls(lambda f: np.full(np.shape(f), float(value)), c_eps, name=f"const:{value}")

    @classmethod
    def power_law(cls, amplitude: float, exponent: float, c_eps: float = 1.0):
        """``amplitude * f ** -exponent``."""
        return cls(lambda f: amplitude * np.asarray(f, dtype=np.float64) ** (-exponent), c_eps,
                   name=f"powerlaw:{amplitude}:{exponent}")

    @classmethod
    def bands(cls, edges: Sequence[float], values: Sequence[float], c_eps: float = 1.0):
        """Piecewise-constant S; ``values[i]`` holds up to and including ``edges[i]``."""
        edges = np.asarray(edges, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if edges.shape != values.shape or np.any(np.diff(edges) <= 0):
            raise DomainError("band edges must be strictly increasing and match values")

        def fn(f):
            idx = np.searchsorted(edges, np.asarray(f, dtype=np.float64), side="left")
            return values[np.minimum(idx, len(values) - 1)]

        tag = ",".join(f"{e:g}:{v:g}" for e, v in zip(edges, values))
        return cls(fn, c_eps, name=f"bands:{tag}")


def parse_spectrum(spec: str, c_eps: float = 1.0) -> SpectrumModel:
    """``const:V``, ``powerlaw:A:EXP`` or ``bands:F1:S1,F2:S2,...``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "const":
            return SpectrumModel.constant(float(rest), c_eps)
        if kind == "powerlaw":
            a, e = rest.split(":")
            return SpectrumModel.power_law(float(a), float(e), c_eps)
        if kind == "bands":
            pairs = [p.split(":") for p in rest.split(",") if p]
            return SpectrumModel.bands([float(a) for a, _ in pairs], [float(b) for _, b in pairs], c_eps)
    except (ValueError, TypeError) as exc:
        raise DomainError(f"cannot parse spectrum {spec!r}: {exc}") from exc
    raise DomainError(f"unknown spectrum kind {kind!r}; expected const, powerlaw or bands")


def _check_t(t, open_left=False):
    t = float(t)
    lo_ok = t > 0 if open_left else t >= 0
    if not (lo_ok and t <= 1):
        raise DomainError(f"timestep outside {'(0' if open_left else '[0'}, 1]: {t}")
    return t


def psd_evolution(model: SpectrumModel, f, t):
    """Expected power at ``f`` of ``(1-t) x0 + t eps``."""
    t = _check_t(t)
    return (1 - t) ** 2 * model.S(f) + t ** 2 * model.c_eps


def signal_ratio(model: SpectrumModel, f, t):
    """Signal-to-noise power ratio; ``math.inf`` at ``t = 0``."""
    t = _check_t(t)
    sig = (1 - t) ** 2 * model.S(f)
    if t == 0:
        return np.full(np.shape(sig), math.inf) if np.ndim(sig) else math.inf
    return sig / (t ** 2 * model.c_eps)


def score_from_ratio(rho):
    rho = np.asarray(rho, dtype=np.float64)
    out = np.where(np.isinf(rho), 1.0, rho / (1.0 + np.where(np.isinf(rho), 0.0, rho)))
    return float(out) if out.ndim == 0 else out


def ratio_from_score(p):
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = np.where(p >= 1.0, math.inf, p / (1.0 - p))
    return float(out) if out.ndim == 0 else out


def recovery_score(model: SpectrumModel, f, t):
    """Bounded score ``rho / (1 + rho)`` in [0, 1]."""
    return score_from_ratio(signal_ratio(model, f, t))


def critical_time(model: SpectrumModel, f):
    """Time at which signal and noise power are equal."""
    rs = np.sqrt(model.S(f))
    out = rs / (rs + math.sqrt(model.c_eps))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# empirical radial PSD


@dataclass(frozen=True)
class ImageGrid:
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or min(px.shape) < 8:
            raise DataError(f"image must be 2-D with both sides >= 8, got {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0 or px.max() > 1:
            raise DataError("grayscale pixels must be finite and lie in [0, 1]")
        object.__setattr__(self, "pixels", px)


@dataclass(frozen=True)
class RadialSpectrum:
    bin_centers: np.ndarray
    power: np.ndarray
    counts: np.ndarray
    normalization: str = "raw"
    degenerate: bool = False
    window_energy: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not (len(self.bin_centers) == len(self.power) == len(self.counts)):
            raise DataError("spectrum arrays differ in length")

    def band_mean(self, lo: float, hi: float) -> float:
        """Mean power over bins with ``lo < k <= hi``."""
        m = (self.bin_centers > lo) & (self.bin_centers <= hi)
        if not m.any():
            raise DomainError(f"band ({lo}, {hi}] selects no bins")
        return float(self.power[m].mean())


def hanning2d(h: int, w: int) -> np.ndarray:
    """Separable symmetric Hann window."""
    return np.outer(np.hanning(h), np.hanning(w))


def resize_bilinear(img: np.ndarray, size: int) -> np.ndarray:
    from PIL import Image

    im = Image.fromarray(np.asarray(img, dtype=np.float32), mode="F")
    return np.asarray(im.resize((size, size), Image.BILINEAR), dtype=np.float64)


def radial_psd(image, resize_to: int | None = DEFAULT_RESIZE) -> RadialSpectrum:
    """Radially averaged power spectrum with the DC bin dropped.

    Steps: optional bilinear resize to ``resize_to`` squared, mean removal,
    separable Hann window, centered FFT, squared magnitude over window energy,
    averaging over integer-radius annuli out to the grid corner. Bins beyond
    the Nyquist radius ``min(H, W) / 2`` are incomplete annuli.
    """
    px = image.pixels if isinstance(image, ImageGrid) else np.asarray(image, dtype=np.float64)
    if px.ndim != 2:
        raise DataError(f"expected a 2-D grid, got shape {px.shape}")
    if resize_to is not None and px.shape != (resize_to, resize_to):
        px = resize_bilinear(px, resize_to)
    h, w = px.shape
    nbins = int(math.floor(math.hypot(h // 2, w // 2) + 0.5)) + 1
    centers = np.arange(1, nbins, dtype=np.float64)
    win = hanning2d(h, w)
    wsum = float((win ** 2).sum())
    if np.ptp(px) == 0:
        log.warning("constant image: spectrum is identically zero")
        zeros = np.zeros(nbins - 1)
        return RadialSpectrum(centers, zeros, np.ones(nbins - 1, dtype=np.int64), degenerate=True, window_energy=0.0)
    x = (px - px.mean()) * win
    F = np.fft.fftshift(np.fft.fft2(x))
    power2d = np.ascontiguousarray((F.real ** 2 + F.imag ** 2) / wsum)
    sums, counts = kernels.radial_sums(power2d, float(h // 2), float(w // 2), nbins)
    mean = sums[1:] / np.maximum(counts[1:], 1)
    return RadialSpectrum(centers, mean, counts[1:], window_energy=float((x ** 2).sum()))


def normalize_low_frequency(spec: RadialSpectrum, baseline_band: tuple[float, float] = DEFAULT_BASELINE) -> RadialSpectrum:
    """Divide by the mean power over bins ``lo..hi`` (inclusive)."""
    lo, hi = baseline_band
    m = (spec.bin_centers >= lo) & (spec.bin_centers <= hi)
    if not m.any():
        raise DomainError(f"baseline band {baseline_band} selects no bins")
    base = float(spec.power[m].mean())
    if not base > 0:
        raise DataError("baseline power is zero; cannot normalize")
    return replace(spec, power=spec.power / base, normalization="low-frequency-normalized")


@dataclass
class CorpusComparison:
    mean_a: RadialSpectrum
    mean_b: RadialSpectrum
    raw_a: RadialSpectrum
    raw_b: RadialSpectrum
    bands: dict[str, dict[str, float]]
    n_a: int
    n_b: int


def mean_spectrum(spectra: Sequence[RadialSpectrum]) -> RadialSpectrum:
    if not spectra:
        raise DataError("no spectra to average")
    power = np.zeros_like(spectra[0].power)
    for sp in spectra:  # fixed order
        power = power + sp.power
    return replace(spectra[0], power=power / len(spectra), degenerate=False)


def corpus_spectra(corpus: Iterable, resize_to=DEFAULT_RESIZE, baseline_band=DEFAULT_BASELINE,
                   jobs: int = 1) -> list[tuple[RadialSpectrum, RadialSpectrum]]:
    """(raw, normalized) spectra of every readable item; unreadable items are skipped.

    Items may be arrays, :class:`ImageGrid` or file paths.
    """
    from .io import read_grid

    def one(item):
        try:
            grid = read_grid(item) if not isinstance(item, (np.ndarray, ImageGrid)) else item
            sp = radial_psd(grid, resize_to)
            if sp.degenerate:
                log.warning("skipping constant image %s", item if not isinstance(item, np.ndarray) else "<array>")
                return None
            return sp, normalize_low_frequency(sp, baseline_band)
        except (DataError, OSError, ValueError) as exc:
            log.warning("skipping unreadable image %s: %s", item if not isinstance(item, np.ndarray) else "<array>", exc)
            return None

    items = list(corpus)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(i) for i in items]
    return [r for r in results if r is not None]


def band_summary(spec: RadialSpectrum, bands=None) -> dict[str, float]:
    bands = DEFAULT_BANDS if bands is None else bands
    return {name: spec.band_mean(lo, hi) for name, (lo, hi) in bands.items()}


def corpus_compare(corpus_a, corpus_b, resize_to=DEFAULT_RESIZE, baseline_band=DEFAULT_BASELINE,
                   bands=None, jobs: int = 1) -> CorpusComparison:
    """Mean normalized spectra of two corpora and their band energies.

    ``bands[name]["ratio"]`` is corpus B's band mean over corpus A's.
    """
    sa = corpus_spectra(corpus_a, resize_to, baseline_band, jobs)
    sb = corpus_spectra(corpus_b, resize_to, baseline_band, jobs)
    if not sa or not sb:
        raise DataError("a corpus is empty after skipping unreadable images")
    ma = mean_spectrum([n for _, n in sa])
    mb = mean_spectrum([n for _, n in sb])
    ba, bb = band_summary(ma, bands), band_summary(mb, bands)
    summary = {k: {"a": ba[k], "b": bb[k], "ratio": bb[k] / ba[k]} for k in ba}
    return CorpusComparison(ma, mb, mean_spectrum([r for r, _ in sa]), mean_spectrum([r for r, _ in sb]),
                            summary, len(sa), len(sb))


def radial_frequency_grid(h: int, w: int) -> np.ndarray:
    """|f| in cycles per pixel on the unshifted FFT grid."""
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    return np.sqrt(fy ** 2 + fx ** 2)
