"""Exit criteria, one test (or parametrized family) per criterion.

A PASS/FAIL line per check is printed at the end of the session by the hook
in ``conftest.py``. Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math

import numpy as np
import pytest

from sharp.cli import main
from sharp.extrapolation import (
    MethodSpec,
    PromotionContext,
    ScheduleSpec,
    blend_weights,
    kappa,
    ramp,
    ratios,
    rescale_table,
)
from sharp.rope import build_frequency_table
from sharp.simulate import (
    TimestepGrid,
    crystallization_probe,
    forward_mixture,
    overhead_benchmark,
    synth_field,
)
from sharp.spectral import (
    SpectrumModel,
    corpus_compare,
    critical_time,
    radial_psd,
    signal_ratio,
)

# ---------------------------------------------------------------- C1


C1_POINTS = [(0.0, 0.0), (0.25, 1 / 9), (0.5, 1 / 4), (0.75, 1 / 2), (1.0, 1.0)]


@pytest.mark.parametrize("t,expected", C1_POINTS, ids=[f"t={t}" for t, _ in C1_POINTS])
def test_c1_kappa_hand_values(t, expected):
    """C1 rational schedule (alpha_s=3) at the listed hand-computed points, 1e-12."""
    assert abs(kappa(ScheduleSpec("rational", 3.0), t) - expected) <= 1e-12


def test_c1_alpha_s_one_is_linear():
    """C1 alpha_s = 1 reproduces t exactly."""
    s = ScheduleSpec("rational", 1.0)
    ts = np.random.default_rng(0).uniform(0, 1, 2000).tolist() + [0.0, 0.5, 1.0]
    assert all(kappa(s, t) == t for t in ts)


# ---------------------------------------------------------------- C2


def _random_config(g):
    alpha_s = g.uniform(1, 8)
    alpha = g.uniform(0, 4)
    beta = alpha + g.uniform(0.5, 64)
    s = g.uniform(1, 6)
    dims = [2 * int(g.integers(2, 65)), 2 * int(g.integers(2, 65))]
    train = int(g.integers(8, 129))
    return alpha_s, alpha, beta, s, dims, train


def test_c2_endpoint_equivalence():
    """C2 sharp(t=1) == yarn to 1e-12; sharp(t=1e-9) == direct above the band."""
    g = np.random.default_rng(2024)
    for _ in range(100):
        alpha_s, alpha, beta, s, dims, train = _random_config(g)
        table = build_frequency_table(dims, 10000)
        ctx = PromotionContext((train, train), (train * s, train * s))
        sharp = MethodSpec.sharp(alpha_s, alpha, beta)
        a = rescale_table(table, ctx, sharp, 1.0).flat()
        b = rescale_table(table, ctx, MethodSpec.yarn(alpha, beta)).flat()
        assert np.max(np.abs(a - b)) <= 1e-12
        t = 1e-9
        hi = beta * kappa(sharp.schedule, t)
        late = rescale_table(table, ctx, sharp, t)
        for ax in range(2):
            sel = ratios(table, ctx, ax) > hi
            assert np.max(np.abs(late.thetas[ax][sel] - table.thetas[ax][sel]), initial=0) <= 1e-12


# ---------------------------------------------------------------- C3


def test_c3_sandwich_and_monotonicity():
    """C3 theta/s <= h <= theta, ramp monotone in r, kappa monotone in t over 1e4 cases each."""
    g = np.random.default_rng(33)
    n_cases = 10_000
    for _ in range(n_cases):
        alpha_s, alpha, beta, s, dims, train = _random_config(g)
        table = build_frequency_table([dims[0]], 10000)
        ctx = PromotionContext((train,), (train * s,))
        t = float(g.uniform(0, 1))
        method = MethodSpec.sharp(alpha_s, alpha, beta) if g.uniform() < 0.5 else MethodSpec.yarn(alpha, beta)
        h = rescale_table(table, ctx, method, t).thetas[0]
        th = table.thetas[0]
        assert np.all(h <= th + 1e-12) and np.all(h >= th / s - 1e-12)
    sched = [ScheduleSpec("rational", a) for a in g.uniform(1, 10, 100)]
    for i in range(n_cases):
        r1, r2 = np.sort(g.uniform(0, 80, 2))
        t1, t2 = np.sort(g.uniform(0, 1, 2))
        sc = sched[i % 100]
        lo, hi = sc.alpha * kappa(sc, t2), sc.beta * kappa(sc, t2)
        assert ramp(r1, lo, hi) <= ramp(r2, lo, hi)
        assert kappa(sc, t1) <= kappa(sc, t2)


# ---------------------------------------------------------------- C4


def _quantities(table, ctx, t):
    m = MethodSpec.sharp()
    return {
        "kappa": np.array([kappa(m.schedule, t)]),
        "s": np.array(ctx.s_per_axis),
        "r": np.concatenate([ratios(table, ctx, a) for a in range(table.n_axes)]),
        "gamma": np.concatenate(blend_weights(table, ctx, m, t)),
        "h": rescale_table(table, ctx, m, t).flat(),
    }


@pytest.mark.parametrize("quantity", ["kappa", "s", "r", "gamma", "h"])
def test_c4_joint_doubling(quantity):
    """C4 doubling train and target extents jointly leaves each quantity unchanged (1e-12)."""
    table = build_frequency_table([32, 32], 10000)
    worst = 0.0
    for train, s in [(64, 2.0), (64, 1.5), (48, 3.0), (32, 2.5)]:
        ctx1 = PromotionContext((train, train), (train * s, train * s))
        ctx2 = PromotionContext((2 * train, 2 * train), (2 * train * s, 2 * train * s))
        for t in (1.0, 0.7, 0.3, 0.05):
            a = _quantities(table, ctx1, t)[quantity]
            b = _quantities(table, ctx2, t)[quantity]
            worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst <= 1e-12, f"max |change| = {worst:.3g}"


def test_c4_rectangular_equals_square_per_axis():
    """C4 rectangular promotion per axis equals square promotion with that axis's s."""
    table = build_frequency_table([32, 32], 10000)
    for (h, w), t in [((128, 96), 1.0), ((192, 128), 0.4), ((160, 80), 0.05)]:
        rect = PromotionContext((64, 64), (h, w))
        for m in (MethodSpec.sharp(), MethodSpec.yarn(), MethodSpec("pi"), MethodSpec("ntk")):
            out = rescale_table(table, rect, m, t)
            for ax, L in enumerate((h, w)):
                sq = rescale_table(table, PromotionContext((64, 64), (L, L)), m, t)
                assert np.max(np.abs(out.thetas[ax] - sq.thetas[ax])) <= 1e-12


# ---------------------------------------------------------------- C5


def test_c5_critical_time_consistency():
    """C5 rho(f, t_c(f)) = 1 within 1e-10 for 100 random models."""
    g = np.random.default_rng(5)
    for _ in range(100):
        m = SpectrumModel.power_law(g.uniform(1e-3, 10), g.uniform(0, 3), g.uniform(0.05, 5))
        f = g.uniform(0.005, 0.5)
        assert abs(signal_ratio(m, f, critical_time(m, f)) - 1) <= 1e-10


def test_c5_monte_carlo_psd_law():
    """C5 empirical radial PSD of forward mixtures matches the closed form within 10% per band (200 seeds, 128^2)."""
    n = 128
    model = SpectrumModel(lambda f: 5.0 / (1 + (np.asarray(f) / 0.05) ** 2) + 0.2)
    k = np.arange(1, n // 2 + 1)
    bands = [(2, 8), (8, 16), (16, 32), (32, 64)]
    for t in (0.2, 0.5, 0.8):
        acc = 0.0
        for seed in range(200):
            x0 = synth_field(model, (n, n), seed)
            eps = np.random.default_rng([seed, 7]).standard_normal((n, n))
            acc = acc + radial_psd(forward_mixture(x0, eps, t).grid, resize_to=n).power[: n // 2]
        emp = acc / 200
        theory = (1 - t) ** 2 * model.S(k / n) + t ** 2 * model.c_eps
        for lo, hi in bands:
            sel = (k > lo) & (k <= hi)
            rel = abs(emp[sel].mean() / theory[sel].mean() - 1)
            assert rel < 0.10, (t, lo, hi, rel)


# ---------------------------------------------------------------- C6


def test_c6_white_noise_flat():
    """C6 white noise gives max/min < 1.5 over bins 4..200 (50 seeds)."""
    acc = 0.0
    for seed in range(50):
        acc = acc + radial_psd(np.random.default_rng(seed).standard_normal((512, 512))).power
    band = (acc / 50)[3:200]
    assert band.max() / band.min() < 1.5


@pytest.mark.parametrize("k", [3, 24, 90, 200])
def test_c6_sinusoid_peak(k):
    """C6 a planted sinusoid peaks within one bin of its frequency."""
    x = np.arange(512)
    img = 0.5 + 0.4 * np.sin(2 * np.pi * k * x / 512 + 0.3)[None, :] * np.ones((512, 1))
    sp = radial_psd(img)
    assert abs(sp.bin_centers[np.argmax(sp.power)] - k) <= 1


def _textured(seed, n=512):
    g = np.random.default_rng(seed)
    yy, xx = np.indices((n, n))
    cell = int(g.integers(2, 6))
    board = ((yy // cell + xx // cell) % 2).astype(float)
    smooth = np.sin(2 * np.pi * (yy + 2 * xx) / n)
    return np.clip(0.5 + 0.2 * smooth + 0.2 * (board - 0.5) + 0.03 * g.standard_normal((n, n)), 0, 1)


def _smooth(seed, n=512):
    g = np.random.default_rng(seed)
    yy, xx = np.indices((n, n)) / n
    a, b, c = g.uniform(0.5, 2, 3)
    img = 0.5 + 0.2 * np.sin(2 * np.pi * (a * xx + b * yy)) + 0.1 * np.cos(2 * np.pi * c * yy)
    return np.clip(img + 0.003 * g.standard_normal((n, n)), 0, 1)


def test_c6_texture_corpus_has_more_high_band_energy():
    """C6 a high-texture corpus carries more normalized mid/high-band energy than a smooth one."""
    cmp = corpus_compare([_smooth(s) for s in range(4)], [_textured(s) for s in range(4)])
    assert cmp.bands["high"]["b"] > cmp.bands["high"]["a"]
    assert cmp.bands["mid"]["b"] > cmp.bands["mid"]["a"]


# ---------------------------------------------------------------- C7


def test_c7_crystallization_ordering():
    """C7 per-band SNR crossings strictly decrease with frequency and match t_c within 0.05."""
    model = SpectrumModel.bands([1 / 16, 1 / 8, 1 / 4, 1 / 2], [40.0, 6.0, 1.0, 0.15])
    rep = crystallization_probe(model, TimestepGrid.uniform(50), (64, 64), range(24))
    assert np.all(np.diff(rep.crossing_mean) < 0)
    assert np.max(np.abs(rep.crossing_mean - rep.predicted)) <= 0.05


def test_c7_crystallization_smooth_spectrum():
    """C7 same check with a smooth power-law spectrum (within-band variation)."""
    rep = crystallization_probe(SpectrumModel.power_law(0.02, 2.0), TimestepGrid.uniform(50), (64, 64), range(24))
    assert np.all(np.diff(rep.crossing_mean) < 0)
    assert np.max(np.abs(rep.crossing_mean - rep.predicted)) <= 0.05


# ---------------------------------------------------------------- C8


def test_c8_rescale_overhead():
    """C8 per-step rescaling costs < 5% of a dense score pass at 64x64 tokens."""
    rep = overhead_benchmark(PromotionContext((32, 32), (64, 64)), MethodSpec.sharp(), TimestepGrid.uniform(50),
                             reps=20, table=build_frequency_table([32, 32]))
    assert rep["tokens"] == 4096
    assert rep["ratio"] < 0.05, rep


# ---------------------------------------------------------------- C9


C9_RUNS = [
    ["schedule", "--steps", "50"],
    ["freqs", "--method", "sharp", "--t", "0.4", "--target-extent", "128x96"],
    ["heatmap", "--nf", "32", "--nt", "25"],
    ["simulate", "--steps", "20", "--train-extent", "16", "--target-extent", "32", "--seed", "17"],
    ["probe", "--train-extent", "12", "--target-extent", "24", "--probes", "16", "--seed", "3"],
]


def test_c9_determinism(tmp_path):
    """C9 two identical runs give byte-identical CSV/JSON/RAWF outputs."""
    for i, argv in enumerate(C9_RUNS):
        a, b = tmp_path / f"{i}a", tmp_path / f"{i}b"
        assert main([*argv, "--out", str(a)]) == 0
        assert main([*argv, "--out", str(b)]) == 0
        outputs = json.loads((a / "manifest.json").read_text())["outputs"]
        assert outputs
        for name in outputs:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
