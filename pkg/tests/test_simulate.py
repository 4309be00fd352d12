import numpy as np
import pytest

from sharp.errors import DomainError, InvalidDimensionError, NonFiniteError
from sharp.extrapolation import MethodSpec, PromotionContext, rescale_table
from sharp.rope import build_frequency_table
from sharp.simulate import (
    LatentField,
    SpectralOracleDenoiser,
    TimestepGrid,
    crystallization_probe,
    forward_mixture,
    overhead_benchmark,
    run_inference,
    synth_field,
)
from sharp.spectral import SpectrumModel, radial_psd

CTX = PromotionContext((16, 16), (32, 32))


def test_timestep_grid():
    g = TimestepGrid.uniform(50)
    assert g.values[0] == 1.0 and g.values[-1] == 0.0 and g.n_steps == 50
    with pytest.raises(DomainError):
        TimestepGrid((1.0, 0.5, 0.5, 0.0))
    with pytest.raises(DomainError):
        TimestepGrid((0.9, 0.0))
    with pytest.raises(DomainError):
        TimestepGrid.uniform(0)


def test_forward_mixture_values():
    x0, eps = np.full((4, 4), 4.0), np.zeros((4, 4))
    np.testing.assert_array_equal(forward_mixture(x0, eps, 0.0).grid, x0)
    np.testing.assert_array_equal(forward_mixture(x0, eps, 1.0).grid, eps)
    np.testing.assert_allclose(forward_mixture(x0, eps, 0.25).grid, 3.0)
    with pytest.raises(InvalidDimensionError):
        forward_mixture(x0, np.zeros((4, 5)), 0.5)


def test_mixture_variance(rng):
    var0 = 2.5
    for t in (0.2, 0.5, 0.8):
        vals = []
        for s in range(500):
            g = np.random.default_rng(s)
            x0 = np.sqrt(var0) * g.standard_normal((8, 8))
            vals.append(forward_mixture(x0, g.standard_normal((8, 8)), t).grid)
        v = np.var(np.stack(vals), axis=0).mean()
        assert v == pytest.approx((1 - t) ** 2 * var0 + t ** 2, rel=0.05)


def test_synth_deterministic():
    m = SpectrumModel.power_law(0.02, 2)
    a = synth_field(m, (32, 32), 7).grid
    b = synth_field(m, (32, 32), 7).grid
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, synth_field(m, (32, 32), 8).grid)


def test_synth_white_flat():
    acc = 0
    for s in range(50):
        acc = acc + radial_psd(synth_field(1.0, (128, 128), s).grid, resize_to=128).power
    band = (acc / 50)[3:60]
    assert band.max() / band.min() < 1.5


def test_synth_single_annulus():
    k, n = 12, 64
    S = lambda f: (np.round(np.asarray(f) * n) == k).astype(float)
    x = synth_field(S, (n, n), 0).grid
    F = np.abs(np.fft.fftshift(np.fft.fft2(x))) ** 2
    yy, xx = np.indices((n, n))
    ring = np.round(np.hypot(yy - n // 2, xx - n // 2)) == k
    assert F[ring].sum() / F.sum() > 0.999


def test_synth_rejects_nonpositive():
    with pytest.raises(DomainError):
        synth_field(lambda f: -np.ones(np.shape(f)), (16, 16), 0)
    with pytest.raises(DomainError):
        synth_field(0.0, (16, 16), 0)


def test_zero_denoiser_collapses():
    res = run_inference(lambda x, t, tab, c=None: np.zeros_like(x), CTX, MethodSpec.sharp(), TimestepGrid.uniform(50), 3)
    assert np.max(np.abs(res.field.grid)) < 1e-6
    assert len(res.trace) == 50


def test_single_step_exact_oracle():
    x0 = np.random.default_rng(99).standard_normal((32, 32))
    res = run_inference(lambda x, t, tab, c=None: x0, CTX, MethodSpec("pi"), TimestepGrid.uniform(1), 5)
    np.testing.assert_allclose(res.field.grid, x0, atol=1e-14)
    assert len(res.trace) == 1


def test_nonfinite_abort():
    def bad(x, t, tab, c=None):
        return np.full_like(x, np.nan) if t < 0.45 else np.zeros_like(x)

    with pytest.raises(NonFiniteError) as exc:
        run_inference(bad, CTX, MethodSpec.sharp(), TimestepGrid.uniform(10), 0)
    assert exc.value.step == 6  # t = 0.4


def test_inference_deterministic():
    m = SpectrumModel.power_law(0.02, 2)
    o = SpectralOracleDenoiser(m, (32, 32))
    a = run_inference(o, CTX, MethodSpec.sharp(), TimestepGrid.uniform(20), 11)
    b = run_inference(o, CTX, MethodSpec.sharp(), TimestepGrid.uniform(20), 11)
    np.testing.assert_array_equal(a.field.grid, b.field.grid)
    assert [r.kappa for r in a.trace] == [r.kappa for r in b.trace]


def test_trace_tables_follow_schedule():
    seen = []
    table = build_frequency_table()
    run_inference(lambda x, t, tab, c=None: (seen.append(tab), np.zeros_like(x))[1], CTX, MethodSpec.sharp(),
                  TimestepGrid.uniform(5), 0, table=table)
    assert seen[0].same_values(rescale_table(table, CTX, MethodSpec.yarn()))
    assert not seen[-1].same_values(seen[0])


def test_static_method_ignores_t():
    res = run_inference(lambda x, t, tab, c=None: np.zeros_like(x), CTX, MethodSpec("ntk"), TimestepGrid.uniform(5), 0)
    assert all(r.table.same_values(res.trace[0].table) for r in res.trace)


def test_conditioning_passed_through():
    got = []
    run_inference(lambda x, t, tab, c=None: (got.append(c), np.zeros_like(x))[1], CTX, MethodSpec("direct"),
                  TimestepGrid.uniform(2), 0, conditioning="prompt")
    assert got == ["prompt", "prompt"]


def test_oracle_gain_limits():
    o = SpectralOracleDenoiser(SpectrumModel.constant(2.0), (8, 8))
    assert np.all(o.gain(1.0) == 0)
    g0 = o.gain(0.0)
    assert g0[0, 0] == 0 and np.allclose(g0.ravel()[1:], 1.0)


def test_oracle_shape_check():
    o = SpectralOracleDenoiser(SpectrumModel.constant(2.0), (8, 8))
    with pytest.raises(InvalidDimensionError):
        o(np.zeros((8, 9)), 0.5)


def test_crystallization_symmetric_band():
    r = crystallization_probe(SpectrumModel.constant(1.0), TimestepGrid.uniform(50), (64, 64), range(20))
    np.testing.assert_allclose(r.crossing_mean, 0.5, atol=0.05)
    np.testing.assert_allclose(r.predicted, 0.5)


def test_crystallization_power_law_ordering():
    r = crystallization_probe(SpectrumModel.power_law(0.02, 2), TimestepGrid.uniform(50), (64, 64), range(20))
    assert np.all(np.diff(r.crossing_mean) < 0)
    assert np.all(np.diff(r.predicted) < 0)
    np.testing.assert_allclose(r.crossing_mean, r.predicted, atol=0.05)


def test_crystallization_preconditions():
    with pytest.raises(DomainError):
        crystallization_probe(SpectrumModel.constant(1.0), TimestepGrid.uniform(10), (32, 32), range(5))
    with pytest.raises(DomainError):
        SpectrumModel.constant(1.0, c_eps=0.0)


def test_benchmark_small():
    rep = overhead_benchmark(PromotionContext((16, 16), (32, 32)), MethodSpec.sharp(), TimestepGrid.uniform(10), reps=10)
    assert rep["tokens"] == 1024 and rep["ratio"] > 0
    with pytest.raises(DomainError):
        overhead_benchmark(CTX, MethodSpec.sharp(), TimestepGrid.uniform(10), reps=0)


def test_latent_field_validation():
    with pytest.raises(Exception):
        LatentField(np.array([[np.nan]]))
