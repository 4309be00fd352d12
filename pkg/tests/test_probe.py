import numpy as np
import pytest

from sharp.errors import InvalidDimensionError, InvalidPromotionError
from sharp.extrapolation import MethodSpec, PromotionContext, rescale_table
from sharp.probe import ProbeConfig, ood_drift, score_curve, score_surface
from sharp.rope import build_frequency_table, relative_score

ALL = (MethodSpec("direct"), MethodSpec("pi"), MethodSpec("ntk"), MethodSpec.yarn(), MethodSpec.sharp())


def unit(rng, n=64):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def test_curve_matches_relative_score(table, rng):
    q, k = rng.standard_normal(64), rng.standard_normal(64)
    for axis in (0, 1):
        c = score_curve(q, k, table, 20, axis)
        for d in (0, 1, 7, 20):
            pk = (d, 0) if axis == 0 else (0, d)
            assert c[d] == pytest.approx(relative_score(q, k, (0, 0), pk, table), abs=1e-12)
    assert c[0] == pytest.approx(q @ k, abs=1e-12)


def test_surface_matches_relative_score(table, rng):
    q, k = rng.standard_normal(64), rng.standard_normal(64)
    surf = score_surface(q, k, table, [np.arange(5.0), np.arange(4.0)])
    assert surf[3, 2] == pytest.approx(relative_score(q, k, (0, 0), (3, 2), table), abs=1e-12)


def test_pi_doubles_offsets(table, ctx2x, rng):
    q, k = unit(rng), unit(rng)
    pi = rescale_table(table, ctx2x, MethodSpec("pi"))
    direct = score_curve(q, k, table, 100)
    stretched = score_curve(q, k, pi, 200)
    np.testing.assert_allclose(stretched[::2], direct, atol=1e-9)


def test_curve_beyond_training_extent(table, rng):
    c = score_curve(unit(rng), unit(rng), table, 5000)
    assert c.shape == (5001,) and np.all(np.isfinite(c))


def test_curve_errors(table):
    with pytest.raises(ValueError):
        score_curve(np.zeros(64), np.zeros(64), table, 0)
    with pytest.raises(InvalidDimensionError):
        score_curve(np.zeros(64), np.zeros(60), table, 4)


def test_no_promotion_no_drift(table):
    rep = ood_drift(ProbeConfig(table, PromotionContext((16, 16), (16, 16)), ALL, n_probes=8))
    for e in rep.entries:
        assert e.max_dev == 0.0 and e.mean_tv == 0.0


def test_pi_beats_direct(table):
    rep = ood_drift(ProbeConfig(table, PromotionContext((16, 16), (32, 32)), ALL, n_probes=64))
    assert rep.get("pi").max_dev < rep.get("direct").max_dev
    assert rep.get("pi").max_dev <= 1e-9


def test_sharp_endpoints(table):
    rep = ood_drift(ProbeConfig(table, PromotionContext((16, 16), (32, 32)), ALL, n_probes=16,
                                timesteps=(1.0, 1e-9)))
    y, d = rep.get("yarn"), rep.get("direct")
    s1, s0 = rep.get("sharp", 1.0), rep.get("sharp", 1e-9)
    assert (s1.max_dev, s1.mean_tv) == (y.max_dev, y.mean_tv)
    assert (s0.max_dev, s0.mean_tv) == (d.max_dev, d.mean_tv)


def test_report_ranges(table):
    rep = ood_drift(ProbeConfig(table, PromotionContext((16, 16), (48, 32)), ALL, n_probes=8))
    for e in rep.entries:
        assert e.max_dev >= 0 and 0 <= e.mean_tv <= 1
    js = rep.as_json()
    assert set(js[0]) == {"method", "s", "t", "max_dev", "mean_tv"}
    assert js[0]["s"] == [3.0, 2.0]


def test_target_smaller_rejected():
    with pytest.raises(InvalidPromotionError):
        PromotionContext((32, 32), (16, 16))
