import math

import numpy as np
import pytest

import perpetua as pp
from perpetua import oracle
from perpetua.functions import constant
from perpetua.model import CoefficientBranch, MomentProvider
from perpetua.presets import beta22_cdf


def test_degenerate_samples_constant():
    br = CoefficientBranch.from_functions(constant(0.0), constant(0.7),
                                          monotone_dominated=True)
    spec = pp.PerpetuitySpec(name="const", branches=((1.0, br),),
                             a_norm=lambda p: 0.0, mean_x=0.7,
                             moment_provider=MomentProvider(kind="support-bound",
                                                            x_norm=lambda p: 0.7),
                             support_hint=(0.0, 1.0))
    res = oracle.sample(spec, oracle.McConfig(samples=1000, truncation=3, rng_seed=1))
    assert np.all(res.values == 0.7)


def test_quickselect_mean(qs_spec):
    cfg = oracle.McConfig(samples=1_000_000,
                          truncation=oracle.default_truncation(qs_spec), rng_seed=314)
    res = oracle.sample(qs_spec, cfg)
    se = res.values.std() / math.sqrt(cfg.samples)
    assert abs(res.values.mean() - 1.0 / 3.0) <= 3 * se + res.truncation_error


def test_interval_splitting_ks(is_mc_1m):
    res, cfg = is_mc_1m
    grid = np.linspace(0.0, 1.0, 2001)
    ks = float(np.abs(oracle.ecdf_at(res.values, grid) - beta22_cdf(grid)).max())
    assert ks <= oracle.dkw_band(cfg.samples, 0.999) + 1e-6


def test_reproducibility(is_spec):
    cfg = oracle.McConfig(samples=50_000, truncation=20, rng_seed=999)
    a = oracle.sample(is_spec, cfg)
    b = oracle.sample(is_spec, cfg)
    assert np.array_equal(a.values, b.values)
    c = oracle.sample(is_spec, oracle.McConfig(samples=50_000, truncation=20, rng_seed=1000))
    assert not np.array_equal(a.values, c.values)
    assert a.generator == oracle.GENERATOR_NAME


def test_default_truncation_meets_tolerance(qs_spec, is_spec):
    for spec in (qs_spec, is_spec):
        m = oracle.default_truncation(spec, tol=1e-6)
        assert oracle.truncation_error(spec, m) <= 1e-6
        assert oracle.truncation_error(spec, m - 1) > 1e-6


def test_dkw_band_values():
    assert oracle.dkw_band(10 ** 6, 0.999) == pytest.approx(0.00195, abs=5e-5)
    # as confidence -> 0 the band approaches sqrt(ln 2 / (2 S))
    s = 10_000
    assert oracle.dkw_band(s, 1e-12) == pytest.approx(math.sqrt(math.log(2.0) / (2 * s)),
                                                      rel=1e-6)
    assert oracle.dkw_band(1, 0.86) >= 0.5
    with pytest.raises(ValueError):
        oracle.dkw_band(100, 1.0)


def test_truncated_series_support(is_spec):
    res = oracle.sample(is_spec, oracle.McConfig(samples=20_000, truncation=40, rng_seed=8))
    assert res.values.min() >= 0.0
    assert res.values.max() <= 1.0
