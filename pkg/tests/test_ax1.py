import math

import numpy as np
import pytest

import perpetua as pp
from perpetua import ax1, bounds, oracle


def test_descriptor_validation():
    with pytest.raises(ValueError):
        ax1.ADensityDescriptor(sup=2.0, modulus_continuous=bounds.linear(0.0),
                               jumps=((0.0, 1.0),))
    with pytest.raises(ValueError):
        ax1.ADensityDescriptor(sup=2.0, modulus_continuous=bounds.linear(0.0),
                               jumps=((0.5, 1.0), (0.5, 2.0)))
    with pytest.warns(UserWarning):
        ax1.ADensityDescriptor(sup=0.0, modulus_continuous=bounds.linear(0.0))


def test_transfer_sup_uniform_half():
    desc = ax1.uniform_a_descriptor(0.5)
    assert ax1.transfer_sup(desc) == 2.0


def test_transfer_sup_vs_monte_carlo_histogram():
    spec = pp.ax1_uniform_spec(0.5)
    cfg = oracle.McConfig(samples=400_000, truncation=oracle.default_truncation(spec),
                          rng_seed=3111)
    xs = oracle.sample(spec, cfg).values
    width = 0.01
    hist, _ = np.histogram(xs, bins=np.arange(1.0, 2.0 + width, width))
    density = hist / (len(xs) * width)
    # per-bin standard error at density scale
    p_bin = density.max() * width
    noise = 4.0 * math.sqrt(p_bin * (1 - p_bin) / len(xs)) / width
    assert density.max() <= ax1.transfer_sup(ax1.uniform_a_descriptor(0.5)) + noise


def test_transfer_modulus_examples():
    # no jumps: the continuous modulus passes through untouched
    desc = ax1.ADensityDescriptor(sup=1.0, modulus_continuous=bounds.linear(3.0))
    assert ax1.transfer_modulus(desc, 5.0)(0.1) == pytest.approx(0.3)
    # single jump of height 2 at 1/2 with ||f_X|| = 2: 2*2*delta/(1/2) = 8 delta
    mod = ax1.transfer_modulus(ax1.uniform_a_descriptor(0.5), 2.0)
    assert mod(0.01) == pytest.approx(0.08)
    assert mod(0.0) == 0.0
    # two jumps add linearly
    desc2 = ax1.ADensityDescriptor(sup=2.0, modulus_continuous=bounds.linear(0.0),
                                   jumps=((0.5, 2.0), (0.25, 1.0)))
    both = ax1.transfer_modulus(desc2, 1.0)
    assert both(0.01) == pytest.approx((2.0 / 0.5 + 1.0 / 0.25) * 0.01)
    # jump term strictly enlarges the continuous part
    desc3 = ax1.ADensityDescriptor(sup=2.0, modulus_continuous=bounds.linear(1.0),
                                   jumps=((0.5, 1.0),))
    assert ax1.transfer_modulus(desc3, 1.0)(0.05) > bounds.linear(1.0)(0.05)


def test_run_zero_coefficient():
    res = ax1.run_ax1_preset("zero", pp.DiscretisationSchedule.polynomial(2), 5)
    pmf = res.result.final
    k_one = pmf.s  # lattice index of the value 1
    assert pmf.mass[k_one - pmf.k_min] == 1.0
    assert res.kolmogorov is None


def test_run_uniform_half_pipeline():
    sched = pp.DiscretisationSchedule.polynomial(2)
    res = ax1.run_ax1_preset(0.5, sched, 30)
    pmf = res.result.final
    assert res.spec.mean_x == pytest.approx(4.0 / 3.0)
    assert pmf.k_min / pmf.s >= 1.0 and pmf.k_max / pmf.s <= 2.0
    assert res.density_sup == 2.0
    assert res.kolmogorov.bound < 0.05
    # lattice mean close to the geometric-series mean
    mean = float(np.dot(pmf.positions(), pmf.mass))
    assert mean == pytest.approx(4.0 / 3.0, abs=5e-3)


def test_run_uniform_half_mc_agreement():
    sched = pp.DiscretisationSchedule.polynomial(2)
    res = ax1.run_ax1_preset(0.5, sched, 30)
    spec = res.spec
    cfg = oracle.McConfig(samples=300_000, truncation=oracle.default_truncation(spec),
                          rng_seed=424242)
    mc = oracle.sample(spec, cfg)
    pmf = res.result.final
    grid = np.linspace(1.0, 2.0, 1001)
    emp = oracle.ecdf_at(mc.values, grid)
    lat = np.interp(grid, pmf.positions(), pmf.cdf_right())
    gap = float(np.abs(emp - lat).max())
    assert gap <= res.kolmogorov.bound + oracle.dkw_band(cfg.samples, 0.999) + 1e-6
