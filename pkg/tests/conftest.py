"""Shared fixtures; the expensive runs are session-scoped and reused."""

from __future__ import annotations

import pytest

import perpetua as pp
from perpetua import oracle


@pytest.fixture(scope="session")
def qs_spec():
    return pp.quickselect_spec()


@pytest.fixture(scope="session")
def is_spec():
    return pp.interval_splitting_spec()


@pytest.fixture(scope="session")
def poly3():
    return pp.DiscretisationSchedule.polynomial(3)


@pytest.fixture(scope="session")
def sym3():
    return pp.DiscretisationSchedule.polynomial(3, u_mode=pp.UMode.SYMMETRIC)


@pytest.fixture(scope="session")
def sym2():
    return pp.DiscretisationSchedule.polynomial(2, u_mode=pp.UMode.SYMMETRIC)


@pytest.fixture(scope="session")
def is_run30_sym3(is_spec, sym3):
    """Interval splitting, cubic symmetric schedule, 30 steps (s = 27000)."""
    return pp.run(pp.IterationPlan(spec=is_spec, sched=sym3, n_steps=30))


@pytest.fixture(scope="session")
def is_run30_sym2(is_spec, sym2):
    return pp.run(pp.IterationPlan(spec=is_spec, sched=sym2, n_steps=30))


@pytest.fixture(scope="session")
def qs_run20_poly2(qs_spec):
    sched = pp.DiscretisationSchedule.polynomial(2)
    return pp.run(pp.IterationPlan(spec=qs_spec, sched=sched, n_steps=20))


@pytest.fixture(scope="session")
def is_mc_1m(is_spec):
    cfg = oracle.McConfig(samples=1_000_000,
                          truncation=oracle.default_truncation(is_spec),
                          rng_seed=20_260_810)
    return oracle.sample(is_spec, cfg), cfg
