import numpy as np
import pytest

import perpetua as pp
from perpetua.functions import constant
from perpetua.iterator import apply_step
from perpetua.lattice import LatticePMF
from perpetua.model import CoefficientBranch, MomentProvider

POLY1 = pp.DiscretisationSchedule.polynomial(1)
POLY2 = pp.DiscretisationSchedule.polynomial(2)
POLY3 = pp.DiscretisationSchedule.polynomial(3)


def degenerate_spec(c: float, mean: float = None, hint=(0.0, 3.0)) -> pp.PerpetuitySpec:
    """X = c almost surely (phi = 0, psi = c)."""
    br = CoefficientBranch.from_functions(constant(0.0), constant(c),
                                          monotone_dominated=True)
    return pp.PerpetuitySpec(
        name="degenerate", branches=((1.0, br),),
        a_norm=lambda p: 0.0, mean_x=c if mean is None else mean,
        moment_provider=MomentProvider(kind="support-bound", x_norm=lambda p: abs(c)),
        support_hint=hint)


# --- initialize ----------------------------------------------------------------

def test_initialize_examples(qs_spec, is_spec):
    assert pp.initialize(qs_spec, POLY3).mass[0] == 1.0
    assert pp.initialize(qs_spec, POLY3).k_min == 0          # floor(1/3)
    assert pp.initialize(is_spec, POLY3).k_min == 0          # floor(1/2)
    spec27 = degenerate_spec(0.4, mean=2.7)
    init = pp.initialize(spec27, POLY3)
    assert (init.k_min, init.s) == (2, 1)                    # floor(2.7)


# --- update ---------------------------------------------------------------------

def test_update_hand_example(qs_spec):
    # source: point mass at 1/2 on the s=2 lattice, target resolution 4;
    # enumerating u in {0, 1/4, 1/2, 3/4} of floor(4*(u/2 + u*(1-u))) by hand
    # gives targets {0, 1, 2, 2}, each with mass 1/4
    prev = LatticePMF(s=2, k_min=0, k_max=2, mass=np.array([0.0, 1.0, 0.0]))
    pmf, trips, defect = apply_step(prev, qs_spec, 4, 0, 4, pp.UMode.FLOOR)
    np.testing.assert_allclose(pmf.mass, [0.25, 0.25, 0.5, 0.0, 0.0], rtol=0, atol=0)
    assert trips == 4 * 3
    assert defect == 0.0


def test_update_degenerate_point_mass():
    spec = degenerate_spec(0.4)
    prev = LatticePMF(s=1, k_min=0, k_max=3, mass=np.array([0.25, 0.25, 0.25, 0.25]))
    pmf, _, _ = apply_step(prev, spec, 4, 0, 12, pp.UMode.FLOOR)
    assert pmf.mass[1] == 1.0  # floor(4 * 0.4) = 1, value 0.25
    assert pmf.mass.sum() == 1.0


def test_update_s1_collapse(qs_spec):
    prev = pp.initialize(qs_spec, POLY3)
    pmf, trips, _ = pp.update(prev, qs_spec, POLY3, 1)
    assert pmf.s == 1
    assert pmf.mass[0] == 1.0  # u = 0 only, value 0
    assert trips == 1


def test_update_schedule_mismatch(qs_spec):
    prev = LatticePMF(s=7, k_min=0, k_max=7, mass=np.full(8, 1 / 8))
    with pytest.raises(ValueError):
        pp.update(prev, qs_spec, POLY3, 2)


def test_update_detects_bad_hint():
    # X = 0.9 U lives on [0, 0.9] but the instance claims support [0, 0.5]
    from perpetua.functions import affine
    br = CoefficientBranch.from_functions(constant(0.0), affine(0.0, 0.9),
                                          monotone_dominated=True)
    spec = pp.PerpetuitySpec(
        name="bad-hint", branches=((1.0, br),),
        a_norm=lambda p: 0.0, mean_x=0.45,
        moment_provider=MomentProvider(kind="support-bound", x_norm=lambda p: 0.9),
        support_hint=(0.0, 0.5))
    # the grid at s(3) = 9 maps u = 8/9 to 0.8, well past the claimed ceiling
    with pytest.raises(RuntimeError):
        pp.run(pp.IterationPlan(spec=spec, sched=POLY2, n_steps=3))


# --- run -------------------------------------------------------------------------

def test_run_single_step(qs_spec):
    res = pp.run(pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=1))
    assert res.final.s == 1
    assert res.final.mass[0] == 1.0
    assert res.op_count == 1


def test_run_matches_op_model_ladder(is_spec, qs_spec):
    for spec, sched, ns in ((is_spec, POLY2, (1, 3, 8)), (qs_spec, POLY3, (2, 6))):
        for n in ns:
            res = pp.run(pp.IterationPlan(spec=spec, sched=sched, n_steps=n))
            assert res.op_count == pp.op_count_model(spec, sched, n)


def test_run_deterministic_and_thread_invariant(qs_spec):
    plan1 = pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=10, threads=1)
    plan4 = pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=10, threads=4)
    a = pp.run(plan1).final
    b = pp.run(plan4).final
    c = pp.run(plan1).final
    assert np.array_equal(a.mass, b.mass)
    assert np.array_equal(a.mass, c.mass)
    assert (a.k_min, a.k_max, a.s) == (b.k_min, b.k_max, b.s)


def test_run_without_support_hint(qs_spec):
    # the recursion-bound window [-sQ, sQ] must contain all mass and the
    # trip counts must still match the model
    import dataclasses
    unhinted = dataclasses.replace(qs_spec, support_hint=None)
    res = pp.run(pp.IterationPlan(spec=unhinted, sched=POLY2, n_steps=6))
    hinted = pp.run(pp.IterationPlan(spec=qs_spec, sched=POLY2, n_steps=6))
    assert res.op_count == pp.op_count_model(unhinted, POLY2, 6)
    assert res.op_count > hinted.op_count  # wider windows, more trips
    # identical distribution on the shared index range
    lo = hinted.final.k_min - res.final.k_min
    np.testing.assert_array_equal(
        res.final.mass[lo:lo + hinted.final.n_atoms], hinted.final.mass)
    outside = res.final.mass.sum() - res.final.mass[lo:lo + hinted.final.n_atoms].sum()
    assert abs(outside) <= 1e-15


def test_run_mass_conservation_and_support(is_spec):
    sched = pp.DiscretisationSchedule.polynomial(2, u_mode=pp.UMode.SYMMETRIC)
    res = pp.run(pp.IterationPlan(spec=is_spec, sched=sched, n_steps=12))
    assert max(res.renorm_defects) <= 1e-12
    assert float(res.final.mass.sum()) == pytest.approx(1.0, abs=1e-12)
    assert res.final.k_min >= 0 and res.final.k_max <= res.final.s  # inside [0, 1]


def test_run_snapshots_are_copies(qs_spec):
    res = pp.run(pp.IterationPlan(spec=qs_spec, sched=POLY2, n_steps=6, snapshot_every=2))
    assert [n for n, _ in res.snapshots] == [2, 4, 6]
    last_n, last = res.snapshots[-1]
    assert last.mass is not res.final.mass
    assert np.array_equal(last.mass, res.final.mass)


def test_refinement_toward_reference(qs_spec):
    # distance between a coarse and a finer run is within the sum of their
    # certified bounds (triangle through the fixed point)
    from perpetua import bounds
    r20 = pp.run(pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=20))
    r35 = pp.run(pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=35))
    xs = r35.final.positions()
    right = r35.final.cdf_right()

    def ref(q):
        idx = np.searchsorted(xs, np.atleast_1d(q), side="right")
        return np.concatenate(([0.0], right))[idx]

    measured = pp.kolmogorov_vs(r20.final, ref)
    sup = 18.0
    cert20 = bounds.optimize_p(qs_spec, POLY3, 20, sup).bound
    cert35 = bounds.optimize_p(qs_spec, POLY3, 35, sup).bound
    assert measured <= cert20 + cert35
    assert measured <= 2 * cert20


# --- plan validation and op model -------------------------------------------------

def test_plan_validation(qs_spec):
    with pytest.raises(ValueError):
        pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=0)
    with pytest.raises(ValueError):
        pp.IterationPlan(spec=qs_spec, sched=POLY3, n_steps=500, memory_budget=1 << 20)


def test_op_count_model_examples(qs_spec):
    # 1-branch problem clipped to [0, 1]: s(1)*1 + s(2)*(s(1)+1) + s(3)*(s(2)+1)
    assert pp.op_count_model(qs_spec, POLY1, 3) == 1 + 2 * 2 + 3 * 3
    assert pp.op_count_model(qs_spec, POLY1, 1) == 1
    ratio = pp.op_count_model(qs_spec, POLY3, 40) / pp.op_count_model(qs_spec, POLY3, 20)
    assert ratio == pytest.approx(2 ** 7, rel=0.2)


def test_op_count_model_counts_branches(is_spec, qs_spec):
    # interval splitting has two branches over the same [0, 1] window
    assert pp.op_count_model(is_spec, POLY1, 3) == 2 * pp.op_count_model(qs_spec, POLY1, 3)


def test_op_count_model_exponential_slope(qs_spec):
    # log op-count grows by about 2 ln(gamma) per step once s(n) dominates
    import math
    sched = pp.DiscretisationSchedule.exponential(1.5)
    o12 = pp.op_count_model(qs_spec, sched, 12)
    o20 = pp.op_count_model(qs_spec, sched, 20)
    slope = math.log(o20 / o12) / 8
    assert slope == pytest.approx(2 * math.log(1.5), rel=0.2)
