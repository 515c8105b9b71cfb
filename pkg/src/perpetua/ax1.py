"""Bound transfer for the class X = AX + 1 with A >= 0.

When A has a bounded density, the sup-norm and modulus of continuity of
the fixed point's density (restricted to (1, inf)) are inherited from A's
density; jumps of a cadlag density contribute an extra linear term
||f_X||_inf * sum |jump(s)| * delta / s.  These transfers feed the
certificate machinery for presets of this class.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from . import bounds
from .iterator import IterationPlan, IterationResult, run
from .lattice import DensityEstimate, extract_density
from .model import DiscretisationSchedule, schedule_s
from .presets import ax1_uniform_spec
from .functions import constant
from .model import CoefficientBranch, MomentProvider, PerpetuitySpec

__all__ = [
    "ADensityDescriptor",
    "uniform_a_descriptor",
    "transfer_sup",
    "transfer_modulus",
    "Ax1RunResult",
    "run_ax1_preset",
]


@dataclass(frozen=True)
class ADensityDescriptor:
    """Bounded cadlag density of A: sup-norm, jump-free modulus, jump list.

    Atomic A is not representable (a density is required); jump locations
    must be strictly positive and distinct because the transfer sums over
    jumps away from zero.
    """

    sup: float
    modulus_continuous: bounds.ModulusSpec
    jumps: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.sup < 0.0:
            raise ValueError("sup must be >= 0")
        if self.sup == 0.0:
            warnings.warn("degenerate descriptor: sup|f_A| = 0", stacklevel=3)
        locs = [s for s, _ in self.jumps]
        if any(s <= 0.0 for s in locs):
            raise ValueError("jump locations must be strictly positive")
        if len(set(locs)) != len(locs):
            raise ValueError("jump locations must be distinct")


def uniform_a_descriptor(q: float) -> ADensityDescriptor:
    """Descriptor for A uniform on [0, q]: density 1/q with one down-jump at q.

    On (0, inf) the jump-removed density is constant, so the continuous
    modulus vanishes.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    return ADensityDescriptor(sup=1.0 / q, modulus_continuous=bounds.linear(0.0),
                              jumps=((q, 1.0 / q),))


def transfer_sup(desc: ADensityDescriptor) -> float:
    """||f_X||_inf <= ||f_A||_inf."""
    return desc.sup


def transfer_modulus(desc: ADensityDescriptor, density_sup_x: float) -> bounds.ModulusSpec:
    """Modulus of f_X on (1, inf) from A's modulus plus the jump correction."""
    if density_sup_x < 0.0:
        raise ValueError("density_sup_x must be >= 0")
    jump_c = density_sup_x * math.fsum(abs(h) / s for s, h in desc.jumps)
    if jump_c == 0.0:
        return desc.modulus_continuous
    cont = desc.modulus_continuous
    if cont.kind == "holder" and cont.c == 0.0:
        return bounds.linear(jump_c)
    return bounds.modulus_sum(cont, bounds.linear(jump_c))


@dataclass(frozen=True)
class Ax1RunResult:
    spec: PerpetuitySpec
    result: IterationResult
    kolmogorov: Optional[bounds.KolmogorovCertificate]
    density_cert: Optional[bounds.DensityCertificate]
    density: Optional[DensityEstimate]
    density_sup: Optional[float]
    modulus: Optional[bounds.ModulusSpec]


def _zero_a_spec() -> PerpetuitySpec:
    branch = CoefficientBranch.from_functions(constant(0.0), constant(1.0),
                                              monotone_dominated=True)
    return PerpetuitySpec(
        name="ax1-zero",
        branches=((1.0, branch),),
        a_norm=lambda p: 0.0,
        mean_x=1.0,
        moment_provider=MomentProvider(kind="support-bound", x_norm=lambda p: 1.0),
        support_hint=(0.5, 1.5),
    )


def run_ax1_preset(a_kind, sched: DiscretisationSchedule, n_steps: int,
                   threads: Optional[int] = None,
                   error_model: bounds.ErrorTermModel = bounds.ErrorTermModel.FULL) -> Ax1RunResult:
    """Full pipeline for an AX + 1 preset.

    ``a_kind`` is either a float q (A uniform on [0, q]) or "zero" (A = 0,
    so X = 1; degenerate, no density certificates).  For the uniform kind
    the transferred sup-norm and jump-corrected modulus feed the
    Kolmogorov and density certificates.
    """
    if a_kind == "zero":
        spec = _zero_a_spec()
        result = run(IterationPlan(spec=spec, sched=sched, n_steps=n_steps, threads=threads))
        return Ax1RunResult(spec=spec, result=result, kolmogorov=None,
                            density_cert=None, density=None, density_sup=None, modulus=None)
    q = float(a_kind)
    spec = ax1_uniform_spec(q)
    desc = uniform_a_descriptor(q)
    sup_x = transfer_sup(desc)
    modulus = transfer_modulus(desc, sup_x)
    result = run(IterationPlan(spec=spec, sched=sched, n_steps=n_steps, threads=threads))
    kol = bounds.optimize_p(spec, sched, n_steps, density_sup=sup_x, error_model=error_model)
    dens_cert = bounds.density_certificate(kol, modulus, schedule_s(sched, n_steps))
    density = extract_density(result.final, dens_cert.d)
    return Ax1RunResult(spec=spec, result=result, kolmogorov=kol, density_cert=dens_cert,
                        density=density, density_sup=sup_x, modulus=modulus)
