"""Problem definition: coefficient branches, schedules, moment metadata.

A perpetuity instance is the distributional equation X = AX + b with
(A, b) independent of X.  The pair is represented through a weighted
mixture of branches, each branch carrying a one-uniform representation
A = phi(U), b = psi(U) together with exact Lipschitz/sup metadata.
Extra discrete randomness (a Bernoulli coin selecting the branch) is kept
as the mixture weight so only U is ever discretised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

from .functions import PiecewisePolynomial

__all__ = [
    "UMode",
    "DiscretisationSchedule",
    "CoefficientBranch",
    "MomentProvider",
    "PerpetuitySpec",
    "ScheduleOverflowError",
    "ContractionError",
    "schedule_s",
    "discretise_u",
    "error_constants",
    "xi_bound",
]

_MAX_RESOLUTION = 1 << 62


class ScheduleOverflowError(OverflowError):
    """Lattice resolution would exceed the supported integer range."""


class ContractionError(ValueError):
    """The coefficient norm bound is not < 1 at the requested p."""


class UMode(Enum):
    FLOOR = "floor"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class DiscretisationSchedule:
    """Lattice resolution map n -> s(n).

    ``kind`` is "poly" (s(n) = n**r) or "exp" (s(n) = ceil(gamma**n)).
    By convention s(0) = s(1) = 1.  The exponential resolution is rounded
    *up* so that 1/s(n) <= gamma**(-n) holds exactly and rate certificates
    stay valid for the integer lattice actually used.
    """

    kind: str
    r: int = 0
    gamma: float = 0.0
    u_mode: UMode = UMode.FLOOR

    def __post_init__(self) -> None:
        if self.kind == "poly":
            if not (isinstance(self.r, int) and self.r >= 1):
                raise ValueError("polynomial schedule needs integer r >= 1")
        elif self.kind == "exp":
            if not self.gamma > 1.0:
                raise ValueError("exponential schedule needs gamma > 1")
        else:
            raise ValueError(f"unknown schedule kind: {self.kind!r}")

    @staticmethod
    def polynomial(r: int, u_mode: UMode = UMode.FLOOR) -> "DiscretisationSchedule":
        return DiscretisationSchedule("poly", r=r, u_mode=u_mode)

    @staticmethod
    def exponential(gamma: float, u_mode: UMode = UMode.FLOOR) -> "DiscretisationSchedule":
        return DiscretisationSchedule("exp", gamma=gamma, u_mode=u_mode)

    def label(self) -> str:
        base = f"n^{self.r}" if self.kind == "poly" else f"{self.gamma:g}^n"
        return base + ("/sym" if self.u_mode is UMode.SYMMETRIC else "")


def schedule_s(sched: DiscretisationSchedule, n: int) -> int:
    """Lattice resolution s(n); s(0) = s(1) = 1."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n <= 1:
        return 1
    if sched.kind == "poly":
        if sched.r * math.log2(n) > 62:
            raise ScheduleOverflowError(f"n^{sched.r} overflows at n={n}")
        return n ** sched.r
    if n * math.log2(sched.gamma) > 62:
        raise ScheduleOverflowError(f"{sched.gamma}^{n} overflows")
    # Exact rational power of the binary value of gamma, then ceil: avoids
    # pow() rounding flipping the integer near a boundary.
    return int(math.ceil(Fraction(sched.gamma) ** n))


def discretise_u(u: float, s: int, mode: UMode) -> float:
    """Project u in [0, 1] onto the resolution-s grid.

    Floor mode maps to floor(s*u)/s (error <= 1/s); symmetric mode maps to
    the cell midpoint (2*floor(s*u)+1)/(2s) (error <= 1/(2s)).
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u outside [0, 1]")
    cell = math.floor(s * u)
    if mode is UMode.FLOOR:
        return cell / s
    return (2 * cell + 1) / (2 * s)


@dataclass(frozen=True)
class CoefficientBranch:
    """One Skorohod branch A = phi(U), b = psi(U) with exact metadata.

    ``monotone_dominated`` asserts |phi([u])| <= |phi(u)| pointwise for the
    grid used, so the p-norm of the discretised coefficient never exceeds
    the continuous one.
    """

    phi: PiecewisePolynomial
    psi: PiecewisePolynomial
    lip_phi: float
    lip_psi: float
    sup_phi: float
    sup_psi: float
    monotone_dominated: bool = False

    def __post_init__(self) -> None:
        if self.sup_phi > 1.0 + 1e-12:
            raise ValueError(f"sup|phi| = {self.sup_phi} exceeds 1")
        for name, v in (("lip_phi", self.lip_phi), ("lip_psi", self.lip_psi),
                        ("sup_phi", self.sup_phi), ("sup_psi", self.sup_psi)):
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0")

    @staticmethod
    def from_functions(phi: PiecewisePolynomial, psi: PiecewisePolynomial,
                       monotone_dominated: bool = False) -> "CoefficientBranch":
        return CoefficientBranch(
            phi=phi, psi=psi,
            lip_phi=phi.lipschitz(), lip_psi=psi.lipschitz(),
            sup_phi=phi.sup_abs(), sup_psi=psi.sup_abs(),
            monotone_dominated=monotone_dominated,
        )


@dataclass(frozen=True)
class MomentProvider:
    """Supplier of the fixed point's p-norms.

    kinds: "exact-recursion" (moments from an exact recurrence),
    "closed-form" (analytic formula), "support-bound" (||X||_p bounded by
    max(|lo|, |hi|) of the known support).
    """

    kind: str
    x_norm: Callable[[float], float]

    def __post_init__(self) -> None:
        if self.kind not in ("exact-recursion", "closed-form", "support-bound"):
            raise ValueError(f"unknown moment provider kind: {self.kind!r}")


@dataclass(frozen=True)
class PerpetuitySpec:
    """A perpetuity problem instance consumed by every other module."""

    name: str
    branches: tuple[tuple[float, CoefficientBranch], ...]
    a_norm: Callable[[float], float]
    mean_x: float
    moment_provider: MomentProvider
    support_hint: Optional[tuple[float, float]] = None
    analytic_cdf: Optional[Callable] = None
    analytic_density: Optional[Callable] = None

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("need at least one branch")
        total = math.fsum(w for w, _ in self.branches)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {total}, not 1")
        if any(w <= 0 for w, _ in self.branches):
            raise ValueError("branch weights must be positive")
        if self.support_hint is not None:
            lo, hi = self.support_hint
            if not lo < hi:
                raise ValueError("support hint must be a nonempty interval")
            if not lo <= self.mean_x <= hi:
                raise ValueError("mean outside the support hint")

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    def sup_a(self) -> float:
        return max(br.sup_phi for _, br in self.branches)

    def sup_b(self) -> float:
        return max(br.sup_psi for _, br in self.branches)

    def x_norm(self, p: float) -> float:
        return self.moment_provider.x_norm(p)

    def x_start(self) -> int:
        """Integer starting point floor(E X) of the iteration."""
        return math.floor(self.mean_x)


def error_constants(spec: PerpetuitySpec, sched: DiscretisationSchedule) -> tuple[float, float, float]:
    """Per-step error constants (C_A, C_b, C_X).

    Guarantees, for the grid of resolution s(n): the p-norm of the
    coefficient discretisation error is <= C_A/s(n) resp. C_b/s(n), and the
    value-lattice rounding error is <= C_X/s(n).  The u-grid contributes
    lip * c_u with c_u = 1 (floor) or 1/2 (symmetric midpoint).
    """
    c_u = 0.5 if sched.u_mode is UMode.SYMMETRIC else 1.0
    c_a = max(br.lip_phi for _, br in spec.branches) * c_u
    c_b = max(br.lip_psi for _, br in spec.branches) * c_u
    return (c_a, c_b, 1.0)


def xi_bound(spec: PerpetuitySpec, sched: DiscretisationSchedule, p: float) -> float:
    """Uniform bound xi < 1 on the p-norm of the discretised coefficient.

    With every branch monotone-dominated the continuous norm carries over
    exactly; otherwise a triangle-inequality slack C_A/s(2) is added.
    Raises ContractionError when the result is not < 1.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    xi = spec.a_norm(p)
    if not all(br.monotone_dominated for _, br in spec.branches):
        c_a, _, _ = error_constants(spec, sched)
        xi = xi + c_a / schedule_s(sched, 2)
    if not xi < 1.0:
        raise ContractionError(f"not a contraction at p={p}: xi={xi}")
    return xi
