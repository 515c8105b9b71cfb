"""Certified error arithmetic for the lattice iteration.

The chain is: a per-step error budget in the minimal L_p metric, summed
through the contraction; conversion to a Kolmogorov bound through the
sup-norm of the limit density; conversion to a density sup-norm bound
through a modulus of continuity; and a bootstrap that alternates the
certified density error with the observed maximum of a computed density
to shrink an a-priori sup-norm bound.

Two step-error models are supported.  FULL charges the value-lattice
rounding *and* both coefficient discretisation terms,
(C_X + C_A*||X||_p + C_b)/s(m), and is the sound default.  VALUE_ONLY
charges C_X/s(m) alone; it reproduces historical reference certificates
for the quickselect preset but understates the error whenever C_A or C_b
is nonzero, so it is kept only as an explicitly requested mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .model import (ContractionError, DiscretisationSchedule, PerpetuitySpec,
                    error_constants, schedule_s, xi_bound)

__all__ = [
    "ErrorTermModel",
    "ModulusSpec",
    "holder",
    "linear",
    "tabulated",
    "modulus_sum",
    "LpBound",
    "KolmogorovCertificate",
    "DensityCertificate",
    "BootstrapResult",
    "DensityWindowError",
    "NoFeasiblePError",
    "BootstrapError",
    "lp_bound_direct",
    "rate_constant_poly",
    "rate_constant_exp",
    "poly_rate_constant",
    "exp_rate_constant",
    "lp_bound_closed",
    "kolmogorov_from_lp",
    "optimize_p",
    "density_certificate",
    "bootstrap_density_bound",
    "DEFAULT_P_RANGE",
]

DEFAULT_P_RANGE = range(1, 65)


class ErrorTermModel(str, Enum):
    FULL = "full"
    VALUE_ONLY = "value-only"


class DensityWindowError(ValueError):
    """The lattice is too coarse for a useful density window."""


class NoFeasiblePError(ContractionError):
    """No p in the scanned range gives a contraction."""


class BootstrapError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# moduli of continuity

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ModulusSpec:
    """Nondecreasing modulus delta -> Delta(delta) with Delta(0) = 0.

    kinds: "holder" (c * delta**alpha, alpha in (0, 1]; alpha = 1 is the
    Lipschitz case), "tabulated" (conservative right-step interpolation of
    sampled values), "sum" (pointwise sum of parts, used for jump-corrected
    transfers).
    """

    kind: str
    c: float = 0.0
    alpha: float = 1.0
    table: Optional[tuple[tuple[float, ...], tuple[float, ...]]] = None
    parts: tuple["ModulusSpec", ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "holder":
            if not (self.c >= 0.0 and 0.0 < self.alpha <= 1.0):
                raise ValueError("holder modulus needs c >= 0 and alpha in (0, 1]")
        elif self.kind == "tabulated":
            ds, vs = self.table
            if len(ds) != len(vs) or len(ds) == 0:
                raise ValueError("tabulated modulus needs matching nonempty rows")
            if any(a >= b for a, b in zip(ds, ds[1:])) or any(a > b for a, b in zip(vs, vs[1:])):
                raise ValueError("tabulated modulus must be strictly increasing in delta, nondecreasing in value")
            if ds[0] <= 0.0 or vs[0] < 0.0:
                raise ValueError("tabulated rows must have delta > 0 and value >= 0")
        elif self.kind == "sum":
            if not self.parts:
                raise ValueError("sum modulus needs parts")
        else:
            raise ValueError(f"unknown modulus kind: {self.kind!r}")

    def __call__(self, delta: ArrayLike) -> ArrayLike:
        if self.kind == "holder":
            return self.c * np.power(delta, self.alpha)
        if self.kind == "sum":
            parts = [p(delta) for p in self.parts]
            return sum(parts[1:], start=parts[0])
        ds, vs = self.table
        idx = np.searchsorted(ds, delta, side="left")
        scalar = np.isscalar(delta)
        idx = np.atleast_1d(idx)
        if (idx >= len(ds)).any():
            raise ValueError("tabulated modulus queried beyond its table")
        out = np.asarray(vs, dtype=np.float64)[idx]
        out = np.where(np.atleast_1d(delta) <= 0.0, 0.0, out)
        return float(out[0]) if scalar else out

    def describe(self) -> str:
        if self.kind == "holder":
            if self.alpha == 1.0:
                return f"{self.c:g}*delta"
            return f"{self.c:g}*delta^{self.alpha:g}"
        if self.kind == "sum":
            return " + ".join(p.describe() for p in self.parts)
        return f"tabulated[{len(self.table[0])}]"


def holder(c: float, alpha: float) -> ModulusSpec:
    return ModulusSpec(kind="holder", c=c, alpha=alpha)


def linear(c: float) -> ModulusSpec:
    return ModulusSpec(kind="holder", c=c, alpha=1.0)


def tabulated(deltas: Sequence[float], values: Sequence[float]) -> ModulusSpec:
    return ModulusSpec(kind="tabulated", table=(tuple(deltas), tuple(values)))


def modulus_sum(*parts: ModulusSpec) -> ModulusSpec:
    flat: list[ModulusSpec] = []
    for p in parts:
        flat.extend(p.parts if p.kind == "sum" else (p,))
    return ModulusSpec(kind="sum", parts=tuple(flat))


# --------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class LpBound:
    p: float
    n: int
    value: float
    mode: str  # "direct-sum" | "closed-poly" | "closed-exp"
    xi: float
    error_model: ErrorTermModel = ErrorTermModel.FULL

    def __post_init__(self) -> None:
        if self.value < 0.0:
            raise ValueError("negative bound")


@dataclass(frozen=True)
class KolmogorovCertificate:
    n: int
    bound: float
    p_used: float
    density_sup_used: float
    lp: Optional[LpBound] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.bound <= 1.0:
            raise ValueError("Kolmogorov bound must lie in [0, 1]")


@dataclass(frozen=True)
class DensityCertificate:
    n: int
    delta: float
    d: int
    bound: float
    modulus: ModulusSpec

    def __post_init__(self) -> None:
        if self.d < 1 or self.delta <= 0.0 or self.bound < 0.0:
            raise ValueError("invalid density certificate")


@dataclass(frozen=True)
class BootstrapResult:
    kolmogorov: KolmogorovCertificate
    density: DensityCertificate
    final_sup: float
    sup_chain: tuple[float, ...]
    history: tuple[tuple[float, KolmogorovCertificate, DensityCertificate, float], ...]


# --------------------------------------------------------------------------
# L_p bounds

def _step_coefficient(spec: PerpetuitySpec, sched: DiscretisationSchedule, p: float,
                      constants: Optional[tuple[float, float, float]],
                      error_model: ErrorTermModel) -> float:
    c_a, c_b, c_x = error_constants(spec, sched) if constants is None else constants
    if error_model is ErrorTermModel.VALUE_ONLY:
        return c_x
    return c_x + c_a * spec.x_norm(p) + c_b


def _start_distance(spec: PerpetuitySpec, p: float) -> float:
    # ||X - X_0||_p bounded by ||X||_p + |X_0|; exact whenever X_0 = 0.
    return spec.x_norm(p) + abs(spec.x_start())


@lru_cache(maxsize=64)
def _schedule_reversed(sched: DiscretisationSchedule, n: int) -> np.ndarray:
    """[s(n), s(n-1), ..., s(1)] as float64."""
    arr = np.array([schedule_s(sched, n - i) for i in range(n)], dtype=np.float64)
    arr.flags.writeable = False
    return arr


def lp_bound_direct(spec: PerpetuitySpec, sched: DiscretisationSchedule, n: int, p: float,
                    constants: Optional[tuple[float, float, float]] = None,
                    error_model: ErrorTermModel = ErrorTermModel.FULL) -> LpBound:
    """Directly summed L_p bound after n steps at a fixed p.

    value = xi^n * ||X - X_0||_p + K * sum_{i=0}^{n-1} xi^i / s(n-i)
    with K the per-step coefficient of the chosen error model and the true
    integer resolutions s(m) of the schedule.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xi = xi_bound(spec, sched, p)
    coef = _step_coefficient(spec, sched, p, constants, error_model)
    s_rev = _schedule_reversed(sched, n)
    pows = np.power(xi, np.arange(n, dtype=np.float64))
    value = xi ** n * _start_distance(spec, p) + coef * float(np.sum(pows / s_rev))
    return LpBound(p=p, n=n, value=value, mode="direct-sum", xi=xi, error_model=error_model)


def poly_rate_constant(xi: float, start_distance: float, c_sum: float, r: int) -> float:
    """Closed-form constant for the n**-r rate."""
    if not 0.0 < xi < 1.0:
        raise ContractionError(f"xi = {xi} not in (0, 1)")
    first = (r ** r) * start_distance / (math.e * math.log(1.0 / xi)) ** r
    second = math.factorial(r) * c_sum / (1.0 - xi) ** (r + 1)
    return first + second


def exp_rate_constant(xi: float, start_distance: float, c_sum: float, gamma: float) -> float:
    """Closed-form constant for the gamma**-n rate; needs gamma < 1/xi."""
    if not 0.0 < xi < 1.0:
        raise ContractionError(f"xi = {xi} not in (0, 1)")
    if not 1.0 < gamma < 1.0 / xi or xi * gamma >= 1.0:
        raise ContractionError(
            f"schedule too aggressive for contraction factor: gamma={gamma}, 1/xi={1.0 / xi}")
    return start_distance + c_sum / (1.0 - xi * gamma)


def _closed_csum(spec: PerpetuitySpec, sched: DiscretisationSchedule, p: float) -> float:
    c_a, c_b, c_x = error_constants(spec, sched)
    return c_x + c_b + c_a * spec.x_norm(p)


def rate_constant_poly(spec: PerpetuitySpec, sched: DiscretisationSchedule, p: float) -> float:
    if sched.kind != "poly":
        raise ValueError("polynomial rate constant needs a polynomial schedule")
    xi = xi_bound(spec, sched, p)
    return poly_rate_constant(xi, _start_distance(spec, p), _closed_csum(spec, sched, p), sched.r)


def rate_constant_exp(spec: PerpetuitySpec, sched: DiscretisationSchedule, p: float) -> float:
    if sched.kind != "exp":
        raise ValueError("exponential rate constant needs an exponential schedule")
    xi = xi_bound(spec, sched, p)
    return exp_rate_constant(xi, _start_distance(spec, p), _closed_csum(spec, sched, p), sched.gamma)


def lp_bound_closed(spec: PerpetuitySpec, sched: DiscretisationSchedule, n: int, p: float) -> LpBound:
    """Closed-form rate bound C_r/n^r resp. C_gamma/gamma^n."""
    if sched.kind == "poly":
        value = rate_constant_poly(spec, sched, p) / n ** sched.r
        mode = "closed-poly"
    else:
        value = rate_constant_exp(spec, sched, p) / sched.gamma ** n
        mode = "closed-exp"
    return LpBound(p=p, n=n, value=value, mode=mode, xi=xi_bound(spec, sched, p))


# --------------------------------------------------------------------------
# Kolmogorov and density certificates

def kolmogorov_from_lp(lp: LpBound, density_sup: float) -> KolmogorovCertificate:
    """Convert an L_p bound through the bounded-density inequality.

    bound = ((p+1)^(1/p) * density_sup * lp.value)^(p/(p+1)), clamped to 1
    (a probability-metric bound above 1 is vacuous).
    """
    if density_sup <= 0.0:
        raise ValueError("density_sup must be positive")
    p = lp.p
    raw = ((p + 1.0) ** (1.0 / p) * density_sup * lp.value) ** (p / (p + 1.0))
    return KolmogorovCertificate(n=lp.n, bound=min(1.0, raw), p_used=p,
                                 density_sup_used=density_sup, lp=lp)


def optimize_p(spec: PerpetuitySpec, sched: DiscretisationSchedule, n: int,
               density_sup: float, p_range: Iterable[int] = DEFAULT_P_RANGE,
               error_model: ErrorTermModel = ErrorTermModel.FULL) -> KolmogorovCertificate:
    """Smallest Kolmogorov certificate over an integer grid of p."""
    best: Optional[KolmogorovCertificate] = None
    for p in p_range:
        try:
            lp = lp_bound_direct(spec, sched, n, p, error_model=error_model)
        except ContractionError:
            continue
        cert = kolmogorov_from_lp(lp, density_sup)
        if best is None or cert.bound < best.bound:
            best = cert
    if best is None:
        raise NoFeasiblePError(f"no contraction at any p in {p_range!r}")
    return best


def _scan_d(kol_bound: float, modulus: ModulusSpec, s: int, lo: int, hi: int) -> tuple[int, float]:
    ds = np.arange(lo, hi + 1, dtype=np.float64)
    q = kol_bound * s / ds + np.asarray(modulus(ds / s), dtype=np.float64)
    i = int(np.argmin(q))
    return lo + i, float(q[i])


def _holder_seed(kol_bound: float, modulus: ModulusSpec) -> Optional[float]:
    """Continuous minimiser of kol/delta + c*delta^alpha when closed-form."""
    if modulus.kind != "holder" or modulus.c <= 0.0:
        return None
    return (kol_bound / (modulus.c * modulus.alpha)) ** (1.0 / (1.0 + modulus.alpha))


def density_certificate(kol: KolmogorovCertificate, modulus: ModulusSpec, s: int,
                        d: Optional[int] = None) -> DensityCertificate:
    """Density sup-norm certificate kol.bound/delta + modulus(delta), delta = d/s.

    With d=None an integer window optimising the bound is chosen by scanning
    (the objective is unimodal in d); a closed-form continuous optimum seeds
    the scan window when available.  Raises DensityWindowError when the
    optimum would need delta below one atom.
    """
    if d is not None:
        if d < 1:
            raise ValueError("d must be >= 1")
        delta = d / s
        return DensityCertificate(n=kol.n, delta=delta, d=d,
                                  bound=kol.bound / delta + float(modulus(delta)),
                                  modulus=modulus)
    if kol.bound == 0.0:
        # pure modulus term: nondecreasing in d, so the smallest window wins
        return density_certificate(kol, modulus, s, d=1)
    seed = _holder_seed(kol.bound, modulus)
    if seed is not None and seed * s < 1.0:
        raise DensityWindowError(
            f"lattice too coarse for density extraction (optimal delta {seed:g} < 1/s)")
    if seed is None:
        d_probe, hi = 1, 2
        while hi < 1 << 40:
            if _scan_d(kol.bound, modulus, s, hi, hi)[1] > _scan_d(kol.bound, modulus, s, d_probe, d_probe)[1]:
                break
            d_probe, hi = hi, hi * 2
        lo, hi = 1, hi
    else:
        d_seed = max(1, round(seed * s))
        lo, hi = max(1, d_seed // 4), d_seed * 4 + 8
    while True:
        d_best, q_best = _scan_d(kol.bound, modulus, s, lo, hi)
        if d_best == hi:
            lo, hi = hi, hi * 2
            continue
        if d_best == lo and lo > 1:
            lo, hi = max(1, lo // 2), lo
            continue
        return DensityCertificate(n=kol.n, delta=d_best / s, d=d_best, bound=q_best,
                                  modulus=modulus)


def bootstrap_density_bound(spec: PerpetuitySpec, sched: DiscretisationSchedule, n: int,
                            modulus_family: Callable[[float], ModulusSpec],
                            initial_sup: float, observed_max: float,
                            tol: float = 1e-4,
                            p_range: Iterable[int] = DEFAULT_P_RANGE,
                            error_model: ErrorTermModel = ErrorTermModel.FULL,
                            max_iter: int = 100) -> BootstrapResult:
    """Shrink a density sup-norm bound by alternating certificates.

    Starting from a proven a-priori bound B0 >= observed_max, each pass
    certifies the Kolmogorov and density errors under the current B and
    replaces B by observed_max + density error.  The sequence is monotone
    nonincreasing (asserted) and iterates to a |dB| < tol fixed point; the
    returned certificates are re-evaluated at the converged B.
    """
    if initial_sup < observed_max:
        raise ValueError("initial_sup must dominate observed_max")
    s = schedule_s(sched, n)
    b = initial_sup
    chain = [b]
    history = []
    for _ in range(max_iter):
        kol = optimize_p(spec, sched, n, b, p_range=p_range, error_model=error_model)
        dens = density_certificate(kol, modulus_family(b), s)
        b_next = observed_max + dens.bound
        history.append((b, kol, dens, b_next))
        if b_next > b + 1e-12:
            raise BootstrapError(
                f"bound increased from {b} to {b_next}; initial_sup was not dominant")
        chain.append(b_next)
        if abs(b_next - b) < tol:
            b = b_next
            kol = optimize_p(spec, sched, n, b, p_range=p_range, error_model=error_model)
            dens = density_certificate(kol, modulus_family(b), s)
            return BootstrapResult(kolmogorov=kol, density=dens, final_sup=b,
                                   sup_chain=tuple(chain), history=tuple(history))
        b = b_next
    raise BootstrapError(f"no convergence within {max_iter} iterations")
