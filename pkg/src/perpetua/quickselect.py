"""Analytic facts for the fixed point of X = UX + U(1-U), U uniform.

Everything the certificate machinery needs for this instance: exact
moments, a tail bound, the kernel of the density's integral equation, an
a-priori density sup-norm bound (18), and the square-root modulus of
continuity.  The fixed point is supported on [0, 1] with mean 1/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from . import bounds
from .lattice import DensityEstimate

__all__ = [
    "RATIONAL_MOMENT_LIMIT",
    "A_PRIORI_DENSITY_SUP",
    "OBSERVED_DENSITY_MAX_80",
    "MomentTable",
    "DensityBoundLedger",
    "moments",
    "x_norm",
    "tail_bound",
    "f_zero",
    "f_zero_bracket",
    "g_kernel",
    "p_t",
    "g_antiderivative",
    "h_split",
    "density_bound_ledger",
    "holder_modulus",
    "integral_residual",
]

# Exact rationals up to this order (factorials up to (2K+1)! appear);
# beyond it the recursion continues in floats with compensated summation.
RATIONAL_MOMENT_LIMIT = 30

# Proven sup-norm bound for the limit density (ledger below) and the
# maximum read off the computed density after 80 cubic-schedule steps.
A_PRIORI_DENSITY_SUP = 18.0
OBSERVED_DENSITY_MAX_80 = 2.630


@dataclass(frozen=True)
class MomentTable:
    """E[X^k] for k = 0..K; Fraction entries up to RATIONAL_MOMENT_LIMIT."""

    values: tuple[Union[Fraction, float], ...]

    def __post_init__(self) -> None:
        if not self.values or self.values[0] != 1:
            raise ValueError("moment table must start with E[X^0] = 1")

    def __getitem__(self, k: int) -> Union[Fraction, float]:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)

    def as_floats(self) -> list[float]:
        return [float(v) for v in self.values]


@lru_cache(maxsize=None)
def moments(K: int) -> MomentTable:
    """Moment table via E[X^k] = (k+1)!(k-1)! * sum_j E[X^j]/(j!(2k-j+1)!)."""
    if K < 0:
        raise ValueError("K must be >= 0")
    vals: list[Union[Fraction, float]] = [Fraction(1)]
    for k in range(1, min(K, RATIONAL_MOMENT_LIMIT) + 1):
        acc = sum(vals[j] / (math.factorial(j) * math.factorial(2 * k - j + 1))
                  for j in range(k))
        vals.append(Fraction(math.factorial(k + 1) * math.factorial(k - 1)) * acc)
    if K > RATIONAL_MOMENT_LIMIT:
        floats = [float(v) for v in vals]
        for k in range(RATIONAL_MOMENT_LIMIT + 1, K + 1):
            terms = [
                math.exp(math.lgamma(k + 2) + math.lgamma(k)
                         - math.lgamma(j + 1) - math.lgamma(2 * k - j + 2)) * floats[j]
                for j in range(k)
            ]
            val = math.fsum(terms)
            floats.append(val)
            vals.append(val)
    return MomentTable(values=tuple(vals))


def x_norm(p: int, table_size: int = 70) -> float:
    """||X||_p for integer p >= 1."""
    if not (isinstance(p, int) and p >= 1):
        raise ValueError("the moment recursion provides integer p only")
    if p > table_size:
        table_size = p
    return float(moments(table_size)[p]) ** (1.0 / p)


def tail_bound(eps: float, kappa: int = 16) -> float:
    """Upper bound on P(X >= 1 - eps): best of 2^((k^2-k)/4) * eps^(k/2), k <= kappa."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    best = min(2.0 ** ((k * k - k) / 4.0) * eps ** (k / 2.0) for k in range(1, kappa + 1))
    return min(1.0, best)


def _f_zero_scan(tol: float) -> tuple[float, float, float]:
    """(kept partial sum, bracket lo, bracket hi) of sum (-1)^k E[X^k].

    Truncates before the first term <= tol; the kept partial sum and the
    one with that term appended straddle the limit (alternating series),
    so the kept value carries a certified error <= tol.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    partial = 1.0
    for k in range(1, 501):
        term = float(moments(max(70, k))[k])
        appended = partial + (-1) ** k * term
        if term <= tol:
            return partial, min(partial, appended), max(partial, appended)
        partial = appended
    raise RuntimeError("alternating series did not reach the tolerance")


def f_zero_bracket(tol: float = 1e-9) -> tuple[float, float]:
    """Consecutive partial sums straddling f(0), width <= tol."""
    _, lo, hi = _f_zero_scan(tol)
    return lo, hi


def f_zero(tol: float = 1e-9) -> float:
    """Density value at 0, E[1/(1+X)], certified to within tol."""
    kept, _, _ = _f_zero_scan(tol)
    return kept


def p_t(t: float) -> float:
    """Lower integration limit 2*sqrt(t) - 1 of the integral equation."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return 2.0 * math.sqrt(t) - 1.0


def g_kernel(x: float, t: float) -> float:
    """Kernel 1/sqrt((1+x)^2 - 4t); defined for (1+x)^2 > 4t."""
    disc = (1.0 + x) ** 2 - 4.0 * t
    if disc <= 0.0:
        raise ValueError(f"kernel undefined at x={x}, t={t}")
    return 1.0 / math.sqrt(disc)


def g_antiderivative(x: float, t: float) -> float:
    """Antiderivative of the kernel in x: log(1 + x + sqrt((1+x)^2 - 4t))."""
    disc = (1.0 + x) ** 2 - 4.0 * t
    if disc < 0.0:
        raise ValueError(f"antiderivative undefined at x={x}, t={t}")
    return math.log(1.0 + x + math.sqrt(disc))


def h_split(t: float) -> float:
    """Integral of the kernel from p_t to (p_t + t)/2 in closed form."""
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    rt = math.sqrt(t)
    return math.log(1.0 + ((1.0 - rt) ** 2 + (1.0 - rt) * math.sqrt(1.0 + 6.0 * rt + t))
                    / (4.0 * rt))


@dataclass(frozen=True)
class DensityBoundLedger:
    """Interval endpoints b_i, per-interval bounds M_n, and their maximum."""

    b: tuple[float, ...]
    m: tuple[int, ...]
    global_sup: float

    def rows(self) -> list[tuple[int, float, int]]:
        alphas = _interval_lefts(len(self.m), self.b)
        return [(n, alphas[n], self.m[n]) for n in range(len(self.m))]

    def format_table(self) -> str:
        lines = ["  n    left endpoint    M_n"]
        for n, a, m in self.rows():
            lines.append(f"{n:3d}    {a:<13.10g}    {m:3d}")
        lines.append(f"global sup bound: {self.global_sup:g}")
        return "\n".join(lines)


def _interval_lefts(count: int, b: Sequence[float]) -> list[float]:
    # interval 0 is [0, 1/4]; odd intervals start at b_k, even ones at the
    # midpoint of (b_k, b_{k+1}).
    lefts = [0.0]
    for n in range(1, count):
        k = (n + 1) // 2
        lefts.append(b[k] if n % 2 == 1 else (b[k] + b[k + 1]) / 2.0)
    return lefts


def density_bound_ledger(max_intervals: int = 12) -> DensityBoundLedger:
    """A-priori density bound by interval induction.

    b_0 = 0, b_i = ((1 + b_{i-1})/2)^2; the bound on the first interval
    comes from the explicit kernel integral, later intervals use
    M_n = ceil(2*h(left endpoint)*max(M_{n-1}, M_{n-2}) + 4*sqrt(2)).
    The sequence decreases once h drops below 2/7, so the maximum is global.
    """
    b = [0.0]
    for _ in range(max_intervals // 2 + 2):
        b.append(((1.0 + b[-1]) / 2.0) ** 2)
    m0 = math.ceil(4.0 * math.sqrt(2.0) * math.log(1.0 + (1.0 + math.sqrt(17.0)) / 8.0)
                   + 16.0 / math.sqrt(17.0))
    m = [m0]
    lefts = _interval_lefts(max_intervals, b)
    for n in range(1, max_intervals):
        prev = max(m[n - 1], m[n - 2] if n >= 2 else m[0])
        m.append(math.ceil(2.0 * h_split(lefts[n]) * prev + 4.0 * math.sqrt(2.0)))
    return DensityBoundLedger(b=tuple(b), m=tuple(m), global_sup=float(max(m)))


def holder_modulus(density_sup: float) -> bounds.ModulusSpec:
    """Square-root modulus 9 * density_sup * sqrt(delta) of the limit density."""
    if density_sup <= 0.0:
        raise ValueError("density_sup must be positive")
    return bounds.holder(9.0 * density_sup, 0.5)


def _g_antider(x: np.ndarray, t: float) -> np.ndarray:
    """Exact antiderivative of the kernel: log(1 + x + sqrt((1+x)^2 - 4t))."""
    disc = np.maximum((1.0 + x) ** 2 - 4.0 * t, 0.0)
    return np.log(1.0 + x + np.sqrt(disc))


def _step_integral(edges: np.ndarray, values: np.ndarray, lo: float, hi: float, t: float) -> float:
    """Integral of g(., t) times a step density over [lo, hi], cell-exact."""
    if hi <= lo:
        return 0.0
    clipped = np.clip(edges, lo, hi)
    g = _g_antider(clipped, t)
    return float(np.sum(values * np.diff(g)))


def integral_residual(density: DensityEstimate, n_grid: int = 193,
                      t_lo: float = 0.02, t_hi: float = 0.98) -> float:
    """Diagnostic: sup over a t-grid of |f(t) - integral equation rhs|.

    The rhs is 2 * int_{p_t}^{t} g(x,t) f(x) dx + int_t^1 g(x,t) f(x) dx
    with f the step density; each cell is integrated with the exact kernel
    antiderivative, so the square-root singularity at p_t needs no special
    handling.  Small residuals are evidence, large ones flag a bug; this is
    diagnostic-grade, not certificate-grade.
    """
    edges = np.arange(density.k_lo, density.k_lo + density.values.size + 1,
                      dtype=np.float64) / density.s
    values = density.values
    worst = 0.0
    for t in np.linspace(t_lo, t_hi, n_grid):
        lo1 = max(p_t(t), 0.0)
        rhs = 2.0 * _step_integral(edges, values, lo1, t, t) \
            + _step_integral(edges, values, t, 1.0, t)
        worst = max(worst, abs(density.value_at(t) - rhs))
    return worst
