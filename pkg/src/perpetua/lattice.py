"""Lattice PMF container, CDF queries, Kolmogorov distance, density array.

The iteration state is a probability mass function on the lattice
{k/s : k in Z}, stored densely over an integer index window.  After two
steps the support is essentially an interval, so a dense array wins over
any sparse map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, TextIO

import numpy as np

from .model import PerpetuitySpec

__all__ = [
    "LatticePMF",
    "SupportBound",
    "DensityEstimate",
    "support_q",
    "cdf",
    "kolmogorov_vs",
    "extract_density",
    "write_pmf_csv",
    "write_density_csv",
]

MASS_TOL = 1e-12
_DENSITY_MASS_TOL = 1e-9


@dataclass(frozen=True)
class LatticePMF:
    """PMF on {k/s}: mass[k - k_min] = P(X = k/s) for k_min <= k <= k_max."""

    s: int
    k_min: int
    k_max: int
    mass: np.ndarray

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("resolution must be >= 1")
        if self.k_min > self.k_max:
            raise ValueError("empty index window")
        m = np.ascontiguousarray(self.mass, dtype=np.float64)
        if m.shape != (self.k_max - self.k_min + 1,):
            raise ValueError("mass length does not match index window")
        if m.min(initial=0.0) < 0.0:
            raise ValueError("negative mass")
        total = float(m.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {total} deviates from 1 by more than {MASS_TOL}")
        m.flags.writeable = False
        object.__setattr__(self, "mass", m)

    @staticmethod
    def point_mass(s: int, k: int) -> "LatticePMF":
        return LatticePMF(s=s, k_min=k, k_max=k, mass=np.ones(1))

    @property
    def n_atoms(self) -> int:
        return self.k_max - self.k_min + 1

    def positions(self) -> np.ndarray:
        """Atom locations k/s as float64, ascending."""
        return np.arange(self.k_min, self.k_max + 1, dtype=np.float64) / self.s

    def cdf_right(self) -> np.ndarray:
        """F(k/s) at each atom (right-continuous values)."""
        return np.cumsum(self.mass)

    def observed_max_density(self) -> float:
        return float(self.mass.max() * self.s)


@dataclass(frozen=True)
class SupportBound:
    """Index-window bound: either the recursive box [-q, q] or a clipped interval."""

    q: Optional[int] = None
    clipped: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if (self.q is None) == (self.clipped is None):
            raise ValueError("exactly one of q / clipped must be set")
        if self.q is not None and self.q < 1:
            raise ValueError("q must be >= 1")

    def index_window(self, s: int) -> tuple[int, int]:
        if self.clipped is not None:
            lo, hi = self.clipped
            return (math.ceil(s * lo), math.floor(s * hi))
        return (-s * self.q, s * self.q)


def support_q(spec: PerpetuitySpec, n: int) -> SupportBound:
    """Support bound after n steps.

    With a support hint the clipped interval is used for every n (the
    recursion grows linearly when sup|A| = 1 and would waste memory).
    Otherwise Q_n = ceil(sup|A| * Q_{n-1} + sup|b|), Q_0 = ceil(E X),
    with Q_0 forced up to 1 so the box is never empty.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if spec.support_hint is not None:
        return SupportBound(clipped=spec.support_hint)
    a_inf = spec.sup_a()
    b_inf = spec.sup_b()
    q = max(1, math.ceil(spec.mean_x))
    for _ in range(n):
        q = math.ceil(a_inf * q + b_inf)
    return SupportBound(q=q)


def cdf(pmf: LatticePMF, x: float) -> float:
    """P(X <= x), right-continuous step function."""
    xs = pmf.positions()
    idx = int(np.searchsorted(xs, x, side="right"))
    if idx == 0:
        return 0.0
    return float(pmf.cdf_right()[idx - 1])


def kolmogorov_vs(pmf: LatticePMF, f_ref: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_x |F_pmf(x) - f_ref(x)| for a monotone reference CDF.

    Exact for a step function against a continuous reference: the supremum
    over each flat piece is attained at an atom, from the left or the
    right, so it suffices to compare both one-sided values at every atom.
    The left limit of the reference is probed one ulp below the atom, which
    also makes the distance of a PMF to its own step CDF exactly zero.
    """
    xs = pmf.positions()
    right = pmf.cdf_right()
    left = right - pmf.mass
    ref = np.asarray(f_ref(xs), dtype=np.float64)
    if ref.shape != xs.shape:
        raise ValueError("reference CDF must evaluate elementwise on arrays")
    ref_before = np.asarray(f_ref(np.nextafter(xs, -np.inf)), dtype=np.float64)
    gap = np.maximum(np.abs(right - ref), np.abs(left - ref_before))
    return float(gap.max())


@dataclass(frozen=True)
class DensityEstimate:
    """Windowed-average density: values[i] at x = k/s for k = k_lo + i.

    values[k] = s/(2d) * sum of mass over lattice indices (k-d, k+d]; this
    equals the symmetric CDF difference quotient with half-width
    delta = d/s evaluated at lattice points.
    """

    s: int
    d: int
    k_lo: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("window half-width d must be >= 1")
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty 1-d array")
        if v.min() < 0.0:
            raise ValueError("negative density value")
        riemann = float(v.sum() / self.s)
        if abs(riemann - 1.0) > _DENSITY_MASS_TOL:
            raise ValueError(f"Riemann mass {riemann} deviates from 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def delta(self) -> float:
        return self.d / self.s

    @property
    def domain(self) -> tuple[float, float]:
        return (self.k_lo / self.s, (self.k_lo + self.values.size - 1) / self.s)

    def positions(self) -> np.ndarray:
        return np.arange(self.k_lo, self.k_lo + self.values.size, dtype=np.float64) / self.s

    def value_at(self, x: float) -> float:
        """Step lookup: value of the cell [k/s, (k+1)/s) containing x."""
        k = math.floor(self.s * x)
        i = k - self.k_lo
        if not 0 <= i < self.values.size:
            return 0.0
        return float(self.values[i])

    def max_on(self, lo: float, hi: float) -> float:
        xs = self.positions()
        sel = (xs >= lo) & (xs <= hi)
        if not sel.any():
            raise ValueError("empty restriction interval")
        return float(self.values[sel].max())


def extract_density(pmf: LatticePMF, d: int) -> DensityEstimate:
    """Density array from windowed mass averages, window sum over (k-d, k+d].

    Values are produced for every k whose window touches the stored mass,
    so the Riemann sum of the output over its domain is exactly 1.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    # a window wider than the occupied index range only smears mass outwards;
    # a single-atom PMF still admits the minimal window d = 1
    if d > max(1, pmf.k_max - pmf.k_min):
        raise ValueError(
            f"averaging window exceeds support (d={d}, index span={pmf.k_max - pmf.k_min})")
    span = pmf.n_atoms
    # cumulative[m] = sum of mass over indices <= m, shifted so that
    # out-of-range windows clip to 0 / total.
    cum = np.concatenate(([0.0], np.cumsum(pmf.mass)))

    def cum_at(k: np.ndarray) -> np.ndarray:
        return cum[np.clip(k - pmf.k_min + 1, 0, span)]

    k_lo = pmf.k_min - d
    k_hi = pmf.k_max + d - 1
    ks = np.arange(k_lo, k_hi + 1)
    window = cum_at(ks + d) - cum_at(ks - d)
    values = window * (pmf.s / (2.0 * d))
    return DensityEstimate(s=pmf.s, d=d, k_lo=k_lo, values=values)


def write_pmf_csv(pmf: LatticePMF, fh: TextIO) -> None:
    """Rows ``k,x,mass,cdf`` in ascending k."""
    fh.write("k,x,mass,cdf\n")
    right = pmf.cdf_right()
    xs = pmf.positions()
    for i, k in enumerate(range(pmf.k_min, pmf.k_max + 1)):
        fh.write(f"{k},{xs[i]:.17g},{pmf.mass[i]:.17g},{right[i]:.17g}\n")


def write_density_csv(est: DensityEstimate, fh: TextIO) -> None:
    """Rows ``k,x,density`` in ascending k."""
    fh.write("k,x,density\n")
    xs = est.positions()
    for i, k in enumerate(range(est.k_lo, est.k_lo + est.values.size)):
        fh.write(f"{k},{xs[i]:.17g},{est.values[i]:.17g}\n")
