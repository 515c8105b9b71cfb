"""Piecewise-polynomial coefficient functions on [0, 1].

Coefficient functions are restricted to a closed descriptor family
(polynomials and piecewise polynomials) so that exact sup-norms and
Lipschitz constants can be computed from the descriptor instead of being
trusted from user input.  Opaque callables are deliberately not accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PiecewisePolynomial",
    "poly",
    "piecewise",
    "constant",
    "affine",
    "identity",
    "parabola",
]


def _horner(coeffs: Sequence[float], u: float) -> float:
    v = 0.0
    for c in reversed(coeffs):
        v = v * u + c
    return v


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial pieces on consecutive subintervals of [0, 1].

    ``breaks`` has ``len(coeffs) + 1`` entries starting at 0.0 and ending at
    1.0; piece ``m`` covers ``[breaks[m], breaks[m+1])`` (the last piece is
    closed on the right).  ``coeffs[m]`` lists coefficients in ascending
    powers of ``u``.
    """

    breaks: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.breaks) != len(self.coeffs) + 1:
            raise ValueError("need len(coeffs) + 1 breakpoints")
        if self.breaks[0] != 0.0 or self.breaks[-1] != 1.0:
            raise ValueError("descriptor must cover exactly [0, 1]")
        if any(b >= c for b, c in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(len(cs) == 0 for cs in self.coeffs):
            raise ValueError("empty coefficient list")

    def piece_index(self, u: float) -> int:
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"argument {u!r} outside [0, 1]")
        for m in range(len(self.coeffs) - 1):
            if u < self.breaks[m + 1]:
                return m
        return len(self.coeffs) - 1

    def __call__(self, u: float) -> float:
        return _horner(self.coeffs[self.piece_index(u)], u)

    def eval_many(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        out = np.empty_like(u)
        edges = np.asarray(self.breaks[1:-1])
        idx = np.searchsorted(edges, u, side="right")
        for m in range(len(self.coeffs)):
            mask = idx == m
            if mask.any():
                out[mask] = np.polynomial.polynomial.polyval(u[mask], self.coeffs[m])
        return out

    def derivative(self) -> "PiecewisePolynomial":
        dcs = []
        for cs in self.coeffs:
            if len(cs) == 1:
                dcs.append((0.0,))
            else:
                dcs.append(tuple(k * c for k, c in enumerate(cs) if k > 0))
        return PiecewisePolynomial(self.breaks, tuple(dcs))

    def sup_abs(self) -> float:
        """Exact sup of |p| over [0, 1] via stationary points of each piece."""
        best = 0.0
        for m, cs in enumerate(self.coeffs):
            lo, hi = self.breaks[m], self.breaks[m + 1]
            cand = [lo, hi]
            if len(cs) > 2:
                dcoef = [k * c for k, c in enumerate(cs)][1:]
                roots = np.roots(list(reversed(dcoef)))
                for r in roots:
                    if abs(r.imag) < 1e-12 and lo <= r.real <= hi:
                        cand.append(float(r.real))
            best = max(best, max(abs(_horner(cs, u)) for u in cand))
        return best

    def lipschitz(self) -> float:
        return self.derivative().sup_abs()

    def descriptor(self) -> dict:
        return {"kind": "piecewise", "breaks": list(self.breaks),
                "pieces": [list(cs) for cs in self.coeffs]}


def poly(coeffs: Iterable[float]) -> PiecewisePolynomial:
    """Single polynomial on [0, 1], coefficients in ascending powers."""
    return PiecewisePolynomial((0.0, 1.0), (tuple(float(c) for c in coeffs),))


def piecewise(breaks: Iterable[float], pieces: Iterable[Iterable[float]]) -> PiecewisePolynomial:
    return PiecewisePolynomial(
        tuple(float(b) for b in breaks),
        tuple(tuple(float(c) for c in cs) for cs in pieces),
    )


def constant(c: float) -> PiecewisePolynomial:
    return poly([c])


def affine(a: float, b: float) -> PiecewisePolynomial:
    """u -> a + b*u."""
    return poly([a, b])


def identity() -> PiecewisePolynomial:
    return poly([0.0, 1.0])


def parabola() -> PiecewisePolynomial:
    """u -> u*(1 - u)."""
    return poly([0.0, 1.0, -1.0])


def from_descriptor(desc: dict) -> PiecewisePolynomial:
    """Build a coefficient function from a config-file descriptor."""
    kind = desc.get("kind")
    if kind == "constant":
        return constant(float(desc["c"]))
    if kind == "affine":
        return affine(float(desc["a"]), float(desc["b"]))
    if kind == "poly":
        return poly(desc["coeffs"])
    if kind == "piecewise":
        return piecewise(desc["breaks"], desc["pieces"])
    raise ValueError(f"unknown coefficient function kind: {kind!r}")
