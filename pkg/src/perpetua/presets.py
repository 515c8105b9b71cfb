"""Built-in problem instances addressable by name."""

from __future__ import annotations

import re
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import quickselect
from .functions import constant, from_descriptor, identity, parabola, poly
from .model import CoefficientBranch, MomentProvider, PerpetuitySpec

__all__ = [
    "quickselect_spec",
    "interval_splitting_spec",
    "ax1_uniform_spec",
    "beta22_cdf",
    "beta22_density",
    "get_preset",
    "spec_from_config",
    "PRESET_NAMES",
]


def beta22_cdf(x):
    """CDF 3x^2 - 2x^3 on [0, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return 3.0 * x ** 2 - 2.0 * x ** 3


def beta22_density(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where((x >= 0.0) & (x <= 1.0), 6.0 * x * (1.0 - x), 0.0)


def quickselect_spec() -> PerpetuitySpec:
    """X = UX + U(1-U): the key-exchange limit law, supported on [0, 1].

    ||A||_p = (p+1)^(-1/p) exactly; the floor grid is dominated
    (|phi(floor(su)/s)| <= |phi(u)| since phi is the identity), and
    moments come from the exact recursion.
    """
    branch = CoefficientBranch.from_functions(identity(), parabola(), monotone_dominated=True)
    return PerpetuitySpec(
        name="quickselect",
        branches=((1.0, branch),),
        a_norm=lambda p: (1.0 / (p + 1.0)) ** (1.0 / p),
        mean_x=1.0 / 3.0,
        moment_provider=MomentProvider(kind="exact-recursion",
                                       x_norm=lambda p: quickselect.x_norm(int(p))),
        support_hint=(0.0, 1.0),
    )


def interval_splitting_spec() -> PerpetuitySpec:
    """X = (1+U)/2 * X + G*(1-U)/2 with a fair coin G; fixed point Beta(2,2).

    The coin is carried as the branch weight, so only U is discretised.
    A is uniform on [1/2, 1]: ||A||_p^p = (2^(p+1)-1)/(2^p (p+1)).
    ||X||_p^p = 6/((p+2)(p+3)).  The midpoint grid is dominated because
    phi is convex and nonnegative.
    """
    phi = poly([0.5, 0.5])
    keep = CoefficientBranch.from_functions(phi, constant(0.0), monotone_dominated=True)
    move = CoefficientBranch.from_functions(phi, poly([0.5, -0.5]), monotone_dominated=True)
    return PerpetuitySpec(
        name="interval-splitting",
        branches=((0.5, keep), (0.5, move)),
        a_norm=lambda p: ((2.0 ** (p + 1.0) - 1.0) / (2.0 ** p * (p + 1.0))) ** (1.0 / p),
        mean_x=0.5,
        moment_provider=MomentProvider(
            kind="closed-form",
            x_norm=lambda p: (6.0 / ((p + 2.0) * (p + 3.0))) ** (1.0 / p)),
        support_hint=(0.0, 1.0),
        analytic_cdf=beta22_cdf,
        analytic_density=beta22_density,
    )


def ax1_uniform_spec(q: float) -> PerpetuitySpec:
    """X = AX + 1 with A uniform on [0, q], 0 < q < 1; support [1, 1/(1-q)].

    ||A||_p = q * (p+1)^(-1/p); E X = 1/(1 - q/2); the support bound
    provides ||X||_p <= 1/(1-q).
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    hi = 1.0 / (1.0 - q)
    branch = CoefficientBranch.from_functions(poly([0.0, q]), constant(1.0),
                                              monotone_dominated=True)
    return PerpetuitySpec(
        name=f"ax1-uniform({q:g})",
        branches=((1.0, branch),),
        a_norm=lambda p: q * (1.0 / (p + 1.0)) ** (1.0 / p),
        mean_x=1.0 / (1.0 - q / 2.0),
        moment_provider=MomentProvider(kind="support-bound", x_norm=lambda p: hi),
        support_hint=(1.0, hi),
    )


_AX1_PATTERN = re.compile(r"^ax1-uniform\(([0-9.eE+-]+)\)$")

PRESET_NAMES = ("quickselect", "interval-splitting", "ax1-uniform(q)")


def get_preset(name: str) -> PerpetuitySpec:
    if name == "quickselect":
        return quickselect_spec()
    if name == "interval-splitting":
        return interval_splitting_spec()
    m = _AX1_PATTERN.match(name)
    if m:
        return ax1_uniform_spec(float(m.group(1)))
    raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


def _numeric_a_norm(branches) -> Callable[[float], float]:
    def a_norm(p: float) -> float:
        acc = 0.0
        for w, br in branches:
            val, _ = quad(lambda u: abs(br.phi(u)) ** p, 0.0, 1.0, limit=200)
            acc += w * val
        return acc ** (1.0 / p)
    return a_norm


def spec_from_config(doc: dict) -> PerpetuitySpec:
    """Inline problem from a config document.

    Shape: {"name": str, "branches": [{"weight": w, "phi": desc, "psi": desc,
    "monotone_dominated": bool?}], "support": [lo, hi], "mean": x}.
    Coefficient functions use the closed descriptor family (functions module);
    the coefficient norm is integrated numerically and moments fall back to
    the support bound.
    """
    branches = []
    for bdoc in doc["branches"]:
        br = CoefficientBranch.from_functions(
            from_descriptor(bdoc["phi"]), from_descriptor(bdoc["psi"]),
            monotone_dominated=bool(bdoc.get("monotone_dominated", False)))
        branches.append((float(bdoc["weight"]), br))
    lo, hi = (float(v) for v in doc["support"])
    bound = max(abs(lo), abs(hi))
    return PerpetuitySpec(
        name=str(doc.get("name", "custom")),
        branches=tuple(branches),
        a_norm=_numeric_a_norm(tuple(branches)),
        mean_x=float(doc["mean"]),
        moment_provider=MomentProvider(kind="support-bound", x_norm=lambda p: bound),
        support_hint=(lo, hi),
    )
