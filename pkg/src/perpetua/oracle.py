"""Monte-Carlo ground truth via the truncated backward series.

Iterating the defining equation backwards gives
X = b_1 + A_1 b_2 + A_1 A_2 b_3 + ...; truncating after M levels leaves an
L_1 error of at most ||A||_1^M * ||b||_1 / (1 - ||A||_1).  Samples come
from a named counter-based generator in fixed-size substreams, so results
are reproducible per seed and a parallel driver concatenating substreams
in order would produce the identical array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .model import PerpetuitySpec

__all__ = [
    "GENERATOR_NAME",
    "McConfig",
    "McResult",
    "default_truncation",
    "truncation_error",
    "sample",
    "dkw_band",
    "ecdf_at",
    "write_samples_csv",
]

GENERATOR_NAME = "philox4x64-10"
_SUBSTREAM = 1 << 17


@dataclass(frozen=True)
class McConfig:
    samples: int
    truncation: int
    rng_seed: int = 20_260_810

    def __post_init__(self) -> None:
        if self.samples < 1 or self.truncation < 1:
            raise ValueError("samples and truncation must be >= 1")


@dataclass(frozen=True)
class McResult:
    values: np.ndarray
    truncation_error: float
    generator: str
    seed: int


def _b_norm1_bound(spec: PerpetuitySpec) -> float:
    return math.fsum(w * br.sup_psi for w, br in spec.branches)


def truncation_error(spec: PerpetuitySpec, m: int) -> float:
    """L_1 tail bound of the backward series after m levels."""
    a1 = spec.a_norm(1.0)
    if a1 >= 1.0:
        raise ValueError("backward series needs ||A||_1 < 1")
    return a1 ** m * _b_norm1_bound(spec) / (1.0 - a1)


def default_truncation(spec: PerpetuitySpec, tol: float = 1e-6) -> int:
    """Smallest series length with certified L_1 truncation error <= tol."""
    a1 = spec.a_norm(1.0)
    if a1 >= 1.0:
        raise ValueError("backward series needs ||A||_1 < 1")
    if a1 == 0.0 or _b_norm1_bound(spec) == 0.0:
        return 1
    m = 1
    while truncation_error(spec, m) > tol:
        m += 1
    return m


def _sample_block(spec: PerpetuitySpec, rng: np.random.Generator, size: int, m: int) -> np.ndarray:
    weights = np.array([w for w, _ in spec.branches])
    cuts = np.cumsum(weights)[:-1]
    x = np.zeros(size)
    for _ in range(m):  # Horner form of the backward series, deepest level first
        u = rng.random(size)
        if len(spec.branches) == 1:
            _, br = spec.branches[0]
            a = br.phi.eval_many(u)
            b = br.psi.eval_many(u)
        else:
            pick = np.searchsorted(cuts, rng.random(size), side="right")
            a = np.empty(size)
            b = np.empty(size)
            for i, (_, br) in enumerate(spec.branches):
                sel = pick == i
                if sel.any():
                    a[sel] = br.phi.eval_many(u[sel])
                    b[sel] = br.psi.eval_many(u[sel])
        x = b + a * x
    return x


def sample(spec: PerpetuitySpec, cfg: McConfig) -> McResult:
    """Draw cfg.samples truncated backward-series values, seed-deterministic."""
    root = np.random.SeedSequence(cfg.rng_seed)
    n_blocks = -(-cfg.samples // _SUBSTREAM)
    children = root.spawn(n_blocks)
    parts = []
    remaining = cfg.samples
    for child in children:
        size = min(_SUBSTREAM, remaining)
        rng = np.random.Generator(np.random.Philox(child))
        parts.append(_sample_block(spec, rng, size, cfg.truncation))
        remaining -= size
    values = np.concatenate(parts)
    values.flags.writeable = False
    return McResult(values=values, truncation_error=truncation_error(spec, cfg.truncation),
                    generator=GENERATOR_NAME, seed=cfg.rng_seed)


def dkw_band(samples: int, confidence: float) -> float:
    """Uniform empirical-CDF band sqrt(log(2/(1-confidence)) / (2*samples))."""
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * samples))


def ecdf_at(values: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Empirical CDF of `values` evaluated at each x."""
    sorted_vals = np.sort(values)
    return np.searchsorted(sorted_vals, xs, side="right") / len(sorted_vals)


def write_samples_csv(result: McResult, fh) -> None:
    """Single column ``x`` in stream order, 17 significant digits."""
    fh.write("x\n")
    for v in result.values:
        fh.write(f"{v:.17g}\n")
