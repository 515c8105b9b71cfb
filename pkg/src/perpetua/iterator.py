"""Core engine: start at the floored mean, apply the lattice update N times.

Each step n maps the resolution-s(n-1) PMF through every grid coefficient
pair and floors the result onto the resolution-s(n) lattice.  Updates are
deterministic and bit-identical across worker counts (see _kernel).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numba
import numpy as np

from ._kernel import CHUNK_U, pack_functions, scatter_wave
from .lattice import LatticePMF, support_q
from .model import DiscretisationSchedule, PerpetuitySpec, UMode, schedule_s

__all__ = [
    "IterationPlan",
    "IterationResult",
    "initialize",
    "update",
    "apply_step",
    "run",
    "op_count_model",
]

# Renormalisation defects far above float accumulation noise indicate a bug.
_DEFECT_LIMIT = 1e-9

ProgressHook = Callable[[int, float, int], None]


def _effective_threads(threads: Optional[int]) -> int:
    avail = numba.config.NUMBA_NUM_THREADS
    if threads is None:
        return avail
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return min(threads, avail)


def _alloc_window(spec: PerpetuitySpec, sched: DiscretisationSchedule, n: int) -> tuple[int, int]:
    """Index window allocated for step n; step 0 is the single initial atom."""
    if n == 0:
        k0 = spec.x_start()
        return (k0, k0)
    return support_q(spec, n).index_window(schedule_s(sched, n))


@dataclass(frozen=True)
class IterationPlan:
    spec: PerpetuitySpec
    sched: DiscretisationSchedule
    n_steps: int
    snapshot_every: Optional[int] = None
    threads: Optional[int] = None
    memory_budget: int = 2 << 30

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        lo, hi = _alloc_window(self.spec, self.sched, self.n_steps)
        final_bytes = (hi - lo + 1) * 8
        if final_bytes > self.memory_budget:
            raise ValueError(
                f"final array needs {final_bytes} bytes, budget is {self.memory_budget}")


@dataclass(frozen=True)
class IterationResult:
    final: LatticePMF
    snapshots: tuple[tuple[int, LatticePMF], ...]
    op_count: int
    renorm_defects: tuple[float, ...] = ()
    wall_time: float = 0.0

    def __post_init__(self) -> None:
        if self.op_count <= 0:
            raise ValueError("op_count must be positive")


def initialize(spec: PerpetuitySpec, sched: DiscretisationSchedule) -> LatticePMF:
    """Point mass at floor(s(0) * E X) / s(0) = floor(E X)."""
    del sched  # s(0) = 1 by convention
    return LatticePMF.point_mass(s=1, k=spec.x_start())


def update(prev: LatticePMF, spec: PerpetuitySpec, sched: DiscretisationSchedule,
           n: int, threads: Optional[int] = None) -> tuple[LatticePMF, int, float]:
    """One lattice step; returns (pmf, inner-loop trips, renorm defect).

    Every u-grid point i in [0, s(n)), every branch and every stored source
    atom j contribute mass w/s(n) * prev.mass[j] to the target index
    floor(s(n) * (phi(u) * j/s(n-1) + psi(u))); zero-mass source cells are
    visited like any other so trip counts match op_count_model exactly.
    Total mass is renormalised afterwards and the pre-normalisation defect
    reported for audit.
    """
    if n < 1:
        raise ValueError("update needs n >= 1")
    s_prev = schedule_s(sched, n - 1)
    if prev.s != s_prev:
        raise ValueError(f"prev.s = {prev.s} but schedule gives s({n - 1}) = {s_prev}")
    out_lo, out_hi = _alloc_window(spec, sched, n)
    return apply_step(prev, spec, schedule_s(sched, n), out_lo, out_hi,
                      sched.u_mode, threads)


def apply_step(prev: LatticePMF, spec: PerpetuitySpec, s_cur: int,
               out_lo: int, out_hi: int, u_mode: UMode,
               threads: Optional[int] = None) -> tuple[LatticePMF, int, float]:
    """Schedule-free core of `update`: one step onto resolution s_cur."""
    s_prev = prev.s
    out_len = out_hi - out_lo + 1

    weights = [w for w, _ in spec.branches]
    scaled = np.ascontiguousarray(
        np.stack([prev.mass * (w / s_cur) for w in weights]))
    phi_breaks, phi_coefs, phi_np = pack_functions([br.phi for _, br in spec.branches])
    psi_breaks, psi_coefs, psi_np = pack_functions([br.psi for _, br in spec.branches])
    symmetric = 1 if u_mode is UMode.SYMMETRIC else 0

    eff = _effective_threads(threads)
    numba.set_num_threads(eff)
    n_chunks = -(-s_cur // CHUNK_U)
    wave = min(eff, n_chunks)
    buf = np.zeros((wave, out_len))
    counts = np.zeros(wave, dtype=np.int64)
    errs = np.zeros(wave, dtype=np.int64)
    total = np.zeros(out_len)
    trips = 0
    for first in range(0, n_chunks, wave):
        rows = min(wave, n_chunks - first)
        starts = np.arange(first, first + rows, dtype=np.int64) * CHUNK_U
        stops = np.minimum(starts + CHUNK_U, s_cur)
        b = buf[:rows]
        b.fill(0.0)
        scatter_wave(b, counts[:rows], errs[:rows], starts, stops, scaled,
                     s_cur, s_prev, prev.k_min, out_lo, out_len, symmetric,
                     phi_breaks, phi_coefs, phi_np, psi_breaks, psi_coefs, psi_np)
        if errs[:rows].any():
            raise RuntimeError(
                "update target fell outside the allocated window; "
                "the support hint is inconsistent with the coefficients")
        trips += int(counts[:rows].sum())
        for w in range(rows):  # fixed ascending order: determinism contract
            total += b[w]

    mass_sum = float(total.sum())
    defect = abs(mass_sum - 1.0)
    total /= mass_sum
    return LatticePMF(s=s_cur, k_min=out_lo, k_max=out_hi, mass=total), trips, defect


def run(plan: IterationPlan, progress: Optional[ProgressHook] = None) -> IterationResult:
    """Run the full iteration; deterministic for a fixed plan."""
    t0 = time.perf_counter()
    pmf = initialize(plan.spec, plan.sched)
    snapshots: list[tuple[int, LatticePMF]] = []
    defects: list[float] = []
    ops = 0
    for n in range(1, plan.n_steps + 1):
        pmf, trips, defect = update(pmf, plan.spec, plan.sched, n, threads=plan.threads)
        ops += trips
        defects.append(defect)
        if defect > _DEFECT_LIMIT:
            raise ArithmeticError(f"mass defect {defect} at step {n} exceeds {_DEFECT_LIMIT}")
        if plan.snapshot_every is not None and n % plan.snapshot_every == 0:
            snapshots.append((n, LatticePMF(pmf.s, pmf.k_min, pmf.k_max, pmf.mass.copy())))
        if progress is not None:
            progress(n, time.perf_counter() - t0, ops)
    return IterationResult(
        final=pmf, snapshots=tuple(snapshots), op_count=ops,
        renorm_defects=tuple(defects), wall_time=time.perf_counter() - t0)


def op_count_model(spec: PerpetuitySpec, sched: DiscretisationSchedule, n_steps: int) -> int:
    """Predicted inner-loop trip count for a run of n_steps.

    Each step performs s(n) * (allocated atoms at n-1) * branches trips;
    the step-0 allocation is the single initial atom.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    total = 0
    prev_lo, prev_hi = _alloc_window(spec, sched, 0)
    for n in range(1, n_steps + 1):
        extent = prev_hi - prev_lo + 1
        total += schedule_s(sched, n) * extent * spec.n_branches
        prev_lo, prev_hi = _alloc_window(spec, sched, n)
    return total
