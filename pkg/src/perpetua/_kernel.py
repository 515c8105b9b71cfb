"""Compiled scatter kernel for the lattice update.

Determinism contract: the u-grid is split into fixed-size chunks
(CHUNK_U points, independent of worker count); each chunk accumulates into
a private row, and rows are reduced in ascending chunk order.  Chunk
contents and reduction order therefore never depend on the thread count,
so results are bit-identical for any number of workers.  fastmath stays
off; every float expression is fixed.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

CHUNK_U = 4096


@njit(cache=True, inline="always")
def _ppoly_eval(breaks, coefs, n_pieces, u):
    p = n_pieces - 1
    for q in range(n_pieces - 1):
        if u < breaks[q + 1]:
            p = q
            break
    v = 0.0
    for c in range(coefs.shape[1] - 1, -1, -1):
        v = v * u + coefs[p, c]
    return v


@njit(cache=True, parallel=True)
def scatter_wave(buf, counts, errs, starts, stops, scaled, s_cur, s_prev,
                 prev_lo, out_lo, out_len, symmetric,
                 phi_breaks, phi_coefs, phi_np, psi_breaks, psi_coefs, psi_np):
    """Accumulate one wave of u-chunks into private buffer rows.

    For u-grid point i and branch b the target index of source atom j is
    k = floor(((phi(u) * s_cur) / s_prev) * j + psi(u) * s_cur), i.e. the
    value lattice floor of phi(u) * (j / s_prev) + psi(u) at resolution
    s_cur.  Row w receives only chunk w's contributions.
    """
    n_chunks = starts.shape[0]
    n_branches = scaled.shape[0]
    n_prev = scaled.shape[1]
    for w in prange(n_chunks):
        err = 0
        cnt = 0
        row = buf[w]
        for i in range(starts[w], stops[w]):
            if symmetric == 1:
                u = (2.0 * i + 1.0) / (2.0 * s_cur)
            else:
                u = i / s_cur
            for b in range(n_branches):
                a_val = _ppoly_eval(phi_breaks[b], phi_coefs[b], phi_np[b], u)
                b_val = _ppoly_eval(psi_breaks[b], psi_coefs[b], psi_np[b], u)
                alpha = (a_val * s_cur) / s_prev
                beta = b_val * s_cur
                src = scaled[b]
                fj = float(prev_lo)
                for jj in range(n_prev):
                    k = int(math.floor(alpha * fj + beta))
                    idx = k - out_lo
                    if idx < 0 or idx >= out_len:
                        err = 1
                    else:
                        row[idx] += src[jj]
                    fj += 1.0
                cnt += n_prev
        counts[w] = cnt
        errs[w] = err


def pack_functions(funcs):
    """Pack piecewise polynomials into rectangular arrays for the kernel."""
    n = len(funcs)
    max_pieces = max(len(f.coeffs) for f in funcs)
    max_deg = max(max(len(cs) for cs in f.coeffs) for f in funcs)
    breaks = np.full((n, max_pieces + 1), 2.0)
    coefs = np.zeros((n, max_pieces, max_deg))
    n_pieces = np.zeros(n, dtype=np.int64)
    for i, f in enumerate(funcs):
        np_i = len(f.coeffs)
        n_pieces[i] = np_i
        breaks[i, : np_i + 1] = f.breaks
        for m, cs in enumerate(f.coeffs):
            coefs[i, m, : len(cs)] = cs
    return breaks, coefs, n_pieces
