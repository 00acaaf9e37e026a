"""Stabilizer-tableau evolution for programs at the projective point.

At t = pi/4 every compiled gate is either a forced-outcome ZZ projection or
an X projection, so the state stays a stabilizer state throughout. The
tableau keeps destabilizers (rows 0..n-1) and stabilizers (rows n..2n-1)
with X/Z bit-planes packed into uint64 words; the hot loops are numba jitted.

Entanglement of a contiguous cut [0, l): with the generator matrix written
site-by-site (columns 2i, 2i+1 holding the X and Z bits of site i),

    S(l) / ln 2 = rank_F2(first 2l columns) - l

and a single left-to-right elimination pass yields every prefix rank, hence
the whole entropy profile, at once.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .compiler import CircuitProgram
from .dense import ZeroNormError

__all__ = [
    "CliffordState",
    "init_plus_clifford",
    "evolve_clifford",
    "entropy_profile_clifford",
    "zz_expectation",
]


@njit(cache=True)
def _phase_words(x1, z1, x2, z2):
    """Signed count of i-exponents for one word pair (row1 multiplied onto row2)."""
    plus = (x1 & z1 & z2 & ~x2) | (x1 & ~z1 & z2 & x2) | (~x1 & z1 & x2 & ~z2)
    minus = (x1 & z1 & x2 & ~z2) | (x1 & ~z1 & z2 & ~x2) | (~x1 & z1 & x2 & z2)
    c = 0
    p = plus
    while p:
        p &= p - np.uint64(1)
        c += 1
    m = minus
    while m:
        m &= m - np.uint64(1)
        c -= 1
    return c


@njit(cache=True)
def _rowsum(xs, zs, r, h, i, W):
    """Row h *= row i with exact phase tracking (result is always +-1)."""
    tot = 2 * int(r[h]) + 2 * int(r[i])
    for w in range(W):
        tot += _phase_words(xs[i, w], zs[i, w], xs[h, w], zs[h, w])
        xs[h, w] ^= xs[i, w]
        zs[h, w] ^= zs[i, w]
    r[h] = np.uint8((tot % 4) // 2)


@njit(cache=True)
def _anticommutes(xs, zs, row, px, pz, W):
    par = np.uint64(0)
    for w in range(W):
        par ^= (xs[row, w] & pz[w]) ^ (zs[row, w] & px[w])
    c = 0
    while par:
        par &= par - np.uint64(1)
        c ^= 1
    return c


@njit(cache=True)
def _project(xs, zs, r, px, pz, pr, n, W):
    """Force the state into the +1 eigenspace of the signed Pauli (px,pz,pr).

    Returns 1 if the outcome was random (norm halves), 0 if it was already
    deterministic and compatible, -1 on a contradiction (zero norm).
    """
    pivot = -1
    for row in range(n, 2 * n):
        if _anticommutes(xs, zs, row, px, pz, W):
            pivot = row
            break
    if pivot >= 0:
        for row in range(2 * n):
            if row != pivot and _anticommutes(xs, zs, row, px, pz, W):
                _rowsum(xs, zs, r, row, pivot, W)
        # old stabilizer becomes the destabilizer conjugate to the new one
        d = pivot - n
        for w in range(W):
            xs[d, w] = xs[pivot, w]
            zs[d, w] = zs[pivot, w]
            xs[pivot, w] = px[w]
            zs[pivot, w] = pz[w]
        r[d] = r[pivot]
        r[pivot] = pr
        return 1
    # deterministic: accumulate the stabilizer product matching P
    sx = np.zeros(W, dtype=np.uint64)
    sz = np.zeros(W, dtype=np.uint64)
    tot = 0
    for i in range(n):
        if _anticommutes(xs, zs, i, px, pz, W):
            tot += 2 * int(r[i + n])
            for w in range(W):
                tot += _phase_words(xs[i + n, w], zs[i + n, w], sx[w], sz[w])
                sx[w] ^= xs[i + n, w]
                sz[w] ^= zs[i + n, w]
    sign = (tot % 4) // 2
    return 0 if sign == pr else -1


@njit(cache=True)
def _prefix_ranks(rows, n, n_cols):
    """Running F2 rank after each column, rows packed least-bit-first."""
    W = rows.shape[1]
    out = np.empty(n_cols + 1, dtype=np.int64)
    out[0] = 0
    rank = 0
    for c in range(n_cols):
        w, b = c // 64, np.uint64(c % 64)
        pivot = -1
        for row in range(rank, n):
            if (rows[row, w] >> b) & np.uint64(1):
                pivot = row
                break
        if pivot >= 0:
            if pivot != rank:
                for k in range(W):
                    tmp = rows[rank, k]
                    rows[rank, k] = rows[pivot, k]
                    rows[pivot, k] = tmp
            for row in range(n):
                if row != rank and ((rows[row, w] >> b) & np.uint64(1)):
                    for k in range(W):
                        rows[row, k] ^= rows[rank, k]
            rank += 1
        out[c + 1] = rank
    return out


@njit(cache=True)
def _run_rows(xs, zs, r, n, W, sp_meas, sp_sign, tp_meas, periodic):
    """Projective-point steady-state rows, whole chunk inside numba.

    Per row: forced ZZ projections on the measured spatial bonds, then X
    projections on the unmeasured temporal bonds (measured temporal bonds
    are the identity at the projective point). Returns 0, or -1 on a
    contradictory forced outcome (cannot happen for gauge-consistent signs).
    """
    n_rows = sp_meas.shape[0]
    n_sp = n if periodic else n - 1
    px = np.zeros(W, dtype=np.uint64)
    pz = np.zeros(W, dtype=np.uint64)
    one = np.uint64(1)
    for y in range(n_rows):
        for i in range(n_sp):
            if sp_meas[y, i]:
                j = (i + 1) % n
                for w in range(W):
                    pz[w] = np.uint64(0)
                pz[i // 64] |= one << np.uint64(i % 64)
                pz[j // 64] |= one << np.uint64(j % 64)
                pr = np.uint8(1) if sp_sign[y, i] < 0 else np.uint8(0)
                if _project(xs, zs, r, px, pz, pr, n, W) < 0:
                    return -1
        for w in range(W):
            pz[w] = np.uint64(0)
        for i in range(n):
            if not tp_meas[y, i]:
                for w in range(W):
                    px[w] = np.uint64(0)
                px[i // 64] |= one << np.uint64(i % 64)
                if _project(xs, zs, r, px, pz, np.uint8(0), n, W) < 0:
                    return -1
        for w in range(W):
            px[w] = np.uint64(0)
    return 0


class CliffordState:
    """Aaronson-Gottesman tableau with packed bit-planes."""

    __slots__ = ("n", "W", "xs", "zs", "r", "log_weight")

    def __init__(self, n: int):
        self.n = n
        self.W = (n + 63) // 64
        self.xs = np.zeros((2 * n, self.W), dtype=np.uint64)
        self.zs = np.zeros((2 * n, self.W), dtype=np.uint64)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.log_weight = 0.0

    def _setbit(self, plane, row, q):
        plane[row, q // 64] |= np.uint64(1) << np.uint64(q % 64)

    def project(self, sites_x, sites_z, negate: bool) -> None:
        """Project onto the +1 eigenspace of (-1)^negate * prod X_i prod Z_j."""
        px = np.zeros(self.W, dtype=np.uint64)
        pz = np.zeros(self.W, dtype=np.uint64)
        for q in sites_x:
            px[q // 64] |= np.uint64(1) << np.uint64(q % 64)
        for q in sites_z:
            pz[q // 64] |= np.uint64(1) << np.uint64(q % 64)
        res = _project(self.xs, self.zs, self.r, px, pz, np.uint8(negate), self.n, self.W)
        if res < 0:
            raise ZeroNormError("forced projection contradicts the stabilizer group")
        if res == 1:
            self.log_weight += 0.5 * math.log(0.5)

    def expectation(self, sites_x, sites_z, negate: bool = False) -> int:
        """+-1 if the signed Pauli is (anti-)stabilized, else 0."""
        px = np.zeros(self.W, dtype=np.uint64)
        pz = np.zeros(self.W, dtype=np.uint64)
        for q in sites_x:
            px[q // 64] |= np.uint64(1) << np.uint64(q % 64)
        for q in sites_z:
            pz[q // 64] |= np.uint64(1) << np.uint64(q % 64)
        for row in range(self.n, 2 * self.n):
            if _anticommutes(self.xs, self.zs, row, px, pz, self.W):
                return 0
        xs = self.xs.copy()
        zs = self.zs.copy()
        res = _project(xs, zs, self.r.copy(), px, pz, np.uint8(negate), self.n, self.W)
        return 1 if res == 0 else -1


def init_plus_clifford(n: int) -> CliffordState:
    st = CliffordState(n)
    for i in range(n):
        st._setbit(st.zs, i, i)  # destabilizer Z_i
        st._setbit(st.xs, i + n, i)  # stabilizer X_i
    return st


def evolve_clifford(prog: CircuitProgram) -> CliffordState:
    """Run a projective-point program (all-inf ZZ gates, no weak X layer)."""
    st = init_plus_clifford(prog.n_sites)
    for row in prog.rows:
        for g in row.iter_gates():
            if g.kind in ("weak_zz", "test_spin_zz"):
                if not math.isinf(g.strength):
                    raise ValueError("stabilizer backend needs projective couplings")
                st.project((), (g.x, g.x2), g.sign < 0)
            elif g.kind == "proj_x_plus":
                st.project((g.x,), (), False)
                st.log_weight += g.log_prefactor
            else:
                raise ValueError(f"non-Clifford gate {g.kind!r}")
    return st


def steady_state_rows_clifford(
    st: CliffordState,
    sp_meas: np.ndarray,
    sp_sign: np.ndarray,
    tp_meas: np.ndarray,
    periodic: bool = True,
) -> CliffordState:
    """Apply a chunk of projective-point rows (see _run_rows)."""
    res = _run_rows(
        st.xs,
        st.zs,
        st.r,
        st.n,
        st.W,
        np.ascontiguousarray(sp_meas),
        np.ascontiguousarray(sp_sign),
        np.ascontiguousarray(tp_meas),
        periodic,
    )
    if res < 0:
        raise ZeroNormError("forced projection contradicts the stabilizer group")
    return st


def _site_order_matrix(st: CliffordState, start: int) -> np.ndarray:
    """Stabilizer generators as packed rows, columns (x_i, z_i) per site."""
    n = st.n
    cols = np.zeros((n, 2 * n), dtype=np.uint8)
    for i in range(n):
        q = (start + i) % n
        w, b = q // 64, np.uint64(q % 64)
        cols[:, 2 * i] = (st.xs[n:, w] >> b) & np.uint64(1)
        cols[:, 2 * i + 1] = (st.zs[n:, w] >> b) & np.uint64(1)
    packed = np.zeros((n, (2 * n + 63) // 64), dtype=np.uint64)
    for c in range(2 * n):
        packed[:, c // 64] |= cols[:, c].astype(np.uint64) << np.uint64(c % 64)
    return packed


def entropy_profile_clifford(st: CliffordState, start: int = 0) -> np.ndarray:
    """S(l) in nats for every l = 0..n of the arc starting at ``start``."""
    rows = _site_order_matrix(st, start)
    ranks = _prefix_ranks(rows, st.n, 2 * st.n)
    l = np.arange(st.n + 1)
    return (ranks[::2] - l) * math.log(2.0)


def zz_expectation(st: CliffordState, x1: int, x2: int) -> int:
    """<Z_x1 Z_x2>, which is 0 or +-1 for a stabilizer state."""
    return st.expectation((), (x1, x2))
