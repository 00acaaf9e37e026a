"""Matrix-product-state evolution of compiled programs on open chains.

Gates are applied row by row; bond dimension is restored once per row by a
left-QR / right-SVD canonicalization sweep that also hands back every
Schmidt spectrum. The truncation rule keeps singular values whose squared
weight exceeds ``eps`` times the total (default 1e-20, i.e. effectively
exact until chi_max bites).

Periodic programs are supported for small systems only: the wrap bond is
realized by swapping the last site next to the first, applying the gate,
and swapping back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compiler import CircuitProgram, GateDescriptor
from .dense import ZeroNormError, renyi_from_spectrum

__all__ = ["MPSState", "evolve_mps", "entropy_mps", "log_partition_mps"]

DEFAULT_EPS = 1e-20

_SWAP = np.eye(4).reshape(2, 2, 2, 2).transpose(1, 0, 2, 3).copy()


@dataclass
class MPSState:
    tensors: list  # A[i] with shape (chi_l, 2, chi_r)
    log_weight: float
    n_sites: int
    # Schmidt spectra per bond from the last canonicalization sweep
    spectra: list = field(default_factory=list)

    def bond_dims(self):
        return [a.shape[2] for a in self.tensors[:-1]]


def _init_plus(n: int) -> MPSState:
    a = np.full((1, 2, 1), 2.0**-0.5)
    return MPSState([a.copy() for _ in range(n)], 0.0, n)


def _one_site(state: MPSState, x: int, op: np.ndarray) -> None:
    state.tensors[x] = np.einsum("st,ltr->lsr", op, state.tensors[x])


def _two_site(
    state: MPSState, x: int, gate: np.ndarray, eps: float, chi_max: int | None
) -> None:
    """Apply a (2,2,2,2) gate to adjacent sites (x, x+1) with a local SVD."""
    a, b = state.tensors[x], state.tensors[x + 1]
    theta = np.einsum("lsr,rtk->lstk", a, b)
    theta = np.einsum("uvst,lstk->luvk", gate, theta)
    cl, _, _, cr = theta.shape
    u, s, vh = np.linalg.svd(theta.reshape(cl * 2, 2 * cr), full_matrices=False)
    keep = _keep_count(s, eps, chi_max)
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    state.tensors[x] = u.reshape(cl, 2, keep)
    state.tensors[x + 1] = (s[:, None] * vh).reshape(keep, 2, cr)


def _keep_count(s: np.ndarray, eps: float, chi_max: int | None) -> int:
    total = float(np.sum(s**2))
    if total == 0.0:
        raise ZeroNormError("state annihilated during truncation")
    keep = int(np.sum(s**2 > eps * total))
    keep = max(keep, 1)
    if chi_max is not None:
        keep = min(keep, chi_max)
    return keep


def _apply_gate(state, g: GateDescriptor, eps, chi_max) -> None:
    if g.kind == "weak_x":
        c, s = math.cosh(g.strength), math.sinh(g.strength)
        _one_site(state, g.x, np.array([[c, s], [s, c]]))
    elif g.kind == "proj_x_plus":
        _one_site(state, g.x, np.full((2, 2), 0.5))
    elif g.kind in ("weak_zz", "test_spin_zz"):
        lo, hi = min(g.x, g.x2), max(g.x, g.x2)
        if math.isinf(g.strength):
            diag = np.array([1.0, 0.0, 0.0, 1.0] if g.sign > 0 else [0.0, 1.0, 1.0, 0.0])
        else:
            w = g.strength * g.sign
            diag = np.exp(np.array([w, -w, -w, w]))
        gate = np.diag(diag).reshape(2, 2, 2, 2)
        if hi - lo == 1:
            _two_site(state, lo, gate, eps, chi_max)
        else:
            # wrap bond: shuttle the far site over with swaps
            if not (lo == 0 and hi == state.n_sites - 1):
                raise ValueError(f"non-adjacent bond ({g.x}, {g.x2})")
            for x in range(hi - 1, lo, -1):
                _two_site(state, x, _SWAP, eps, chi_max)
            _two_site(state, lo, gate, eps, chi_max)
            for x in range(lo + 1, hi):
                _two_site(state, x, _SWAP, eps, chi_max)
    else:
        raise ValueError(f"unknown gate kind {g.kind!r}")


def _canonicalize(state: MPSState, eps: float, chi_max: int | None) -> None:
    """Left-QR then right-SVD sweep: normalize, truncate, collect spectra."""
    n = state.n_sites
    ts = state.tensors
    for i in range(n - 1):
        cl, _, cr = ts[i].shape
        q, r = np.linalg.qr(ts[i].reshape(cl * 2, cr))
        ts[i] = q.reshape(cl, 2, q.shape[1])
        ts[i + 1] = np.einsum("ab,bsr->asr", r, ts[i + 1])
    norm = float(np.linalg.norm(ts[-1]))
    if norm == 0.0:
        raise ZeroNormError("state annihilated")
    ts[-1] = ts[-1] / norm
    state.log_weight += math.log(norm)
    spectra = [None] * (n - 1)
    for i in range(n - 1, 0, -1):
        cl, _, cr = ts[i].shape
        u, s, vh = np.linalg.svd(ts[i].reshape(cl, 2 * cr), full_matrices=False)
        keep = _keep_count(s, eps, chi_max)
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        s = s / float(np.linalg.norm(s))
        spectra[i - 1] = s**2
        ts[i] = vh.reshape(keep, 2, cr)
        ts[i - 1] = np.einsum("lsr,rk->lsk", ts[i - 1], u * s)
    state.spectra = spectra


def evolve_mps(
    prog: CircuitProgram,
    eps: float = DEFAULT_EPS,
    chi_max: int | None = None,
    state: MPSState | None = None,
    rows=None,
) -> MPSState:
    """Run (part of) a program; pass state/rows for incremental sampling loops."""
    if state is None:
        state = _init_plus(prog.n_sites)
    if rows is None:
        rows = prog.rows
    for row in rows:
        for g in row.iter_gates():
            _apply_gate(state, g, eps, chi_max)
            state.log_weight += g.log_prefactor
        _canonicalize(state, eps, chi_max)
    return state


def entropy_mps(state: MPSState, l: int, n=1) -> float:
    """Renyi-n entropy (nats) across bond l, from the last sweep's spectra."""
    if l == 0 or l == state.n_sites:
        return 0.0
    if not state.spectra:
        raise ValueError("state has no Schmidt spectra; evolve at least one row")
    return renyi_from_spectrum(state.spectra[l - 1], n)


def log_partition_mps(prog: CircuitProgram, eps: float = DEFAULT_EPS,
                      chi_max: int | None = None) -> float:
    """ln Z: evolve, contract against <+...+|, add the cap normalization."""
    if prog.terminal != "plus":
        raise ValueError("log_partition requires the |+> terminal cap")
    state = evolve_mps(prog, eps, chi_max)
    plus = np.full(2, 2.0**-0.5)
    env = np.ones((1, 1))
    log_scale = 0.0
    for a in state.tensors:
        env = np.einsum("ab,bsr,s->ar", env, a, plus)
        scale = float(np.abs(env).max())
        if scale == 0.0:
            raise ZeroNormError("terminal overlap vanished")
        env /= scale
        log_scale += math.log(scale)
    overlap = float(env[0, 0])
    if overlap <= 0.0:
        raise RuntimeError("nonpositive terminal overlap; compiler bug")
    return state.log_weight + log_scale + math.log(overlap) + prog.cap_log_weight
