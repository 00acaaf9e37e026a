"""Dense amplitude-vector evolution: ground truth for every other backend.

All compiled gates have nonnegative real matrix elements, so amplitudes are
kept real. The state is renormalized after every row with the norm absorbed
into log_weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compiler import CircuitProgram, GateDescriptor, compile_program
from .lattice import (
    DilutionMask,
    DisorderRealization,
    LatticeSpec,
    VortexConfig,
    gauge_fix_temporal,
    vortices,
)

__all__ = ["DenseState", "evolve", "entropy", "log_partition", "born_enumerate"]

DEFAULT_MAX_SITES = 14


class ZeroNormError(RuntimeError):
    """A forced projection annihilated the state."""


@dataclass
class DenseState:
    amplitudes: np.ndarray  # shape (2,)*n_sites, real
    log_weight: float
    n_sites: int


def _plus_state(n: int) -> np.ndarray:
    psi = np.full(2**n, 2.0 ** (-n / 2.0))
    return psi.reshape((2,) * n)


def _z_values(n: int, x: int) -> np.ndarray:
    """Broadcastable +-1 eigenvalues of Z on site x (index 0 -> +1)."""
    shape = [1] * n
    shape[x] = 2
    return np.array([1.0, -1.0]).reshape(shape)


def _apply_gate(psi: np.ndarray, g: GateDescriptor, n: int) -> np.ndarray:
    if g.kind in ("weak_zz", "test_spin_zz"):
        zz = _z_values(n, g.x) * _z_values(n, g.x2)
        if math.isinf(g.strength):
            return psi * (zz * g.sign > 0)
        return psi * np.exp(g.strength * g.sign * zz)
    if g.kind == "weak_x":
        flipped = np.flip(psi, axis=g.x)
        return math.cosh(g.strength) * psi + math.sinh(g.strength) * flipped
    if g.kind == "proj_x_plus":
        return 0.5 * (psi + np.flip(psi, axis=g.x))
    raise ValueError(f"unknown gate kind {g.kind!r}")


def evolve(prog: CircuitProgram, max_sites: int = DEFAULT_MAX_SITES) -> DenseState:
    """Apply all rows to |+...+>, renormalizing after each row."""
    n = prog.n_sites
    if n > max_sites:
        raise ValueError(f"{n} sites exceeds the dense guard ({max_sites})")
    psi = _plus_state(n)
    log_weight = 0.0
    for y, row in enumerate(prog.rows):
        for g in row.iter_gates():
            psi = _apply_gate(psi, g, n)
            log_weight += g.log_prefactor
        norm = float(np.linalg.norm(psi))
        if norm == 0.0:
            raise ZeroNormError(f"state annihilated in row {y}")
        psi = psi / norm
        log_weight += math.log(norm)
    return DenseState(psi, log_weight, n)


def _schmidt_squared(state: DenseState, l: int, start: int = 0) -> np.ndarray:
    """Eigenvalues of the reduced density matrix of sites [start, start+l)."""
    n = state.n_sites
    if not 0 <= l <= n:
        raise ValueError(f"cut l={l} out of range for {n} sites")
    if l == 0 or l == n:
        return np.array([1.0])
    region = [(start + i) % n for i in range(l)]
    rest = [i for i in range(n) if i not in region]
    m = np.transpose(state.amplitudes, region + rest).reshape(2**l, 2 ** (n - l))
    svals = np.linalg.svd(m, compute_uv=False)
    lam = svals**2
    return lam[lam > 1e-300]


def renyi_from_spectrum(lam: np.ndarray, n) -> float:
    lam = lam / lam.sum()
    if n == 1:
        return float(-np.sum(lam * np.log(lam)))
    if n == math.inf:
        return float(-math.log(lam.max()))
    return float(math.log(np.sum(lam ** float(n))) / (1.0 - float(n)))


def entropy(state: DenseState, l: int, n=1, start: int = 0) -> float:
    """Renyi-n entanglement entropy (nats) of the interval [start, start+l)."""
    lam = _schmidt_squared(state, l, start)
    return renyi_from_spectrum(lam, n)


def log_partition(prog: CircuitProgram, max_sites: int = DEFAULT_MAX_SITES) -> float:
    """ln <+| prod_y M(y) |+> with all tracked prefactors: ln Z of Eq-style
    diluted classical Ising sum over the L_x x L_y site lattice."""
    if prog.terminal != "plus":
        raise ValueError("log_partition requires the |+> terminal cap")
    state = evolve(prog, max_sites)
    plus = _plus_state(prog.n_sites)
    overlap = float(np.vdot(plus.ravel(), state.amplitudes.ravel()))
    if overlap <= 0.0:
        raise RuntimeError("nonpositive terminal overlap; compiler bug")
    return state.log_weight + math.log(overlap) + prog.cap_log_weight


def born_enumerate(
    spec: LatticeSpec,
    t: float,
    mask: DilutionMask,
    max_bonds: int = 20,
    max_sites: int = DEFAULT_MAX_SITES,
):
    """Exact Born distribution over VortexConfig for a fixed dilution mask.

    Enumerates all sign assignments on the measured bonds, weights each by
    its partition function, and aggregates by vortex configuration.
    Returns a dict mapping VortexConfig.key() -> probability.
    """
    n_m = mask.n_measured
    if n_m > max_bonds:
        raise ValueError(f"{n_m} measured bonds exceeds the enumeration guard")
    sp_idx = np.argwhere(mask.spatial)
    tp_idx = np.argwhere(mask.temporal)
    keys = []
    logz = []
    for bits in range(2**n_m):
        sp_sign = np.zeros(mask.spatial.shape, dtype=np.int8)
        tp_sign = np.zeros(mask.temporal.shape, dtype=np.int8)
        for k, (x, y) in enumerate(sp_idx):
            sp_sign[x, y] = 1 if (bits >> k) & 1 else -1
        for k, (x, y) in enumerate(tp_idx):
            tp_sign[x, y] = 1 if (bits >> (k + len(sp_idx))) & 1 else -1
        real = DisorderRealization(mask, sp_sign, tp_sign)
        keys.append(vortices(real).key())
        fixed = gauge_fix_temporal(real)
        prog = compile_program(spec, t, p_meas=1.0, real=fixed)
        try:
            logz.append(log_partition(prog, max_sites))
        except ZeroNormError:
            # frustrated configuration at the projective point: zero weight
            logz.append(-math.inf)
    logz = np.array(logz)
    w = np.exp(logz - logz.max())
    w /= w.sum()
    dist: dict = {}
    for key, p in zip(keys, w):
        dist[key] = dist.get(key, 0.0) + float(p)
    return dist
