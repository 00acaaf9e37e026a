"""Per-sample derived observables: chord geometry, entropy records, the
boundary test-spin correlator with its binary entropy, and free-energy
(Casimir) samples.

Entropies are stored in nats throughout; the domain-wall entropy I_s uses
the base-2 convention (bits). NATS_PER_BIT converts between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compiler import CircuitProgram
from .clifford import CliffordState, zz_expectation
from .dense import DenseState
from .mps import MPSState

__all__ = [
    "NATS_PER_BIT",
    "ChordGeometry",
    "EntropySample",
    "DomainWallSample",
    "FreeEnergySample",
    "chord",
    "binary_entropy_bits",
    "domain_wall",
    "casimir_sample",
]

NATS_PER_BIT = math.log(2.0)


@dataclass(frozen=True)
class ChordGeometry:
    """Ring (periodic) or segment (open) of L sites, lattice spacing 1."""

    L: int
    boundary: str = "periodic"

    def __post_init__(self):
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def log_prefactor_divisor(self) -> float:
        """c_ent = divisor * (slope of S against ln R)."""
        return 3.0 if self.boundary == "periodic" else 6.0


def chord(l, geom: ChordGeometry):
    """Conformal chord distance R(l); R(l) = R(L-l) on the ring."""
    l = np.asarray(l, dtype=float)
    if np.any(l <= 0) or np.any(l >= geom.L):
        raise ValueError(f"cut length must lie strictly inside (0, {geom.L})")
    if geom.boundary == "periodic":
        return (geom.L / math.pi) * np.sin(math.pi * l / geom.L)
    return (2.0 * geom.L / math.pi) * np.sin(math.pi * l / geom.L)


@dataclass
class EntropySample:
    """Entropy profiles of one steady-state snapshot."""

    seed: int
    sample_index: int
    snapshot_row: int
    geom: ChordGeometry
    renyi_ns: tuple  # e.g. (1, 2, 3, inf)
    S: np.ndarray  # (len(renyi_ns), L+1) in nats

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        if self.S.shape != (len(self.renyi_ns), self.geom.L + 1):
            raise ValueError("entropy array shape mismatch")


@dataclass
class DomainWallSample:
    C: float
    I_s_bits: float


@dataclass
class FreeEnergySample:
    minus_log_Z: float
    L_x: int
    L_y: int

    @property
    def site_density(self) -> float:
        return self.minus_log_Z / (self.L_x * self.L_y)


def binary_entropy_bits(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p))


def _zz_dense(state: DenseState, x1: int, x2: int) -> float:
    z = np.array([1.0, -1.0])
    s1 = [1] * state.n_sites
    s1[x1] = 2
    s2 = [1] * state.n_sites
    s2[x2] = 2
    return float(np.sum(state.amplitudes**2 * z.reshape(s1) * z.reshape(s2)))


def _zz_mps(state: MPSState, x1: int, x2: int) -> float:
    z = np.array([1.0, -1.0])
    env = np.ones((1, 1))
    nrm = np.ones((1, 1))
    for i, a in enumerate(state.tensors):
        op = z if i in (x1, x2) else np.ones(2)
        env = np.einsum("ab,asr,s,bsk->rk", env, a, op, a)
        nrm = np.einsum("ab,asr,bsk->rk", nrm, a, a)
    return float(env[0, 0] / nrm[0, 0])


def domain_wall(state, prog: CircuitProgram) -> DomainWallSample:
    """Boundary test-spin correlator C = <Z_left Z_right> and its entropy.

    I_s is invariant under C -> -C, so the test-spin gauge freedom drops out.
    """
    if not prog.has_test_spins:
        raise ValueError("program has no test spins")
    left, right = 0, prog.n_sites - 1
    if isinstance(state, DenseState):
        c = _zz_dense(state, left, right)
    elif isinstance(state, MPSState):
        c = _zz_mps(state, left, right)
    elif isinstance(state, CliffordState):
        c = float(zz_expectation(state, left, right))
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    c = min(1.0, max(-1.0, c))
    return DomainWallSample(C=c, I_s_bits=binary_entropy_bits(0.5 * (1.0 + c)))


def casimir_sample(log_z: float, L_x: int, L_y: int) -> FreeEnergySample:
    if not math.isfinite(log_z):
        raise ValueError("non-finite ln Z")
    return FreeEnergySample(minus_log_Z=-log_z, L_x=L_x, L_y=L_y)
