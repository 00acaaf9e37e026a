"""Compiles a disorder realization into the (1+1)D non-unitary gate program
realizing the column transfer matrix of the diluted lattice.

Gate semantics (what a backend must apply):

* ``weak_zz``      exp(strength * sign * Z_x Z_x2); strength == inf means the
                   projector (1 + sign Z_x Z_x2)/2
* ``weak_x``       exp(strength * X_x)
* ``proj_x_plus``  |+><+| on site x (forced outcome, rank-1)
* ``test_spin_zz`` exp(strength * sign * Z_x Z_x2) between a test spin and a
                   boundary column site

Each gate carries ``log_prefactor``, the natural log of the positive scalar
relating the gate to the exact classical bond factor; backends accumulate it
into the state's log_weight so the terminal overlap reproduces ln Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import DisorderRealization, LatticeSpec

__all__ = [
    "DualCouplings",
    "GateDescriptor",
    "RowProgram",
    "CircuitProgram",
    "couplings_from_t",
    "compile_program",
    "attach_test_spins",
]


@dataclass(frozen=True)
class DualCouplings:
    """Ising coupling beta and its Kramers-Wannier dual field beta_prime.

    Satisfies tanh(beta_prime) * exp(2 beta) = 1 whenever both are finite.
    """

    beta: float
    beta_prime: float


def couplings_from_t(t: float) -> DualCouplings:
    """beta = atanh(sin 2t), beta_prime = -1/2 ln tanh(beta)."""
    if not 0.0 <= t <= math.pi / 4:
        raise ValueError(f"t must lie in [0, pi/4], got {t}")
    s = math.sin(2.0 * t)
    if s >= 1.0:
        return DualCouplings(math.inf, 0.0)
    if s <= 0.0:
        return DualCouplings(0.0, math.inf)
    beta = math.atanh(s)
    beta_prime = -0.5 * math.log(math.tanh(beta))
    return DualCouplings(beta, beta_prime)


@dataclass(frozen=True)
class GateDescriptor:
    kind: str  # weak_zz | weak_x | proj_x_plus | test_spin_zz
    x: int
    x2: int = -1  # second site for two-site gates
    sign: int = 1
    strength: float = 0.0
    log_prefactor: float = 0.0

    def dump_line(self, y: int) -> str:
        return f"{y} {self.kind} {self.x} {self.sign} {self.strength:.17g}"


@dataclass
class RowProgram:
    """One time slice: half-X layer, ZZ layer, half-X layer."""

    pre_x: list = field(default_factory=list)
    zz: list = field(default_factory=list)
    post_x: list = field(default_factory=list)

    def iter_gates(self):
        yield from self.pre_x
        yield from self.zz
        yield from self.post_x

    @property
    def n_gates(self) -> int:
        return len(self.pre_x) + len(self.zz) + len(self.post_x)


@dataclass
class CircuitProgram:
    spec: LatticeSpec
    t: float
    p_meas: float
    rows: list  # list[RowProgram], length L_y
    n_sites: int
    terminal: str = "plus"  # "plus" | "open"
    has_test_spins: bool = False
    # log of the scalar absorbed by the |+> caps (cap normalization)
    cap_log_weight: float = 0.0

    def dump(self) -> str:
        lines = []
        for y, row in enumerate(self.rows):
            for g in row.iter_gates():
                lines.append(g.dump_line(y))
        return "\n".join(lines) + "\n"


def _temporal_gates(couplings: DualCouplings):
    """Half-gate and prefactor bookkeeping for one measured temporal bond.

    e^{beta sigma sigma'} = C e^{beta' X} with C = 2 cosh(beta) e^{-beta'};
    returns (half_strength, half_log_prefactor), or None when beta' == 0
    (projective limit: the X factor degenerates to a scalar).
    """
    bp = couplings.beta_prime
    if bp == 0.0:
        return None
    log_c = math.log(2.0 * math.cosh(couplings.beta)) - bp
    return 0.5 * bp, 0.5 * log_c


def compile_program(
    spec: LatticeSpec, t: float, p_meas: float, real: DisorderRealization
) -> CircuitProgram:
    """Lower a temporal-gauge-fixed realization to an ordered gate program.

    Per row y: measured spatial bond -> weak_zz; unmeasured -> nothing;
    measured temporal bond (x, y) -> weak_x split half after row y, half
    before row y+1; unmeasured temporal bond -> proj_x_plus after row y.
    """
    if real.spec != spec:
        raise ValueError("realization geometry does not match spec")
    if np.any(real.temporal_sign < 0):
        raise ValueError("realization is not temporal-gauge-fixed (sign -1 found)")
    cpl = couplings_from_t(t)
    beta = cpl.beta
    half = _temporal_gates(cpl)
    n_sp = spec.n_spatial_per_row

    rows = []
    for y in range(spec.L_y):
        row = RowProgram()
        if y > 0 and half is not None:
            hs, hl = half
            for x in range(spec.L_x):
                if real.mask.temporal[x, y - 1]:
                    row.pre_x.append(
                        GateDescriptor("weak_x", x, strength=hs, log_prefactor=hl)
                    )
        for x in range(n_sp):
            if real.mask.spatial[x, y]:
                row.zz.append(
                    GateDescriptor(
                        "weak_zz",
                        x,
                        x2=(x + 1) % spec.L_x,
                        sign=int(real.spatial_sign[x, y]),
                        strength=beta,
                    )
                )
        if y < spec.L_y - 1:
            for x in range(spec.L_x):
                if real.mask.temporal[x, y]:
                    if half is not None:
                        hs, hl = half
                        row.post_x.append(
                            GateDescriptor("weak_x", x, strength=hs, log_prefactor=hl)
                        )
                else:
                    row.post_x.append(
                        GateDescriptor(
                            "proj_x_plus", x, log_prefactor=math.log(2.0)
                        )
                    )
        rows.append(row)

    # the two |+> caps together contribute 2^{L_x} to the classical sum
    return CircuitProgram(
        spec=spec,
        t=t,
        p_meas=p_meas,
        rows=rows,
        n_sites=spec.L_x,
        cap_log_weight=spec.L_x * math.log(2.0),
    )


def attach_test_spins(
    prog: CircuitProgram,
    t: float,
    p_meas: float,
    rng: np.random.Generator,
    frame: np.ndarray | None = None,
) -> CircuitProgram:
    """Append boundary test spins (surface-code coherent-information geometry).

    Sites are re-indexed: left test spin at 0, chain at 1..L_x, right test
    spin at L_x+1. Every row gains test_spin_zz couplings to the boundary
    columns, present with probability p_meas and freshly Nishimori-signed.
    Test spins never receive X-layer gates.

    ``frame`` is the bulk realization's cumulative gauge-flip array
    (see DisorderRealization.frame_flips): the raw boundary outcomes are
    drawn in the physical frame and must be flipped wherever the bulk
    record was, or the two records become mutually inconsistent (at the
    projective point, outright contradictory).
    """
    spec = prog.spec
    if spec.x_boundary != "open":
        raise ValueError("test spins require an open x boundary")
    if spec.protocol != "surface-code":
        raise ValueError("test spins require the surface-code protocol")
    if prog.has_test_spins:
        raise ValueError("program already has test spins")
    beta = couplings_from_t(t).beta
    p_plus = 0.5 * (1.0 + math.sin(2.0 * t))
    left, right = 0, spec.L_x + 1
    if frame is None:
        frame = np.zeros((spec.L_x, spec.L_y), dtype=bool)

    def shift(g: GateDescriptor) -> GateDescriptor:
        return GateDescriptor(
            g.kind,
            g.x + 1,
            x2=(g.x2 + 1 if g.x2 >= 0 else -1),
            sign=g.sign,
            strength=g.strength,
            log_prefactor=g.log_prefactor,
        )

    rows = []
    for y, row in enumerate(prog.rows):
        new = RowProgram(
            pre_x=[shift(g) for g in row.pre_x],
            zz=[shift(g) for g in row.zz],
            post_x=[shift(g) for g in row.post_x],
        )
        # present w.p. p_meas, P(sign=+1) = (1+sin 2t)/2, left then right
        for side_site, chain_site in ((left, 1), (right, spec.L_x)):
            present = rng.random() < p_meas
            sign = 1 if rng.random() < p_plus else -1
            if frame[chain_site - 1, y]:
                sign = -sign
            if present:
                new.zz.insert(
                    0,
                    GateDescriptor(
                        "test_spin_zz",
                        side_site,
                        x2=chain_site,
                        sign=sign,
                        strength=beta,
                    ),
                )
        rows.append(new)

    return CircuitProgram(
        spec=spec,
        t=t,
        p_meas=p_meas,
        rows=rows,
        n_sites=spec.L_x + 2,
        terminal=prog.terminal,
        has_test_spins=True,
        cap_log_weight=prog.cap_log_weight,
    )
