"""Campaign sampling drivers: steady-state entropy chains, fixed-depth
coherent-information samples, and free-energy samples.

Sign disorder in the steady-state drivers is drawn iid at
P(+) = (1 + sin 2t)/2 per measured bond, without the gauge symmetrization:
entropies depend only on the gauge orbit, and the symmetrization moves
within orbits, so the orbit ensemble is already Born-distributed. Temporal
outcomes are folded into a running per-column frame (the streaming version
of the temporal gauge fix), which flips subsequent spatial signs.

Every sample derives its randomness from (seed, index, purpose) counter
streams, so results are independent of worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import (
    CliffordState,
    entropy_profile_clifford,
    evolve_clifford,
    init_plus_clifford,
    steady_state_rows_clifford,
)
from .compiler import (
    GateDescriptor,
    RowProgram,
    attach_test_spins,
    compile_program,
    couplings_from_t,
)
from .dense import evolve as dense_evolve
from .dense import entropy as dense_entropy
from .dense import log_partition as dense_log_partition
from .gaussian import (
    entropy_profile_subspace,
    init_plus_subspace,
    log_partition_gaussian,
    steady_state_rows,
)
from .lattice import LatticeSpec, gauge_fix_temporal, sample_realization
from .mps import entropy_mps, evolve_mps, log_partition_mps
from .observables import domain_wall
from .rng import RngTag, substream

__all__ = [
    "SteadyStateProtocol",
    "entropy_chain_clifford",
    "entropy_chain_gaussian",
    "coherent_info_sample",
    "free_energy_sample",
    "entropy_campaign",
    "coherent_info_campaign",
    "pick_backend",
]


@dataclass(frozen=True)
class SteadyStateProtocol:
    """Thermalize, then snapshot on a fixed cadence.

    Defaults follow the campaign recipe: burn-in 4L rows, one snapshot
    every L/2 rows.
    """

    L: int
    n_snapshots: int
    therm_rows: int = -1
    cadence: int = -1

    def __post_init__(self):
        if self.therm_rows < 0:
            object.__setattr__(self, "therm_rows", 4 * self.L)
        if self.cadence < 0:
            object.__setattr__(self, "cadence", max(self.L // 2, 1))


def _iid_signs(rng, shape, t):
    p_plus = 0.5 * (1.0 + math.sin(2.0 * t))
    return np.where(rng.random(shape) < p_plus, 1, -1).astype(np.int8)


def entropy_chain_clifford(
    L: int,
    p_meas: float,
    seed: int,
    chain_index: int,
    proto: SteadyStateProtocol,
    ls,
    renyi_ns=(1,),
    periodic: bool = True,
):
    """One steady-state chain at the projective point; yields snapshot arrays.

    Returns (snapshot_rows, S) with S of shape (n_snapshots, len(renyi_ns),
    len(ls)). At t = pi/4 all measurement signs are +1 up to gauge, so the
    forced outcomes are taken as +1 directly.
    """
    rng = substream(seed, chain_index, "clifford-chain")
    st = init_plus_clifford(L)
    n_sp = L if periodic else L - 1

    def run(n_rows):
        sp_meas = rng.random((n_rows, n_sp)) < p_meas
        tp_meas = rng.random((n_rows, L)) < p_meas
        sp_sign = np.ones((n_rows, n_sp), dtype=np.int8)
        steady_state_rows_clifford(st, sp_meas, sp_sign, tp_meas, periodic)

    run(proto.therm_rows)
    rows = []
    S = np.empty((proto.n_snapshots, len(renyi_ns), len(ls)))
    for k in range(proto.n_snapshots):
        run(proto.cadence)
        rows.append(proto.therm_rows + (k + 1) * proto.cadence)
        prof = entropy_profile_clifford(st)
        for i, _n in enumerate(renyi_ns):
            # stabilizer spectra are flat: every Renyi index coincides
            S[k, i] = prof[np.asarray(ls, int)]
    return rows, S


def entropy_chain_gaussian(
    L: int,
    t: float,
    seed: int,
    chain_index: int,
    proto: SteadyStateProtocol,
    ls,
    renyi_ns=(1,),
    periodic: bool = True,
    qr_every: int = 4,
):
    """One p_meas = 1 steady-state chain in the annihilator-subspace picture."""
    cpl = couplings_from_t(t)
    if not (math.isfinite(cpl.beta) and cpl.beta > 0):
        raise ValueError("gaussian steady state needs 0 < t < pi/4")
    rng = substream(seed, chain_index, "gaussian-chain")
    state = init_plus_subspace(L)
    n_sp = L if periodic else L - 1
    frame = np.ones(L, dtype=np.int8)

    def run(n_rows):
        nonlocal frame
        raw = _iid_signs(rng, (n_rows, n_sp), t)
        taus = _iid_signs(rng, (n_rows, L), t)
        signs = np.empty_like(raw)
        for y in range(n_rows):
            # effective spatial sign in the gauge-fixed frame
            signs[y] = raw[y] * frame[:n_sp] * np.roll(frame, -1)[:n_sp]
            frame = frame * taus[y]
        steady_state_rows(state, signs, cpl.beta, cpl.beta_prime, periodic,
                          qr_every)

    run(proto.therm_rows)
    rows = []
    S = np.empty((proto.n_snapshots, len(renyi_ns), len(ls)))
    for k in range(proto.n_snapshots):
        run(proto.cadence)
        rows.append(proto.therm_rows + (k + 1) * proto.cadence)
        S[k] = entropy_profile_subspace(state, ls, renyi_ns)
    return rows, S


def coherent_info_sample(backend: str, L: int, t: float, p_meas: float,
                         seed: int, index: int):
    """One fixed-depth surface-code sample: (C, I_s in bits).

    Geometry: chain of L_x = L + 1 sites between two boundary test spins,
    depth L_y = L rows (code distance L).
    """
    spec = LatticeSpec(L + 1, L, x_boundary="open", protocol="surface-code")
    tag = RngTag(seed, index)
    real = gauge_fix_temporal(sample_realization(spec, t, p_meas, tag))
    prog = attach_test_spins(
        compile_program(spec, t, p_meas, real),
        t,
        p_meas,
        tag.stream("test-spins"),
        frame=real.frame_flips(),
    )
    if backend == "clifford":
        state = evolve_clifford(prog)
    elif backend == "mps":
        state = evolve_mps(prog)
    elif backend == "exact":
        state = dense_evolve(prog)
    else:
        raise ValueError(f"backend {backend!r} cannot produce coherent info")
    dw = domain_wall(state, prog)
    return dw.C, dw.I_s_bits


def free_energy_sample(backend: str, spec: LatticeSpec, t: float, p_meas: float,
                       seed: int, index: int, post_selected: bool = False):
    """minus_log_Z of one realization (or of the clean all-plus system)."""
    tag = RngTag(seed, index)
    if post_selected:
        real = _all_plus_realization(spec)
    else:
        real = gauge_fix_temporal(sample_realization(spec, t, p_meas, tag))
    prog = compile_program(spec, t, p_meas, real)
    if backend == "gaussian":
        return -log_partition_gaussian(prog)
    if backend == "mps":
        return -log_partition_mps(prog)
    if backend == "exact":
        return -dense_log_partition(prog)
    raise ValueError(f"backend {backend!r} cannot produce free energies")


def _all_plus_realization(spec: LatticeSpec):
    from .lattice import DilutionMask, DisorderRealization

    mask = DilutionMask(
        spec,
        np.ones(spec.spatial_shape(), bool),
        np.ones(spec.temporal_shape(), bool),
    )
    return DisorderRealization(
        mask,
        np.ones(spec.spatial_shape(), np.int8),
        np.ones(spec.temporal_shape(), np.int8),
    )


def clean_entropy_profile_mps(L: int, t: float, ls, renyi_ns=(1,), depth=None,
                              chi_max: int | None = 128):
    """Post-selected (all +1) open-stripe entropy profile via MPS."""
    depth = depth or 2 * L
    spec = LatticeSpec(L, depth, x_boundary="open")
    prog = compile_program(spec, t, 1.0, _all_plus_realization(spec))
    state = evolve_mps(prog, chi_max=chi_max)
    # The row product ends on a full bond layer, so the converged state is
    # exp(+beta/2 sum ZZ) times the symmetric transfer-matrix eigenvector.
    # Undo that half layer before reading off the entropy arc.
    beta = couplings_from_t(t).beta
    sym = RowProgram(zz=[
        GateDescriptor("weak_zz", x, x2=x + 1, sign=1, strength=-0.5 * beta)
        for x in range(L - 1)
    ])
    state = evolve_mps(prog, chi_max=chi_max, state=state, rows=[sym])
    out = np.empty((len(renyi_ns), len(ls)))
    for j, l in enumerate(ls):
        for i, n in enumerate(renyi_ns):
            out[i, j] = entropy_mps(state, int(l), n)
    return out


def _campaign_chain(args):
    """One steady-state chain, returning its snapshot moment sums."""
    (backend, L, t, p_meas, seed, ci, n_snap, ls, renyi_ns, periodic) = args
    from .analysis import MomentAccumulator

    proto = SteadyStateProtocol(L, n_snap)
    if backend == "clifford":
        _, S = entropy_chain_clifford(L, p_meas, seed, ci, proto, ls, renyi_ns,
                                      periodic)
    elif backend == "gaussian":
        _, S = entropy_chain_gaussian(L, t, seed, ci, proto, ls, renyi_ns, periodic)
    else:
        raise ValueError(f"no steady-state driver for backend {backend!r}")
    acc = MomentAccumulator(shape=S.shape[1:])
    for snap in S:
        acc.add(snap)
    return ci, acc.to_arrays()


def entropy_campaign(
    backend: str,
    L: int,
    t: float,
    p_meas: float,
    seed: int,
    n_chains: int,
    snapshots_per_chain: int,
    ls,
    renyi_ns=(1,),
    periodic: bool = True,
    workers: int | None = None,
    n_blocks: int = 20,
):
    """Parallel steady-state campaign; cumulant sums of S over all snapshots.

    Returns a BlockedAccumulator with cell shape (len(renyi_ns), len(ls)),
    blocked by chain index, independent of the worker count.
    """
    from .analysis import BlockedAccumulator, MomentAccumulator

    jobs = [
        (backend, L, t, p_meas, seed, ci, snapshots_per_chain, list(ls),
         tuple(renyi_ns), periodic)
        for ci in range(n_chains)
    ]
    blk = BlockedAccumulator(shape=(len(renyi_ns), len(ls)),
                             n_blocks=min(n_blocks, max(n_chains, 2)))
    for ci, arrays in _run_jobs(_campaign_chain, jobs, workers):
        blk.blocks[ci % blk.n_blocks] = blk.blocks[ci % blk.n_blocks].merge(
            MomentAccumulator.from_arrays(arrays)
        )
    return blk


def _coherent_point(args):
    backend, L, t, p_meas, seed, index = args
    return coherent_info_sample(backend, L, t, p_meas, seed, index)


def coherent_info_campaign(
    backend: str,
    L: int,
    t: float,
    p_meas: float,
    seed: int,
    n_samples: int,
    workers: int | None = None,
):
    """Mean and standard error of I_s (bits) over n_samples realizations."""
    jobs = [(backend, L, t, p_meas, seed, i) for i in range(n_samples)]
    vals = np.array([I for _, I in _run_jobs(_coherent_point, jobs, workers)])
    se = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else math.nan
    return float(vals.mean()), float(se)


def _run_jobs(fn, jobs, workers):
    if workers is None:
        import os

        env = os.environ.get("NISHIPERC_WORKERS")
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    import multiprocessing as mp

    with mp.get_context("spawn").Pool(min(workers, len(jobs))) as pool:
        return pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers)))


def pick_backend(t: float, p_meas: float, n_sites: int, purpose: str) -> str:
    """Auto rule: clifford at the projective point, exact when tiny, mps for
    test-spin work, gaussian for bulk entropy/free-energy campaigns."""
    if abs(t - math.pi / 4) < 1e-12:
        return "clifford"
    if n_sites <= 12:
        return "exact"
    if purpose == "coherent-info":
        return "mps"
    return "gaussian"
