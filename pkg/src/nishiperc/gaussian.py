"""Free-fermion evolution of the compiled programs.

Every gate the compiler emits is quadratic after a Jordan-Wigner rotation
taken in the X basis: with

    gamma_{2i}   = (prod_{j<i} X_j) Z_i
    gamma_{2i+1} = (prod_{j<i} X_j) Y_i

one finds X_i = -i gamma_{2i+1} gamma_{2i} and
Z_i Z_{i+1} = -i gamma_{2i+2} gamma_{2i+1}. The wrap bond of a periodic
chain picks up the global parity operator; the initial |+...+> state and
every compiled gate preserve parity +1, on which sector
Z_{L-1} Z_0 = -i gamma_{2L-1} gamma_0 (note the pair order, opposite to
the naive continuation of the interior bonds).

Two representations are provided:

* ``MajoranaState``: the real antisymmetric covariance
  Gamma_ab = <-i gamma_a gamma_b>, updated gate by gate with exact norm
  bookkeeping (log_weight), so it can reproduce ln Z and serves as the
  large-L twin of the dense backend.
* ``SubspaceState``: the isotropic annihilator subspace w (2L x L complex,
  orthonormal columns), updated a whole layer at a time with a QR
  re-orthonormalization per row. Much faster for long campaigns; does not
  track norms and does not support forced projections, so it requires
  p_meas = 1 programs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compiler import CircuitProgram, GateDescriptor
from .dense import ZeroNormError, renyi_from_spectrum

__all__ = [
    "MajoranaState",
    "SubspaceState",
    "init_plus",
    "evolve_covariance",
    "evolve_subspace",
    "entropy_state",
    "entropy_profile",
    "log_partition_gaussian",
]


@dataclass
class MajoranaState:
    gamma: np.ndarray  # (2n, 2n) real antisymmetric
    log_weight: float
    n_sites: int


def init_plus(n: int) -> MajoranaState:
    """|+...+>: X_i = +1 for all i, i.e. Gamma[2i+1, 2i] = 1."""
    g = np.zeros((2 * n, 2 * n))
    for i in range(n):
        g[2 * i + 1, 2 * i] = 1.0
        g[2 * i, 2 * i + 1] = -1.0
    return MajoranaState(g, 0.0, n)


def _pair_for_gate(g: GateDescriptor, n: int):
    """(a, b, theta) such that the gate is exp((theta/2) K), K = -i g_a g_b."""
    if g.kind == "weak_x":
        return 2 * g.x + 1, 2 * g.x, 2.0 * g.strength
    if g.kind == "proj_x_plus":
        return 2 * g.x + 1, 2 * g.x, math.inf
    if g.kind in ("weak_zz", "test_spin_zz"):
        lo, hi = min(g.x, g.x2), max(g.x, g.x2)
        if hi - lo == 1:
            return 2 * lo + 2, 2 * lo + 1, 2.0 * g.strength * g.sign
        # periodic wrap bond (0, n-1): parity-sector pair order
        if lo == 0 and hi == n - 1:
            return 2 * n - 1, 0, 2.0 * g.strength * g.sign
        raise ValueError(f"non-adjacent bond ({g.x}, {g.x2})")
    raise ValueError(f"unknown gate kind {g.kind!r}")


def _apply_pair(state: MajoranaState, a: int, b: int, theta: float) -> None:
    """In-place exp((theta/2) K), K = -i gamma_a gamma_b, with norm tracking.

    With lam = tanh(theta) and G = Gamma[a, b]:

        Gamma'[a, b] = (G + lam) / (1 + lam G)
        Gamma'[c, x] = Gamma[c, x] / (cosh(theta) (1 + lam G)),  x in {a, b}
        Gamma'[c, d] = Gamma[c, d]
                       - lam (Gamma[c,a] Gamma[d,b] - Gamma[c,b] Gamma[d,a])
                         / (1 + lam G)

    and the squared-norm gain is cosh(theta) + sinh(theta) G. theta = inf is
    the projector (1 + K)/2 with gain (1 + G)/2.
    """
    gm = state.gamma
    g_ab = gm[a, b]
    if math.isinf(theta):
        lam = 1.0 if theta > 0 else -1.0
        denom = 1.0 + lam * g_ab
        if denom <= 1e-300:
            raise ZeroNormError("projection annihilated the state")
        gain2 = 0.5 * denom
        cross_scale = 0.0
    else:
        lam = math.tanh(theta)
        denom = 1.0 + lam * g_ab
        if denom <= 1e-300:
            raise ZeroNormError("weak gate annihilated the state")
        gain2 = math.cosh(theta) + math.sinh(theta) * g_ab
        cross_scale = 1.0 / (math.cosh(theta) * denom)

    col_a = gm[:, a].copy()
    col_b = gm[:, b].copy()
    gm -= (lam / denom) * (np.outer(col_a, col_b) - np.outer(col_b, col_a))
    gm[:, a] = col_a * cross_scale
    gm[:, b] = col_b * cross_scale
    gm[a, :] = -gm[:, a]
    gm[b, :] = -gm[:, b]
    gm[a, b] = (g_ab + lam) / denom
    gm[b, a] = -gm[a, b]
    gm[a, a] = 0.0
    gm[b, b] = 0.0
    state.log_weight += 0.5 * math.log(gain2)


def evolve_covariance(prog: CircuitProgram) -> MajoranaState:
    """Run the full program on |+...+> in the covariance representation."""
    n = prog.n_sites
    state = init_plus(n)
    for row in prog.rows:
        for g in row.iter_gates():
            a, b, theta = _pair_for_gate(g, n)
            _apply_pair(state, a, b, theta)
            state.log_weight += g.log_prefactor
        # antisymmetry drifts by rounding; restore it cheaply once per row
        state.gamma = 0.5 * (state.gamma - state.gamma.T)
    return state


def _block_nus(gamma: np.ndarray, l: int, n: int, start: int) -> np.ndarray:
    """Singular values (one per fermion mode) of the region's Gamma block."""
    idx = [(2 * (start % n) + k + 2 * i) % (2 * n) for i in range(l) for k in (0, 1)]
    sub = gamma[np.ix_(idx, idx)]
    sv = np.linalg.svd(sub, compute_uv=False)
    return np.clip(sv[::2], 0.0, 1.0)


def entropy_state(state: MajoranaState, l: int, n=1, start: int = 0) -> float:
    """Renyi-n entropy (nats) of sites [start, start+l) from the covariance."""
    if l == 0 or l == state.n_sites:
        return 0.0
    nus = _block_nus(state.gamma, l, state.n_sites, start)
    p = 0.5 * (1.0 + nus)
    q = 0.5 * (1.0 - nus)
    if n == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = -p * np.log(p) - q * np.log(q)
        return float(np.nansum(terms))
    if n == math.inf:
        return float(-np.sum(np.log(np.maximum(p, q))))
    return float(np.sum(np.log(p ** float(n) + q ** float(n))) / (1.0 - float(n)))


def entropy_profile(state: MajoranaState, n=1, start: int = 0) -> np.ndarray:
    return np.array(
        [entropy_state(state, l, n, start) for l in range(state.n_sites + 1)]
    )


def log_partition_gaussian(prog: CircuitProgram) -> float:
    """ln Z via sequential projection of the final state onto |+...+>."""
    if prog.terminal != "plus":
        raise ValueError("log_partition requires the |+> terminal cap")
    state = evolve_covariance(prog)
    for x in range(prog.n_sites):
        _apply_pair(state, 2 * x + 1, 2 * x, math.inf)
    # the accumulated projector gains equal ln |<+...+|psi>|^2; halved above
    return state.log_weight + prog.cap_log_weight


# -- fast annihilator-subspace path ---------------------------------------


@dataclass
class SubspaceState:
    """Columns of w span the annihilator space: (w^T gamma) |psi> = 0.

    Orthonormal (w^dag w = 1) and isotropic (w^T w = 0); both properties are
    preserved exactly by the complex-orthogonal layer maps, and orthonormality
    is refreshed by QR once per row.
    """

    w: np.ndarray  # (2n, n) complex
    n_sites: int

    def covariance(self) -> np.ndarray:
        g = np.real(-1j * (2.0 * np.conj(self.w) @ self.w.T - np.eye(2 * self.n_sites)))
        return 0.5 * (g - g.T)


def init_plus_subspace(n: int) -> SubspaceState:
    """Annihilators of |+...+>: (gamma_{2i} + i gamma_{2i+1})/2 kill X_i=+1."""
    w = np.zeros((2 * n, n), dtype=complex)
    for i in range(n):
        w[2 * i, i] = 0.5 ** 0.5
        w[2 * i + 1, i] = -1j * 0.5 ** 0.5
    return SubspaceState(w, n)


def _layer_apply(w: np.ndarray, pairs) -> None:
    """Apply e^{A} for a layer of disjoint pair rotations, in place.

    The annihilator vectors transform as w -> e^{A} w where the gate is
    exp((1/4) gamma^T A gamma); for each (a, b, theta) the block of e^{A}
    on rows (a, b) is [[cosh t, -i sinh t], [i sinh t, cosh t]].
    """
    if not pairs:
        return
    aa = np.array([p[0] for p in pairs])
    bb = np.array([p[1] for p in pairs])
    th = np.array([p[2] for p in pairs])
    touched = np.concatenate([aa, bb])
    if len(np.unique(touched)) < len(touched):
        # overlapping pairs (possible for tiny periodic chains): fancy
        # indexing would drop all but the last update, so go one by one
        for a, b, t in pairs:
            _layer_apply_indexed(w, np.array([a]), np.array([b]), np.array([t]))
        return
    _layer_apply_indexed(w, aa, bb, th)


def _layer_apply_indexed(w, aa, bb, th) -> None:
    """Vectorized disjoint-pair layer: rows aa/bb mixed with angles th."""
    ch = np.cosh(th)[:, None]
    sh = np.sinh(th)[:, None]
    wa = w[aa]
    wb = w[bb]
    w[aa] = ch * wa - 1j * sh * wb
    w[bb] = 1j * sh * wa + ch * wb


def steady_state_rows(
    state: SubspaceState,
    zz_signs: np.ndarray,
    beta: float,
    beta_prime: float,
    periodic: bool = True,
    qr_every: int = 1,
) -> SubspaceState:
    """Fast p_meas = 1 row driver for steady-state campaigns.

    zz_signs has shape (n_rows, n_bonds) with entries +-1; every row applies
    the full-strength ZZ layer followed by the dual X layer. Norms are not
    tracked. QR re-orthonormalization runs every ``qr_every`` rows (and
    always after the last row): the layer maps are exact either way, QR only
    controls conditioning, which grows like e^{2 beta} per row.
    """
    n = state.n_sites
    n_sp = n if periodic else n - 1
    if zz_signs.ndim != 2 or zz_signs.shape[1] != n_sp:
        raise ValueError(f"zz_signs must have shape (rows, {n_sp})")
    # bond i joins sites (i, i+1): pair (2i+2, 2i+1); the wrap bond flips order
    zz_a = np.array([2 * i + 2 for i in range(n_sp)])
    zz_b = np.array([2 * i + 1 for i in range(n_sp)])
    if periodic:
        zz_a[n_sp - 1] = 2 * n - 1
        zz_b[n_sp - 1] = 0
    x_a = np.arange(1, 2 * n, 2)
    x_b = np.arange(0, 2 * n, 2)
    x_th = np.full(n, 2.0 * beta_prime)
    w = state.w
    n_rows = zz_signs.shape[0]
    for y, signs in enumerate(zz_signs):
        _layer_apply_indexed(w, zz_a, zz_b, 2.0 * beta * signs)
        _layer_apply_indexed(w, x_a, x_b, x_th)
        if (y + 1) % qr_every == 0 or y == n_rows - 1:
            w, _ = np.linalg.qr(w)
    state.w = w
    return state


def entropy_profile_subspace(state: SubspaceState, ls, renyi_ns=(1,)) -> np.ndarray:
    """Entropies at the requested cut lengths, shape (len(renyi_ns), len(ls))."""
    g = state.covariance()
    N = state.n_sites
    out = np.empty((len(renyi_ns), len(ls)))
    for j, l in enumerate(ls):
        nus = _block_nus(g, int(l), N, 0)
        p = 0.5 * (1.0 + nus)
        q = 0.5 * (1.0 - nus)
        for i, n in enumerate(renyi_ns):
            if n == 1:
                with np.errstate(divide="ignore", invalid="ignore"):
                    out[i, j] = float(np.nansum(-p * np.log(p) - q * np.log(q)))
            elif n == math.inf:
                out[i, j] = float(-np.sum(np.log(np.maximum(p, q))))
            else:
                out[i, j] = float(
                    np.sum(np.log(p ** float(n) + q ** float(n))) / (1.0 - float(n))
                )
    return out


def evolve_subspace(prog: CircuitProgram, state: SubspaceState | None = None,
                    rows=None) -> SubspaceState:
    """Run (part of) a projector-free program in the subspace representation.

    Passing ``state`` and ``rows`` supports incremental evolution for
    steady-state sampling loops.
    """
    n = prog.n_sites
    if state is None:
        state = init_plus_subspace(n)
    if rows is None:
        rows = prog.rows
    w = state.w
    for row in rows:
        for layer in (row.pre_x, row.zz, row.post_x):
            pairs = []
            for g in layer:
                a, b, theta = _pair_for_gate(g, n)
                if math.isinf(theta):
                    raise ValueError(
                        "subspace evolution does not support projections; "
                        "use evolve_covariance for p_meas < 1"
                    )
                pairs.append((a, b, theta))
            if pairs:
                _layer_apply(w, pairs)
        w, _ = np.linalg.qr(w)
    state.w = w
    return state
