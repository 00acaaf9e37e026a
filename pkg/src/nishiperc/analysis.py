"""Streaming cumulant estimation, log-chord slope fits, the exact
percolation multifractal spectrum, data collapse, duality maps and
power-law fits.

Cumulants use unbiased k-statistics computed from raw power sums; the
order-5 formula was derived symbolically (unique symmetric polynomial in
power sums with expectation kappa_5 for iid samples) and cross-checked
against scipy for orders 1-4:

    k5 = (n^4 s5 - 5 n^3 s1 s4 - 10 n^3 s2 s3 + 5 n^3 s5
          + 20 n^2 s1^2 s3 + 30 n^2 s1 s2^2 - 25 n^2 s1 s4 + 10 n^2 s2 s3
          - 60 n s1^3 s2 + 40 n s1^2 s3 - 30 n s1 s2^2 + 24 s1^5)
         / (n (n-1) (n-2) (n-3) (n-4))

Power sums are kept with Kahan compensation and accumulators merge by
addition, so workers can own private accumulators and combine at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

__all__ = [
    "MomentAccumulator",
    "BlockedAccumulator",
    "CumulantTable",
    "cumulants",
    "FitResult",
    "fit_log_slope",
    "casimir_fit",
    "SpectrumTable",
    "percolation_spectrum",
    "spectrum_value",
    "CollapseResult",
    "collapse",
    "crossing_finder",
    "duality_map",
    "power_law_fit",
    "ray_point",
    "critical_line_locator",
]

MAX_ORDER = 5

# smallest k for which sqrt(3)/2^(1+k/2) <= 1
SPECTRUM_K_MIN = math.log2(3.0) - 2.0


# -- accumulators ----------------------------------------------------------


class MomentAccumulator:
    """Compensated power sums s_r = sum x^r, r = 1..order, per cell."""

    __slots__ = ("order", "shape", "count", "sums", "comp")

    def __init__(self, shape=(), order: int = MAX_ORDER):
        self.order = order
        self.shape = tuple(shape)
        self.count = 0
        self.sums = np.zeros((order,) + self.shape)
        self.comp = np.zeros((order,) + self.shape)

    def add(self, values) -> None:
        """Add one sample (an array of the accumulator's cell shape)."""
        x = np.asarray(values, dtype=float)
        if x.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {x.shape}")
        p = np.ones_like(x)
        for r in range(self.order):
            p = p * x
            y = p - self.comp[r]
            t = self.sums[r] + y
            self.comp[r] = (t - self.sums[r]) - y
            self.sums[r] = t
        self.count += 1

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if (self.order, self.shape) != (other.order, other.shape):
            raise ValueError("incompatible accumulators")
        out = MomentAccumulator(self.shape, self.order)
        out.count = self.count + other.count
        out.sums = self.sums + other.sums
        out.comp = self.comp + other.comp
        return out

    def k_statistics(self, max_order: int | None = None) -> np.ndarray:
        """Unbiased cumulant estimates, shape (max_order,) + cell shape."""
        m = max_order or self.order
        n = float(self.count)
        if self.count < m + 1:
            raise ValueError(
                f"need at least {m + 1} samples for order {m}, have {self.count}"
            )
        s = self.sums
        out = np.empty((m,) + self.shape)
        out[0] = s[0] / n
        if m >= 2:
            out[1] = (n * s[1] - s[0] ** 2) / (n * (n - 1))
        if m >= 3:
            out[2] = (n**2 * s[2] - 3 * n * s[0] * s[1] + 2 * s[0] ** 3) / (
                n * (n - 1) * (n - 2)
            )
        if m >= 4:
            out[3] = (
                n**3 * s[3]
                - 4 * n**2 * s[0] * s[2]
                - 3 * n**2 * s[1] ** 2
                + n**2 * s[3]
                + 12 * n * s[0] ** 2 * s[1]
                - 4 * n * s[0] * s[2]
                + 3 * n * s[1] ** 2
                - 6 * s[0] ** 4
            ) / (n * (n - 1) * (n - 2) * (n - 3))
        if m >= 5:
            out[4] = (
                n**4 * s[4]
                - 5 * n**3 * s[0] * s[3]
                - 10 * n**3 * s[1] * s[2]
                + 5 * n**3 * s[4]
                + 20 * n**2 * s[0] ** 2 * s[2]
                + 30 * n**2 * s[0] * s[1] ** 2
                - 25 * n**2 * s[0] * s[3]
                + 10 * n**2 * s[1] * s[2]
                - 60 * n * s[0] ** 3 * s[1]
                + 40 * n * s[0] ** 2 * s[2]
                - 30 * n * s[0] * s[1] ** 2
                + 24 * s[0] ** 5
            ) / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4))
        return out

    def to_arrays(self):
        return {"count": self.count, "sums": self.sums, "comp": self.comp}

    @classmethod
    def from_arrays(cls, d) -> "MomentAccumulator":
        sums = np.asarray(d["sums"])
        acc = cls(sums.shape[1:], sums.shape[0])
        acc.count = int(d["count"])
        acc.sums = sums.copy()
        acc.comp = np.asarray(d["comp"]).copy()
        return acc


class BlockedAccumulator:
    """Round-robin blocks of a MomentAccumulator, for jackknife errors."""

    def __init__(self, shape=(), order: int = MAX_ORDER, n_blocks: int = 50):
        if n_blocks < 2:
            raise ValueError("need at least 2 blocks")
        self.n_blocks = n_blocks
        self.blocks = [MomentAccumulator(shape, order) for _ in range(n_blocks)]

    @property
    def count(self) -> int:
        return sum(b.count for b in self.blocks)

    def add(self, values, sample_index: int) -> None:
        self.blocks[sample_index % self.n_blocks].add(values)

    def merge(self, other: "BlockedAccumulator") -> "BlockedAccumulator":
        if self.n_blocks != other.n_blocks:
            raise ValueError("block counts differ")
        out = BlockedAccumulator.__new__(BlockedAccumulator)
        out.n_blocks = self.n_blocks
        out.blocks = [a.merge(b) for a, b in zip(self.blocks, other.blocks)]
        return out

    def pooled(self) -> MomentAccumulator:
        acc = self.blocks[0]
        for b in self.blocks[1:]:
            acc = acc.merge(b)
        return acc

    def to_arrays(self):
        out = {"n_blocks": self.n_blocks}
        for i, b in enumerate(self.blocks):
            for key, val in b.to_arrays().items():
                out[f"b{i}_{key}"] = val
        return out

    @classmethod
    def from_arrays(cls, d) -> "BlockedAccumulator":
        nb = int(d["n_blocks"])
        out = cls.__new__(cls)
        out.n_blocks = nb
        out.blocks = [
            MomentAccumulator.from_arrays(
                {k: d[f"b{i}_{k}"] for k in ("count", "sums", "comp")}
            )
            for i in range(nb)
        ]
        return out


@dataclass
class CumulantTable:
    kappa: np.ndarray  # (order,) + cell shape
    stderr: np.ndarray  # jackknife, same shape
    count: int
    n_blocks: int


def cumulants(acc: BlockedAccumulator, max_order: int = MAX_ORDER) -> CumulantTable:
    """k-statistics with delete-one-block jackknife standard errors."""
    pooled = acc.pooled()
    kappa = pooled.k_statistics(max_order)
    live = [b for b in acc.blocks if b.count > 0]
    B = len(live)
    if B < 2:
        raise ValueError("need at least 2 nonempty blocks for jackknife errors")
    thetas = []
    for i in range(B):
        rest = None
        for j, b in enumerate(live):
            if j == i:
                continue
            rest = b if rest is None else rest.merge(b)
        thetas.append(rest.k_statistics(max_order))
    thetas = np.array(thetas)
    mean = thetas.mean(axis=0)
    var = ((thetas - mean) ** 2).sum(axis=0) * (B - 1) / B
    return CumulantTable(kappa, np.sqrt(var), pooled.count, B)


# -- fits ------------------------------------------------------------------


@dataclass
class FitResult:
    slope: float
    intercept: float
    cov: np.ndarray  # 2x2 (slope, intercept)
    chi2_dof: float
    window: tuple
    n_points: int
    derived: dict = field(default_factory=dict)


def _wls(x, y, yerr):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.ones_like(y) if yerr is None else 1.0 / np.asarray(yerr, float) ** 2
    X = np.column_stack([x, np.ones_like(x)])
    A = X.T @ (w[:, None] * X)
    if abs(np.linalg.det(A)) < 1e-300:
        raise ValueError("singular design matrix")
    cov = np.linalg.inv(A)
    beta = cov @ X.T @ (w * y)
    resid = y - X @ beta
    dof = max(len(y) - 2, 1)
    chi2 = float(np.sum(w * resid**2))
    if yerr is None:
        # scale covariance by residual variance when no errors are supplied
        cov = cov * (chi2 / dof)
    return beta, cov, chi2 / dof


def fit_log_slope(
    l,
    values,
    geom,
    yerr=None,
    window: tuple | None = None,
    order: int = 1,
) -> FitResult:
    """WLS of a cumulant profile against ln R(l) inside the fit window.

    order=1 also reports c_ent = (3 or 6) * slope; every order reports
    x^(m) = (-1)^(m-1) slope / 2 from kappa_m = (-1)^(m-1) 2 x^(m) ln R.
    """
    from .observables import chord

    l = np.asarray(l, float)
    values = np.asarray(values, float)
    if window is None:
        window = (geom.L / 8.0, 7.0 * geom.L / 8.0)
    sel = (l > window[0]) & (l < window[1])
    if sel.sum() < 4:
        raise ValueError(f"fewer than 4 points in fit window {window}")
    x = np.log(chord(l[sel], geom))
    yerr_sel = None if yerr is None else np.asarray(yerr, float)[sel]
    beta, cov, chi2_dof = _wls(x, values[sel], yerr_sel)
    slope, intercept = float(beta[0]), float(beta[1])
    serr = float(np.sqrt(cov[0, 0]))
    derived = {
        f"x{order}": (-1) ** (order - 1) * slope / 2.0,
        f"x{order}_err": serr / 2.0,
    }
    if order == 1:
        d = geom.log_prefactor_divisor
        derived["c_ent"] = d * slope
        derived["c_ent_err"] = d * serr
    return FitResult(slope, intercept, cov, chi2_dof, window, int(sel.sum()), derived)


def casimir_fit(L_values, site_density, yerr=None) -> FitResult:
    """Fit f = f0 + f1/L + a/L^2 and report c_Casimir = -6 a / pi.

    ``site_density`` is minus_log_Z per site of long periodic cylinders.
    """
    L = np.asarray(L_values, float)
    f = np.asarray(site_density, float)
    if len(L) < 4:
        raise ValueError("need at least 4 cylinder sizes")
    w = np.ones_like(f) if yerr is None else 1.0 / np.asarray(yerr, float) ** 2
    X = np.column_stack([np.ones_like(L), 1.0 / L, 1.0 / L**2])
    A = X.T @ (w[:, None] * X)
    cov = np.linalg.inv(A)
    beta = cov @ X.T @ (w * f)
    resid = f - X @ beta
    dof = max(len(f) - 3, 1)
    chi2 = float(np.sum(w * resid**2))
    if yerr is None:
        cov = cov * (chi2 / dof)
    a, a_err = float(beta[2]), float(np.sqrt(cov[2, 2]))
    derived = {
        "c_casimir": -6.0 * a / math.pi,
        "c_casimir_err": 6.0 * a_err / math.pi,
        "f0": float(beta[0]),
        "f1": float(beta[1]),
    }
    return FitResult(a, float(beta[0]), cov, chi2 / dof,
                     (float(L.min()), float(L.max())), len(L), derived)


# -- exact percolation spectrum -------------------------------------------


def spectrum_value(k):
    """X_k = 3 arccos^2(sqrt(3)/2^(1+k/2)) / (2 pi^2) - 1/24."""
    k = np.asarray(k, dtype=float)
    if np.any(k < SPECTRUM_K_MIN):
        raise ValueError(f"k below domain boundary {SPECTRUM_K_MIN:.6f}")
    arg = math.sqrt(3.0) / 2.0 ** (1.0 + k / 2.0)
    return 3.0 * np.arccos(arg) ** 2 / (2.0 * math.pi**2) - 1.0 / 24.0


@dataclass
class SpectrumTable:
    k: np.ndarray
    X: np.ndarray
    x_m: np.ndarray  # derivatives at k=0, orders 1..5


def percolation_spectrum(k_grid, max_order: int = MAX_ORDER) -> SpectrumTable:
    """Evaluate X_k on the grid and its k=0 derivatives to high precision.

    The derivatives use central differences on a shrinking step ladder in
    40-digit arithmetic (mpmath), which removes the float64 cancellation
    that otherwise caps order 5 near 1e-5 accuracy.
    """
    import mpmath as mp

    k_grid = np.asarray(k_grid, dtype=float)
    X = spectrum_value(k_grid)
    with mp.workdps(40):
        def f(k):
            return 3 * mp.acos(mp.sqrt(3) / 2 ** (1 + k / 2)) ** 2 / (
                2 * mp.pi**2
            ) - mp.mpf(1) / 24

        x_m = np.array([float(mp.diff(f, 0, m)) for m in range(1, max_order + 1)])
    return SpectrumTable(k_grid, X, x_m)


# -- collapse and crossings ------------------------------------------------


@dataclass
class CollapseResult:
    u_c: float
    nu: float
    cost: float
    u_c_err: float = math.nan
    nu_err: float = math.nan


def _collapse_cost(curves, u_c, nu):
    """Houdayer-style spread: residuals against neighbor interpolation
    from the other system sizes, in scaled coordinates."""
    scaled = {}
    for L, (u, y, yerr) in curves.items():
        x = (np.asarray(u, float) - u_c) * float(L) ** (1.0 / nu)
        scaled[L] = (x, np.asarray(y, float),
                     None if yerr is None else np.asarray(yerr, float))
    cost = 0.0
    n_terms = 0
    for L, (x, y, yerr) in scaled.items():
        ox = np.concatenate([scaled[M][0] for M in scaled if M != L])
        oy = np.concatenate([scaled[M][1] for M in scaled if M != L])
        order = np.argsort(ox)
        ox, oy = ox[order], oy[order]
        inside = (x > ox[0]) & (x < ox[-1])
        if not np.any(inside):
            continue
        pred = np.interp(x[inside], ox, oy)
        res = y[inside] - pred
        if yerr is not None:
            res = res / np.maximum(yerr[inside], 1e-12)
        cost += float(np.sum(res**2))
        n_terms += int(inside.sum())
    if n_terms == 0:
        return math.inf
    return cost / n_terms


def collapse(curves, u_c_guess, nu_guess, n_boot: int = 0, rng=None) -> CollapseResult:
    """Optimize (u_c, nu) so the size family falls on one master curve.

    curves: {L: (u, y, yerr-or-None)}. Bootstrap (parametric, using yerr)
    fills in the error fields when n_boot > 0.
    """
    if len(curves) < 3:
        raise ValueError("need at least 3 system sizes")

    def run(cv):
        res = optimize.minimize(
            lambda p: _collapse_cost(cv, p[0], p[1]),
            x0=[u_c_guess, nu_guess],
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 2000},
        )
        return float(res.x[0]), float(res.x[1]), float(res.fun)

    u_c, nu, cost = run(curves)
    u_err = nu_err = math.nan
    if n_boot > 0:
        rng = rng or np.random.default_rng(0)
        us, nus = [], []
        for _ in range(n_boot):
            cv = {}
            for L, (u, y, yerr) in curves.items():
                if yerr is None:
                    raise ValueError("bootstrap requires y errors")
                cv[L] = (u, np.asarray(y) + rng.normal(0, yerr), yerr)
            a, b, _ = run(cv)
            us.append(a)
            nus.append(b)
        u_err = float(np.std(us))
        nu_err = float(np.std(nus))
    return CollapseResult(u_c, nu, cost, u_err, nu_err)


def crossing_finder(curves):
    """Pairwise crossings of the size family, linear interpolation in u.

    Returns a list of dicts {L1, L2, u_star}; the spread across pairs is
    the finite-size drift.
    """
    out = []
    sizes = sorted(curves)
    for i, L1 in enumerate(sizes):
        for L2 in sizes[i + 1:]:
            u1, y1, _ = curves[L1]
            u2, y2, _ = curves[L2]
            lo = max(np.min(u1), np.min(u2))
            hi = min(np.max(u1), np.max(u2))
            if hi <= lo:
                continue
            grid = np.linspace(lo, hi, 400)
            d = np.interp(grid, u1, y1) - np.interp(grid, u2, y2)
            sgn = np.sign(d)
            idx = np.nonzero(np.diff(sgn) != 0)[0]
            for j in idx:
                # linear root between grid[j] and grid[j+1]
                x0, x1 = grid[j], grid[j + 1]
                y0, yy1 = d[j], d[j + 1]
                u_star = x0 - y0 * (x1 - x0) / (yy1 - y0)
                out.append({"L1": L1, "L2": L2, "u_star": float(u_star)})
    return out


# -- misc ------------------------------------------------------------------


def duality_map(t: float):
    """Noise-channel duality: p_tilde = sin^2 t, beta_tilde = atanh(cos 2t).

    The pair sits on the Nishimori line of the dual disorder model:
    p_tilde / (1 - p_tilde) = exp(-2 beta_tilde) exactly.
    """
    if not 0.0 <= t <= math.pi / 4:
        raise ValueError(f"t must lie in [0, pi/4], got {t}")
    p_tilde = math.sin(t) ** 2
    c = math.cos(2.0 * t)
    beta_tilde = math.inf if c >= 1.0 else math.atanh(c)
    return p_tilde, beta_tilde


def power_law_fit(x, y, yerr=None):
    """Fit y = amplitude * x^exponent by least squares in log-log space.

    Returns (amplitude, exponent, amplitude_err, exponent_err).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    ly_err = None if yerr is None else np.asarray(yerr, float) / y
    beta, cov, _ = _wls(np.log(x), np.log(y), ly_err)
    amp = math.exp(beta[1])
    return (
        amp,
        float(beta[0]),
        amp * float(np.sqrt(cov[1, 1])),
        float(np.sqrt(cov[0, 0])),
    )


def ray_point(theta: float, u: float):
    """Point on the critical-line scan ray in normalized coordinates.

    The anchor is the Clifford point (t = pi/4, p_meas = 1); theta = 0 runs
    toward weaker measurements (the Nishimori scan at p = 1) and
    theta = pi/2 toward dilution (the percolation scan at t = pi/4), with
    u = 1 mapping onto (t = 0) and (p = 1/2) respectively.
    """
    if not 0.0 <= theta <= math.pi / 2:
        raise ValueError("theta must lie in [0, pi/2]")
    xi = u * math.cos(theta)
    eta = u * math.sin(theta)
    t = (math.pi / 4.0) * (1.0 - xi)
    p = 1.0 - 0.5 * eta
    return t, p


def critical_line_locator(probe, thetas, sizes, u_grid):
    """Scan mean I_s along rays from the Clifford anchor; one point per ray.

    probe(t, p_meas, L) -> (mean I_s, stderr). Returns a list of dicts
    {theta, u_star, t, p_meas, drift} where drift is the spread of the
    pairwise crossings.
    """
    results = []
    for theta in thetas:
        curves = {}
        for L in sizes:
            ys, es = [], []
            for u in u_grid:
                t, p = ray_point(theta, u)
                m, e = probe(t, p, L)
                ys.append(m)
                es.append(e)
            curves[L] = (np.asarray(u_grid, float), np.array(ys), np.array(es))
        crossings = crossing_finder(curves)
        if not crossings:
            raise ValueError(f"no crossing found along theta={theta}")
        stars = np.array([c["u_star"] for c in crossings])
        u_star = float(np.mean(stars))
        t, p = ray_point(theta, u_star)
        results.append(
            {
                "theta": theta,
                "u_star": u_star,
                "t": t,
                "p_meas": p,
                "drift": float(np.ptp(stars)),
            }
        )
    return results
