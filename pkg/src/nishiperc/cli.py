"""Command line driver for sampling campaigns and their analysis.

Subcommands:

* ``selftest``       quick cross-backend consistency checks (exit 3 on failure)
* ``sample``         steady-state entanglement-entropy campaign -> long CSV
* ``coherent-info``  fixed-depth test-spin campaign -> long CSV + summary JSON
* ``sweep``          coherent-info means along a ray in the (t, p) plane
* ``fit``            slope fits (central charge / moment exponents) from a CSV
* ``spectrum``       tabulate the exact multifractal exponents
* ``collapse``       finite-size scaling collapse of a sweep CSV

Campaigns shard deterministically over sample indices: every sample draws
its randomness from (seed, index, purpose) counter streams and the output
CSV is sorted, so the bytes written do not depend on the worker count or
scheduling. Re-running with an existing output file computes only the
missing indices.

Exit codes: 0 ok, 1 usage, 2 validation / config error, 3 self-check or
numerical failure during sampling.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .dense import ZeroNormError

__all__ = ["CampaignConfig", "main"]


class ConfigError(Exception):
    pass


# -- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class CampaignConfig:
    """Flat campaign description; file form is one ``key=value`` per line."""

    kind: str = "entropy"  # entropy | coherent-info | free-energy
    L: int = 16
    t_over_pi: float = 0.25
    p_meas: float = 1.0
    x_boundary: str = "periodic"
    seed: int = 0
    n_samples: int = 8
    n_snapshots: int = 8
    renyi_ns: tuple = (1,)
    l_stride: int = 1
    backend: str = "auto"
    workers: int = 0  # 0 -> NISHIPERC_WORKERS env var, else cpu count

    @property
    def t(self) -> float:
        return self.t_over_pi * math.pi

    @classmethod
    def from_mapping(cls, kv: dict) -> "CampaignConfig":
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, raw in kv.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "renyi_ns":
                out[key] = tuple(
                    math.inf if tok == "inf" else int(tok)
                    for tok in str(raw).split(",")
                    if tok
                )
            elif key in ("kind", "x_boundary", "backend"):
                out[key] = str(raw)
            elif key in ("t_over_pi", "p_meas"):
                out[key] = float(raw)
            else:
                out[key] = int(raw)
        return cls(**out)

    @classmethod
    def from_file(cls, path: str) -> "CampaignConfig":
        kv = {}
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line {line!r}")
                key, val = line.split("=", 1)
                kv[key.strip()] = val.strip()
        return cls.from_mapping(kv)

    def validate(self) -> None:
        if not 0.0 <= self.t_over_pi <= 0.25:
            raise ConfigError("t_over_pi must lie in [0, 0.25]")
        if not 0.0 <= self.p_meas <= 1.0:
            raise ConfigError("p_meas must lie in [0, 1]")
        if self.L < 2 or self.n_samples < 0:
            raise ConfigError("L >= 2 and n_samples >= 0 required")
        if self.kind not in ("entropy", "coherent-info", "free-energy"):
            raise ConfigError(f"unknown campaign kind {self.kind!r}")


def _resolve_backend(cfg: CampaignConfig) -> str:
    if cfg.backend != "auto":
        return cfg.backend
    if cfg.kind == "entropy":
        # steady-state drivers exist only for these two backends
        return "clifford" if abs(cfg.t - math.pi / 4) < 1e-12 else "gaussian"
    from .sampler import pick_backend

    purpose = cfg.kind if cfg.kind == "coherent-info" else "entropy"
    n_sites = cfg.L + (3 if cfg.kind == "coherent-info" else 0)
    return pick_backend(cfg.t, cfg.p_meas, n_sites, purpose)


def _n_workers(cfg: CampaignConfig) -> int:
    if cfg.workers > 0:
        return cfg.workers
    env = os.environ.get("NISHIPERC_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- campaign tasks (module level so they pickle) --------------------------


def _entropy_task(args):
    cfg, index = args
    from .sampler import (
        SteadyStateProtocol,
        entropy_chain_clifford,
        entropy_chain_gaussian,
    )

    backend = _resolve_backend(cfg)
    proto = SteadyStateProtocol(cfg.L, cfg.n_snapshots)
    ls = list(range(1, cfg.L, cfg.l_stride))
    periodic = cfg.x_boundary == "periodic"
    if backend == "clifford":
        rows, S = entropy_chain_clifford(
            cfg.L, cfg.p_meas, cfg.seed, index, proto, ls, cfg.renyi_ns, periodic
        )
    elif backend == "gaussian":
        rows, S = entropy_chain_gaussian(
            cfg.L, cfg.t, cfg.seed, index, proto, ls, cfg.renyi_ns, periodic
        )
    else:
        raise ConfigError(f"backend {backend!r} has no steady-state driver")
    out = []
    for k, row in enumerate(rows):
        for i, n in enumerate(cfg.renyi_ns):
            for j, l in enumerate(ls):
                out.append(
                    (index, row, "inf" if n == math.inf else int(n), l, S[k, i, j])
                )
    return backend, out


def _coherent_task(args):
    cfg, index = args
    from .sampler import coherent_info_sample

    backend = _resolve_backend(cfg)
    C, I = coherent_info_sample(backend, cfg.L, cfg.t, cfg.p_meas, cfg.seed, index)
    return backend, [(index, C, I)]


def _free_energy_task(args):
    cfg, index = args
    from .lattice import LatticeSpec
    from .sampler import free_energy_sample

    backend = _resolve_backend(cfg)
    if backend == "clifford":
        backend = "gaussian"
    spec = LatticeSpec(cfg.L, 2 * cfg.L, x_boundary=cfg.x_boundary)
    mlz = free_energy_sample(backend, spec, cfg.t, cfg.p_meas, cfg.seed, index)
    return backend, [(index, mlz, spec.L_x, spec.L_y)]


_TASKS = {
    "entropy": _entropy_task,
    "coherent-info": _coherent_task,
    "free-energy": _free_energy_task,
}

_HEADERS = {
    "entropy": (
        "seed,sample_index,backend,t_over_pi,p_meas,L,x_boundary,"
        "snapshot_row,renyi_n,l,S_nats"
    ),
    "coherent-info": "seed,sample_index,backend,t_over_pi,p_meas,L,C,I_s_bits",
    "free-energy": "seed,sample_index,backend,t_over_pi,p_meas,L_x,L_y,minus_log_Z",
}


def _format_rows(cfg: CampaignConfig, backend: str, rows) -> list:
    base = f"{cfg.seed},{{0}},{backend},{cfg.t_over_pi:.12g},{cfg.p_meas:.12g}"
    out = []
    for rec in rows:
        if cfg.kind == "entropy":
            index, srow, n, l, S = rec
            out.append(
                base.format(index)
                + f",{cfg.L},{cfg.x_boundary},{srow},{n},{l},{S:.12g}"
            )
        elif cfg.kind == "coherent-info":
            index, C, I = rec
            out.append(base.format(index) + f",{cfg.L},{C:.12g},{I:.12g}")
        else:
            index, mlz, L_x, L_y = rec
            out.append(base.format(index) + f",{L_x},{L_y},{mlz:.12g}")
    return out


def _existing_indices(path: str, header: str):
    if not os.path.exists(path):
        return set(), []
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != header:
        raise ConfigError(f"{path} exists but is not a matching campaign CSV")
    done = set()
    for ln in lines[1:]:
        done.add(int(ln.split(",")[1]))
    return done, lines[1:]


def _run_campaign(cfg: CampaignConfig, out_path: str, summary_path: str | None):
    cfg.validate()
    header = _HEADERS[cfg.kind]
    done, old_lines = _existing_indices(out_path, header)
    todo = [i for i in range(cfg.n_samples) if i not in done]
    task = _TASKS[cfg.kind]
    jobs = [(cfg, i) for i in todo]

    backend = _resolve_backend(cfg)
    results = []
    workers = min(_n_workers(cfg), max(len(jobs), 1))
    if workers > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(workers) as pool:
            for bk, rows in pool.imap_unordered(task, jobs):
                results.extend(_format_rows(cfg, bk, rows))
    else:
        for job in jobs:
            bk, rows = task(job)
            results.extend(_format_rows(cfg, bk, rows))

    all_lines = sorted(
        set(old_lines) | set(results),
        key=lambda ln: tuple(
            float(tok) if _is_number(tok) else tok for tok in ln.split(",")
        ),
    )
    with open(out_path, "w") as fh:
        fh.write(header + "\n")
        for ln in all_lines:
            fh.write(ln + "\n")

    if summary_path:
        summary = {
            "kind": cfg.kind,
            "backend": backend,
            "seed": cfg.seed,
            "n_samples": cfg.n_samples,
            "n_new": len(todo),
            "t_over_pi": cfg.t_over_pi,
            "p_meas": cfg.p_meas,
            "L": cfg.L,
            "csv": out_path,
        }
        if cfg.kind == "coherent-info" and all_lines:
            vals = np.array([float(ln.split(",")[-1]) for ln in all_lines])
            summary["I_s_bits_mean"] = float(vals.mean())
            summary["I_s_bits_stderr"] = float(
                vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else math.nan
            )
        _emit_json(summary, summary_path)
    return 0


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


# -- selftest --------------------------------------------------------------


def _selftest(inject_corruption: bool = False) -> int:
    """Cross-backend agreement on a handful of random programs.

    The corruption hook perturbs one reference value so the harness itself
    can be tested (a passing selftest that cannot fail checks nothing).
    """
    from .clifford import entropy_profile_clifford, evolve_clifford
    from .compiler import compile_program
    from .dense import entropy as dense_entropy
    from .dense import evolve as dense_evolve
    from .gaussian import entropy_profile, evolve_covariance
    from .lattice import LatticeSpec, gauge_fix_temporal, sample_realization
    from .mps import entropy_mps, evolve_mps
    from .rng import RngTag

    failures = []
    for seed, (t_pi, p) in enumerate([(0.1, 0.8), (0.2, 1.0), (0.15, 0.6)]):
        spec = LatticeSpec(5, 6)
        real = gauge_fix_temporal(
            sample_realization(spec, t_pi * math.pi, p, RngTag(1000 + seed, 0))
        )
        prog = compile_program(spec, t_pi * math.pi, p, real)
        ref = np.array([dense_entropy(dense_evolve(prog), l) for l in range(6)])
        if inject_corruption and seed == 0:
            ref[2] += 1e-3
        gs = entropy_profile(evolve_covariance(prog))
        mp_state = evolve_mps(prog)
        ms = np.array([entropy_mps(mp_state, l) for l in range(6)])
        if np.max(np.abs(gs - ref)) > 1e-8:
            failures.append(f"gaussian mismatch at t/pi={t_pi} p={p}")
        if np.max(np.abs(ms - ref)) > 1e-7:
            failures.append(f"mps mismatch at t/pi={t_pi} p={p}")
    # projective point against the tableau backend
    spec = LatticeSpec(5, 6)
    real = gauge_fix_temporal(
        sample_realization(spec, math.pi / 4, 0.6, RngTag(2000, 0))
    )
    prog = compile_program(spec, math.pi / 4, 0.6, real)
    ref = np.array([dense_entropy(dense_evolve(prog), l) for l in range(6)])
    if inject_corruption:
        ref[3] += 1e-3
    cs = entropy_profile_clifford(evolve_clifford(prog))
    if np.max(np.abs(cs - ref)) > 1e-10:
        failures.append("clifford mismatch at the projective point")

    for msg in failures:
        print(f"FAIL: {msg}", file=sys.stderr)
    print("selftest:", "FAILED" if failures else "ok")
    return 3 if failures else 0


# -- analysis subcommands --------------------------------------------------


def _read_csv(path: str):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _cmd_fit(args) -> int:
    from .analysis import BlockedAccumulator, casimir_fit, fit_log_slope
    from .observables import ChordGeometry

    rows = _read_csv(args.csv)
    if not rows:
        raise ConfigError("empty input CSV")

    if args.mode == "casimir":
        by_L = {}
        for r in rows:
            key = (int(r["L_x"]), int(r["L_y"]))
            by_L.setdefault(key, []).append(float(r["minus_log_Z"]))
        Ls, f, ferr = [], [], []
        for (L_x, L_y), vals in sorted(by_L.items()):
            vals = np.array(vals)
            Ls.append(L_x)
            f.append(vals.mean() / (L_x * L_y))
            ferr.append(
                vals.std(ddof=1) / math.sqrt(len(vals)) / (L_x * L_y)
                if len(vals) > 1
                else 0.0
            )
        ferr = np.array(ferr)
        fit = casimir_fit(
            np.array(Ls, float), np.array(f), ferr if np.all(ferr > 0) else None
        )
        out = {
            "estimate": fit.derived["c_casimir"],
            "stderr": fit.derived["c_casimir_err"],
            "chi2_dof": fit.chi2_dof,
            "n_points": fit.n_points,
            "sizes": Ls,
        }
    else:
        want_n = args.renyi_n
        keep = [r for r in rows if r["renyi_n"] == want_n]
        if not keep:
            raise ConfigError(f"no rows with renyi_n={want_n}")
        L = int(keep[0]["L"])
        boundary = keep[0]["x_boundary"]
        geom = ChordGeometry(L, boundary)
        ls = sorted({int(r["l"]) for r in keep})
        acc = BlockedAccumulator(shape=(len(ls),), n_blocks=args.n_blocks)
        pos = {l: j for j, l in enumerate(ls)}
        by_sample = {}
        for r in keep:
            key = (int(r["sample_index"]), int(r["snapshot_row"]))
            by_sample.setdefault(key, np.empty(len(ls)))[pos[int(r["l"])]] = float(
                r["S_nats"]
            )
        for (idx, _row), vec in sorted(by_sample.items()):
            acc.add(vec, idx)
        order = args.order
        pooled = acc.pooled()
        want = max(order, 2) if pooled.count >= max(order, 2) + 1 else order
        k = pooled.k_statistics(want)
        y = k[order - 1]
        # per-point error from the pooled variance when fitting the mean
        yerr = None
        if order == 1 and want >= 2:
            var = np.maximum(k[1], 0.0)
            if np.all(var > 0):
                yerr = np.sqrt(var / pooled.count)
        fit = fit_log_slope(np.array(ls, float), y, geom, yerr=yerr, order=order)
        name = "c_ent" if order == 1 else f"x{order}"
        out = {
            "estimate": fit.derived[name],
            "stderr": fit.derived[f"{name}_err"],
            "derived": name,
            "order": order,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "boundary": boundary,
            "window": list(fit.window),
            "chi2_dof": fit.chi2_dof,
            "n_points": fit.n_points,
            "n_samples": len(by_sample),
            "L": L,
        }
    _emit_json(out, args.out)
    return 0


def _cmd_spectrum(args) -> int:
    from .analysis import percolation_spectrum

    ks = np.linspace(args.k_min, args.k_max, args.n_points)
    tab = percolation_spectrum(ks)
    out = {
        "k": [float(v) for v in tab.k],
        "X": [float(v) for v in tab.X],
        "x_m": [float(v) for v in tab.x_m],
    }
    _emit_json(out, args.out)
    return 0


def _cmd_collapse(args) -> int:
    from .analysis import collapse

    rows = _read_csv(args.csv)
    curves = {}
    for r in rows:
        curves.setdefault(int(r["L"]), ([], [], []))
        u, y, e = curves[int(r["L"])]
        u.append(float(r["u"]))
        y.append(float(r["mean"]))
        e.append(float(r.get("stderr", 0.0)) or 1e-3)
    curves = {
        L: (np.array(u), np.array(y), np.array(e)) for L, (u, y, e) in curves.items()
    }
    if len(curves) < 3:
        raise ConfigError("collapse needs at least three sizes")
    res = collapse(curves, args.u0, args.nu0, n_boot=args.n_boot)
    out = {
        "u_c": res.u_c,
        "u_c_err": res.u_c_err,
        "nu": res.nu,
        "nu_err": res.nu_err,
        "cost": res.cost,
        "sizes": sorted(curves),
    }
    _emit_json(out, args.out)
    return 0


def _cmd_sweep(args) -> int:
    from .analysis import ray_point
    from .sampler import coherent_info_sample, pick_backend

    us = [float(u) for u in args.u.split(",")]
    sizes = [int(L) for L in args.sizes.split(",")]
    lines = []
    for L in sizes:
        for u in us:
            t, p = ray_point(args.theta, u)
            backend = (
                args.backend
                if args.backend != "auto"
                else pick_backend(t, p, L + 3, "coherent-info")
            )
            vals = np.array(
                [
                    coherent_info_sample(backend, L, t, p, args.seed, i)[1]
                    for i in range(args.n_samples)
                ]
            )
            se = (
                vals.std(ddof=1) / math.sqrt(len(vals))
                if len(vals) > 1
                else math.nan
            )
            lines.append(
                f"{args.theta:.12g},{u:.12g},{L},{vals.mean():.12g},"
                f"{se:.12g},{len(vals)}"
            )
    with open(args.out, "w") as fh:
        fh.write("theta,u,L,mean,stderr,n\n")
        for ln in lines:
            fh.write(ln + "\n")
    return 0


def _sanitize(obj):
    """Strict JSON has no NaN/Infinity tokens; map them to null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _emit_json(obj, path: str | None) -> None:
    text = json.dumps(_sanitize(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- entry point -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nishiperc")
    sub = ap.add_subparsers(dest="command", required=True)

    st = sub.add_parser("selftest", help="cross-backend consistency checks")
    st.add_argument("--inject-corruption", action="store_true")

    def add_campaign(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--summary", help="summary JSON path")

    add_campaign(sub.add_parser("sample", help="steady-state entropy campaign"))
    add_campaign(sub.add_parser("coherent-info", help="test-spin campaign"))
    add_campaign(sub.add_parser("free-energy", help="free-energy campaign"))

    sw = sub.add_parser("sweep", help="coherent-info means along a (t, p) ray")
    sw.add_argument("--theta", type=float, required=True)
    sw.add_argument("--u", required=True, help="comma list of ray parameters")
    sw.add_argument("--sizes", required=True, help="comma list of L values")
    sw.add_argument("--n-samples", type=int, default=64)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--backend", default="auto")
    sw.add_argument("--out", required=True)

    ft = sub.add_parser("fit", help="slope fits from a campaign CSV")
    ft.add_argument("csv")
    ft.add_argument("--mode", choices=["entropy", "casimir"], default="entropy")
    ft.add_argument("--order", type=int, default=1)
    ft.add_argument("--renyi-n", default="1")
    ft.add_argument("--n-blocks", type=int, default=20)
    ft.add_argument("--out")

    sp = sub.add_parser("spectrum", help="exact multifractal exponents")
    sp.add_argument("--k-min", type=float, default=0.0)
    sp.add_argument("--k-max", type=float, default=4.0)
    sp.add_argument("--n-points", type=int, default=9)
    sp.add_argument("--out")

    cl = sub.add_parser("collapse", help="finite-size scaling collapse")
    cl.add_argument("csv")
    cl.add_argument("--u0", type=float, required=True)
    cl.add_argument("--nu0", type=float, required=True)
    cl.add_argument("--n-boot", type=int, default=0)
    cl.add_argument("--out")
    return ap


def _campaign_config(args, kind: str) -> CampaignConfig:
    cfg = CampaignConfig.from_file(args.config) if args.config else CampaignConfig()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    if overrides:
        merged = {f.name: getattr(cfg, f.name) for f in fields(CampaignConfig)}
        merged = {
            k: (",".join(str(x) for x in v) if k == "renyi_ns" else v)
            for k, v in merged.items()
        }
        merged.update(overrides)
        cfg = CampaignConfig.from_mapping(merged)
    return replace(cfg, kind=kind)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return _selftest(args.inject_corruption)
        if args.command in ("sample", "coherent-info", "free-energy"):
            kind = "entropy" if args.command == "sample" else args.command
            cfg = _campaign_config(args, kind)
            return _run_campaign(cfg, args.out, args.summary)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "spectrum":
            return _cmd_spectrum(args)
        if args.command == "collapse":
            return _cmd_collapse(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ZeroNormError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
