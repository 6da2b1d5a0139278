"""``aloha-corr`` command line front end.

Exit codes: 0 success / validation passed, 1 validation failed,
2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .consensus import (BernoulliSampler, NumericError, PhysicalSampler, laplacian_moments,
                        minimize_eps_rho, per_step_bounds, radii, simulate_consensus)
from .deployment import ConfigError, ParameterError, Scenario, derive_radio_params, load_scenario
from .oracle import compare, exact_stats, mc_stats
from .slotmodel import ComplexityError, LinkStats, Model, correlation_matrix, link_stats, uhbm_from

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
THETA_NOTE = ("theta = 2**(m*R0/B) - 1; for the 802.11p-like defaults this gives 1.114 at m = 1, "
              "so the value 2.23 sometimes quoted for that setup does not follow from these inputs")


def fmt(v) -> str:
    return format(float(v), ".17g")


def _write_matrix_csv(path: Path, labels, mat):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(labels))
        for lab, row in zip(labels, mat):
            w.writerow([lab] + [fmt(v) for v in row])


def _read_matrix_csv(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    return labels, np.array([[float(v) for v in r[1:]] for r in rows[1:]])


def _stats_for(scn: Scenario, model: str, m: int | None, shape: int | None,
               theta: float | None) -> tuple[LinkStats, object]:
    dep = scn.deployment if shape is None else scn.deployment.with_shape(shape)
    slots = scn.slots(m, theta)
    ch = scn.channel()
    return link_stats(Model(model.upper()), ch, dep, slots), (ch, dep, slots)


# -- subcommands -------------------------------------------------------------

def cmd_params(scn: Scenario, m_values=None) -> dict:
    ms = list(m_values) if m_values else list(scn.slot_counts)
    out = {"N": None, "theta": {}, "note": THETA_NOTE}
    for m in ms:
        theta, noise = derive_radio_params(scn.bandwidth, scn.ref_bitrate, m, scn.temperature)
        out["theta"][str(m)] = theta
        out["N"] = noise
    return out


def cmd_corr(scn: Scenario, model: str, out: Path, fmt_: str = "csv", m=None, shape=None,
             theta=None) -> dict:
    stats, _ = _stats_for(scn, model, m, shape, theta)
    corr, valid = correlation_matrix(stats)
    labels = stats.labels()
    out.mkdir(parents=True, exist_ok=True)
    if fmt_ == "csv":
        with open(out / "p.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["link", "p", "valid"])
            for lab, p, ok in zip(labels, stats.p, valid):
                w.writerow([lab, fmt(p), int(ok)])
        _write_matrix_csv(out / "cov.csv", labels, stats.cov)
        _write_matrix_csv(out / "corr.csv", labels, corr)
    else:
        doc = {"model": stats.model.value, "links": labels, "p": stats.p.tolist(),
               "cov": stats.cov.tolist(), "corr": corr.tolist(), "valid": valid.tolist()}
        (out / "stats.json").write_text(json.dumps(doc, indent=1) + "\n")
    return {"links": len(labels), "out": str(out)}


def validate_scenario(scn: Scenario, model: str = "hd", mode: str = "exact", m=None,
                      shape=None, theta=None, frames: int = 10 ** 5, seed: int = 0,
                      budget: int = 10 ** 7, oracle_channel=None):
    """Analytic moments against the exact or Monte Carlo oracle.

    ``oracle_channel`` replaces the channel seen by the oracle only (used to
    check that the comparison detects disagreement).
    """
    stats, (ch, dep, slots) = _stats_for(scn, model, m, shape, theta)
    och = ch if oracle_channel is None else oracle_channel
    if mode == "exact":
        ref = exact_stats(stats.model, och, dep, slots, budget=budget)
        return compare(stats, ref, tol=1e-10)
    ref = mc_stats(stats.model, och, dep, slots, frames, seed)
    return compare(stats, ref, z=4.0)


def _eps_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) == 3:
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    return np.array([float(v) for v in spec.split(",")])


SWEEP_COLUMNS = ["m", "shape", "model", "eps", "eps_rel", "rho_ess", "r2", "w2", "lb", "ub"]


def cmd_sweep(scn: Scenario, out: Path, m_values, shapes, k: int, eps=None, eps_rel=None,
              models=("hd", "uhbm"), theta=None) -> list[dict]:
    if k < 1:
        raise ConfigError("k must be >= 1")
    rows = []
    for m in m_values:
        for shape in shapes:
            hd, _ = _stats_for(scn, "hd", m, shape, theta)
            per_model = {"hd": hd, "uhbm": uhbm_from(hd)}
            moms = {name: laplacian_moments(per_model[name]) for name in models}
            eps_rho = minimize_eps_rho(next(iter(moms.values())).EL).eps
            grid = np.asarray(eps) if eps is not None else np.asarray(eps_rel) * eps_rho
            if grid.size == 0:
                raise ConfigError("empty gain grid")
            for name in models:
                for e in grid:
                    s = radii(moms[name], float(e))
                    b = per_step_bounds(moms[name], float(e), k, s)
                    rows.append({"m": m, "shape": shape, "model": name, "eps": float(e),
                                 "eps_rel": float(e) / eps_rho, "rho_ess": s.rho_ess,
                                 "r2": s.r2, "w2": s.w2, "lb": b.lb, "ub": b.ub})
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r["m"], r["shape"], r["model"]]
                       + [fmt(r[c]) for c in SWEEP_COLUMNS[3:]])
    return rows


def cmd_simulate(scn: Scenario, out: Path, k: int, trials: int, seed: int, eps=None,
                 eps_rel=None, m=None, shape=None, sampler="physical", x0="basis",
                 theta=None) -> dict:
    stats, (ch, dep, slots) = _stats_for(scn, "hd", m, shape, theta)
    n = stats.n
    mom = laplacian_moments(stats if sampler == "physical" else uhbm_from(stats))
    if eps is None:
        eps = (1.0 if eps_rel is None else eps_rel) * minimize_eps_rho(mom.EL).eps
    if x0 == "basis":
        X0 = np.eye(n)
    elif x0 == "random":
        X0 = np.random.default_rng(seed).normal(size=(n, 1))
        X0 /= np.linalg.norm(X0)
    else:
        X0 = np.array([float(v) for v in x0.split(",")])[:, None]
        if len(X0) != n:
            raise ConfigError(f"x0 needs {n} entries")
    smp = PhysicalSampler(ch, dep, slots) if sampler == "physical" else BernoulliSampler(stats)
    traj = simulate_consensus(smp, eps, k, trials, X0, seed)
    s = radii(mom, eps) if eps > 0 else None
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x0", "msd", "se", "upper_envelope", "lower_envelope_sum"])
        for t in range(k):
            up = 2 * np.sqrt(n - 1) * s.w2 ** (2 * (t + 1)) if s else float("nan")
            lo = s.r2 ** (2 * (t + 1)) if s else float("nan")
            for c in range(X0.shape[1]):
                w.writerow([t + 1, c, fmt(traj.msd[t, c]), fmt(traj.se[t, c]), fmt(up), fmt(lo)])
            w.writerow([t + 1, "sum", fmt(traj.total[t]), fmt(traj.total_se[t]), fmt(up), fmt(lo)])
    return {"eps": eps, "r2": s.r2 if s else None, "w2": s.w2 if s else None}


# -- argument parsing ----------------------------------------------------------

def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aloha-corr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True, type=Path)
        sp.add_argument("--theta", type=float, default=None, help="override derived threshold")
        sp.add_argument("--out", type=Path, default=Path("."))

    sp = sub.add_parser("params", help="derived threshold and noise per slot count")
    common(sp)
    sp.add_argument("--m", type=_ints, default=None)

    sp = sub.add_parser("corr", help="success probabilities, covariance and correlation")
    common(sp)
    sp.add_argument("--model", choices=["hd", "fd"], default="hd")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--shape", type=int, default=None)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")

    sp = sub.add_parser("validate", help="analytic moments against an oracle")
    common(sp)
    sp.add_argument("--model", choices=["hd", "fd"], default="hd")
    sp.add_argument("--mode", choices=["exact", "mc"], default="exact")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--shape", type=int, default=None)
    sp.add_argument("--budget", type=int, default=None,
                    help="frames (mc) or enumeration budget (exact)")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("sweep", help="performance bounds over a gain grid")
    common(sp)
    sp.add_argument("--m", type=_ints, default=None)
    sp.add_argument("--shape", type=_ints, default=None)
    sp.add_argument("--k", type=int, default=250)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--eps", type=_eps_grid, default=None, help="absolute gains a,b,c or start:stop:num")
    g.add_argument("--eps-rel", type=_eps_grid, default=None, help="gains relative to the essential-radius minimiser")
    sp.add_argument("--models", default="hd,uhbm")

    sp = sub.add_parser("simulate", help="simulated disagreement trajectory with bound envelopes")
    common(sp)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--shape", type=int, default=None)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--eps", type=float, default=None)
    g.add_argument("--eps-rel", type=float, default=None)
    sp.add_argument("--k", type=int, default=20)
    sp.add_argument("--trials", type=int, default=10 ** 4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sampler", choices=["physical", "uhbm"], default="physical")
    sp.add_argument("--x0", default="basis", help="basis, random, or comma-separated vector")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        scn = load_scenario(args.scenario)
        if args.command == "params":
            res = cmd_params(scn, args.m)
            print(json.dumps(res, indent=1))
            return EXIT_OK
        if args.command == "corr":
            res = cmd_corr(scn, args.model, args.out, args.format, args.m, args.shape, args.theta)
            print(json.dumps(res))
            return EXIT_OK
        if args.command == "validate":
            kw = {}
            if args.budget is not None:
                kw["frames" if args.mode == "mc" else "budget"] = args.budget
            cmp_ = validate_scenario(scn, args.model, args.mode, args.m, args.shape,
                                     args.theta, seed=args.seed, **kw)
            args.out.mkdir(parents=True, exist_ok=True)
            report = cmp_.as_dict()
            (args.out / "report.json").write_text(json.dumps(report, indent=1) + "\n")
            print(json.dumps(report))
            return EXIT_OK if cmp_.passed else EXIT_FAIL
        if args.command == "sweep":
            ms = args.m or list(scn.slot_counts)
            shapes = args.shape or [int(scn.deployment.shapes[0])]
            eps_rel = args.eps_rel
            if args.eps is None and eps_rel is None:
                eps_rel = np.linspace(0.1, 2.0, 39)
            rows = cmd_sweep(scn, args.out, ms, shapes, args.k, args.eps, eps_rel,
                             tuple(args.models.split(",")), args.theta)
            print(json.dumps({"rows": len(rows), "out": str(args.out / "sweep.csv")}))
            return EXIT_OK
        if args.command == "simulate":
            res = cmd_simulate(scn, args.out, args.k, args.trials, args.seed, args.eps,
                               args.eps_rel, args.m, args.shape, args.sampler, args.x0,
                               args.theta)
            print(json.dumps(res))
            return EXIT_OK
    except (ConfigError, ParameterError, ComplexityError, ValueError) as exc:
        print(f"aloha-corr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"aloha-corr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
