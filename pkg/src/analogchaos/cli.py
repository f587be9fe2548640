"""Command-line front end: ``analogchaos <command> ...``.

Relative output paths resolve against ``$ANALOGCHAOS_DATA_DIR`` when it is
set. Exit codes: 0 success, 2 invalid input, 3 solver guard, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, streams
from .analysis import (
    chain_ps,
    collapse_table,
    energy_dist_stats,
    extract_sigma_p,
    fit_power_law,
    p_of_z,
    p_single_gs,
    p_success,
    per_instance_ps,
    required_z,
    required_z_exact,
)
from .chaos import DEFAULT_TARGETS, Outcome, ResultTable, estimate_ps
from .errors import AnalogChaosError, InsufficientDataError, OutOfRangeError, StorageError, ValidationError
from .formats import read_instance, read_results, spins_from_text, write_instance
from .generators import generate
from .model import Family, energy
from .noise import NoiseSpec, NoiseTargets, perturb
from .runs import execute_manifest
from .solvers import PtParams, SolverProfile

DATA_DIR_ENV = "ANALOGCHAOS_DATA_DIR"


def _data_path(p: str | None, default: str = ".") -> Path:
    path = Path(p if p is not None else default)
    base = os.environ.get(DATA_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _emit(rows: list[dict], args) -> None:
    """Write rows as CSV (default) or JSON to ``--out`` or stdout."""
    if getattr(args, "json", False):
        text = json.dumps(rows, indent=1, default=_json_default) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(rows[0].keys())
            for r in rows:
                w.writerow(_fmt(v) for v in r.values())
        text = buf.getvalue()
    out = getattr(args, "out", None)
    if out:
        path = _data_path(out)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return None if np.isnan(x) else float(x)
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, (tuple, np.ndarray)):
        return list(x)
    return str(x)


def _family_params(pairs: list[str] | None) -> dict:
    params = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"family parameter {item!r} is not key=value")
        params[key] = json.loads(value)
    return params


# -- commands --------------------------------------------------------------


def cmd_generate(args) -> int:
    family = Family(args.family)
    out_dir = _data_path(args.out)
    params = _family_params(args.param)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create {out_dir}: {exc}") from exc
    for i in range(args.count):
        seed = streams.int_seed(args.seed, "instance", args.size, i)
        inst = generate(family, args.size, seed, **params)
        path = out_dir / f"{family.value}_{args.size}_{i}.txt"
        write_instance(inst, path)
        print(path)
    return 0


def cmd_perturb(args) -> int:
    intended = read_instance(args.instance)
    spec = NoiseSpec(
        args.sigma,
        NoiseTargets(args.targets) if args.targets else DEFAULT_TARGETS[intended.family],
        args.clamp,
        args.seed,
        args.instance_id,
        args.realization,
        args.size_label,
    )
    implemented = perturb(intended, spec)
    if args.out:
        write_instance(implemented, _data_path(args.out))
    else:
        from .formats import format_instance

        sys.stdout.write(format_instance(implemented))
    return 0


def cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    profile = SolverProfile(args.solver, PtParams(sweeps=args.sweeps, n_replicas=args.replicas))
    result = profile.solve(inst, (args.seed,))
    config = "".join("+" if s > 0 else "-" for s in result.best_config)
    row = {
        "solver": profile.resolve(inst),
        "energy": result.best_energy,
        "exact": result.exact,
        "config": config,
    }
    if args.check:
        ref = spins_from_text(args.check)
        row["reference_energy"] = energy(inst, ref)
    _emit([row], args)
    return 0


def cmd_run(args) -> int:
    out = _data_path(args.out) if args.out else None
    path, done = execute_manifest(args.manifest, out, args.jobs, args.stop_after, args.json)
    print(path if done else f"interrupted; partial results beside {path}")
    return 0


def _ps_rows(table: ResultTable, n_boot: int) -> list[dict]:
    rows = []
    for fam, n, sigma in table.groups():
        recs = table.select(fam, n, sigma)
        med, (lo, hi) = estimate_ps(table, fam, n, sigma, n_boot)
        rows.append(
            {
                "family": fam.value,
                "n": n,
                "sigma": sigma,
                "instances": len(per_instance_ps(recs)),
                "realizations": len(recs),
                "chaos_events": sum(r.outcome is Outcome.CHAOS for r in recs),
                "median_ps": med,
                "ci_low": lo,
                "ci_high": hi,
            }
        )
    return rows


def _families(table: ResultTable, family: str | None) -> list[Family]:
    fams = sorted({r.family for r in table.records}, key=lambda f: f.value)
    if family is not None:
        fams = [f for f in fams if f is Family(family)]
    if not fams:
        raise InsufficientDataError("no results for the requested family")
    return fams


def cmd_analyze(args) -> int:
    table = read_results(args.results, force_mixed=args.force)
    mode = args.mode
    if mode == "ps":
        rows = _ps_rows(table, args.n_boot)
    elif mode == "collapse":
        rows = [
            {
                "family": c.family.value,
                "n": c.n,
                "sigma": c.sigma,
                "x": c.x,
                "median_ps": c.median_ps,
                "ci_low": c.ci[0],
                "ci_high": c.ci[1],
            }
            for c in collapse_table(table, args.exponent, args.n_boot)
        ]
    elif mode in ("sigma-p", "fit"):
        rows = []
        for fam in _families(table, args.family):
            sizes = sorted({r.n for r in table.select(fam)})
            if mode == "fit" and len(sizes) < 3:
                raise InsufficientDataError(f"a scaling fit needs at least three sizes, got {sizes}")
            points = []
            for n in sizes:
                try:
                    sp = extract_sigma_p(table, args.p, fam, n)
                    status = "ok"
                except OutOfRangeError as exc:
                    if mode == "fit":
                        raise
                    sp, status = math.nan, f"out-of-range: {exc}"
                points.append((n, sp))
                if mode == "sigma-p":
                    rows.append({"family": fam.value, "n": n, "p": args.p, "sigma_p": sp, "status": status})
            if mode == "fit":
                fit = fit_power_law(points)
                rows.append(
                    {
                        "family": fam.value,
                        "p": args.p,
                        "sizes": len(points),
                        "exponent": fit.exponent,
                        "stderr": fit.stderr,
                        "log_prefactor": fit.intercept,
                    }
                )
    elif mode == "energy-dist":
        rows = []
        for fam in _families(table, args.family):
            dist = energy_dist_stats(table, fam, args.n, args.sigma, args.min_events)
            for k, m, s, c in zip(dist.keys, dist.means, dist.stds, dist.counts):
                row = {"family": fam.value, dist.variable: float(k), "mean": m, "std": s, "events": int(c)}
                for name, fit in (("mean", dist.mean_fit), ("std", dist.std_fit)):
                    row[f"{name}_fit_a"] = fit.intercept if fit else math.nan
                    row[f"{name}_fit_b"] = fit.exponent if fit else math.nan
                rows.append(row)
    else:  # theory overlay: measured medians next to the chain law and p(z)
        rows = []
        for row in _ps_rows(table, args.n_boot):
            z = args.j / row["sigma"] if row["sigma"] > 0 else math.inf
            row["p_of_z"] = float(p_of_z(z))
            row["chain_ps"] = chain_ps(args.j, row["sigma"], row["n"]) if row["sigma"] > 0 else 1.0
            rows.append(row)
    _emit(rows, args)
    return 0


def cmd_theory(args) -> int:
    rows = []
    if args.kind == "pz":
        for z in _floats(args.z):
            rows.append({"z": z, "p_of_z": float(p_of_z(z))})
    elif args.kind == "chain":
        for n in (int(x) for x in _floats(args.n)):
            for s in _floats(args.sigmas):
                rows.append({"j": args.j, "n": n, "sigma": s, "p_of_z": float(p_of_z(args.j / s)), "chain_ps": chain_ps(args.j, s, n)})
    elif args.kind == "success":
        for z in _floats(args.z):
            p1 = float(p_single_gs(p_of_z(z), args.n_es))
            rows.append({"z": z, "n_es": args.n_es, "n_gs": args.n_gs, "p_single_gs": p1, "p_success": float(p_success(p1, args.n_gs))})
    else:
        for ps in _floats(args.ps):
            rows.append(
                {
                    "p_s": ps,
                    "n_es": args.n_es,
                    "n_gs": args.n_gs,
                    "required_z": required_z(ps, args.n_es, args.n_gs),
                    "required_z_exact": required_z_exact(ps, args.n_es, args.n_gs),
                }
            )
    _emit(rows, args)
    return 0


GRID_W_NOTE = (
    "grid chaos events are measured against one solver-found ground state; "
    "with degenerate ground states W and D may exceed their minimum over the ground-state set"
)


def cmd_report(args) -> int:
    table = read_results(args.results, force_mixed=args.force)
    outcomes = {o.value: 0 for o in Outcome}
    for r in table.records:
        outcomes[r.outcome.value] += 1
    summary = {
        "manifest": table.manifest_hash,
        "rows": len(table),
        "outcomes": outcomes,
        "groups": _ps_rows(table, args.n_boot),
        "notes": [],
    }
    if any(r.family is Family.SQUARE_GRID for r in table.records):
        summary["notes"].append(GRID_W_NOTE)
    if args.json:
        text = json.dumps(summary, indent=1, default=_json_default) + "\n"
    else:
        lines = [f"manifest {summary['manifest'] or '(mixed)'}: {len(table)} rows"]
        lines.append("outcomes: " + ", ".join(f"{k}={v}" for k, v in outcomes.items()))
        lines.append(f"{'family':8} {'n':>5} {'sigma':>8} {'median p_S':>10}  interval")
        for g in summary["groups"]:
            lines.append(
                f"{g['family']:8} {g['n']:5d} {g['sigma']:8.4g} {g['median_ps']:10.4f}  "
                f"[{g['ci_low']:.4f}, {g['ci_high']:.4f}]"
            )
        lines += [f"note: {note}" for note in summary["notes"]]
        text = "\n".join(lines) + "\n"
    if args.out:
        _data_path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="analogchaos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write instance files")
    g.add_argument("--family", required=True, choices=[f.value for f in Family])
    g.add_argument("--size", required=True, type=int, help="n for chain/xorsat, L for grid/chimera")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append", metavar="KEY=JSON", help="extra family parameter")
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("perturb", help="apply one noise realization to an instance")
    p.add_argument("instance")
    p.add_argument("--sigma", required=True, type=float)
    p.add_argument("--targets", choices=[t.value for t in NoiseTargets], help="default depends on the family")
    p.add_argument("--clamp", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instance-id", type=int, default=0)
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--size-label", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_perturb)

    s = sub.add_parser("solve", help="find a ground state of an instance")
    s.add_argument("instance")
    s.add_argument("--solver", default="auto", choices=["auto", "exact", "grid-dp", "elimination", "pt"])
    s.add_argument("--sweeps", type=int, default=100_000)
    s.add_argument("--replicas", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--check", help="reference configuration (+/- string) to evaluate")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("run", help="execute or resume a run manifest")
    r.add_argument("manifest")
    r.add_argument("--out", help="result CSV (default: manifest name with .csv)")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--json", action="store_true", help="also write a JSON mirror")
    r.add_argument("--stop-after", type=int, help=argparse.SUPPRESS)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="analysis tables from result CSVs")
    a.add_argument("results", nargs="+")
    a.add_argument("--mode", required=True, choices=["ps", "collapse", "sigma-p", "fit", "energy-dist", "theory"])
    a.add_argument("--family", choices=[f.value for f in Family])
    a.add_argument("--p", type=float, default=0.5, help="target success probability for sigma-p/fit")
    a.add_argument("--exponent", type=float, default=2.0, help="collapse exponent")
    a.add_argument("--n", type=int, help="fixed size for energy-dist")
    a.add_argument("--sigma", type=float, help="fixed sigma for energy-dist")
    a.add_argument("--min-events", type=int, default=30)
    a.add_argument("--j", type=float, default=1.0, help="chain coupling for theory overlay")
    a.add_argument("--n-boot", type=int, default=1000)
    a.add_argument("--force", action="store_true", help="allow results from different manifests")
    a.add_argument("--json", action="store_true")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("theory", help="closed-form curves")
    t.add_argument("--kind", default="pz", choices=["pz", "chain", "success", "required-z"])
    t.add_argument("--z", default="0,0.5,1,1.5,2,2.5,3")
    t.add_argument("--sigmas", default="0.1,0.2,0.3,0.5,1.0")
    t.add_argument("--n", default="8,32,128")
    t.add_argument("--j", type=float, default=1.0)
    t.add_argument("--n-es", type=float, default=1.0)
    t.add_argument("--n-gs", type=float, default=1.0)
    t.add_argument("--ps", default="0.5,0.9,0.99")
    t.add_argument("--json", action="store_true")
    t.add_argument("--out")
    t.set_defaults(func=cmd_theory)

    rp = sub.add_parser("report", help="summary of result CSVs")
    rp.add_argument("results", nargs="+")
    rp.add_argument("--n-boot", type=int, default=1000)
    rp.add_argument("--force", action="store_true")
    rp.add_argument("--json", action="store_true")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AnalogChaosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
