"""Command line entry point: ``twopeak <command> --config run.toml --out dir``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import driver, field, profile
from .potentials import GammaKind, find_critical_points
from .reduction import ContractionError, LinearSolveError, Reduction, reduced_energy, spectral_probe

log = logging.getLogger("twopeak")


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def _clean(o):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(o, float):
        return o if math.isfinite(o) else None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def write_json(path, data):
    text = json.dumps(_clean(json.loads(json.dumps(data, default=_json_default))), indent=2,
                      sort_keys=True)
    Path(path).write_text(text + "\n")


def write_dat(path, pairs, header):
    with open(path, "w") as fh:
        fh.write(f"# {header}\n")
        for a, b in pairs:
            fh.write(f"{a:.17g} {b:.17g}\n")


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(driver.SWEEP_COLUMNS)
        for r in rows:
            w.writerow(["" if r[c] is None else r[c] for c in driver.SWEEP_COLUMNS])


# --------------------------------------------------------------------------
# commands


def cmd_profile(cfg, out, args):
    prof = profile.solve_profile(cfg.dim, cfg.p)
    half, quarter = profile.c0_candidates(prof)
    le = profile.limit_energy(prof, 1.0, 1.0)
    profile.save_profile(prof, out / "profile.dat")
    res = {"command": "profile", "dim": cfg.dim, "p": cfg.p,
           "shoot_amplitude": prof.shoot_amplitude, "match_radius": prof.match_radius,
           "moment_2": profile.moment(prof, 2), "moment_2p": profile.moment(prof, 2 * cfg.p),
           "c0_paper_half": half, "c0_nehari_quarter": quarter,
           "limit_energy_direct": le.direct}
    write_json(out / "results.json", res)
    print(f"W(0) = {prof.shoot_amplitude:.10f}, c0 candidates {half:.6f} / {quarter:.6f}")
    return 0


def cmd_landscape(cfg, out, args):
    pset = cfg.potentials()
    kind = GammaKind("general", cfg.p, cfg.dim)
    rep = find_critical_points(pset, cfg.box, kind)
    write_json(out / "results.json", {"command": "landscape", "config": cfg.to_json(),
                                      "landscape": rep.to_json()})
    print(rep.status)
    for c in rep.critical_points:
        print(f"  {c.kind:6s} Q={np.round(c.Q, 6).tolist()} value={c.value:.6g}")
    return 0


def cmd_ansatz_check(cfg, out, args):
    pset = cfg.potentials()
    prof = profile.solve_profile(cfg.dim, cfg.p)
    rcfg = cfg.reduction()
    rows = []
    for eps in cfg.eps:
        d = driver.ansatz_diagnostics(pset, prof, cfg.Q, eps, rcfg)
        pair = d["pair"]
        q, qp = driver.extract_peaks(pair.fields, eps)
        rows.append({"epsilon": eps, "grad_norm": d["grad_norm"], "overlap": d["overlap"],
                     "overlap_over_eps": d["overlap"] / eps, "grid": d["grid"].to_json(),
                     "boundary_max": pair.fields.boundary_max(), "Q_peak": q, "Qprime_peak": qp,
                     "placement": pair.placement.to_json()})
        if args.snapshots:
            field.save_snapshot(pair.fields, out / f"ansatz_eps{eps:g}",
                                {"epsilon": eps, "kind": "ansatz"})
        print(f"eps={eps:g}: |grad|={d['grad_norm']:.4g} overlap/eps={d['overlap'] / eps:.4g}")
    write_dat(out / "grad_norm.dat", [(r["epsilon"], r["grad_norm"]) for r in rows], "eps grad_norm")
    write_dat(out / "overlap_over_eps.dat", [(r["epsilon"], r["overlap_over_eps"]) for r in rows],
              "eps overlap/eps")
    write_json(out / "results.json", {"command": "ansatz-check", "config": cfg.to_json(),
                                      "rows": rows})
    return 0


def cmd_reduce(cfg, out, args):
    pset = cfg.potentials()
    prof = profile.solve_profile(cfg.dim, cfg.p)
    rcfg = cfg.reduction()
    rows = []
    status = 0
    for eps in cfg.eps:
        red = Reduction(pset, prof, cfg.Q, eps, rcfg)
        row = {"epsilon": eps}
        try:
            s = reduced_energy(pset, prof, cfg.Q, eps, rcfg, red=red)
            row["sample"] = s.to_json()
            if args.snapshots:
                field.save_snapshot(red.fields + s.corrector.w, out / f"reduced_eps{eps:g}",
                                    {"epsilon": eps, "kind": "ansatz+corrector",
                                     "relative_modes": rcfg.relative_modes})
            print(f"eps={eps:g}: A={s.A_value:.8g} |w|={s.corrector.w_norm:.4g}")
        except (ContractionError, LinearSolveError) as exc:
            row["error"] = str(exc)
            status = 1
            print(f"eps={eps:g}: corrector failed: {exc}")
        if args.probe:
            row["spectral"] = spectral_probe(red, seed=cfg.seed).to_json()
        rows.append(row)
    write_json(out / "results.json", {"command": "reduce", "config": cfg.to_json(), "rows": rows})
    return status


def cmd_solve(cfg, out, args):
    pset = cfg.potentials()
    prof = profile.solve_profile(cfg.dim, cfg.p)
    rcfg = cfg.reduction(False)
    recs = []
    status = 0
    for eps in cfg.eps:
        try:
            rec, rr = driver.solve_at(pset, prof, cfg.Q, eps, rcfg, cfg.newton_tol)
        except (driver.NewtonError, ContractionError, LinearSolveError) as exc:
            recs.append({"epsilon": eps, "status": f"failed: {exc}"})
            status = 1
            print(f"eps={eps:g}: failed: {exc}")
            continue
        d = rec.to_json()
        d["relax"] = {"iterations": rr.iterations, "converged": rr.converged,
                      "forces": rr.forces.tolist()}
        recs.append(d)
        field.save_snapshot(rec.fields, out / f"solution_eps{eps:g}",
                            {"epsilon": eps, "kind": "solution", "Q_eps": rec.Q_eps,
                             "Qprime_eps": rec.Qprime_eps})
        print(f"eps={eps:g}: {rec.status}, {rec.newton_iters} Newton steps, Q_eps={rec.Q_eps}, "
              f"Q'_eps={rec.Qprime_eps}")
    write_json(out / "results.json", {"command": "solve", "config": cfg.to_json(), "records": recs})
    return status


def cmd_sweep(cfg, out, args):
    sw = driver.epsilon_sweep(cfg, full_solve=args.full_solve or None)
    write_sweep_csv(out / "sweep.csv", sw.rows)
    for name in sw.slopes:
        write_dat(out / f"{name}.dat", sw.column(name), f"eps {name}")
    write_json(out / "results.json", {"command": "sweep", "config": cfg.to_json(),
                                      "sweep": sw.to_json()})
    for name, (s, _, hw) in sw.slopes.items():
        print(f"{name:22s} slope {s:.4f} +- {hw:.4f}")
    return 0


def cmd_verify(cfg, out, args):
    only = [int(x) for x in _floats(args.only)] if args.only else None
    res = driver.verify_suite(cfg, only=only, echo=print)
    ok = all(r.passed for r in res)
    write_json(out / "results.json", {"command": "verify", "config": cfg.to_json(),
                                      "passed": ok, "criteria": [r.to_json() for r in res]})
    print(f"{sum(r.passed for r in res)}/{len(res)} criteria passed")
    return 0 if ok else 1


COMMANDS = {"profile": cmd_profile, "landscape": cmd_landscape, "ansatz-check": cmd_ansatz_check,
            "reduce": cmd_reduce, "solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}


def build_parser():
    ap = argparse.ArgumentParser(prog="twopeak", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="TOML file with RunConfig fields")
        sp.add_argument("--eps", type=_floats, help="comma separated eps schedule (decreasing)")
        sp.add_argument("--grid-h", type=float, help="grid spacing in rescaled units")
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("-v", "--verbose", action="count", default=0)
        if name in ("ansatz-check", "reduce"):
            sp.add_argument("--snapshots", action="store_true", help="write field snapshots")
        if name == "reduce":
            sp.add_argument("--probe", action="store_true", help="add a spectral probe per eps")
        if name == "sweep":
            sp.add_argument("--full-solve", action="store_true")
        if name == "verify":
            sp.add_argument("--only", help="criterion numbers, e.g. 1,2,5")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config, eps=args.eps, h=args.grid_h)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[args.command](cfg, args.out, args)


if __name__ == "__main__":
    sys.exit(main())
