"""Command-line harness: validate / run / sweep / report.

Exit codes: 0 clean, 1 numerical failure, 2 usage or configuration error.
"""

import argparse
import concurrent.futures
import dataclasses
import os
import sys
import traceback

from . import scenario as sc
from .errors import ConfigError, PrandtlLabError
from .records import INVARIANT_VIOLATION, REACHED_X_END, SEPARATED
from .selfcheck import format_battery, run_validation_battery

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def cmd_validate(args):
    checks = run_validation_battery(inject_stencil_bug=args.inject_stencil_bug)
    print(format_battery(checks))
    n_fail = sum(1 for c in checks if not c.passed)
    print(f"\n{len(checks) - n_fail}/{len(checks)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_NUMERICAL


def _apply_overrides(cfg, args):
    if args.snapshots:
        cfg.snapshot_xs = tuple(float(tok) for tok in args.snapshots.split(","))
    return cfg


def cmd_run(args):
    cfg = sc.load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    doc, record_vm, record_phys = sc.run_scenario(cfg, args.outdir,
                                                  vm_only=args.vm_only)
    print(f"[{cfg.label}] vm: {record_vm.termination} at x={record_vm.x_last():g} "
          f"tau_end={record_vm.tau[-1]:g}")
    if record_phys is not None:
        print(f"[{cfg.label}] phys: {record_phys.termination} at "
              f"x={record_phys.x_last():g}")
    if doc.get("xstar") is not None:
        print(f"[{cfg.label}] xstar={doc['xstar']:.6g} alpha={doc['alpha']:.4g} "
              f"C={doc.get('C_estimate')}")
    ok_terms = (SEPARATED, REACHED_X_END)
    bad = record_vm.termination not in ok_terms
    if record_phys is not None and record_phys.termination == INVARIANT_VIOLATION:
        bad = True
    return EXIT_NUMERICAL if bad else EXIT_OK


def _sweep_one(payload):
    cfg_dict, outdir, vm_only = payload
    cfg = sc.ScenarioConfig(**cfg_dict)
    try:
        doc, record_vm, _ = sc.run_scenario(cfg, outdir, vm_only=vm_only)
        band = None
        if doc.get("scan_windows"):
            ratios = [w["max_ratio"] for w in doc["scan_windows"]]
            band = max(ratios) / min(ratios) if min(ratios) > 0 else None
        return {
            "slope": cfg.slope, "x0": cfg.x0, "N": cfg.grid_n,
            "xstar": doc.get("xstar"), "alpha": doc.get("alpha"),
            "C_estimate": doc.get("C_estimate"), "max_ratio_band": band,
            "error": "",
        }
    except PrandtlLabError as exc:
        return {"slope": cfg.slope, "x0": cfg.x0, "N": cfg.grid_n,
                "xstar": None, "alpha": None, "C_estimate": None,
                "max_ratio_band": None, "error": str(exc)}


def cmd_sweep(args):
    base = sc.load_config(args.config)
    lists = sc.load_sweep_lists(args.config)
    jobs = []
    for slope in lists["slopes"]:
        for x0 in lists["x0s"]:
            for n in lists["grid_ns"]:
                cfg = dataclasses.replace(
                    base, slope=float(slope), x0=float(x0), grid_n=int(n),
                    label=f"{base.label}_s{slope:g}_x0{x0:g}_N{int(n)}")
                cfg.validate()
                sub = os.path.join(args.outdir,
                                   f"s{slope:g}_x0{x0:g}_N{int(n)}")
                jobs.append((dataclasses.asdict(cfg), sub, args.vm_only))
    if not jobs:
        raise ConfigError("empty sweep")

    results = []
    if args.parallel > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.parallel) as ex:
            results = list(ex.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    os.makedirs(args.outdir, exist_ok=True)
    summary = os.path.join(args.outdir, "sweep_summary.csv")
    cols = ("slope", "x0", "N", "xstar", "alpha", "C_estimate", "max_ratio_band")
    with open(summary, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in results:
            fh.write(",".join("" if row[c] is None else f"{row[c]:.10g}"
                              for c in cols) + "\n")
    n_ok = sum(1 for r in results if not r["error"])
    for r in results:
        if r["error"]:
            print(f"sweep row slope={r['slope']} x0={r['x0']} N={r['N']} "
                  f"failed: {r['error']}", file=sys.stderr)
    print(f"sweep: {n_ok}/{len(results)} scenarios succeeded -> {summary}")
    return EXIT_OK if n_ok >= 1 else EXIT_NUMERICAL


def _fmt(val, spec=".4g"):
    if val is None:
        return "n/a"
    return format(val, spec)


def cmd_report(args):
    docs = [sc.load_analysis_json(path) for path in args.analyses]
    lines = []
    lines.append("theorem scoreboard")
    lines.append("=" * 72)
    for doc in docs:
        lines.append(f"\n[{doc.get('label', '?')}] status={doc['status']}")
        sep = doc.get("separation_criterion")
        if doc["xstar"] is None:
            lines.append("  separation:      not applicable (no separation)")
        else:
            bound = sep.get("xstar_bound") if isinstance(sep, dict) else None
            ok = (bound is not None and doc["xstar"] < bound)
            lines.append(f"  separation:      X*={_fmt(doc['xstar'], '.6g')}"
                         f"  bound mu*x0/2={_fmt(bound)}"
                         f"  within={'yes' if ok else 'no'}")
            if isinstance(sep, dict) and "satisfied" in sep:
                lines.append(f"  slope criterion: satisfied={sep['satisfied']}"
                             f" slope_sup={_fmt(sep['slope_sup'])}"
                             f" threshold={_fmt(sep['threshold'])}")
        lines.append(f"  wall-shear rate: alpha={_fmt(doc['alpha'])}"
                     f"  C-estimate={_fmt(doc['C_estimate'])}")
        if doc["scan_windows"]:
            lines.append(f"  quarter rate:    band spread="
                         f"{_fmt(doc.get('scan_band_spread'))}"
                         f"  loglog slope={_fmt(doc.get('scan_loglog_slope'))}"
                         f"  windows={len(doc['scan_windows'])}")
        else:
            lines.append("  quarter rate:    no scan windows")
        lines.append(f"  curvature:       min_uyy={_fmt(doc['min_uyy'])}"
                     f"  max_uyy={_fmt(doc['max_uyy'])}"
                     f"  hyp(const)={doc.get('curvature_hypothesis_constant')}"
                     f"  hyp(general)={doc.get('curvature_hypothesis_general')}")
        wm = doc.get("weighted_mass_worst_residual")
        if wm is not None:
            lines.append(f"  weighted mass:   worst residual={_fmt(wm)}"
                         f" (scale {_fmt(doc.get('weighted_mass_scale'))})")
        if doc.get("goldstein"):
            lines.append(f"  goldstein:       coeffs={doc['goldstein']}")

    if len(docs) >= 2:
        lines.append("\nstability across documents")
        lines.append("-" * 72)
        xs = [d["xstar"] for d in docs if d["xstar"] is not None]
        cs = [d["C_estimate"] for d in docs if d.get("C_estimate") is not None]
        if len(xs) >= 2:
            spread = (max(xs) - min(xs)) / max(xs)
            lines.append(f"  X* spread: {spread:.3e} over {len(xs)} docs")
        if len(cs) >= 2:
            lines.append(f"  C-estimate ratio: {max(cs) / min(cs):.3f}")
    print("\n".join(lines))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prandtl-lab",
        description="Marching laboratory for steady boundary-layer separation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the built-in validation battery")
    p.add_argument("--inject-stencil-bug", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run one scenario from a config file")
    p.add_argument("config")
    p.add_argument("outdir")
    p.add_argument("--vm-only", action="store_true")
    p.add_argument("--snapshots", default="",
                   help="comma-separated x values for stored snapshots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="cartesian sweep over slopes/x0s/grids")
    p.add_argument("config")
    p.add_argument("outdir")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--vm-only", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="theorem scoreboard from analysis JSONs")
    p.add_argument("analyses", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrandtlLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception:
        traceback.print_exc()
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
