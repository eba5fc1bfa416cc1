"""Command-line interface.

Subcommands map one-to-one onto the experiment surfaces: ``simulate``
(single cut-in trajectory), ``stability`` (population partition),
``sweep`` (sensitivity heatmaps), ``ttc-dist`` (inverse-TTC
distribution), ``lambert-plot`` (branch curves), and ``sample-params``
(synthetic population files).  Every command writes a manifest beside
its outputs; identical invocations reproduce outputs byte for byte.

Exit codes: 0 success, 1 numerical failure, 2 input/validation failure.
"""

import argparse
import sys

import numpy as np

from .config import build_scenario, parse_scenario_file, scenario_to_dict
from .errors import NumericalError, ValidationError
from .lambertw import scalar_w
from .manifest import RunManifest, fmt_float, write_csv
from .population import SamplerSpec, filter_stable, load, save, synth_sample
from .safety import (GAMMA_GRID_DEFAULT, Axis, SweepGrid, aggregate, sweep)
from .scenario import min_gap, simulate
from .stability import scan_rows, stability_scan
from .system import TABLE_PARAMS


def _population_from_args(args, default_count=50):
    if getattr(args, "params", None):
        pop = load(args.params)
    else:
        spec = SamplerSpec(count=getattr(args, "synthetic", None) or default_count,
                           seed=args.seed, rel_spread=args.spread)
        pop = synth_sample(spec)
    if getattr(args, "filter_stable", None) is not None:
        pop = filter_stable(pop, args.filter_stable, n=getattr(args, "keep", None))
    return pop


def _scenario_from_args(args):
    if getattr(args, "config", None):
        cfg, dev = parse_scenario_file(args.config)
    else:
        cfg, dev = build_scenario({})
    overrides = {}
    for name in ("theta", "phi", "mode", "ufb", "horizon", "dt"):
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            overrides[name] = v
    if overrides:
        from dataclasses import asdict

        flat = scenario_to_dict(cfg)
        keep = {k: flat[k] for k in ("theta", "phi", "tl_start", "ufb", "umax",
                                     "clamp", "lprime", "dt", "mode", "horizon",
                                     "al", "anticipation_success", "seed",
                                     "a1", "t1", "a2", "t2")}
        keep.update({k: v for k, v in overrides.items()})
        kin = {k[len("init_"):]: v for k, v in flat.items() if k.startswith("init_")}
        keep.update(kin)
        cfg2, _ = build_scenario(keep, origin="<flags>")
        cfg = cfg2
    return cfg, dev


def cmd_simulate(args):
    cfg, dev = _scenario_from_args(args)
    if args.params:
        pop = load(args.params)
        ident, pi = pop.items()[0]
    else:
        ident, pi = "reference", TABLE_PARAMS
    if dev is not None:
        cfg = cfg.with_deviations(dev["ds_l"], dev["dv_l"], dev["ds_c"],
                                  dev["dv_c"], pi)
    man = RunManifest(sys.argv, {
        "scenario": scenario_to_dict(cfg, dev), "param_set_id": str(ident),
        "method": args.method, "time_offset": args.time_offset,
    }, seed=cfg.seed)
    traj = simulate(cfg, pi, method=args.method)
    write_csv(args.out, traj.CSV_COLUMNS, traj.rows(time_offset=args.time_offset))
    man.add_output(args.out)
    man.write(args.out + ".manifest.json")
    mg = min_gap(traj)
    print(f"min gap {fmt_float(mg)} m "
          f"(theta={cfg.theta}, phi={cfg.phi}, mode={cfg.mode}"
          f"{', COLLISION' if traj.collided else ''})")
    print(f"terminal ds_c={traj.ds_c[-1]:.6g} m, dv_c={traj.dv_c[-1]:.6g} m/s")
    return 0


def cmd_stability(args):
    pop = _population_from_args(args, default_count=334)
    man = RunManifest(sys.argv, {
        "theta": args.theta, "margin": args.margin,
        "population": dict(pop.provenance, size=len(pop)),
    }, seed=args.seed)
    result = stability_scan(pop, args.theta, margin=args.margin)
    rows = scan_rows(result)
    header = ["id", "ks", "kv", "ka", "tau", "l", "TL", "stable",
              "rightmost_real_part", "method"]
    write_csv(args.out, header, [[r[h] for h in header] for r in rows])
    man.add_output(args.out)
    man.write(args.out + ".manifest.json")
    ns, nu, nf = result["counts"]
    print(f"stable {ns}  unstable {nu}  failed {nf}  (theta={args.theta})")
    return 0


_SWEEP_DEFAULTS = {
    "cutin": (
        (Axis("ds_c", -5.0, 0.0, 0.5), Axis("dv_c", -5.0, 0.0, 0.5)),
        {"ds_l": 5.0, "dv_l": 5.0},
    ),
    "leader": (
        (Axis("ds_l", 0.0, 5.0, 0.5), Axis("dv_l", 0.0, 5.0, 0.5)),
        {"ds_c": -5.0, "dv_c": -5.0},
    ),
    "delay-anticipation": (
        (Axis("theta", 0.0, 0.3, 0.1), Axis("phi", 0.0, 2.0, 0.1)),
        {"ds_l": 5.0, "dv_l": 5.0, "ds_c": -5.0, "dv_c": -5.0},
    ),
}


def cmd_sweep(args):
    axes, base_dev = _SWEEP_DEFAULTS[args.kind]
    base_dev = dict(base_dev)
    for name in ("ds_l", "dv_l", "ds_c", "dv_c"):
        v = getattr(args, name, None)
        if v is not None:
            base_dev[name] = v
    cfg, _ = _scenario_from_args(args)
    pop = _population_from_args(args)
    grid = SweepGrid(axes=axes, base_deviations=base_dev)
    man = RunManifest(sys.argv, {
        "kind": args.kind,
        "axes": [[a.name, a.lo, a.hi, a.step] for a in axes],
        "base_deviations": base_dev,
        "scenario": scenario_to_dict(cfg),
        "population": dict(pop.provenance, size=len(pop)),
        "workers": args.workers,
    }, seed=cfg.seed)
    cells = sweep(grid, pop, cfg, workers=args.workers)
    names = [a.name for a in axes]
    header = names + ["M", "collision_probability", "expectation_inverse_ttc",
                      "errors"]
    rows = []
    for cell in cells:
        coord = [cell.coords[n] for n in names]
        if cell.aggregate is None:
            rows.append(coord + [0, "", "", len(cell.errors)])
        else:
            a = cell.aggregate
            rows.append(coord + [a.M, a.collision_probability,
                                 a.expectation_inverse_ttc, len(cell.errors)])
    write_csv(args.out, header, rows)
    man.add_output(args.out)
    man.write(args.out + ".manifest.json")
    probs = [c.aggregate.collision_probability for c in cells if c.aggregate]
    print(f"{len(cells)} cells, collision probability "
          f"min {min(probs):.3g} max {max(probs):.3g}")
    return 0


def cmd_ttc_dist(args):
    cfg, dev = _scenario_from_args(args)
    pop = _population_from_args(args, default_count=200)
    if dev is None:
        dev = {"ds_l": 5.0, "dv_l": 5.0, "ds_c": -5.0, "dv_c": -5.0}
    man = RunManifest(sys.argv, {
        "scenario": scenario_to_dict(cfg, dev),
        "population": dict(pop.provenance, size=len(pop)),
    }, seed=cfg.seed)

    # deviations are resolved per set; aggregate over a per-set config
    inverses = []
    for j, (ident, pi) in enumerate(pop.items()):
        c = cfg.with_deviations(dev["ds_l"], dev["dv_l"], dev["ds_c"],
                                dev["dv_c"], pi)
        one = aggregate([(ident, pi)], c, cell_key=(j,))
        inverses.append((ident, one.inverses[0]))
    inv = np.array([v for _, v in inverses])
    write_csv(args.out, ["id", "inverse_ttc"], inverses)
    cdf_rows = [(g, float(np.mean(inv <= g))) for g in GAMMA_GRID_DEFAULT]
    cdf_path = args.out.replace(".csv", "") + ".cdf.csv"
    write_csv(cdf_path, ["gamma", "cdf"], cdf_rows)
    man.add_output(args.out)
    man.add_output(cdf_path)
    man.write(args.out + ".manifest.json")
    print(f"M={len(inv)}  E[1/t*]={np.mean(inv):.6g}  "
          f"P(collision)={np.mean(inv > 0):.6g}")
    return 0


def cmd_lambert_plot(args):
    lo, hi, step = (float(s) for s in args.grid.split(":"))
    ys = np.round(np.arange(lo, hi + 1e-12, step), 12)
    man = RunManifest(sys.argv, {"branches": args.branches, "grid": args.grid},
                      seed=None)
    rows = []
    for k in range(-args.branches, args.branches + 1):
        for y in ys:
            if y == 0.0 and k != 0:
                continue  # only the principal branch is finite at 0
            w = scalar_w(complex(y), k)
            rows.append((y, k, w.real, w.imag))
    write_csv(args.out, ["y", "k", "re_w", "im_w"], rows)
    man.add_output(args.out)
    man.write(args.out + ".manifest.json")
    print(f"{len(rows)} branch samples over y in [{lo}, {hi}]")
    return 0


def cmd_sample_params(args):
    spec = SamplerSpec(count=args.count, seed=args.seed, rel_spread=args.spread)
    pop = synth_sample(spec)
    man = RunManifest(sys.argv, {
        "count": args.count, "rel_spread": args.spread,
        "filter_stable": args.filter_stable, "keep": args.keep,
    }, seed=args.seed)
    if args.filter_stable is not None:
        pop = filter_stable(pop, args.filter_stable, n=args.keep)
    save(pop, args.out)
    man.add_output(args.out)
    man.write(args.out + ".manifest.json")
    print(f"wrote {len(pop)} sets to {args.out}")
    return 0


def _add_population_args(p, with_filter=True):
    p.add_argument("--params", help="population CSV (id,ks,kv,ka,tau,l,TL)")
    p.add_argument("--synthetic", type=int, metavar="M",
                   help="draw a synthetic population of size M instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spread", type=float, default=0.2,
                   help="relative spread of the synthetic sampler")
    if with_filter:
        p.add_argument("--filter-stable", type=float, metavar="THETA",
                       help="keep only sets stable at this sensing delay")
        p.add_argument("--keep", type=int, help="truncate the filtered population")


def _add_scenario_args(p):
    p.add_argument("--config", help="key-value scenario file")
    p.add_argument("--theta", type=float, help="sensing delay, s")
    p.add_argument("--phi", type=float, help="anticipation, s")
    p.add_argument("--mode", choices=["full_feedback", "worst_case_braking"])
    p.add_argument("--ufb", type=float, help="braking bound, m/s^2 (negative)")
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="accw",
        description="Delayed, anticipatory ACC cut-in analysis via the "
                    "matrix Lambert W function")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="single cut-in trajectory CSV")
    _add_scenario_args(p)
    p.add_argument("--params", help="population CSV; first row is used")
    p.add_argument("--method", choices=["stepped", "analytic"],
                   default="stepped")
    p.add_argument("--time-offset", type=float, default=0.0,
                   help="added to the CSV time column (display clock)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("stability", help="stability partition of a population")
    _add_population_args(p, with_filter=False)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("sweep", help="sensitivity heatmap CSV")
    p.add_argument("kind", choices=sorted(_SWEEP_DEFAULTS))
    _add_scenario_args(p)
    _add_population_args(p)
    for name in ("ds_l", "dv_l", "ds_c", "dv_c"):
        p.add_argument(f"--{name.replace('_', '-')}", type=float,
                       help=f"fixed {name} when not swept")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("ttc-dist", help="inverse-TTC distribution CSVs")
    _add_scenario_args(p)
    _add_population_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ttc_dist)

    p = sub.add_parser("lambert-plot", help="Lambert W branch curves CSV")
    p.add_argument("--branches", type=int, default=2, metavar="K",
                   help="emit branches -K..K")
    p.add_argument("--grid", default="-1:5:0.01", metavar="LO:HI:STEP",
                   help="real argument grid")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_lambert_plot)

    p = sub.add_parser("sample-params", help="write a synthetic population CSV")
    p.add_argument("--count", type=int, default=334)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spread", type=float, default=0.2)
    p.add_argument("--filter-stable", type=float, metavar="THETA")
    p.add_argument("--keep", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sample_params)

    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
