"""Command-line entry point: ``chipletdse {run,evaluate,topology,calibrate,report}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .catalog import Composition, aggregate_metrics
from .errors import ChipletDSEError, ConfigurationError, InsufficientStorageError
from .optimizer.outer import CoOptResult, co_optimize
from .optimizer.problem import Design, DesignPoint, Evaluator, baseline_design, composition_of
from .package import WarpageParams, check_warpage, warpage_profile
from .scenario import Scenario, load_scenario
from .topology import KINDS, average_hop_count, full_grid_graph

log = logging.getLogger("chipletdse")

PARETO_COLUMNS = ("design_id", "alpha", "latency_s", "energy_j", "edp", "t_peak_c",
                  "max_warpage_um", "cost_norm")
TRACE_COLUMNS = ("step", "alpha", "best_edp", "incumbent_edp")


def _num(x: float) -> str:
    return repr(float(x))


def _alpha(a: Sequence[int]) -> str:
    return ";".join(str(int(v)) for v in a)


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def pareto_csv(result: CoOptResult) -> str:
    rows = []
    for p in result.archive.items():
        e = p.evaluation
        rows.append([p.design_id, _alpha(p.composition.total), _num(e.latency_s), _num(e.energy_j),
                     _num(e.edp), _num(e.t_peak_c), _num(e.max_warpage_um), _num(e.cost_norm)])
    return _csv_text(PARETO_COLUMNS, rows)


def trace_csv(result: CoOptResult) -> str:
    return _csv_text(TRACE_COLUMNS, [[r.step, _alpha(r.alpha), _num(r.best_edp), _num(r.incumbent_edp)]
                                     for r in result.trace])


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    """Write every file or none: stage in a temp dir, then rename into place."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as tmp:
        for name, text in files.items():
            with open(Path(tmp) / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for name in files:
            os.replace(Path(tmp) / name, out_dir / name)


def _warpage_csv(scn: Scenario, embedded_area_mm2: float) -> str:
    p = scn.problem
    res = check_warpage(p.interposer, p.catalog, embedded_area_mm2,
                        limit_um=p.constraints.warpage_max_um)
    d = max(c.side_mm for c in p.catalog) / 2.0
    wp = WarpageParams.for_interposer(p.interposer, p.catalog.chiplet_cte_per_k, d_mm=d,
                                      tau_um=res.effective_tau_um)
    xs, ks = warpage_profile(wp)
    return _csv_text(("x_mm", "warpage_um"), [[_num(x), _num(k)] for x, k in zip(xs, ks)])


def _dumps_for(scn: Scenario, ev: Evaluator, point: Optional[DesignPoint], args) -> dict[str, str]:
    files = {}
    if point is None:
        return files
    if args.dump_mapping:
        files["mapping.csv"] = _csv_text(("layer", "chiplet", "fraction"),
                                         [[l, i, repr(f)] for l, i, f in point.mapping.rows()])
    if args.dump_warpage:
        emb = sum(scn.problem.catalog[t].area_mm2 for _, t in point.placement.embedded)
        files["warpage.csv"] = _warpage_csv(scn, emb)
    if args.dump_thermal:
        sol = ev.thermal_solution(point.design)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "layer", "temperature_c"])
        _, rows, cols = sol.temperature_c.shape
        for layer, name in enumerate(("chiplet", "interposer")):
            for r in range(rows):
                for c in range(cols):
                    w.writerow([c, r, name, f"{sol.temperature_c[layer, r, c]:.6f}"])
        files["thermal.csv"] = buf.getvalue()
    return files


def cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        scn = scn.with_seed(args.seed)
    out = Path(args.out) if args.out else scn.output_dir
    o = scn.optimizer
    result = co_optimize(scn.problem, o.outer_budget, o.inner_budget, o.seed, space=scn.space(),
                         n0=o.n0, pool_size=o.pool_size, solver=o.solver, threads=args.threads)
    warning = None
    if result.best is None:
        warning = "no thermally feasible design found (check t_max_c)"
        log.warning(warning)
    summary = {
        "scenario": scn.raw,
        "scenario_name": scn.name,
        "seed": o.seed,
        "code_version": __version__,
        "outer_evaluations": len(result.trace),
        "n_pareto": len(result.archive),
        "incumbent": None if result.best is None else {"edp": result.best_edp, **result.best.to_dict()},
        "warning": warning,
    }
    files = {"pareto.csv": pareto_csv(result), "trace.csv": trace_csv(result),
             "summary.json": _dumps(summary)}
    files.update(_dumps_for(scn, Evaluator(scn.problem), result.best, args))
    write_outputs(out, files)
    print(f"wrote {', '.join(sorted(files))} to {out}")
    return 0


def load_design(path: str, scn: Scenario) -> Design:
    """Design file: ``alpha`` plus optional ``placement``, ``offset`` and ``fresh``."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"{path}: cannot read design ({exc})") from exc
    p = scn.problem
    try:
        if "placement" in raw:
            design = Design.from_dict(raw)
        else:
            if "alpha" not in raw:
                raise ConfigurationError("needs 'alpha' or 'placement'")
            emb = [int(e) for e in raw.get("embedded", [0] * len(raw["alpha"]))]
            comp = Composition.of([a - e for a, e in zip(raw["alpha"], emb)], emb)
            design = Design(baseline_design(p, comp).placement, int(raw.get("offset", 0)),
                            frozenset(raw.get("fresh", ())))
        comp = composition_of(design.placement, len(p.catalog))
        if "alpha" in raw and list(comp.total) != [int(a) for a in raw["alpha"]]:
            raise ConfigurationError(f"alpha {raw['alpha']} does not match the placement ({list(comp.total)})")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return design


def cmd_evaluate(args) -> int:
    scn = load_scenario(args.scenario)
    p = scn.problem
    design = load_design(args.design, scn)
    ev = Evaluator(p)
    comp = composition_of(design.placement, len(p.catalog))
    agg = aggregate_metrics(comp, p.catalog)
    report = {"design_id": design.design_id, "alpha": list(comp.total),
              "surface_counts": list(comp.surface_counts),
              "embedded_counts": list(comp.embedded_counts), **asdict(agg)}
    try:
        point = ev.evaluate(design, thermal=True, require_admissible=False)
    except InsufficientStorageError as exc:
        area_ok, warp_ok, warp = ev.structural_check(design)
        report.update(feasible_storage=False, feasible_area=area_ok, feasible_warpage=warp_ok,
                      max_warpage_um=warp, feasible=False, diagnostic=str(exc))
        sys.stdout.write(_dumps(report))
        return 0
    report.update(point.evaluation.to_dict())
    report.update(feasible_storage=True, feasible=point.evaluation.feasible)
    sys.stdout.write(_dumps(report))
    files = _dumps_for(scn, ev, point, args)
    if files:
        out = Path(args.out) if args.out else scn.output_dir
        write_outputs(out, files)
    return 0


def cmd_topology(args) -> int:
    rows_out = []
    kinds = [args.kind] if args.kind else list(KINDS)
    for kind in kinds:
        g = full_grid_graph(kind, args.rows, args.cols)
        n = g.n_surface
        uniform = np.ones((n, n)) - np.eye(n)
        rows_out.append({"kind": kind, "rows": args.rows, "cols": args.cols,
                         "lateral_links": g.n_lateral_links,
                         "avg_router_ports": g.average_ports(),
                         "avg_hops_uniform": average_hop_count(g, uniform)})
    sys.stdout.write(_dumps(rows_out))
    return 0


def cmd_calibrate(args) -> int:
    from . import calibration as cal
    from .package import RELIEF_COEFFICIENT, WARPAGE_SCALE
    from .thermal import SINK_RESISTANCE_K_PER_W, ThermalParams, with_sink_resistance

    r = cal.calibrate_sink_resistance()
    scale = cal.calibrate_warpage_scale()
    relief = cal.calibrate_relief_coefficient()
    rep = cal.thermal_report(with_sink_resistance(ThermalParams(), r))
    out = {
        "sink_resistance_k_per_w": {"fitted": r, "frozen": SINK_RESISTANCE_K_PER_W},
        "warpage_scale": {"fitted": scale, "frozen": WARPAGE_SCALE},
        "relief_coefficient": {"fitted": relief, "frozen": RELIEF_COEFFICIENT},
        "t_peak_silicon_c": rep.silicon_by_kind,
        "t_peak_glass_floret_c": rep.glass_floret,
        "t_peak_glass_floret_embedded_c": rep.glass_floret_embedded,
    }
    sys.stdout.write(_dumps(out))
    return 0


def cmd_report(args) -> int:
    try:
        s = json.loads(Path(args.summary).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"{args.summary}: cannot read summary ({exc})") from exc
    print(f"scenario   {s.get('scenario_name')}  (seed {s.get('seed')}, version {s.get('code_version')})")
    print(f"outer evals {s.get('outer_evaluations')}   pareto points {s.get('n_pareto')}")
    inc = s.get("incumbent")
    if inc is None:
        print("incumbent  none" + (f"  ({s['warning']})" if s.get("warning") else ""))
        return 0
    e = inc["evaluation"]
    print(f"incumbent  {inc['design_id']}  alpha {inc['alpha']}")
    for key in ("edp", "latency_s", "energy_j", "t_peak_c", "max_warpage_um", "cost_norm"):
        print(f"  {key:<15} {e[key]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chipletdse", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def dumps(p):
        p.add_argument("--dump-mapping", action="store_true", help="write mapping.csv for the reported design")
        p.add_argument("--dump-warpage", action="store_true", help="write warpage.csv (profile over the interposer)")
        p.add_argument("--dump-thermal", action="store_true", help="write thermal.csv (per-cell temperatures)")

    run = sub.add_parser("run", help="co-optimize a scenario")
    run.add_argument("--scenario", required=True)
    run.add_argument("--out", help="output directory (overrides the scenario)")
    run.add_argument("--seed", type=int, help="overrides the scenario seed")
    run.add_argument("--threads", type=int, default=1)
    dumps(run)
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("evaluate", help="evaluate one design, print JSON")
    ev.add_argument("--scenario", required=True)
    ev.add_argument("--design", required=True)
    ev.add_argument("--out")
    dumps(ev)
    ev.set_defaults(func=cmd_evaluate)

    topo = sub.add_parser("topology", help="router-port and hop statistics per NoI")
    topo.add_argument("--kind", choices=KINDS)
    topo.add_argument("--rows", type=int, default=10)
    topo.add_argument("--cols", type=int, default=10)
    topo.set_defaults(func=cmd_topology)

    cal = sub.add_parser("calibrate", help="re-fit thermal and warpage constants, compare with frozen values")
    cal.set_defaults(func=cmd_calibrate)

    rep = sub.add_parser("report", help="pretty-print a summary.json")
    rep.add_argument("summary")
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("CHIPLETDSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ChipletDSEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
