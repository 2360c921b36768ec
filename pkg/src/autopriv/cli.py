"""Headless entry points.

    autopriv run --scenario <file> --duration-s <n> [--seed <n>] --out <dir>
    autopriv select --trust <file> --layer <name> [--weights u,s,r,p]
    autopriv table-check
    autopriv serve-demo --scenario <file> [--port 8000]
    autopriv serve-storage [--config <file>] [--port 8100]

``run`` replays a scenario on simulated time and writes a plain-text report
plus machine-readable JSON sidecars; with a fixed seed the sidecars are
byte-identical across runs. Exit code 0 means every invariant check passed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from .datamodel import Layer, TrustModel
from .defaults import (data_path, default_maturity, default_pet_registry,
                       default_relevance_rules)
from .errors import AutoprivError
from .selection import (EQUAL_WEIGHTS, candidate_pet_families, check_mapping,
                        load_mapping, rank_candidates, relevant_principles)


def _fail(message: str, code: int = 2) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# ----------------------------------------------------------------------- run

def cmd_run(args) -> int:
    from .demo.session import DemoSession, ScenarioConfig

    scenario_path = Path(args.scenario)
    if not scenario_path.exists():
        return _fail(f"scenario file not found: {scenario_path}")
    try:
        config = ScenarioConfig.from_json(scenario_path)
    except (AutoprivError, json.JSONDecodeError, OSError) as exc:
        return _fail(f"cannot load scenario: {exc}")
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    session = DemoSession(config)
    ticks = int(args.duration_s * 1000 / config.tick_ms)
    session.step_ticks(ticks)

    state = session.get_state()
    leaks = session.leak_check()
    bandwidth = state["bandwidth"]

    per_app = []
    for (app_id, type_id), rule in sorted(session.pm.rules.items()):
        if not rule.pipeline or rule.pipeline[-1].pet_id != "pbe":
            continue
        spec = next(s for s in session.stream_plan
                    if app_id in s.subscriber_apps and s.type_id == type_id)
        per_app.append({
            "app_id": app_id,
            "type_id": type_id,
            "stream_period_s": spec.period_s,
            "max_staleness_s": rule.max_staleness_s,
            "staleness_satisfied": spec.period_s <= rule.max_staleness_s + 1e-9,
        })

    recall_by_app: dict[str, list[float]] = {}
    for q in session.query_log:
        recall_by_app.setdefault(q.app_id, []).append(q.recall)
    recall_table = [{"app_id": app, "queries": len(vals),
                     "mean_recall": sum(vals) / len(vals)}
                    for app, vals in sorted(recall_by_app.items())]

    checks = {
        "zero_plaintext": leaks["tap_plaintext_hits"] == 0 and
                          leaks["storage_plaintext_hits"] == 0,
        "no_true_location_disclosed": leaks["disclosed_equal_true"] == 0,
        "dedup_matches_schedule": bandwidth["entries_sent"] ==
                                  bandwidth["planned_entries"],
        "dedup_no_worse_than_naive": bandwidth["entries_sent"] <=
                                     bandwidth["naive_entries"],
        "staleness_satisfied": all(r["staleness_satisfied"] for r in per_app),
    }

    report = {
        "scenario": scenario_path.name,
        "seed": config.seed,
        "duration_s": args.duration_s,
        "ticks": ticks,
        "bandwidth": bandwidth,
        "per_app_constraints": per_app,
        "recall": recall_table,
        "leaks": leaks,
        "checks": checks,
        "passed": all(checks.values()),
    }
    series = {
        "epsilon_series": state["epsilon_series"],
        "inference_error_series": state["inference_error_series"],
    }

    report_json = json.dumps(report, indent=2, sort_keys=True) + "\n"
    series_json = json.dumps(series, indent=2, sort_keys=True) + "\n"
    (out_dir / "report.json").write_text(report_json)
    (out_dir / "series.json").write_text(series_json)

    lines = [f"# generated {time.strftime('%Y-%m-%dT%H:%M:%S')}",
             f"scenario {scenario_path.name} seed {config.seed} "
             f"duration {args.duration_s}s ({ticks} ticks)",
             f"bundles {bandwidth['bundles_sent']} entries "
             f"{bandwidth['entries_sent']} (naive {bandwidth['naive_entries']}, "
             f"planned {bandwidth['planned_entries']}) bytes {bandwidth['bytes_sent']}",
             f"disclosures {leaks['disclosures']} "
             f"equal-to-true {leaks['disclosed_equal_true']}",
             f"plaintext hits: tap {leaks['tap_plaintext_hits']} "
             f"storage {leaks['storage_plaintext_hits']}"]
    for entry in recall_table:
        lines.append(f"recall@k {entry['app_id']}: {entry['mean_recall']:.3f} "
                     f"over {entry['queries']} queries")
    for name, ok in checks.items():
        lines.append(f"check {name}: {'pass' if ok else 'FAIL'}")
    lines.append(f"result: {'PASS' if report['passed'] else 'FAIL'}")
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines[1:]))
    return 0 if report["passed"] else 1


# -------------------------------------------------------------------- select

def cmd_select(args) -> int:
    trust_path = Path(args.trust)
    if not trust_path.exists():
        return _fail(f"trust model file not found: {trust_path}")
    try:
        layer = Layer(args.layer)
    except ValueError:
        return _fail(f"unknown layer {args.layer!r}; expected one of "
                     f"{[l.value for l in Layer]}")
    weights = EQUAL_WEIGHTS
    if args.weights:
        try:
            weights = tuple(float(w) for w in args.weights.split(","))
        except ValueError:
            return _fail("weights must be 4 comma-separated numbers")
    try:
        trust = TrustModel.from_json(trust_path)
        assessments = relevant_principles(trust, default_relevance_rules())
        primary = {a.principle for a in assessments if a.relevance == "primary"}
        wanted = primary if primary else {a.principle for a in assessments}
        families = candidate_pet_families(wanted, layer)
        registry = default_pet_registry()
        concrete = sorted({d.pet_id for family, _ in families
                           for d in registry.of_family(family)})
        ranked = rank_candidates(concrete, default_maturity(), weights) \
            if concrete else []
    except AutoprivError as exc:
        return _fail(str(exc))

    for a in assessments:
        flag = " [accountability]" if a.accountability_required else ""
        print(f"principle {a.principle.value}: {a.relevance}{flag}")
    print(f"layer {layer.value}: candidate families "
          f"{[(f.value, s.value) for f, s in families]}")
    for pet_id, score in ranked:
        print(f"  {pet_id}: {score:.2f}")
    return 0


# --------------------------------------------------------------- table-check

def cmd_table_check(_args) -> int:
    path = data_path("gdpr_pet_mapping.json")
    if not path.exists():
        return _fail(f"mapping file not found: {path}")
    try:
        mapping = load_mapping(path)
    except AutoprivError as exc:
        return _fail(str(exc))
    diffs = check_mapping(mapping)
    if diffs:
        print(f"mapping file diverges from the embedded table "
              f"({len(diffs)} cells):")
        for d in diffs:
            print(f"  {d}")
        return 1
    rows = len(mapping)
    print(f"mapping file matches the embedded table ({rows} rows x 7 principles)")
    return 0


# -------------------------------------------------------------------- serving

def cmd_serve_demo(args) -> int:
    import uvicorn
    from .demo.api import create_demo_app
    from .demo.session import DemoSession, ScenarioConfig

    config = ScenarioConfig.from_json(args.scenario)
    app = create_demo_app(DemoSession(config))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_serve_storage(args) -> int:
    import uvicorn
    from .storage import StorageConfig, StorageServer
    from .storage_api import create_storage_app

    config = StorageConfig.from_json(args.config) if args.config else StorageConfig()
    app = create_storage_app(StorageServer(config))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_serve_pois(args) -> int:
    import uvicorn
    from .lbs import PoiStore, create_poi_app

    app = create_poi_app(PoiStore.from_csv(args.pois))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autopriv")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="replay a scenario and write reports")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--duration-s", type=float, default=60.0)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(func=cmd_run)

    p_sel = sub.add_parser("select", help="rank PET candidates for a trust model")
    p_sel.add_argument("--trust", required=True)
    p_sel.add_argument("--layer", required=True)
    p_sel.add_argument("--weights", default=None,
                       help="utility,scalability,robustness,low-power (sum 1)")
    p_sel.set_defaults(func=cmd_select)

    p_tc = sub.add_parser("table-check",
                          help="verify the mapping data file against the embedded table")
    p_tc.set_defaults(func=cmd_table_check)

    p_sd = sub.add_parser("serve-demo", help="serve the demo HTTP API")
    p_sd.add_argument("--scenario", required=True)
    p_sd.add_argument("--host", default="127.0.0.1")
    p_sd.add_argument("--port", type=int, default=8000)
    p_sd.set_defaults(func=cmd_serve_demo)

    p_ss = sub.add_parser("serve-storage", help="serve a storage server")
    p_ss.add_argument("--config", default=None)
    p_ss.add_argument("--host", default="127.0.0.1")
    p_ss.add_argument("--port", type=int, default=8100)
    p_ss.set_defaults(func=cmd_serve_storage)

    p_sp = sub.add_parser("serve-pois", help="serve a standalone POI provider")
    p_sp.add_argument("--pois", required=True)
    p_sp.add_argument("--host", default="127.0.0.1")
    p_sp.add_argument("--port", type=int, default=8200)
    p_sp.set_defaults(func=cmd_serve_pois)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
