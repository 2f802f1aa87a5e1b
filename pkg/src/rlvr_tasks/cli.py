"""Command-line entry point: generate, solve, verify, eval, calibrate,
curate, serve, report.

Flags may be pre-loaded from a config file (`--config path`) holding flat
`key = value` lines (TOML-style scalars; `#` comments); explicit flags win
over file values. Exit codes: 0 success, 1 usage error, 2 data error,
3 external-service error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter
from pathlib import Path

from . import calibration, counting, figures, graphs, harness, service, spatial
from .core import (
    DatasetError,
    GenerationError,
    read_dataset,
    write_dataset,
)
from .rewards import DEFAULT_LENGTH_THRESHOLD


class UsageError(Exception):
    pass


class ExternalServiceError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


RANGE_SCALES = {
    "small": (10, 100),
    "medium": (100, 1000),
    "large": (1000, 10_000),
    "mixed": (10, 10_000),
}


def _parse_config_file(path: str) -> dict:
    """Flat key = value file; values are strings, numbers, or booleans."""
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if value.startswith('"') and value.endswith('"') and len(value) >= 2:
                values[key] = value[1:-1]
            elif value.lower() in ("true", "false"):
                values[key] = value.lower() == "true"
            else:
                try:
                    values[key] = int(value)
                except ValueError:
                    try:
                        values[key] = float(value)
                    except ValueError:
                        values[key] = value
    return values


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _int_list(text: str) -> list[int]:
    return [int(item) for item in _csv_list(text)]


def build_parser() -> _Parser:
    parser = _Parser(prog="rlvr-tasks", description=__doc__)
    parser.add_argument("--config", help="flat key = value config file; flags win", default=None)
    sub = parser.add_subparsers(
        dest="command",
        required=True,
        parser_class=lambda **kw: _Parser(
            formatter_class=argparse.ArgumentDefaultsHelpFormatter, **kw
        ),
    )

    gen = sub.add_parser("generate", help="generate a dataset")
    gen.add_argument("--family", choices=("counting", "graph", "spatial"), required=True,
                     help="task family to generate")
    gen.add_argument("--count", type=int, required=True, help="number of instances")
    gen.add_argument("--seed", type=int, default=0, help="generation seed")
    gen.add_argument("--out", required=True, help="output JSONL path")
    gen.add_argument("--range-scale", choices=sorted(RANGE_SCALES), default="mixed",
                     help="counting: magnitude of the integer range")
    gen.add_argument("--depth-min", type=int, default=1, help="counting: min pipeline steps")
    gen.add_argument("--depth-max", type=int, default=7, help="counting: max pipeline steps")
    gen.add_argument("--operators", default=None,
                     help="comma-separated operator whitelist (counting/graph)")
    gen.add_argument("--nodes-min", type=int, default=5, help="graph: min nodes")
    gen.add_argument("--nodes-max", type=int, default=25, help="graph: max nodes")
    gen.add_argument("--density-min", type=float, default=0.15, help="graph: min edge density")
    gen.add_argument("--density-max", type=float, default=0.5, help="graph: max edge density")
    gen.add_argument("--directed-fraction", type=float, default=0.2,
                     help="graph: fraction of direction-eligible draws made directed")
    gen.add_argument("--weighted-fraction", type=float, default=0.25,
                     help="graph: fraction of weight-eligible draws made weighted")
    gen.add_argument("--actions-min", type=int, default=1, help="spatial: min actions")
    gen.add_argument("--actions-max", type=int, default=10, help="spatial: max actions")
    gen.add_argument("--particles-min", type=int, default=2, help="spatial: min particles")
    gen.add_argument("--particles-max", type=int, default=4, help="spatial: max particles")
    gen.add_argument("--queries", default=None,
                     help="comma-separated spatial query kinds to draw from")

    slv = sub.add_parser("solve", help="re-solve a dataset and check stored truths")
    slv.add_argument("--dataset", required=True, help="dataset JSONL path")

    ver = sub.add_parser("verify", help="score a completions file against a dataset")
    ver.add_argument("--dataset", required=True, help="dataset JSONL path")
    ver.add_argument("--completions", required=True,
                     help='JSONL: {"id", "completion", "truncated"?}')
    ver.add_argument("--out", default=None, help="verdicts JSONL (default stdout)")
    ver.add_argument("--length-threshold", type=int, default=DEFAULT_LENGTH_THRESHOLD,
                     help="graph length penalty threshold, characters")

    ev = sub.add_parser("eval", help="run model-based evaluation")
    ev.add_argument("--dataset", required=True, help="dataset JSONL path")
    ev.add_argument("--roster", required=True, help="roster JSON file")
    ev.add_argument("--out-dir", required=True, help="run output directory")
    ev.add_argument("--run-id", default="run", help="run identifier")
    ev.add_argument("--jobs", type=int, default=4, help="max concurrent inference calls")
    ev.add_argument("--temperature", type=float, default=0.0,
                    help="decoding temperature (0 = greedy test-eval protocol)")
    ev.add_argument("--max-tokens", type=int, default=2048, help="completion token budget")
    ev.add_argument("--tier-manifest", default=None,
                    help="tier manifest JSON for per-tier report breakdowns")

    cal = sub.add_parser("calibrate", help="compute difficulty tiers from records")
    cal.add_argument("--records", required=True, help="calibration records JSONL")
    cal.add_argument("--roster", required=True, help="comma-separated model ids")
    cal.add_argument("--out", required=True, help="tier manifest JSON")

    cur = sub.add_parser("curate", help="curate train/test splits from a tier manifest")
    cur.add_argument("--manifest", required=True, help="tier manifest JSON")
    cur.add_argument("--out", required=True, help="split manifest JSON")
    cur.add_argument("--train-sizes", default="100,200,500",
                     help="comma-separated training subset sizes")
    cur.add_argument("--test-size", type=int, default=200,
                     help="held-out test size (the graph family uses 500)")
    cur.add_argument("--seed", type=int, default=0, help="curation seed")

    srv = sub.add_parser("serve", help="run the verification/reward service")
    srv.add_argument("--datasets", default=None,
                     help="comma-separated dataset paths (env RLVR_SERVICE_DATASETS)")
    srv.add_argument("--host", default=None, help="bind address (env RLVR_SERVICE_BIND)")
    srv.add_argument("--port", type=int, default=None, help="env RLVR_SERVICE_PORT")
    srv.add_argument("--length-threshold", type=int, default=None,
                     help="env RLVR_SERVICE_LENGTH_THRESHOLD")

    rep = sub.add_parser("report", help="render an eval report (+ figures)")
    rep.add_argument("--report", default=None, help="report JSON from eval")
    rep.add_argument("--dataset", default=None, help="rebuild report from dataset + records")
    rep.add_argument("--records", default=None, help="records JSONL (with --dataset)")
    rep.add_argument("--tier-manifest", default=None, help="tier manifest for per-tier rows")
    rep.add_argument("--format", choices=("text", "json", "csv"), default="text",
                     help="document format")
    rep.add_argument("--out", default=None, help="write the document here (default stdout)")
    rep.add_argument("--figures-dir", default=None, help="also render PNG figures here")

    return parser


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    started = time.time()
    whitelist = _csv_list(args.operators) if args.operators else None
    if args.family == "counting":
        config = counting.CountingConfig(
            count=args.count,
            range_scale_bounds=RANGE_SCALES[args.range_scale],
            pipeline_depth_bounds=(args.depth_min, args.depth_max),
            operator_whitelist=whitelist,
            seed=args.seed,
        )
        instances = counting.generate_counting(config)
        histogram = Counter(i.complexity["total_steps"] for i in instances)
        hist_label = "steps"
    elif args.family == "graph":
        config = graphs.GraphConfig(
            count=args.count,
            node_bounds=(args.nodes_min, args.nodes_max),
            edge_density_bounds=(args.density_min, args.density_max),
            operator_whitelist=whitelist,
            directed_fraction=args.directed_fraction,
            weighted_fraction=args.weighted_fraction,
            seed=args.seed,
        )
        instances = graphs.generate_graphs(config)
        histogram = Counter(i.complexity["n_nodes"] for i in instances)
        hist_label = "nodes"
    else:
        config = spatial.SpatialConfig(
            count=args.count,
            action_count_bounds=(args.actions_min, args.actions_max),
            particle_count_bounds=(args.particles_min, args.particles_max),
            query_mix=_csv_list(args.queries) if args.queries else None,
            seed=args.seed,
        )
        instances = spatial.generate_spatial(config)
        histogram = Counter(i.complexity["n_actions"] for i in instances)
        hist_label = "actions"
    n = write_dataset(instances, args.out)
    elapsed = time.time() - started
    hist = " ".join(f"{k}:{v}" for k, v in sorted(histogram.items()))
    print(f"wrote {n} {args.family} instances to {args.out} in {elapsed:.1f}s ({hist_label} {hist})")
    return 0


def cmd_solve(args) -> int:
    instances = read_dataset(args.dataset, verify_prompts=True, verify_truths=True)
    print(f"{len(instances)} instances re-solved; stored truths verified")
    return 0


def cmd_verify(args) -> int:
    instances = {inst.id: inst for inst in read_dataset(args.dataset)}
    rows = []
    with open(args.completions, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                cid = str(obj["id"])
                text = obj["completion"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise DatasetError(f"{args.completions}:{lineno}: bad completion record ({exc})")
            if cid not in instances:
                raise DatasetError(
                    f"{args.completions}:{lineno}: id {cid!r} not present in dataset"
                )
            rows.append((cid, text, bool(obj.get("truncated", False))))
    out_lines = []
    for cid, text, truncated in rows:
        result = harness.score_completion(
            instances[cid], text, truncated, length_threshold=args.length_threshold
        )
        out_lines.append(
            json.dumps(
                {
                    "id": cid,
                    "verdict": result.verdict,
                    "correct": result.correct,
                    "reward": result.reward.to_json(),
                    "category": result.reward.category,
                }
            )
        )
    doc = "\n".join(out_lines) + ("\n" if out_lines else "")
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
        correct = sum(1 for line in out_lines if json.loads(line)["correct"])
        print(f"scored {len(out_lines)} completions ({correct} correct) -> {args.out}")
    else:
        sys.stdout.write(doc)
    return 0


def _load_roster(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        entries = json.load(fh)
    roster = []
    for entry in entries:
        kind = entry.get("type", "oracle")
        if kind == "oracle":
            roster.append(
                harness.OracleMockClient(entry["model_id"], skill=float(entry.get("skill", 0.5)))
            )
        elif kind == "scripted":
            script = entry.get("script", {})
            if "script_path" in entry:
                with open(entry["script_path"], "r", encoding="utf-8") as sfh:
                    script = json.load(sfh)
            roster.append(
                harness.ScriptedMockClient(entry["model_id"], script, entry.get("default", ""))
            )
        elif kind == "http":
            roster.append(
                harness.HttpCompletionClient(
                    entry["model_id"],
                    entry["endpoint"],
                    api_key_env=entry.get("api_key_env"),
                    retries=int(entry.get("retries", 3)),
                )
            )
        else:
            raise UsageError(f"unknown roster client type {kind!r}")
    return roster


def cmd_eval(args) -> int:
    instances = read_dataset(args.dataset)
    roster = _load_roster(args.roster)
    tier_manifest = (
        calibration.TierManifest.load(args.tier_manifest) if args.tier_manifest else None
    )
    config = harness.EvalRunConfig(
        instances=instances,
        roster=roster,
        decoding=harness.Decoding(temperature=args.temperature, max_tokens=args.max_tokens),
        concurrency=args.jobs,
        out_dir=args.out_dir,
        run_id=args.run_id,
        tier_manifest=tier_manifest,
    )
    outcome = harness.run_eval(config)
    report_path = Path(args.out_dir) / args.run_id / "report.json"
    report_path.write_text(
        json.dumps(outcome.report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    sys.stdout.write(harness.render_report(outcome.report, "text"))
    print(f"records: {Path(args.out_dir) / args.run_id / 'records.jsonl'}")
    print(f"report: {report_path}")
    return 0


def cmd_calibrate(args) -> int:
    records = calibration.read_records(args.records)
    roster = _csv_list(args.roster)
    manifest = calibration.compute_tiers(records, roster)
    manifest.save(args.out)
    counts = Counter(manifest.tiers.values())
    print(
        f"tiered {len(manifest.tiers)} problems over {len(roster)} models: "
        + " ".join(f"{t}:{counts.get(t, 0)}" for t in calibration.TIERS)
        + f" -> {args.out}"
    )
    return 0


def cmd_curate(args) -> int:
    manifest = calibration.TierManifest.load(args.manifest)
    plan = calibration.CurationPlan(
        train_sizes=tuple(_int_list(args.train_sizes)),
        test_size=args.test_size,
        seed=args.seed,
    )
    splits = calibration.curate_splits(manifest, plan)
    splits.save(args.out)
    report = calibration.verify_manifest(splits, manifest)
    status = "ok" if report["ok"] else "FAILED"
    sizes = " ".join(f"{name}:{len(ids)}" for name, ids in sorted(splits.subsets.items()))
    print(f"curated {sizes} -> {args.out} (self-check {status})")
    return 0 if report["ok"] else 2


def cmd_serve(args) -> int:
    import os

    datasets = args.datasets or os.environ.get("RLVR_SERVICE_DATASETS")
    if not datasets:
        raise UsageError("no datasets given (use --datasets or RLVR_SERVICE_DATASETS)")
    host = args.host or os.environ.get("RLVR_SERVICE_BIND", "127.0.0.1")
    port = args.port if args.port is not None else int(os.environ.get("RLVR_SERVICE_PORT", "8080"))
    threshold = (
        args.length_threshold
        if args.length_threshold is not None
        else int(os.environ.get("RLVR_SERVICE_LENGTH_THRESHOLD", str(DEFAULT_LENGTH_THRESHOLD)))
    )
    instances = []
    for path in _csv_list(datasets):
        instances.extend(read_dataset(path))
    print(f"serving {len(instances)} problems on {host}:{port}")
    service.serve(instances, host=host, port=port, length_threshold=threshold)
    return 0


def cmd_report(args) -> int:
    if args.report:
        with open(args.report, "r", encoding="utf-8") as fh:
            report = harness.EvalReport.from_json(json.load(fh))
    elif args.dataset and args.records:
        instances = read_dataset(args.dataset)
        rows = []
        with open(args.records, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
        tier_manifest = (
            calibration.TierManifest.load(args.tier_manifest) if args.tier_manifest else None
        )
        report = harness.build_report(instances, rows, tier_manifest)
    else:
        raise UsageError("need --report, or --dataset together with --records")
    doc = harness.render_report(report, args.format)
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
        print(f"wrote {args.format} report to {args.out}")
    else:
        sys.stdout.write(doc)
    if args.figures_dir:
        written = figures.render_figures(report, args.figures_dir)
        for path in written:
            print(f"figure: {path}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "eval": cmd_eval,
    "calibrate": cmd_calibrate,
    "curate": cmd_curate,
    "serve": cmd_serve,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # Pre-scan for --config so file values become defaults; flags win.
        if "--config" in argv:
            idx = argv.index("--config")
            if idx + 1 >= len(argv):
                raise UsageError("--config requires a path")
            overlay = _parse_config_file(argv[idx + 1])
            subparsers = parser._subparsers._group_actions[0].choices.values()
            known = {action.dest for sp in subparsers for action in sp._actions}
            unknown = set(overlay) - known
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
            for sp in subparsers:
                for action in sp._actions:
                    if action.dest in overlay:
                        action.default = overlay[action.dest]
                        action.required = False
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, GenerationError, calibration.CalibrationError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ExternalServiceError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
