import json
from pathlib import Path

from rlvr_tasks.calibration import compute_tiers
from rlvr_tasks.counting import CountingConfig, generate_counting
from rlvr_tasks.graphs import GraphConfig, generate_graphs
from rlvr_tasks.harness import (
    Decoding,
    EvalRunConfig,
    OracleMockClient,
    ScriptedMockClient,
    build_report,
    render_report,
    render_truth_completion,
    run_eval,
    score_completion,
)
from rlvr_tasks.rewards import TELEMETRY_CATEGORIES
from rlvr_tasks.spatial import SpatialConfig, generate_spatial


def small_mixed_dataset():
    return (
        generate_counting(CountingConfig(count=12, seed=100))
        + generate_graphs(GraphConfig(count=12, seed=100, node_bounds=(5, 10)))
        + generate_spatial(SpatialConfig(count=12, seed=100))
    )


def test_truth_completions_score_correct():
    for inst in small_mixed_dataset():
        result = score_completion(inst, render_truth_completion(inst))
        assert result.correct, (inst.id, render_truth_completion(inst), result)
        assert result.reward.total >= 1.0


def test_score_garbage_never_correct():
    for inst in small_mixed_dataset()[:12]:
        result = score_completion(inst, "utter nonsense with no answer")
        assert not result.correct


def test_perfect_oracle_pass_rate():
    instances = small_mixed_dataset()
    roster = [OracleMockClient("perfect", skill=1.0)]
    outcome = run_eval(EvalRunConfig(instances=instances, roster=roster, concurrency=2))
    assert all(rec.passed for rec in outcome.records)
    for fam_stats in outcome.report.per_model_family["perfect"].values():
        assert fam_stats["pass_rate"] == 1.0


def test_empty_client_pass_rate_zero():
    instances = small_mixed_dataset()[:12]
    roster = [ScriptedMockClient("empty", {}, default="")]
    outcome = run_eval(EvalRunConfig(instances=instances, roster=roster, concurrency=1))
    assert not any(rec.passed for rec in outcome.records)
    hist = outcome.report.category_histogram["empty"]
    assert hist["extraction_failure"] == len(instances)


def test_exactly_once_and_histogram_conservation(tmp_path):
    instances = small_mixed_dataset()
    roster = [OracleMockClient(f"m{i}", skill=0.4 + 0.2 * i) for i in range(3)]
    outcome = run_eval(
        EvalRunConfig(
            instances=instances, roster=roster, concurrency=4, out_dir=str(tmp_path), run_id="r1"
        )
    )
    assert len(outcome.records) == len(instances) * 3
    pairs = {(r.problem_id, r.model_id) for r in outcome.records}
    assert len(pairs) == len(outcome.records)
    total = sum(
        count
        for hist in outcome.report.category_histogram.values()
        for count in hist.values()
    )
    assert total == len(outcome.records)


def test_records_file_byte_identical_across_reruns(tmp_path):
    instances = small_mixed_dataset()
    roster = [OracleMockClient("a", 0.5), OracleMockClient("b", 0.9)]
    out1 = tmp_path / "one"
    out2 = tmp_path / "two"
    run_eval(EvalRunConfig(instances=instances, roster=roster, concurrency=3, out_dir=str(out1)))
    run_eval(EvalRunConfig(instances=instances, roster=roster, concurrency=1, out_dir=str(out2)))
    rec1 = (out1 / "run" / "records.jsonl").read_bytes()
    rec2 = (out2 / "run" / "records.jsonl").read_bytes()
    assert rec1 == rec2


def test_resume_matches_uninterrupted(tmp_path):
    instances = small_mixed_dataset()
    roster = [OracleMockClient("a", 0.5)]
    full_dir = tmp_path / "full"
    run_eval(EvalRunConfig(instances=instances, roster=roster, out_dir=str(full_dir)))
    full = (full_dir / "run" / "records.jsonl").read_text()

    resumed_dir = tmp_path / "resumed"
    (resumed_dir / "run").mkdir(parents=True)
    prefix = "".join(line + "\n" for line in full.splitlines()[:10])
    (resumed_dir / "run" / "records.jsonl").write_text(prefix)
    run_eval(EvalRunConfig(instances=instances, roster=roster, out_dir=str(resumed_dir)))
    assert (resumed_dir / "run" / "records.jsonl").read_text() == full


def test_completions_cache_layout(tmp_path):
    instances = small_mixed_dataset()[:3]
    roster = [OracleMockClient("m0", 1.0)]
    run_eval(
        EvalRunConfig(instances=instances, roster=roster, out_dir=str(tmp_path), run_id="xyz")
    )
    for inst in instances:
        path = tmp_path / "xyz" / "completions" / "m0" / f"{inst.id}.json"
        assert path.exists()
        body = json.loads(path.read_text())
        assert "text" in body and "truncated" in body


def test_failed_inference_counts_as_not_passed():
    class ExplodingClient:
        model_id = "boom"

        def complete(self, prompt, decoding):
            raise RuntimeError("socket closed")

    instances = small_mixed_dataset()[:4]
    outcome = run_eval(EvalRunConfig(instances=instances, roster=[ExplodingClient()]))
    assert all(not rec.passed for rec in outcome.records)


def test_report_tier_breakdown():
    instances = small_mixed_dataset()
    roster = [OracleMockClient(f"m{i}", 0.5) for i in range(4)]
    outcome = run_eval(EvalRunConfig(instances=instances, roster=roster))
    records = outcome.records
    manifest = compute_tiers(records, [c.model_id for c in roster])
    outcome2 = run_eval(
        EvalRunConfig(instances=instances, roster=roster, tier_manifest=manifest)
    )
    per_tier = outcome2.report.per_tier
    assert per_tier, "tier breakdown missing"
    total = sum(slot["n"] for groups in per_tier.values() for slot in groups.values())
    assert total == len(records)


def test_report_query_kind_breakdown():
    instances = generate_spatial(SpatialConfig(count=30, seed=9))
    roster = [OracleMockClient("m", 0.7)]
    outcome = run_eval(EvalRunConfig(instances=instances, roster=roster))
    kinds = set()
    for groups in outcome.report.per_query_kind.values():
        kinds |= set(groups)
    assert kinds <= {
        "absolute_location",
        "absolute_orientation",
        "relative_location",
        "relative_orientation",
    }
    assert sum(
        slot["n"] for groups in outcome.report.per_query_kind.values() for slot in groups.values()
    ) == len(instances)


def test_render_report_formats():
    instances = small_mixed_dataset()[:6]
    roster = [OracleMockClient("m", 0.5)]
    outcome = run_eval(EvalRunConfig(instances=instances, roster=roster))
    text = render_report(outcome.report, "text")
    assert "pass" in text or "rate" in text
    csv_doc = render_report(outcome.report, "csv")
    assert csv_doc.splitlines()[0] == "model_id,family,n,passed,pass_rate"
    parsed = json.loads(render_report(outcome.report, "json"))
    assert parsed["n_records"] == len(outcome.records)


def test_render_report_deterministic():
    instances = small_mixed_dataset()[:6]
    roster = [OracleMockClient("m", 0.5)]
    a = run_eval(EvalRunConfig(instances=instances, roster=roster))
    b = run_eval(EvalRunConfig(instances=instances, roster=roster))
    for fmt in ("text", "json", "csv"):
        assert render_report(a.report, fmt) == render_report(b.report, fmt)


def test_empty_report_headers_only():
    report = build_report([], [])
    csv_doc = render_report(report, "csv")
    assert csv_doc.strip() == "model_id,family,n,passed,pass_rate"


def test_scripted_client_answers():
    instances = small_mixed_dataset()[:2]
    script = {instances[0].id: render_truth_completion(instances[0])}
    client = ScriptedMockClient("s", script, default="no idea")
    outcome = run_eval(EvalRunConfig(instances=instances, roster=[client]))
    by_id = {r.problem_id: r.passed for r in outcome.records}
    assert by_id[instances[0].id] is True
    assert by_id[instances[1].id] is False


def test_scripted_client_solves_all_three_worked_examples():
    from rlvr_tasks.core import ProblemInstance
    from rlvr_tasks.counting import (
        AggregateOp,
        CountingSpec,
        PipelineStep,
        evaluate_counting,
        render_counting_prompt,
    )
    from rlvr_tasks.graphs import GraphProblem, render_graph_prompt, solve_exact
    from rlvr_tasks.spatial import (
        Action,
        Particle,
        Query,
        SpatialProblem,
        render_spatial_prompt,
        simulate,
    )

    counting_spec = CountingSpec(
        1, 100,
        (PipelineStep("keep_even"), PipelineStep("keep_divisible_by", 3)),
        AggregateOp("count"),
    )
    graph_problem = GraphProblem(5, ((0, 2), (0, 4)), False, "maximum_independent_set")
    spatial_problem = SpatialProblem(
        particles=(Particle("P1", -1.5, 2.5, "east"), Particle("P2", 3.5, 1.5, "west")),
        actions=(
            Action("move", id="P1", direction="forward", steps=1),
            Action("move", id="P2", direction="backward", steps=1),
        ),
        query=Query("relative_location", "P1", "P2"),
    )
    instances = [
        ProblemInstance(
            "counting-0-0", "counting", render_counting_prompt(counting_spec),
            counting_spec.to_payload(), evaluate_counting(counting_spec),
            {"range_scale": 100, "n_filters": 2, "n_transforms": 0, "total_steps": 2}, 0,
        ),
        ProblemInstance(
            "graph-0-0", "graph", render_graph_prompt(graph_problem),
            graph_problem.to_payload(), solve_exact(graph_problem).truth,
            {"n_nodes": 5, "n_edges": 2, "directed": False, "weighted": False}, 0,
        ),
        ProblemInstance(
            "spatial-0-0", "spatial", render_spatial_prompt(spatial_problem),
            spatial_problem.to_payload(), simulate(spatial_problem),
            {"n_actions": 2, "query_kind": "relative_location"}, 0,
        ),
    ]
    script = {
        "counting-0-0": "The evens divisible by 3 are multiples of 6.\nAnswer: 16",
        "graph-0-0": '```json\n{"answer": [1, 2, 3, 4]}\n```',
        "spatial-0-0": '{"answer": {"x": -5.0, "y": 1.0}}',
    }
    outcome = run_eval(
        EvalRunConfig(instances=instances, roster=[ScriptedMockClient("demo", script)])
    )
    assert all(rec.passed for rec in outcome.records)
    assert len(outcome.records) == 3
