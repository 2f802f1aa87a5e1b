"""Model-based evaluation: one inference call per (problem, model) pair.

Completions are scored through the family's parse -> verify -> reward
pipeline, persisted together with per-pair pass records, and aggregated
into a report (pass rate per model per family, per-tier and per-query-type
breakdowns, reward-category histogram). Runs are resumable: pairs already
in the records file are not re-requested, and a completed run's records
file is byte-identical across reruns with deterministic clients.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .calibration import CalibrationRecord, TierManifest
from .core import ProblemInstance, Rng, derive_seed
from .graphs import ANSWER_SHAPES, GraphProblem, verify_answer
from .parsing import (
    EXTRACTED,
    Completion,
    ParsedAnswer,
    RegexNormalizer,
    match_value,
    normalize_with_fallback,
    parse_counting,
    parse_json_answer,
)
from .rewards import (
    DEFAULT_LENGTH_THRESHOLD,
    RewardBreakdown,
    TELEMETRY_CATEGORIES,
    reward_counting,
    reward_graph,
    reward_spatial,
)

_MASK64 = (1 << 64) - 1


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class Decoding:
    temperature: float = 0.0
    max_tokens: int = 2048


@dataclass(frozen=True)
class CompletionResult:
    text: str
    truncated: bool = False


class ModelClient(Protocol):
    model_id: str

    def complete(self, prompt: str, decoding: Decoding) -> CompletionResult: ...


# ---------------------------------------------------------------------------
# Scoring pipeline (shared by the harness, the service, and the CLI)
# ---------------------------------------------------------------------------

_SPATIAL_SHAPES = {
    "absolute_location": "coordinate",
    "absolute_orientation": "orientation",
    "relative_location": "coordinate",
    "relative_orientation": "relative_orientation",
}


def answer_shape_for(instance: ProblemInstance) -> str:
    if instance.family == "counting":
        return "int"  # handled by the regex parser, not the JSON parser
    if instance.family == "graph":
        return ANSWER_SHAPES[instance.spec["operator"]]
    return _SPATIAL_SHAPES[instance.spec["query"]["type"]]


@dataclass(frozen=True)
class ScoreResult:
    parsed: ParsedAnswer
    verdict: str  # "correct" | "incorrect" | "invalid"
    correct: bool
    reward: RewardBreakdown
    normalizer_used: bool = False


def score_completion(
    instance: ProblemInstance,
    text: str,
    truncated: bool = False,
    *,
    normalizer=None,
    length_threshold: int = DEFAULT_LENGTH_THRESHOLD,
) -> ScoreResult:
    """Run the family's evaluation protocol on one completion.

    The normalizer fallback applies to graph and spatial answers only; the
    counting protocol is regex-only."""
    completion = Completion(text, truncated, problem_id=instance.id)

    if instance.family == "counting":
        parsed = parse_counting(completion)
        correct = parsed.status == EXTRACTED and match_value(parsed, instance.truth)
        verdict = ("correct" if correct else "incorrect") if parsed.status == EXTRACTED else "invalid"
        return ScoreResult(parsed, verdict, correct, reward_counting(parsed, correct))

    shape = answer_shape_for(instance)
    parsed = parse_json_answer(completion, shape)
    normalizer_used = False
    if parsed.status != EXTRACTED and normalizer is not None:
        reparsed = normalize_with_fallback(completion, instance, normalizer, shape, parsed)
        normalizer_used = reparsed.status == EXTRACTED
        parsed = reparsed

    if instance.family == "graph":
        problem = GraphProblem.from_payload(instance.spec)
        verdict = verify_answer(problem, instance.truth, parsed)
        correct = verdict.verdict == "correct"
        reward = reward_graph(parsed, verdict.verdict, len(text), length_threshold)
        return ScoreResult(parsed, verdict.verdict, correct, reward, normalizer_used)

    correct = parsed.status == EXTRACTED and match_value(parsed, instance.truth)
    verdict = ("correct" if correct else "incorrect") if parsed.status == EXTRACTED else "invalid"
    return ScoreResult(parsed, verdict, correct, reward_spatial(parsed, correct), normalizer_used)


def render_truth_completion(instance: ProblemInstance) -> str:
    """The canonical correct completion for an instance (oracle text)."""
    truth = instance.truth
    if instance.family == "counting":
        if truth.kind == "real":
            digits = truth.precision if truth.precision is not None else 2
            return f"Answer: {truth.value:.{digits}f}"
        return f"Answer: {truth.value}"
    if truth.kind == "coordinate":
        payload = {"answer": {"x": truth.value[0], "y": truth.value[1]}}
    elif truth.kind == "partition":
        payload = {"answer": [list(truth.value[0]), list(truth.value[1])]}
    elif truth.kind in ("vertex_set", "edge_set", "node_sequence"):
        value = [list(v) if isinstance(v, tuple) else v for v in truth.value]
        if truth.kind == "node_sequence" and not value:
            return json.dumps({"answer": "none"})
        payload = {"answer": value}
    else:
        payload = {"answer": truth.value}
    return json.dumps(payload)


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------


class ScriptedMockClient:
    """Replays a fixed problem_id -> completion text mapping."""

    def __init__(self, model_id: str, script: dict[str, str], default: str = "", truncated_ids: Optional[set] = None):
        self.model_id = model_id
        self.script = dict(script)
        self.default = default
        self.truncated_ids = truncated_ids or set()

    def complete(self, prompt: str, decoding: Decoding) -> CompletionResult:
        raise NotImplementedError("scripted clients answer by problem id; use complete_for")

    def complete_for(self, instance: ProblemInstance, decoding: Decoding) -> CompletionResult:
        return CompletionResult(
            self.script.get(instance.id, self.default),
            truncated=instance.id in self.truncated_ids,
        )


class OracleMockClient:
    """Deterministic synthetic model with a configurable skill level.

    For each (model, problem) pair a hash-seeded draw decides whether the
    client answers with the canonical correct completion, a plausible but
    wrong one, unparseable prose, or a truncated fragment. A per-problem
    difficulty offset (hash of the problem id, shared by all models) makes
    some problems systematically easier than others so that multi-model
    calibration produces all three tiers. skill=1.0 is an exact oracle and
    skill=0.0 never answers correctly, regardless of offsets."""

    def __init__(
        self,
        model_id: str,
        skill: float = 0.5,
        wrong_style_weights=(0.6, 0.3, 0.1),
        difficulty_spread: float = 0.45,
    ):
        self.model_id = model_id
        self.skill = skill
        self.wrong_style_weights = wrong_style_weights
        self.difficulty_spread = difficulty_spread

    def complete(self, prompt: str, decoding: Decoding) -> CompletionResult:
        raise NotImplementedError("oracle clients answer by instance; use complete_for")

    def _success_probability(self, instance: ProblemInstance) -> float:
        if self.skill >= 1.0:
            return 1.0
        if self.skill <= 0.0:
            return 0.0
        offset_rng = Rng(_fnv1a64("difficulty|" + instance.id))
        offset = (offset_rng.random() - 0.5) * 2 * self.difficulty_spread
        return min(1.0, max(0.0, self.skill + offset))

    def complete_for(self, instance: ProblemInstance, decoding: Decoding) -> CompletionResult:
        rng = Rng(derive_seed(_fnv1a64(self.model_id), _fnv1a64(instance.id)))
        if rng.random() < self._success_probability(instance):
            return CompletionResult("Working through the steps.\n" + render_truth_completion(instance))
        roll = rng.random()
        w_formatted, w_garbage, _ = self.wrong_style_weights
        if roll < w_formatted:
            return CompletionResult(_wrong_completion(instance, rng))
        if roll < w_formatted + w_garbage:
            return CompletionResult("I am not sure how to approach this problem at all.")
        return CompletionResult("Let me think step by step. First, consider", truncated=True)


def _wrong_completion(instance: ProblemInstance, rng: Rng) -> str:
    """A well-formatted but incorrect answer for the instance."""
    truth = instance.truth
    if instance.family == "counting":
        if truth.kind == "real":
            return f"Answer: {truth.value + 1:.2f}"
        return f"Answer: {truth.value + 1 + rng.randint(0, 3)}"
    if truth.kind == "coordinate":
        return json.dumps({"answer": {"x": truth.value[0] + 1.0, "y": truth.value[1]}})
    if truth.kind == "orientation":
        order = ("east", "north", "west", "south")
        return json.dumps({"answer": order[(order.index(truth.value) + 1) % 4]})
    if truth.kind == "relative_orientation":
        order = ("same", "left-of", "opposite", "right-of")
        return json.dumps({"answer": order[(order.index(truth.value) + 1) % 4]})
    if truth.kind == "int":
        return json.dumps({"answer": truth.value + 1})
    if truth.kind == "real":
        return json.dumps({"answer": round(truth.value + 0.5, 3)})
    if truth.kind == "partition":
        flat = sorted(set(truth.value[0]) | set(truth.value[1]))
        return json.dumps({"answer": [flat, []]})
    if truth.kind in ("vertex_set", "node_sequence"):
        items = [list(v) if isinstance(v, tuple) else v for v in truth.value]
        wrong = items[:-1] if items else [0]
        return json.dumps({"answer": wrong})
    if truth.kind == "edge_set":
        items = [list(v) for v in truth.value]
        if items:
            wrong = items[:-1]
        else:
            edges = instance.spec.get("edges", [])
            wrong = [edges[0]] if edges else [[0, 1]]
        return json.dumps({"answer": wrong})
    return json.dumps({"answer": None})


class HttpCompletionClient:
    """Generic JSON-over-HTTP completion client.

    POSTs {"model", "prompt", "temperature", "max_tokens"} to the endpoint
    and expects {"text": ..., "truncated": bool}. Retries transport
    failures with exponential backoff."""

    def __init__(
        self,
        model_id: str,
        endpoint: str,
        api_key_env: Optional[str] = None,
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 120.0,
    ):
        self.model_id = model_id
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def complete(self, prompt: str, decoding: Decoding) -> CompletionResult:
        import httpx

        headers = {}
        if self.api_key_env and os.environ.get(self.api_key_env):
            headers["Authorization"] = f"Bearer {os.environ[self.api_key_env]}"
        last_exc: Optional[Exception] = None
        for attempt in range(self.retries):
            try:
                resp = httpx.post(
                    self.endpoint,
                    json={
                        "model": self.model_id,
                        "prompt": prompt,
                        "temperature": decoding.temperature,
                        "max_tokens": decoding.max_tokens,
                    },
                    headers=headers,
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                body = resp.json()
                return CompletionResult(body.get("text", ""), bool(body.get("truncated", False)))
            except Exception as exc:
                last_exc = exc
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff * (2**attempt))
        raise RuntimeError(f"inference failed after {self.retries} attempts: {last_exc}")


def _client_complete(client, instance: ProblemInstance, decoding: Decoding) -> CompletionResult:
    if hasattr(client, "complete_for"):
        return client.complete_for(instance, decoding)
    return client.complete(instance.prompt, decoding)


# ---------------------------------------------------------------------------
# Eval runs
# ---------------------------------------------------------------------------


@dataclass
class EvalRunConfig:
    instances: Sequence[ProblemInstance]
    roster: Sequence
    decoding: Decoding = Decoding()
    concurrency: int = 4
    out_dir: Optional[str] = None
    run_id: str = "run"
    tier_manifest: Optional[TierManifest] = None
    normalizer: Optional[object] = None
    length_threshold: int = DEFAULT_LENGTH_THRESHOLD
    use_default_normalizer: bool = True

    def resolved_normalizer(self):
        if self.normalizer is not None:
            return self.normalizer
        return RegexNormalizer() if self.use_default_normalizer else None


@dataclass
class EvalReport:
    per_model_family: dict = field(default_factory=dict)
    per_tier: dict = field(default_factory=dict)
    per_query_kind: dict = field(default_factory=dict)
    category_histogram: dict = field(default_factory=dict)
    n_problems: int = 0
    n_records: int = 0

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "n_problems": self.n_problems,
            "n_records": self.n_records,
            "per_model_family": self.per_model_family,
            "per_tier": self.per_tier,
            "per_query_kind": self.per_query_kind,
            "category_histogram": self.category_histogram,
        }

    @staticmethod
    def from_json(obj: dict) -> "EvalReport":
        return EvalReport(
            per_model_family=obj.get("per_model_family", {}),
            per_tier=obj.get("per_tier", {}),
            per_query_kind=obj.get("per_query_kind", {}),
            category_histogram=obj.get("category_histogram", {}),
            n_problems=obj.get("n_problems", 0),
            n_records=obj.get("n_records", 0),
        )


@dataclass(frozen=True)
class EvalOutcome:
    records: list[CalibrationRecord]
    report: EvalReport


def _record_line(
    problem_id: str, model_id: str, passed: bool, category: str, reward_total: float, inference_error: bool
) -> str:
    return json.dumps(
        {
            "problem_id": problem_id,
            "model_id": model_id,
            "passed": passed,
            "category": category,
            "reward_total": reward_total,
            "inference_error": inference_error,
        }
    )


def run_eval(config: EvalRunConfig) -> EvalOutcome:
    """Evaluate every roster model on every problem, exactly once.

    Pairs already present in the run's records file are skipped, so an
    interrupted run resumes where it stopped. Failed inference calls count
    as not-passed and are flagged `inference_error`."""
    instances = list(config.instances)
    out_root = Path(config.out_dir) if config.out_dir else None
    records_path = out_root / config.run_id / "records.jsonl" if out_root else None

    done: dict[tuple[str, str], dict] = {}
    if records_path and records_path.exists():
        with open(records_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    done[(obj["problem_id"], obj["model_id"])] = obj

    normalizer = config.resolved_normalizer()
    pairs = [
        (inst, client)
        for inst in instances
        for client in config.roster
        if (inst.id, client.model_id) not in done
    ]

    def work(pair):
        inst, client = pair
        try:
            result = _client_complete(client, inst, config.decoding)
            error = False
        except Exception:
            result = CompletionResult("", truncated=False)
            error = True
        score = score_completion(
            inst,
            result.text,
            result.truncated,
            normalizer=normalizer,
            length_threshold=config.length_threshold,
        )
        return inst, client, result, score, error

    if out_root:
        (out_root / config.run_id).mkdir(parents=True, exist_ok=True)

    # Stream new records in canonical (problem-major, roster-order) order so
    # an interrupted file is always a prefix of the uninterrupted one.
    new_rows: dict[tuple[str, str], dict] = {}
    records_fh = open(records_path, "a", encoding="utf-8") if records_path else None
    try:
        if config.concurrency > 1 and len(pairs) > 1:
            pool = ThreadPoolExecutor(max_workers=config.concurrency)
            outcomes = pool.map(work, pairs)
        else:
            pool = None
            outcomes = map(work, pairs)
        for inst, client, result, score, error in outcomes:
            passed = bool(score.correct) and not error
            line = _record_line(
                inst.id, client.model_id, passed, score.reward.category, score.reward.total, error
            )
            new_rows[(inst.id, client.model_id)] = json.loads(line)
            if records_fh:
                records_fh.write(line)
                records_fh.write("\n")
                records_fh.flush()
            if out_root:
                comp_dir = out_root / config.run_id / "completions" / client.model_id
                comp_dir.mkdir(parents=True, exist_ok=True)
                with open(comp_dir / f"{inst.id}.json", "w", encoding="utf-8") as fh:
                    json.dump({"text": result.text, "truncated": result.truncated}, fh)
        if pool is not None:
            pool.shutdown()
    finally:
        if records_fh:
            records_fh.close()

    records: list[CalibrationRecord] = []
    rows: list[dict] = []
    for inst in instances:
        for client in config.roster:
            key = (inst.id, client.model_id)
            obj = done.get(key) or new_rows[key]
            rows.append(obj)
            records.append(CalibrationRecord(obj["problem_id"], obj["model_id"], obj["passed"]))

    report = build_report(instances, rows, config.tier_manifest)
    return EvalOutcome(records=records, report=report)


def build_report(
    instances: Sequence[ProblemInstance],
    rows: Sequence[dict],
    tier_manifest: Optional[TierManifest] = None,
) -> EvalReport:
    by_id = {inst.id: inst for inst in instances}
    report = EvalReport(n_problems=len(instances), n_records=len(rows))

    def bucket(table: dict, model: str, key: str) -> dict:
        slot = table.setdefault(model, {}).setdefault(key, {"n": 0, "passed": 0})
        return slot

    for row in rows:
        inst = by_id.get(row["problem_id"])
        if inst is None:
            continue
        model = row["model_id"]
        passed = bool(row["passed"])

        slot = bucket(report.per_model_family, model, inst.family)
        slot["n"] += 1
        slot["passed"] += int(passed)

        if tier_manifest and inst.id in tier_manifest.tiers:
            slot = bucket(report.per_tier, model, tier_manifest.tiers[inst.id])
            slot["n"] += 1
            slot["passed"] += int(passed)

        if inst.family == "spatial":
            kind = inst.spec["query"]["type"]
            slot = bucket(report.per_query_kind, model, kind)
            slot["n"] += 1
            slot["passed"] += int(passed)

        hist = report.category_histogram.setdefault(model, {c: 0 for c in TELEMETRY_CATEGORIES})
        category = row.get("category", "extraction_failure")
        hist[category] = hist.get(category, 0) + 1

    for table in (report.per_model_family, report.per_tier, report.per_query_kind):
        for model, groups in table.items():
            for key, slot in groups.items():
                slot["pass_rate"] = slot["passed"] / slot["n"] if slot["n"] else 0.0
    return report


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("model_id", "family", "n", "passed", "pass_rate")


def render_report(report: EvalReport, fmt: str = "text") -> str:
    """Render a report as `text`, `json`, or `csv` (pass-rate table only)."""
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for model in sorted(report.per_model_family):
            for family in sorted(report.per_model_family[model]):
                slot = report.per_model_family[model][family]
                lines.append(
                    f"{model},{family},{slot['n']},{slot['passed']},{slot['pass_rate']:.4f}"
                )
        return "\n".join(lines) + "\n"
    if fmt == "text":
        out = [
            f"problems: {report.n_problems}   records: {report.n_records}",
            "",
            f"{'model':<24} {'family':<10} {'n':>6} {'passed':>6} {'rate':>7}",
        ]
        for model in sorted(report.per_model_family):
            for family in sorted(report.per_model_family[model]):
                slot = report.per_model_family[model][family]
                out.append(
                    f"{model:<24} {family:<10} {slot['n']:>6} {slot['passed']:>6} "
                    f"{slot['pass_rate']:>7.3f}"
                )
        if report.per_query_kind:
            out += ["", f"{'model':<24} {'query kind':<22} {'n':>6} {'rate':>7}"]
            for model in sorted(report.per_query_kind):
                for kind in sorted(report.per_query_kind[model]):
                    slot = report.per_query_kind[model][kind]
                    out.append(
                        f"{model:<24} {kind:<22} {slot['n']:>6} {slot['pass_rate']:>7.3f}"
                    )
        if report.category_histogram:
            out += ["", f"{'model':<24} " + " ".join(f"{c:>24}" for c in TELEMETRY_CATEGORIES)]
            for model in sorted(report.category_histogram):
                hist = report.category_histogram[model]
                out.append(
                    f"{model:<24} "
                    + " ".join(f"{hist.get(c, 0):>24}" for c in TELEMETRY_CATEGORIES)
                )
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
