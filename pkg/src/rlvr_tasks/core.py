"""Shared domain types, deterministic randomness, and the JSONL dataset schema.

Every generated task is a ProblemInstance: a prompt, a structured spec that
fully determines the prompt and the answer, a verifiable GroundTruth, and
complexity metadata. Datasets are line-delimited JSON with a fixed field
order so that regeneration under the same seed is byte-identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

SCHEMA_VERSION = 1

FAMILIES = ("counting", "graph", "spatial")

TRUTH_KINDS = (
    "int",
    "real",
    "vertex_set",
    "edge_set",
    "node_sequence",
    "partition",
    "coordinate",
    "orientation",
    "relative_orientation",
)


class DatasetError(ValueError):
    """Malformed dataset file, schema mismatch, or invariant violation."""


class GenerationError(RuntimeError):
    """A generator could not satisfy its configuration."""


_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # SplitMix64 finalizer (Steele, Lea & Flood 2014).
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically fold integer keys into a seed for sub-streams."""
    h = seed & _MASK64
    for k in keys:
        h = _mix64((h + _GOLDEN + (k & _MASK64)) & _MASK64)
    return h


class Rng:
    """Deterministic 64-bit random stream backed by SplitMix64.

    The algorithm is fixed on purpose: the platform default generator is
    not guaranteed stable across versions, and datasets must regenerate
    identically everywhere. Identical seeds give identical streams.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive, unbiased."""
        if lo > hi:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            u = self.next_u64()
            if u < limit:
                return lo + (u % span)

    def choice(self, seq: Sequence):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq: Sequence, k: int) -> list:
        """k distinct elements, order randomized, without replacement."""
        if k > len(seq):
            raise ValueError(f"sample size {k} exceeds population {len(seq)}")
        pool = list(seq)
        picked = []
        for i in range(k):
            j = self.randint(i, len(pool) - 1)
            pool[i], pool[j] = pool[j], pool[i]
            picked.append(pool[i])
        return picked


def round_half_away(value: Fraction | int, digits: int) -> float:
    """Round an exact rational to `digits` decimals, ties away from zero.

    Returns the float closest to the rounded decimal. Used everywhere a
    rendered decimal is compared, so rounding never depends on binary
    float artifacts.
    """
    fr = Fraction(value)
    scaled = fr * 10**digits
    q, r = divmod(abs(scaled.numerator), scaled.denominator)
    if 2 * r >= scaled.denominator:
        q += 1
    if scaled.numerator < 0:
        q = -q
    return q / 10**digits


@dataclass(frozen=True)
class GroundTruth:
    """A family-tagged verifiable answer.

    kind is one of TRUTH_KINDS; value is normalized on construction
    (sets sorted, sequences tupled) so equality is structural. precision
    is the rendered decimal-place count for `real` values.
    """

    kind: str
    value: Any
    precision: int | None = None

    def __post_init__(self):
        if self.kind not in TRUTH_KINDS:
            raise ValueError(f"unknown truth kind {self.kind!r}")

    @staticmethod
    def int_scalar(v: int) -> "GroundTruth":
        return GroundTruth("int", int(v))

    @staticmethod
    def real_scalar(v: Fraction | float | int, precision: int = 3) -> "GroundTruth":
        if isinstance(v, (Fraction, int)):
            v = round_half_away(Fraction(v), precision)
        return GroundTruth("real", float(v), precision)

    @staticmethod
    def vertex_set(ids: Iterable[int]) -> "GroundTruth":
        return GroundTruth("vertex_set", tuple(sorted(set(int(i) for i in ids))))

    @staticmethod
    def edge_set(pairs: Iterable[tuple[int, int]]) -> "GroundTruth":
        norm = sorted(set((int(u), int(v)) for u, v in pairs))
        return GroundTruth("edge_set", tuple(norm))

    @staticmethod
    def node_sequence(ids: Iterable[int]) -> "GroundTruth":
        return GroundTruth("node_sequence", tuple(int(i) for i in ids))

    @staticmethod
    def partition(a: Iterable[int], b: Iterable[int]) -> "GroundTruth":
        pa = tuple(sorted(set(int(i) for i in a)))
        pb = tuple(sorted(set(int(i) for i in b)))
        # Unordered pair: canonical order puts the part containing the
        # smallest id first.
        if pa and pb and pb[0] < pa[0]:
            pa, pb = pb, pa
        return GroundTruth("partition", (pa, pb))

    @staticmethod
    def coordinate(x: float, y: float) -> "GroundTruth":
        return GroundTruth("coordinate", (float(x), float(y)), 3)

    @staticmethod
    def orientation(token: str) -> "GroundTruth":
        return GroundTruth("orientation", str(token))

    @staticmethod
    def relative_orientation(token: str) -> "GroundTruth":
        return GroundTruth("relative_orientation", str(token))

    def to_json(self) -> dict:
        out: dict[str, Any] = {"type": self.kind, "value": _jsonify(self.value)}
        if self.precision is not None:
            out["precision"] = self.precision
        return out

    @staticmethod
    def from_json(obj: dict) -> "GroundTruth":
        kind = obj.get("type")
        value = obj.get("value")
        precision = obj.get("precision")
        if kind == "int":
            return GroundTruth.int_scalar(value)
        if kind == "real":
            return GroundTruth("real", float(value), int(precision if precision is not None else 3))
        if kind == "vertex_set":
            return GroundTruth.vertex_set(value)
        if kind == "edge_set":
            return GroundTruth.edge_set(tuple((p[0], p[1]) for p in value))
        if kind == "node_sequence":
            return GroundTruth.node_sequence(value)
        if kind == "partition":
            return GroundTruth.partition(value[0], value[1])
        if kind == "coordinate":
            return GroundTruth.coordinate(value[0], value[1])
        if kind == "orientation":
            return GroundTruth.orientation(value)
        if kind == "relative_orientation":
            return GroundTruth.relative_orientation(value)
        raise DatasetError(f"unknown truth kind {kind!r}")


def _jsonify(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_jsonify(v) for v in value]
    return value


@dataclass(frozen=True)
class ProblemInstance:
    """One generated task.

    prompt and truth are pure functions of spec: re-rendering the spec
    yields a byte-identical prompt and re-solving yields an equal truth.
    spec and complexity are JSON-shaped dicts owned by the family module
    named by `family`.
    """

    id: str
    family: str
    prompt: str
    spec: dict
    truth: GroundTruth
    complexity: dict
    seed: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def to_json_line(self) -> str:
        record = {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "family": self.family,
            "prompt": self.prompt,
            "spec": self.spec,
            "truth": self.truth.to_json(),
            "complexity": self.complexity,
            "seed": self.seed,
        }
        return json.dumps(record)

    @staticmethod
    def from_json(record: dict) -> "ProblemInstance":
        version = record.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DatasetError(
                f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
            )
        for field in ("id", "family", "prompt", "spec", "truth", "complexity", "seed"):
            if field not in record:
                raise DatasetError(f"missing field {field!r}")
        return ProblemInstance(
            id=str(record["id"]),
            family=record["family"],
            prompt=record["prompt"],
            spec=record["spec"],
            truth=GroundTruth.from_json(record["truth"]),
            complexity=record["complexity"],
            seed=int(record["seed"]),
        )


def render_prompt(family: str, spec: dict) -> str:
    """Re-render the canonical prompt for a spec payload (dispatch by family)."""
    if family == "counting":
        from . import counting

        return counting.render_counting_prompt(counting.CountingSpec.from_payload(spec))
    if family == "graph":
        from . import graphs

        return graphs.render_graph_prompt(graphs.GraphProblem.from_payload(spec))
    if family == "spatial":
        from . import spatial

        return spatial.render_spatial_prompt(spatial.SpatialProblem.from_payload(spec))
    raise DatasetError(f"unknown family {family!r}")


def solve(family: str, spec: dict) -> GroundTruth:
    """Re-solve a spec payload to its ground truth (dispatch by family)."""
    if family == "counting":
        from . import counting

        return counting.evaluate_counting(counting.CountingSpec.from_payload(spec))
    if family == "graph":
        from . import graphs

        return graphs.solve_exact(graphs.GraphProblem.from_payload(spec)).truth
    if family == "spatial":
        from . import spatial

        return spatial.simulate(spatial.SpatialProblem.from_payload(spec))
    raise DatasetError(f"unknown family {family!r}")


def write_dataset(instances: Iterable[ProblemInstance], destination: str | os.PathLike) -> int:
    """Write instances as one JSON object per line. Returns the record count.

    Rejects duplicate ids before touching the destination.
    """
    items = list(instances)
    seen: set[str] = set()
    for inst in items:
        if inst.id in seen:
            raise DatasetError(f"duplicate id {inst.id!r}")
        seen.add(inst.id)
    with open(destination, "w", encoding="utf-8") as fh:
        for inst in items:
            fh.write(inst.to_json_line())
            fh.write("\n")
    return len(items)


def read_dataset(
    source: str | os.PathLike,
    *,
    verify_prompts: bool = True,
    verify_truths: bool = False,
) -> list[ProblemInstance]:
    """Read a JSONL dataset, re-validating instance invariants.

    Prompt purity (re-render equals stored prompt) is checked by default;
    truth purity (re-solve equals stored truth) is opt-in because exact
    re-solving of graph instances is not cheap. Errors cite the 1-based
    line number.
    """
    instances: list[ProblemInstance] = []
    seen: set[str] = set()
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            try:
                inst = ProblemInstance.from_json(record)
            except DatasetError as exc:
                raise DatasetError(f"line {lineno}: {exc}") from exc
            if inst.id in seen:
                raise DatasetError(f"line {lineno}: duplicate id {inst.id!r}")
            seen.add(inst.id)
            if verify_prompts:
                rendered = render_prompt(inst.family, inst.spec)
                if rendered != inst.prompt:
                    raise DatasetError(
                        f"line {lineno}: stored prompt does not match re-rendered spec"
                    )
            if verify_truths:
                resolved = solve(inst.family, inst.spec)
                if resolved != inst.truth:
                    raise DatasetError(
                        f"line {lineno}: stored truth does not match re-solved spec"
                    )
            instances.append(inst)
    return instances
