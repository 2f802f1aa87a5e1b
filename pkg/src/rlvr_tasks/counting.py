"""Counting problems: integer-range pipelines of filters and transformations.

A spec is an inclusive integer range, an ordered pipeline of 1-4 filters
and 0-3 transformations, and a final aggregation operator. Evaluation
applies the pipeline left to right and then the aggregate; everything is
exact integer / rational arithmetic.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import (
    GenerationError,
    GroundTruth,
    ProblemInstance,
    Rng,
    round_half_away,
)

FILTER_OPS = (
    "keep_even",
    "keep_odd",
    "keep_positive",
    "keep_negative",
    "keep_divisible_by",
    "keep_below",
    "keep_above",
)

TRANSFORM_OPS = (
    "add_constant",
    "multiply_constant",
    "negate",
    "square",
    "absolute_value",
    "modulo_constant",
)

AGGREGATE_OPS = (
    "count",
    "unique_count",
    "zero_count",
    "even_count",
    "odd_count",
    "positive_count",
    "negative_count",
    "divisible_by_n_count",
    "below_threshold_count",
    "above_threshold_count",
    "sum",
    "product",
    "mean",
    "median",
    "mode",
    "min",
    "max",
    "range",
    "bitwise_and",
    "bitwise_or",
    "bitwise_xor",
    "bitwise_nand",
)

BITWISE_OPS = ("bitwise_and", "bitwise_or", "bitwise_xor", "bitwise_nand")

# Operators whose generated parameter is drawn from a fixed range.
_DIVISOR_RANGE = (2, 12)
_CONSTANT_RANGE = (-20, 20)
_MODULUS_RANGE = (2, 12)

# Generated products are rejected beyond this magnitude.
PRODUCT_CAP = 1 << 62


class EmptyPipelineError(ValueError):
    """The pipeline emptied the multiset before the final operator."""


@dataclass(frozen=True)
class PipelineStep:
    """One filter or transform. `arg` is the constant for parameterized ops."""

    op: str
    arg: Optional[int] = None

    def __post_init__(self):
        if self.op not in FILTER_OPS and self.op not in TRANSFORM_OPS:
            raise ValueError(f"unknown pipeline op {self.op!r}")
        if self.op in ("keep_divisible_by", "modulo_constant") and (
            self.arg is None or self.arg < 2
        ):
            raise ValueError(f"{self.op} requires an argument >= 2")
        if self.op == "multiply_constant" and self.arg == 0:
            raise ValueError("multiply_constant by 0 is not allowed")
        if self.op in ("keep_below", "keep_above", "add_constant") and self.arg is None:
            raise ValueError(f"{self.op} requires an argument")

    @property
    def is_filter(self) -> bool:
        return self.op in FILTER_OPS

    def to_payload(self) -> dict:
        out: dict = {"op": self.op}
        if self.arg is not None:
            out["arg"] = self.arg
        return out

    @staticmethod
    def from_payload(obj: dict) -> "PipelineStep":
        return PipelineStep(obj["op"], obj.get("arg"))


@dataclass(frozen=True)
class AggregateOp:
    op: str
    arg: Optional[int] = None

    def __post_init__(self):
        if self.op not in AGGREGATE_OPS:
            raise ValueError(f"unknown aggregate op {self.op!r}")
        if self.op == "divisible_by_n_count" and (self.arg is None or self.arg < 2):
            raise ValueError("divisible_by_n_count requires an argument >= 2")
        if self.op in ("below_threshold_count", "above_threshold_count") and self.arg is None:
            raise ValueError(f"{self.op} requires a threshold argument")

    def to_payload(self) -> dict:
        out: dict = {"op": self.op}
        if self.arg is not None:
            out["arg"] = self.arg
        return out

    @staticmethod
    def from_payload(obj: dict) -> "AggregateOp":
        return AggregateOp(obj["op"], obj.get("arg"))


@dataclass(frozen=True)
class CountingSpec:
    range_lo: int
    range_hi: int
    pipeline: tuple[PipelineStep, ...]
    final_op: AggregateOp

    def __post_init__(self):
        if self.range_lo > self.range_hi:
            raise ValueError("range_lo must be <= range_hi")
        n_filters = sum(1 for s in self.pipeline if s.is_filter)
        n_transforms = len(self.pipeline) - n_filters
        if not 1 <= n_filters <= 4:
            raise ValueError(f"pipeline needs 1-4 filters, got {n_filters}")
        if not 0 <= n_transforms <= 3:
            raise ValueError(f"pipeline allows 0-3 transforms, got {n_transforms}")

    @property
    def n_filters(self) -> int:
        return sum(1 for s in self.pipeline if s.is_filter)

    @property
    def n_transforms(self) -> int:
        return len(self.pipeline) - self.n_filters

    def to_payload(self) -> dict:
        return {
            "kind": "counting",
            "range": [self.range_lo, self.range_hi],
            "pipeline": [s.to_payload() for s in self.pipeline],
            "final_op": self.final_op.to_payload(),
        }

    @staticmethod
    def from_payload(obj: dict) -> "CountingSpec":
        if obj.get("kind") != "counting":
            raise ValueError(f"not a counting spec payload: kind={obj.get('kind')!r}")
        lo, hi = obj["range"]
        return CountingSpec(
            int(lo),
            int(hi),
            tuple(PipelineStep.from_payload(s) for s in obj["pipeline"]),
            AggregateOp.from_payload(obj["final_op"]),
        )


def apply_step(values: list[int], step: PipelineStep) -> list[int]:
    op, arg = step.op, step.arg
    if op == "keep_even":
        return [v for v in values if v % 2 == 0]
    if op == "keep_odd":
        return [v for v in values if v % 2 != 0]
    if op == "keep_positive":
        return [v for v in values if v > 0]
    if op == "keep_negative":
        return [v for v in values if v < 0]
    if op == "keep_divisible_by":
        return [v for v in values if v % arg == 0]
    if op == "keep_below":
        return [v for v in values if v < arg]
    if op == "keep_above":
        return [v for v in values if v > arg]
    if op == "add_constant":
        return [v + arg for v in values]
    if op == "multiply_constant":
        return [v * arg for v in values]
    if op == "negate":
        return [-v for v in values]
    if op == "square":
        return [v * v for v in values]
    if op == "absolute_value":
        return [abs(v) for v in values]
    if op == "modulo_constant":
        # Python semantics: result in [0, arg) for arg > 0.
        return [v % arg for v in values]
    raise ValueError(f"unknown pipeline op {op!r}")


def apply_aggregate(values: list[int], agg: AggregateOp) -> GroundTruth:
    if not values:
        raise EmptyPipelineError("aggregate over an empty multiset")
    op, arg = agg.op, agg.arg
    if op == "count":
        return GroundTruth.int_scalar(len(values))
    if op == "unique_count":
        return GroundTruth.int_scalar(len(set(values)))
    if op == "zero_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v == 0))
    if op == "even_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v % 2 == 0))
    if op == "odd_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v % 2 != 0))
    if op == "positive_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v > 0))
    if op == "negative_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v < 0))
    if op == "divisible_by_n_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v % arg == 0))
    if op == "below_threshold_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v < arg))
    if op == "above_threshold_count":
        return GroundTruth.int_scalar(sum(1 for v in values if v > arg))
    if op == "sum":
        return GroundTruth.int_scalar(sum(values))
    if op == "product":
        return GroundTruth.int_scalar(math.prod(values))
    if op == "mean":
        return GroundTruth.real_scalar(Fraction(sum(values), len(values)), precision=2)
    if op == "median":
        ordered = sorted(values)
        mid = len(ordered) // 2
        if len(ordered) % 2 == 1:
            med = Fraction(ordered[mid])
        else:
            med = Fraction(ordered[mid - 1] + ordered[mid], 2)
        return GroundTruth.real_scalar(med, precision=2)
    if op == "mode":
        counts = Counter(values)
        top = max(counts.values())
        return GroundTruth.int_scalar(min(v for v, c in counts.items() if c == top))
    if op == "min":
        return GroundTruth.int_scalar(min(values))
    if op == "max":
        return GroundTruth.int_scalar(max(values))
    if op == "range":
        return GroundTruth.int_scalar(max(values) - min(values))
    if op in BITWISE_OPS:
        if min(values) < 0:
            raise ValueError(f"{op} requires non-negative values at the final stage")
        if op == "bitwise_and":
            acc = values[0]
            for v in values[1:]:
                acc &= v
            return GroundTruth.int_scalar(acc)
        if op == "bitwise_or":
            acc = values[0]
            for v in values[1:]:
                acc |= v
            return GroundTruth.int_scalar(acc)
        if op == "bitwise_xor":
            acc = values[0]
            for v in values[1:]:
                acc ^= v
            return GroundTruth.int_scalar(acc)
        # NAND: complement of the AND-fold at the minimal bit width that
        # covers the largest value in the final stage.
        acc = values[0]
        for v in values[1:]:
            acc &= v
        width = max(1, max(values).bit_length())
        return GroundTruth.int_scalar(~acc & ((1 << width) - 1))
    raise ValueError(f"unknown aggregate op {op!r}")


def evaluate_counting(spec: CountingSpec) -> GroundTruth:
    """Execute the pipeline and the final operator. Exact by construction."""
    values = list(range(spec.range_lo, spec.range_hi + 1))
    for step in spec.pipeline:
        values = apply_step(values, step)
        if not values:
            raise EmptyPipelineError(f"step {step.op} emptied the multiset")
    return apply_aggregate(values, spec.final_op)


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------

_STEP_SENTENCES = {
    "keep_even": "keep only the numbers that are even",
    "keep_odd": "keep only the numbers that are odd",
    "keep_positive": "keep only the numbers that are greater than zero",
    "keep_negative": "keep only the numbers that are less than zero",
    "keep_divisible_by": "keep only the numbers that are divisible by {arg}",
    "keep_below": "keep only the numbers that are less than {arg}",
    "keep_above": "keep only the numbers that are greater than {arg}",
    "add_constant": "add {arg} to each number",
    "multiply_constant": "multiply each number by {arg}",
    "negate": "negate each number",
    "square": "square each number",
    "absolute_value": "replace each number with its absolute value",
    "modulo_constant": (
        "replace each number with its remainder when divided by {arg} "
        "(remainders range from 0 to {arg_minus_one})"
    ),
}

_FINAL_SENTENCES = {
    "count": "count how many values remain",
    "unique_count": "count how many distinct values remain",
    "zero_count": "count how many are equal to zero",
    "even_count": "count how many are even",
    "odd_count": "count how many are odd",
    "positive_count": "count how many are greater than zero",
    "negative_count": "count how many are less than zero",
    "divisible_by_n_count": "count how many are divisible by {arg}",
    "below_threshold_count": "count how many are less than {arg}",
    "above_threshold_count": "count how many are greater than {arg}",
    "sum": "compute the sum of all values",
    "product": "compute the product of all values",
    "mean": "compute the mean of all values, rounded to two decimal places",
    "median": (
        "compute the median of all values (if the count is even, take the mean "
        "of the two middle values), rounded to two decimal places"
    ),
    "mode": (
        "find the most frequent value (if several values are tied for most "
        "frequent, answer with the smallest of them)"
    ),
    "min": "find the smallest value",
    "max": "find the largest value",
    "range": "compute the range (the largest value minus the smallest value)",
    "bitwise_and": "compute the bitwise AND of all values",
    "bitwise_or": "compute the bitwise OR of all values",
    "bitwise_xor": "compute the bitwise XOR of all values",
    "bitwise_nand": (
        "compute the bitwise NAND of all values (the bitwise complement of the "
        "AND of all values, using only as many bits as the largest value needs)"
    ),
}

ANSWER_INSTRUCTION = "Provide your final answer as 'Answer: X'."


def render_counting_prompt(spec: CountingSpec) -> str:
    parts = [f"Consider the integers from {spec.range_lo} to {spec.range_hi}, inclusive."]
    for i, step in enumerate(spec.pipeline):
        template = _STEP_SENTENCES[step.op]
        sentence = template.format(
            arg=step.arg, arg_minus_one=(step.arg - 1) if step.arg is not None else None
        )
        connector = "First" if i == 0 else "Then"
        parts.append(f"{connector}, {sentence}.")
    final = _FINAL_SENTENCES[spec.final_op.op].format(arg=spec.final_op.arg)
    parts.append(f"Of these numbers, {final}.")
    parts.append(ANSWER_INSTRUCTION)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@dataclass
class CountingConfig:
    count: int
    range_scale_bounds: tuple[int, int] = (10, 10_000)
    pipeline_depth_bounds: tuple[int, int] = (1, 7)
    operator_whitelist: Optional[Sequence[str]] = None
    seed: int = 0
    max_attempts_per_instance: int = 10_000

    def validate(self) -> None:
        lo, hi = self.range_scale_bounds
        if not (2 <= lo <= hi):
            raise GenerationError(f"range_scale_bounds out of order: {self.range_scale_bounds}")
        dlo, dhi = self.pipeline_depth_bounds
        if not (1 <= dlo <= dhi <= 7):
            raise GenerationError(
                f"pipeline_depth_bounds must lie within [1, 7]: {self.pipeline_depth_bounds}"
            )
        if self.operator_whitelist is not None:
            unknown = [op for op in self.operator_whitelist if op not in AGGREGATE_OPS]
            if unknown:
                raise GenerationError(f"unknown aggregate ops in whitelist: {unknown}")
            if not self.operator_whitelist:
                raise GenerationError("operator whitelist is empty")


def _draw_step(rng: Rng, kind: str, values: list[int]) -> PipelineStep:
    if kind == "filter":
        op = FILTER_OPS[rng.randint(0, len(FILTER_OPS) - 1)]
        if op == "keep_divisible_by":
            return PipelineStep(op, rng.randint(*_DIVISOR_RANGE))
        if op in ("keep_below", "keep_above"):
            # Threshold inside the current value range so the filter bites.
            return PipelineStep(op, rng.randint(min(values), max(values)))
        return PipelineStep(op)
    op = TRANSFORM_OPS[rng.randint(0, len(TRANSFORM_OPS) - 1)]
    if op == "add_constant":
        k = 0
        while k == 0:
            k = rng.randint(*_CONSTANT_RANGE)
        return PipelineStep(op, k)
    if op == "multiply_constant":
        k = 0
        while k == 0:
            k = rng.randint(*_CONSTANT_RANGE)
        return PipelineStep(op, k)
    if op == "modulo_constant":
        return PipelineStep(op, rng.randint(*_MODULUS_RANGE))
    return PipelineStep(op)


def _draw_spec(rng: Rng, config: CountingConfig) -> Optional[CountingSpec]:
    """One attempt at a valid spec; None signals rejection."""
    span = rng.randint(*config.range_scale_bounds)
    lo = rng.randint(-span, span)
    hi = lo + span - 1

    dlo, dhi = config.pipeline_depth_bounds
    total = rng.randint(dlo, dhi)
    n_filters = rng.randint(max(1, total - 3), min(4, total))
    n_transforms = total - n_filters
    kinds = ["filter"] * n_filters + ["transform"] * n_transforms
    rng.shuffle(kinds)

    values = list(range(lo, hi + 1))
    steps: list[PipelineStep] = []
    for kind in kinds:
        step = _draw_step(rng, kind, values)
        values = apply_step(values, step)
        if not values:
            return None
        steps.append(step)

    ops = tuple(config.operator_whitelist) if config.operator_whitelist else AGGREGATE_OPS
    if min(values) < 0:
        ops = tuple(op for op in ops if op not in BITWISE_OPS)
        if not ops:
            return None
    op_name = ops[rng.randint(0, len(ops) - 1)]
    if op_name == "divisible_by_n_count":
        final = AggregateOp(op_name, rng.randint(*_DIVISOR_RANGE))
    elif op_name in ("below_threshold_count", "above_threshold_count"):
        final = AggregateOp(op_name, rng.randint(min(values), max(values)))
    else:
        final = AggregateOp(op_name)

    if op_name == "product" and abs(math.prod(values)) > PRODUCT_CAP:
        return None
    return CountingSpec(lo, hi, tuple(steps), final)


def generate_counting(config: CountingConfig) -> list[ProblemInstance]:
    """Generate `config.count` unique counting instances, deterministically."""
    config.validate()
    rng = Rng(config.seed)
    instances: list[ProblemInstance] = []
    seen: set[tuple] = set()
    for ordinal in range(config.count):
        spec = None
        for _ in range(config.max_attempts_per_instance):
            candidate = _draw_spec(rng, config)
            if candidate is None:
                continue
            key = (
                candidate.range_lo,
                candidate.range_hi,
                candidate.pipeline,
                candidate.final_op,
            )
            if key in seen:
                continue
            seen.add(key)
            spec = candidate
            break
        if spec is None:
            raise GenerationError(
                f"exhausted {config.max_attempts_per_instance} attempts at instance {ordinal}"
            )
        truth = evaluate_counting(spec)
        instances.append(
            ProblemInstance(
                id=f"counting-{config.seed}-{ordinal}",
                family="counting",
                prompt=render_counting_prompt(spec),
                spec=spec.to_payload(),
                truth=truth,
                complexity={
                    "range_scale": spec.range_hi - spec.range_lo + 1,
                    "n_filters": spec.n_filters,
                    "n_transforms": spec.n_transforms,
                    "total_steps": len(spec.pipeline),
                },
                seed=config.seed,
            )
        )
    return instances
