"""Task-specific reward functions with component-level breakdowns.

Counting (total in [-0.4, +1.1]):
  correctness   1.0 correct / 0.0 incorrect
  format_bonus  +0.1 canonical `Answer: X` line, +0.05 acceptable variant
                or bare value, -0.1 invalid / failed / truncated
  step_penalty  -0.1 per reasoning step beyond 5, capped at -0.3
  Format and step components apply to incorrect answers too, so a tidy
  wrong answer can still score slightly positive.

Graph (total in [-0.2, +1.1]):
  correct + proper {"answer": ...} JSON -> 1.1; correct otherwise -> 1.0;
  incorrect but proper JSON -> 0.1; unparseable, truncated, or longer than
  the length threshold -> -0.2.

Spatial: binary exact match, total in {0, 1}.

All components are rounded to 2 decimals so serialized rewards are stable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parsing import (
    CANONICAL_ANSWER_LINE,
    EXTRACTED,
    EXTRACTION_FAILED,
    JSON_CODE_BLOCK,
    JSON_OBJECT,
    TRUNCATED,
    WELL_FORMATTED,
    ParsedAnswer,
)

COUNTING_BOUNDS = (-0.4, 1.1)
GRAPH_BOUNDS = (-0.2, 1.1)

DEFAULT_LENGTH_THRESHOLD = 8192  # characters; the "excessively long" cutoff

# TelemetryCategory values
CORRECT_WELL_FORMATTED = "correct_well_formatted"
CORRECT_OTHER_FORMAT = "correct_other_format"
INCORRECT_WELL_FORMATTED = "incorrect_well_formatted"
EXTRACTION_FAILURE = "extraction_failure"
CUTOFF = "cutoff"

TELEMETRY_CATEGORIES = (
    CORRECT_WELL_FORMATTED,
    CORRECT_OTHER_FORMAT,
    INCORRECT_WELL_FORMATTED,
    EXTRACTION_FAILURE,
    CUTOFF,
)


@dataclass(frozen=True)
class RewardBreakdown:
    correctness: float
    format_bonus: float
    step_penalty: float
    length_penalty: float
    total: float
    category: str

    def to_json(self) -> dict:
        return {
            "correctness": self.correctness,
            "format_bonus": self.format_bonus,
            "step_penalty": self.step_penalty,
            "length_penalty": self.length_penalty,
            "total": self.total,
            "category": self.category,
        }


def categorize(parsed: ParsedAnswer, correct: bool) -> str:
    """Telemetry category for a scored completion."""
    if parsed.status == TRUNCATED:
        return CUTOFF
    if parsed.status == EXTRACTION_FAILED:
        return EXTRACTION_FAILURE
    if correct:
        if parsed.format_class in WELL_FORMATTED:
            return CORRECT_WELL_FORMATTED
        return CORRECT_OTHER_FORMAT
    return INCORRECT_WELL_FORMATTED


def _clamp(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def reward_counting(parsed: ParsedAnswer, correct: bool) -> RewardBreakdown:
    correctness = 1.0 if (parsed.status == EXTRACTED and correct) else 0.0
    if parsed.status != EXTRACTED:
        format_bonus = -0.1
    elif parsed.format_class == CANONICAL_ANSWER_LINE:
        format_bonus = 0.1
    else:
        # acceptable variant or bare value
        format_bonus = 0.05
    step_penalty = round(max(-0.3, -0.1 * max(0, parsed.step_count - 5)), 2)
    total = round(correctness + format_bonus + step_penalty, 2)
    total = _clamp(total, *COUNTING_BOUNDS)
    return RewardBreakdown(
        correctness=correctness,
        format_bonus=format_bonus,
        step_penalty=step_penalty,
        length_penalty=0.0,
        total=total,
        category=categorize(parsed, correctness == 1.0),
    )


def reward_graph(
    parsed: ParsedAnswer,
    verdict: str,
    completion_length: int,
    length_threshold: int = DEFAULT_LENGTH_THRESHOLD,
) -> RewardBreakdown:
    """verdict is the validator's output: "correct" | "incorrect" | "invalid"."""
    correct = verdict == "correct"
    too_long = completion_length > length_threshold
    if parsed.status != EXTRACTED or too_long:
        return RewardBreakdown(
            correctness=0.0,
            format_bonus=0.0,
            step_penalty=0.0,
            length_penalty=-0.2,
            total=-0.2,
            category=categorize(parsed, False),
        )
    well_formatted = parsed.format_class in (JSON_OBJECT, JSON_CODE_BLOCK)
    correctness = 1.0 if correct else 0.0
    format_bonus = 0.1 if well_formatted else 0.0
    total = round(_clamp(correctness + format_bonus, *GRAPH_BOUNDS), 2)
    return RewardBreakdown(
        correctness=correctness,
        format_bonus=format_bonus,
        step_penalty=0.0,
        length_penalty=0.0,
        total=total,
        category=categorize(parsed, correct),
    )


def reward_spatial(parsed: ParsedAnswer, correct: bool) -> RewardBreakdown:
    hit = parsed.status == EXTRACTED and correct
    return RewardBreakdown(
        correctness=1.0 if hit else 0.0,
        format_bonus=0.0,
        step_penalty=0.0,
        length_penalty=0.0,
        total=1.0 if hit else 0.0,
        category=categorize(parsed, hit),
    )
