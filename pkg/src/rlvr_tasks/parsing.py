"""Answer extraction from raw model completions.

Counting answers are pulled from an answer line by regular expressions;
graph and spatial answers are extracted from JSON (fenced code block,
embedded object, or bare payload, in that order). A pluggable external
normalizer can canonicalize completions that fail the primary parse; a
deterministic regex-based stub ships for offline use.

Accepted counting variants (fixed table, anything else is Invalid):
  canonical      line `Answer: <number>`                       -> +0.1 bonus
  variant        line `**Answer:** <number>` or the phrase
                 `the answer is <number>`                      -> +0.05
  bare value     last non-empty line is just a number          -> +0.05

step_count heuristic: non-empty lines before the answer line, or the
count of `1.` / `2.` / `Step N` markers before it, whichever is larger.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

import httpx

from .core import GroundTruth, ProblemInstance, round_half_away

# ParsedAnswer.status values
EXTRACTED = "extracted"
EXTRACTION_FAILED = "extraction_failed"
TRUNCATED = "truncated"

# FormatClass values
CANONICAL_ANSWER_LINE = "canonical_answer_line"
ACCEPTABLE_VARIANT = "acceptable_variant"
JSON_OBJECT = "json_object"
JSON_CODE_BLOCK = "json_code_block"
BARE_VALUE = "bare_value"
INVALID = "invalid"

FORMAT_CLASSES = (
    CANONICAL_ANSWER_LINE,
    ACCEPTABLE_VARIANT,
    JSON_OBJECT,
    JSON_CODE_BLOCK,
    BARE_VALUE,
    INVALID,
)

# Formats counted as "well-formatted" for reward bonuses and telemetry.
WELL_FORMATTED = (CANONICAL_ANSWER_LINE, JSON_OBJECT, JSON_CODE_BLOCK)


class NormalizerUnavailable(RuntimeError):
    """The external normalizer could not be reached."""


@dataclass(frozen=True)
class Completion:
    text: str
    truncated: bool = False
    model_id: Optional[str] = None
    problem_id: Optional[str] = None


@dataclass(frozen=True)
class ParsedAnswer:
    status: str
    value: Optional[GroundTruth] = None
    format_class: str = INVALID
    step_count: int = 0

    def __post_init__(self):
        if self.status == EXTRACTED and self.value is None:
            raise ValueError("extracted answers must carry a value")
        if self.status != EXTRACTED and self.value is not None:
            raise ValueError("only extracted answers may carry a value")

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "value": self.value.to_json() if self.value is not None else None,
            "format_class": self.format_class,
            "step_count": self.step_count,
        }


def _failed(completion: Completion, step_count: int) -> ParsedAnswer:
    status = TRUNCATED if completion.truncated else EXTRACTION_FAILED
    return ParsedAnswer(status, None, INVALID, step_count)


# ---------------------------------------------------------------------------
# Counting answers
# ---------------------------------------------------------------------------

_NUMBER = r"[+-]?\d+(?:\.\d+)?"
_CANONICAL_RE = re.compile(rf"^\s*Answer:\s*({_NUMBER})\s*\.?\s*$")
_BOLD_RE = re.compile(rf"^\s*\*\*Answer:?\*\*\s*:?\s*({_NUMBER})\s*\.?\s*$")
_PHRASE_RE = re.compile(rf"\bthe\s+answer\s+is\s*:?\s*({_NUMBER})", re.IGNORECASE)
_BARE_RE = re.compile(rf"^\s*({_NUMBER})\s*\.?\s*$")
_ENUM_MARKER_RE = re.compile(r"^\s*\d{1,3}[.)]\s")
_STEP_MENTION_RE = re.compile(r"\bstep\s+\d+", re.IGNORECASE)


def _parse_number(token: str) -> GroundTruth:
    if re.fullmatch(r"[+-]?\d+", token):
        return GroundTruth.int_scalar(int(token))
    return GroundTruth("real", float(token), 3)


def _count_steps(text: str) -> int:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    markers = sum(1 for ln in lines if _ENUM_MARKER_RE.match(ln))
    mentions = len(_STEP_MENTION_RE.findall(text))
    return max(len(lines), markers, mentions)


def parse_counting(completion: Completion) -> ParsedAnswer:
    """Extract a numeric answer per the counting protocol.

    The last matching answer line wins, so a canonical line after earlier
    stray numbers takes precedence."""
    text = completion.text
    lines = text.splitlines()

    for matcher, fmt in ((_CANONICAL_RE, CANONICAL_ANSWER_LINE), (_BOLD_RE, ACCEPTABLE_VARIANT)):
        for i in range(len(lines) - 1, -1, -1):
            m = matcher.match(lines[i])
            if m:
                preceding = "\n".join(lines[:i])
                return ParsedAnswer(EXTRACTED, _parse_number(m.group(1)), fmt, _count_steps(preceding))

    phrase_matches = list(_PHRASE_RE.finditer(text))
    if phrase_matches:
        m = phrase_matches[-1]
        return ParsedAnswer(
            EXTRACTED, _parse_number(m.group(1)), ACCEPTABLE_VARIANT, _count_steps(text[: m.start()])
        )

    for i in range(len(lines) - 1, -1, -1):
        if not lines[i].strip():
            continue
        m = _BARE_RE.match(lines[i])
        if m:
            preceding = "\n".join(lines[:i])
            return ParsedAnswer(EXTRACTED, _parse_number(m.group(1)), BARE_VALUE, _count_steps(preceding))
        break  # only the final non-empty line may be a bare value

    return _failed(completion, _count_steps(text))


# ---------------------------------------------------------------------------
# JSON answers (graph + spatial)
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:json)?\s*\n?(.*?)```", re.DOTALL)

ANSWER_SHAPES = (
    "int",
    "real",
    "vertex_set",
    "edge_set",
    "node_sequence",
    "node_sequence_or_none",
    "partition",
    "coordinate",
    "orientation",
    "relative_orientation",
)

_NONE_TOKENS = {"none", "no", "null", "nothing", "does not exist", "doesn't exist"}

_RELATIVE_TOKEN_ALIASES = {
    "same": "same",
    "left-of": "left-of",
    "left of": "left-of",
    "left": "left-of",
    "opposite": "opposite",
    "right-of": "right-of",
    "right of": "right-of",
    "right": "right-of",
}


def _coerce_int(value: Any) -> Optional[int]:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value == int(value):
        return int(value)
    if isinstance(value, str) and re.fullmatch(r"[+-]?\d+", value.strip()):
        return int(value.strip())
    return None


def _coerce_number(value: Any) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            return None
    return None


def _coerce_int_list(value: Any) -> Optional[list[int]]:
    if not isinstance(value, (list, tuple)):
        return None
    out = []
    for item in value:
        iv = _coerce_int(item)
        if iv is None:
            return None
        out.append(iv)
    return out


def coerce_payload(value: Any, shape: str) -> Optional[GroundTruth]:
    """Coerce a decoded JSON payload into a GroundTruth of the given shape.

    Returns None when the payload does not fit; numeric strings are
    accepted where unambiguous."""
    if isinstance(value, dict) and set(value.keys()) == {"answer"}:
        value = value["answer"]

    if shape == "int":
        iv = _coerce_int(value)
        return GroundTruth.int_scalar(iv) if iv is not None else None
    if shape == "real":
        fv = _coerce_number(value)
        return GroundTruth("real", fv, 3) if fv is not None else None
    if shape == "vertex_set":
        ids = _coerce_int_list(value)
        return GroundTruth.vertex_set(ids) if ids is not None else None
    if shape == "edge_set":
        if not isinstance(value, (list, tuple)):
            return None
        pairs = []
        for item in value:
            if not (isinstance(item, (list, tuple)) and len(item) == 2):
                return None
            u, v = _coerce_int(item[0]), _coerce_int(item[1])
            if u is None or v is None:
                return None
            pairs.append((u, v))
        return GroundTruth("edge_set", tuple(pairs))
    if shape in ("node_sequence", "node_sequence_or_none"):
        if shape == "node_sequence_or_none":
            if isinstance(value, str) and value.strip().lower() in _NONE_TOKENS:
                return GroundTruth.node_sequence(())
            if value is None:
                return GroundTruth.node_sequence(())
        ids = _coerce_int_list(value)
        return GroundTruth.node_sequence(ids) if ids is not None else None
    if shape == "partition":
        if isinstance(value, dict) and len(value) == 2:
            value = list(value.values())
        if not (isinstance(value, (list, tuple)) and len(value) == 2):
            return None
        a = _coerce_int_list(value[0])
        b = _coerce_int_list(value[1])
        if a is None or b is None:
            return None
        return GroundTruth("partition", (tuple(a), tuple(b)))
    if shape == "coordinate":
        if isinstance(value, dict):
            keys = {k.lower(): v for k, v in value.items()}
            if "x" in keys and "y" in keys:
                x, y = _coerce_number(keys["x"]), _coerce_number(keys["y"])
                if x is not None and y is not None:
                    return GroundTruth.coordinate(x, y)
            return None
        if isinstance(value, (list, tuple)) and len(value) == 2:
            x, y = _coerce_number(value[0]), _coerce_number(value[1])
            if x is not None and y is not None:
                return GroundTruth.coordinate(x, y)
        return None
    if shape == "orientation":
        if isinstance(value, str):
            token = value.strip().lower().rstrip(".")
            if token in ("east", "north", "west", "south"):
                return GroundTruth.orientation(token)
        return None
    if shape == "relative_orientation":
        if isinstance(value, str):
            token = value.strip().lower().rstrip(".")
            if token in _RELATIVE_TOKEN_ALIASES:
                return GroundTruth.relative_orientation(_RELATIVE_TOKEN_ALIASES[token])
        return None
    raise ValueError(f"unknown answer shape {shape!r}")


def _last_json_object(text: str) -> Optional[Any]:
    """Decode the last JSON object literal embedded in the text."""
    decoder = json.JSONDecoder()
    positions = [i for i, ch in enumerate(text) if ch == "{"]
    for start in reversed(positions[-200:]):
        try:
            obj, _ = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def parse_json_answer(completion: Completion, expected_shape: str) -> ParsedAnswer:
    """Extract a structured answer: fenced JSON block, then the last JSON
    object in the text, then a bare payload matching the shape."""
    if expected_shape not in ANSWER_SHAPES:
        raise ValueError(f"unknown answer shape {expected_shape!r}")
    text = completion.text
    steps = _count_steps(text)

    for block in reversed(_FENCE_RE.findall(text)):
        block = block.strip()
        if not block:
            continue
        try:
            payload = json.loads(block)
        except json.JSONDecodeError:
            payload = _last_json_object(block)
            if payload is None:
                continue
        coerced = coerce_payload(payload, expected_shape)
        if coerced is not None:
            return ParsedAnswer(EXTRACTED, coerced, JSON_CODE_BLOCK, steps)

    payload = _last_json_object(text)
    if payload is not None:
        coerced = coerce_payload(payload, expected_shape)
        if coerced is not None:
            return ParsedAnswer(EXTRACTED, coerced, JSON_OBJECT, steps)

    stripped = text.strip()
    if stripped:
        bare: Any = None
        decoded = False
        try:
            bare = json.loads(stripped)
            decoded = True
        except json.JSONDecodeError:
            token = stripped.splitlines()[-1].strip()
            if expected_shape in ("orientation", "relative_orientation", "node_sequence_or_none"):
                bare = token.strip("\"'")
                decoded = True
            elif expected_shape in ("int", "real"):
                num = _coerce_number(token)
                if num is not None:
                    bare = num
                    decoded = True
        if decoded:
            coerced = coerce_payload(bare, expected_shape)
            if coerced is not None:
                return ParsedAnswer(EXTRACTED, coerced, BARE_VALUE, steps)

    return _failed(completion, steps)


# ---------------------------------------------------------------------------
# Value matching
# ---------------------------------------------------------------------------


def _round_to(value: float, digits: int) -> float:
    return round_half_away(Fraction(value), digits)


def match_value(parsed: ParsedAnswer, truth: GroundTruth) -> bool:
    """Compare an extracted value against the ground truth.

    Reals compare after rounding both sides to the truth's rendered
    precision (3 decimal places unless the truth says otherwise); sets
    compare as sets, sequences in order (reversal accepted), partitions
    as unordered pairs of sets."""
    if parsed.status != EXTRACTED:
        raise ValueError("match_value requires an extracted answer")
    cand = parsed.value
    tk, ck = truth.kind, cand.kind

    if tk == "int":
        if ck == "int":
            return cand.value == truth.value
        if ck == "real":
            return float(cand.value) == float(truth.value)
        return False
    if tk == "real":
        if ck not in ("int", "real"):
            return False
        digits = truth.precision if truth.precision is not None else 3
        return _round_to(float(cand.value), digits) == _round_to(float(truth.value), digits)
    if tk == "coordinate":
        if ck != "coordinate":
            return False
        return all(
            _round_to(float(a), 3) == _round_to(float(b), 3)
            for a, b in zip(cand.value, truth.value)
        )
    if tk in ("orientation", "relative_orientation"):
        return ck == tk and cand.value == truth.value
    if tk in ("vertex_set", "edge_set"):
        if ck != tk:
            return False
        return set(cand.value) == set(truth.value)
    if tk == "node_sequence":
        if ck != tk:
            return False
        return cand.value == truth.value or cand.value == tuple(reversed(truth.value))
    if tk == "partition":
        if ck != tk:
            return False
        ca, cb = (frozenset(cand.value[0]), frozenset(cand.value[1]))
        ta, tb = (frozenset(truth.value[0]), frozenset(truth.value[1]))
        return {ca, cb} == {ta, tb}
    return False


# ---------------------------------------------------------------------------
# Normalizer fallback
# ---------------------------------------------------------------------------


class RegexNormalizer:
    """Deterministic offline stand-in for the external normalizer model.

    Extracts the most plausible payload for the expected shape with plain
    regular expressions and re-emits it as canonical `{"answer": ...}`
    JSON text."""

    def canonicalize(self, problem: ProblemInstance, completion_text: str, shape: str) -> Optional[str]:
        text = completion_text
        if shape in ("vertex_set", "node_sequence", "node_sequence_or_none"):
            if shape == "node_sequence_or_none" and re.search(
                r"\b(none|no such|does not exist|doesn't exist)\b", text, re.IGNORECASE
            ):
                return json.dumps({"answer": "none"})
            ints = re.findall(r"-?\d+", text)
            if ints:
                return json.dumps({"answer": [int(i) for i in ints]})
            return None
        if shape == "edge_set":
            pairs = re.findall(r"[(\[]\s*(-?\d+)\s*,\s*(-?\d+)\s*[)\]]", text)
            if pairs:
                return json.dumps({"answer": [[int(u), int(v)] for u, v in pairs]})
            return None
        if shape == "partition":
            groups = re.findall(r"[{\[]([^{}\[\]]*)[}\]]", text)
            parts = []
            for grp in groups:
                ints = re.findall(r"-?\d+", grp)
                if ints:
                    parts.append([int(i) for i in ints])
            if len(parts) >= 2:
                return json.dumps({"answer": [parts[0], parts[1]]})
            return None
        if shape == "coordinate":
            nums = re.findall(r"-?\d+(?:\.\d+)?", text)
            if len(nums) >= 2:
                return json.dumps({"answer": {"x": float(nums[-2]), "y": float(nums[-1])}})
            return None
        if shape in ("orientation", "relative_orientation"):
            tokens = (
                ("east", "north", "west", "south")
                if shape == "orientation"
                else ("left-of", "right-of", "opposite", "same", "left of", "right of")
            )
            found = None
            for tok in tokens:
                for m in re.finditer(re.escape(tok), text, re.IGNORECASE):
                    if found is None or m.start() > found[0]:
                        found = (m.start(), tok)
            if found:
                return json.dumps({"answer": found[1]})
            return None
        if shape in ("int", "real"):
            nums = re.findall(r"-?\d+(?:\.\d+)?", text)
            if nums:
                value = float(nums[-1]) if "." in nums[-1] else int(nums[-1])
                return json.dumps({"answer": value})
            return None
        return None


class HttpNormalizer:
    """HTTP client for an external normalizer service.

    POSTs {"problem": ..., "completion": ...} and expects {"canonical": ...}.
    Credentials come from the RLVR_NORMALIZER_API_KEY environment variable."""

    def __init__(self, endpoint: str, timeout: float = 30.0, api_key_env: str = "RLVR_NORMALIZER_API_KEY"):
        self.endpoint = endpoint
        self.timeout = timeout
        self.api_key_env = api_key_env

    def canonicalize(self, problem: ProblemInstance, completion_text: str, shape: str) -> Optional[str]:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = httpx.post(
                self.endpoint,
                json={"problem": problem.prompt, "completion": completion_text, "shape": shape},
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except Exception as exc:
            raise NormalizerUnavailable(str(exc)) from exc
        return resp.json().get("canonical")


def normalize_with_fallback(
    completion: Completion,
    problem: ProblemInstance,
    normalizer,
    expected_shape: str,
    primary: ParsedAnswer,
) -> ParsedAnswer:
    """Re-parse via the external normalizer after a failed primary parse.

    Returns the original failure when the normalizer cannot help; raises
    ValueError if the primary parse already extracted a value."""
    if primary.status == EXTRACTED:
        raise ValueError("normalize_with_fallback requires a failed primary parse")
    try:
        canonical = normalizer.canonicalize(problem, completion.text, expected_shape)
    except NormalizerUnavailable:
        return primary
    if not canonical:
        return primary
    reparsed = parse_json_answer(Completion(canonical, truncated=False), expected_shape)
    if reparsed.status != EXTRACTED:
        return primary
    # Keep the original completion's step count for reward purposes.
    return ParsedAnswer(EXTRACTED, reparsed.value, reparsed.format_class, primary.step_count)
