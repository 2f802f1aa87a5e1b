import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlvr_tasks.core import GroundTruth
from rlvr_tasks.counting import CountingConfig, generate_counting
from rlvr_tasks.parsing import (
    ACCEPTABLE_VARIANT,
    BARE_VALUE,
    CANONICAL_ANSWER_LINE,
    EXTRACTED,
    EXTRACTION_FAILED,
    INVALID,
    JSON_CODE_BLOCK,
    JSON_OBJECT,
    TRUNCATED,
    Completion,
    ParsedAnswer,
    RegexNormalizer,
    coerce_payload,
    match_value,
    normalize_with_fallback,
    parse_counting,
    parse_json_answer,
)


def C(text, truncated=False):
    return Completion(text, truncated)


# ---------------------------------------------------------------------------
# parse_counting
# ---------------------------------------------------------------------------


def test_canonical_answer_line():
    parsed = parse_counting(C("Let me think.\nThe evens divisible by 3...\nAnswer: 16"))
    assert parsed.status == EXTRACTED
    assert parsed.format_class == CANONICAL_ANSWER_LINE
    assert parsed.value == GroundTruth.int_scalar(16)
    assert parsed.step_count == 2


def test_empty_completion_fails():
    parsed = parse_counting(C(""))
    assert parsed.status == EXTRACTION_FAILED
    assert parsed.format_class == INVALID
    assert parsed.value is None


def test_written_out_number_fails():
    parsed = parse_counting(C("The count is sixteen"))
    assert parsed.status == EXTRACTION_FAILED


def test_bold_answer_variant():
    parsed = parse_counting(C("**Answer:** 42"))
    assert parsed.status == EXTRACTED
    assert parsed.format_class == ACCEPTABLE_VARIANT
    assert parsed.value.value == 42


def test_phrase_variant():
    parsed = parse_counting(C("After all of that, the answer is 7."))
    assert parsed.status == EXTRACTED
    assert parsed.format_class == ACCEPTABLE_VARIANT
    assert parsed.value.value == 7


def test_trailing_bare_number():
    parsed = parse_counting(C("adding them up:\n\n-12\n"))
    assert parsed.status == EXTRACTED
    assert parsed.format_class == BARE_VALUE
    assert parsed.value.value == -12


def test_decimal_answer():
    parsed = parse_counting(C("Answer: 4.67"))
    assert parsed.value.kind == "real" and parsed.value.value == 4.67


def test_canonical_precedence_over_earlier_numbers():
    parsed = parse_counting(C("First I get 10, then 12.\n12\nAnswer: 99"))
    assert parsed.format_class == CANONICAL_ANSWER_LINE
    assert parsed.value.value == 99


def test_last_canonical_line_wins():
    parsed = parse_counting(C("Answer: 1\nwait, no.\nAnswer: 2"))
    assert parsed.value.value == 2


def test_truncated_completion_is_cutoff():
    parsed = parse_counting(C("I will now compute", truncated=True))
    assert parsed.status == TRUNCATED
    assert parsed.value is None


def test_truncated_but_parseable_is_extracted():
    parsed = parse_counting(C("Answer: 5\nand then", truncated=True))
    assert parsed.status == EXTRACTED


def test_step_count_enumerated_items():
    text = "1. first\n2. second\n3. third\n4. fourth\n5. fifth\n6. sixth\nAnswer: 3"
    parsed = parse_counting(C(text))
    assert parsed.step_count == 6


def test_step_count_ignores_blank_lines():
    parsed = parse_counting(C("one\n\n\ntwo\nAnswer: 1"))
    assert parsed.step_count == 2


# ---------------------------------------------------------------------------
# parse_json_answer
# ---------------------------------------------------------------------------


def test_fenced_json_vertex_set():
    parsed = parse_json_answer(C('```json\n{"answer": [1, 2, 3, 4]}\n```'), "vertex_set")
    assert parsed.status == EXTRACTED
    assert parsed.format_class == JSON_CODE_BLOCK
    assert parsed.value == GroundTruth.vertex_set([1, 2, 3, 4])


def test_embedded_json_coordinate():
    parsed = parse_json_answer(C('so the result is {"answer": {"x": -5.0, "y": 1.0}} here'), "coordinate")
    assert parsed.status == EXTRACTED
    assert parsed.format_class == JSON_OBJECT
    assert parsed.value == GroundTruth.coordinate(-5.0, 1.0)


def test_prose_without_braces_fails():
    parsed = parse_json_answer(C("prose with no braces at all"), "vertex_set")
    assert parsed.status == EXTRACTION_FAILED


def test_bare_list_payload():
    parsed = parse_json_answer(C("[3, 1, 2]"), "node_sequence")
    assert parsed.status == EXTRACTED
    assert parsed.format_class == BARE_VALUE
    assert parsed.value == GroundTruth.node_sequence([3, 1, 2])


def test_bare_orientation_token():
    parsed = parse_json_answer(C("north"), "orientation")
    assert parsed.status == EXTRACTED
    assert parsed.value == GroundTruth.orientation("north")


def test_none_token_for_hamiltonian():
    parsed = parse_json_answer(C('{"answer": "none"}'), "node_sequence_or_none")
    assert parsed.status == EXTRACTED
    assert parsed.value == GroundTruth.node_sequence(())


def test_numeric_string_coercion():
    parsed = parse_json_answer(C('{"answer": ["1", "2"]}'), "vertex_set")
    assert parsed.value == GroundTruth.vertex_set([1, 2])
    parsed = parse_json_answer(C('{"answer": {"x": "-5.0", "y": "1"}}'), "coordinate")
    assert parsed.value == GroundTruth.coordinate(-5.0, 1.0)


def test_shape_mismatch_fails():
    parsed = parse_json_answer(C('{"answer": "not a list"}'), "vertex_set")
    assert parsed.status == EXTRACTION_FAILED


def test_partition_shapes():
    parsed = parse_json_answer(C('{"answer": [[0, 1], [2, 3]]}'), "partition")
    assert parsed.status == EXTRACTED
    assert parsed.value.kind == "partition"


def test_last_json_object_wins():
    text = '{"answer": [0]} was wrong; actually {"answer": [0, 1]}'
    parsed = parse_json_answer(C(text), "vertex_set")
    assert parsed.value == GroundTruth.vertex_set([0, 1])


def test_edge_set_payload():
    parsed = parse_json_answer(C('{"answer": [[0, 2], [1, 3]]}'), "edge_set")
    assert parsed.value.value == ((0, 2), (1, 3))


# ---------------------------------------------------------------------------
# match_value
# ---------------------------------------------------------------------------


def _extracted(truth: GroundTruth) -> ParsedAnswer:
    return ParsedAnswer(EXTRACTED, truth, JSON_OBJECT, 0)


def test_match_int_exact():
    assert match_value(_extracted(GroundTruth.int_scalar(16)), GroundTruth.int_scalar(16))
    assert not match_value(_extracted(GroundTruth.int_scalar(15)), GroundTruth.int_scalar(16))


def test_match_rounding_three_decimals():
    truth = GroundTruth.coordinate(-5.0, 1.0)
    assert match_value(_extracted(GroundTruth.coordinate(-5.0004, 1.0)), truth)
    assert not match_value(_extracted(GroundTruth.coordinate(-5.001, 1.0)), truth)


def test_match_real_uses_truth_precision():
    # Both sides round to the truth's rendered precision before comparing,
    # so an unrounded-but-right value still matches.
    truth = GroundTruth.real_scalar(4.67, 2)
    assert match_value(_extracted(GroundTruth("real", 4.67, 3)), truth)
    assert match_value(_extracted(GroundTruth("real", 4.666, 3)), truth)
    assert match_value(_extracted(GroundTruth("real", 4.671, 3)), truth)
    assert not match_value(_extracted(GroundTruth("real", 4.66, 3)), truth)
    assert not match_value(_extracted(GroundTruth("real", 4.61, 3)), truth)


def test_match_set_semantics():
    truth = GroundTruth.vertex_set([1, 2, 3, 4])
    assert match_value(_extracted(GroundTruth.vertex_set([4, 3, 2, 1])), truth)


def test_match_sequence_reversal():
    truth = GroundTruth.node_sequence([0, 1, 2])
    assert match_value(_extracted(GroundTruth.node_sequence([2, 1, 0])), truth)
    assert not match_value(_extracted(GroundTruth.node_sequence([1, 0, 2])), truth)


def test_match_partition_unordered():
    truth = GroundTruth.partition([0, 1], [2, 3])
    assert match_value(_extracted(GroundTruth.partition([3, 2], [1, 0])), truth)


def test_match_requires_extracted():
    with pytest.raises(ValueError):
        match_value(ParsedAnswer(EXTRACTION_FAILED, None, INVALID, 0), GroundTruth.int_scalar(1))


# ---------------------------------------------------------------------------
# Normalizer fallback
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def instance():
    return generate_counting(CountingConfig(count=1, seed=1))[0]


def test_stub_normalizer_recovers_set(instance):
    completion = C("the set is 1, 2, 3 and 4")
    primary = parse_json_answer(completion, "vertex_set")
    assert primary.status == EXTRACTION_FAILED
    parsed = normalize_with_fallback(completion, instance, RegexNormalizer(), "vertex_set", primary)
    assert parsed.status == EXTRACTED
    assert parsed.value == GroundTruth.vertex_set([1, 2, 3, 4])


def test_normalizer_requires_failed_primary(instance):
    completion = C('{"answer": [1]}')
    primary = parse_json_answer(completion, "vertex_set")
    with pytest.raises(ValueError):
        normalize_with_fallback(completion, instance, RegexNormalizer(), "vertex_set", primary)


def test_unavailable_normalizer_returns_primary(instance):
    class DownNormalizer:
        def canonicalize(self, problem, text, shape):
            from rlvr_tasks.parsing import NormalizerUnavailable

            raise NormalizerUnavailable("connection refused")

    completion = C("garbage with no answer")
    primary = parse_json_answer(completion, "vertex_set")
    parsed = normalize_with_fallback(completion, instance, DownNormalizer(), "vertex_set", primary)
    assert parsed is primary


def test_stub_normalizer_coordinate(instance):
    completion = C("the final position is x = -5.0 and y = 1.0")
    primary = parse_json_answer(completion, "coordinate")
    parsed = normalize_with_fallback(completion, instance, RegexNormalizer(), "coordinate", primary)
    assert parsed.status == EXTRACTED
    assert parsed.value == GroundTruth.coordinate(-5.0, 1.0)


# ---------------------------------------------------------------------------
# Totality and idempotence properties
# ---------------------------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=400), st.booleans())
def test_parse_counting_total(text, truncated):
    parsed = parse_counting(C(text, truncated))
    assert parsed.status in (EXTRACTED, EXTRACTION_FAILED, TRUNCATED)
    assert parsed.step_count >= 0


@settings(max_examples=300, deadline=None)
@given(
    st.text(max_size=400),
    st.sampled_from(["vertex_set", "coordinate", "orientation", "int", "partition"]),
)
def test_parse_json_total(text, shape):
    parsed = parse_json_answer(C(text), shape)
    assert parsed.status in (EXTRACTED, EXTRACTION_FAILED, TRUNCATED)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=-10**9, max_value=10**9))
def test_counting_idempotence(n):
    parsed = parse_counting(C(f"Answer: {n}"))
    assert parsed.status == EXTRACTED and parsed.value.value == n


def test_coerce_rejects_bool():
    assert coerce_payload(True, "int") is None
    assert coerce_payload([True, False], "vertex_set") is None
