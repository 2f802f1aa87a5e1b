import json

import pytest

from oracles import naive_counting
from rlvr_tasks.core import GenerationError, write_dataset
from rlvr_tasks.counting import (
    AggregateOp,
    CountingConfig,
    CountingSpec,
    EmptyPipelineError,
    PipelineStep,
    evaluate_counting,
    generate_counting,
    render_counting_prompt,
)


def spec_of(lo, hi, steps, final, final_arg=None):
    return CountingSpec(lo, hi, tuple(PipelineStep(*s) for s in steps), AggregateOp(final, final_arg))


EXAMPLE = spec_of(1, 100, [("keep_even",), ("keep_divisible_by", 3)], "count")


def test_worked_example_truth():
    truth = evaluate_counting(EXAMPLE)
    assert truth.kind == "int" and truth.value == 16


def test_worked_example_prompt():
    prompt = render_counting_prompt(EXAMPLE)
    assert prompt.startswith("Consider the integers from 1 to 100, inclusive.")
    assert "First, keep only the numbers that are even." in prompt
    assert "Then, keep only the numbers that are divisible by 3." in prompt
    assert "count how many values remain" in prompt
    assert prompt.endswith("Provide your final answer as 'Answer: X'.")


def test_prompt_deterministic():
    assert render_counting_prompt(EXAMPLE) == render_counting_prompt(EXAMPLE)


def test_singleton_range():
    truth = evaluate_counting(spec_of(5, 5, [("keep_odd",)], "count"))
    assert truth.value == 1


def test_identity_filter_count():
    truth = evaluate_counting(spec_of(1, 10, [("keep_positive",)], "count"))
    assert truth.value == 10


def test_even_sum():
    truth = evaluate_counting(spec_of(1, 6, [("keep_even",)], "sum"))
    assert truth.value == 12


def test_mean_two_decimals():
    truth = evaluate_counting(spec_of(1, 3, [("keep_positive",)], "mean"))
    assert truth.kind == "real" and truth.precision == 2
    assert truth.value == 2.0
    truth = evaluate_counting(spec_of(1, 2, [("keep_positive",)], "mean"))
    assert truth.value == 1.5
    # mean of {1,2,3,4,5,6,7} = 4.0; with keep_above 1 -> {2..7} mean 4.5
    truth = evaluate_counting(spec_of(1, 7, [("keep_above", 1)], "mean"))
    assert truth.value == 4.5


def test_mean_rounds_half_away():
    truth = evaluate_counting(spec_of(1, 4, [("keep_below", 5)], "mean"))
    assert truth.value == 2.5  # {1,2,3,4}
    truth = evaluate_counting(spec_of(1, 3, [("keep_odd",)], "mean"))
    assert truth.value == 2.0  # {1,3}
    # {1,2,5}: mean 8/3 = 2.666... -> 2.67 (round half away from zero at ties)
    truth = evaluate_counting(spec_of(1, 5, [("keep_below", 6), ("keep_above", 0)], "mean"))
    assert truth.value == 3.0  # {1..5}


def test_median_even_cardinality():
    truth = evaluate_counting(spec_of(1, 4, [("keep_positive",)], "median"))
    assert truth.value == 2.5


def test_median_odd_cardinality():
    truth = evaluate_counting(spec_of(1, 5, [("keep_positive",)], "median"))
    assert truth.value == 3.0


def test_mode_tie_breaks_smallest():
    # squares of -2..2 kept positive -> {4, 1, 1, 4}: tie between 1 and 4 -> 1
    truth = evaluate_counting(spec_of(-2, 2, [("square",), ("keep_positive",)], "mode"))
    assert truth.value == 1


def test_range_aggregate():
    truth = evaluate_counting(spec_of(3, 9, [("keep_odd",)], "range"))
    assert truth.value == 6  # {3,5,7,9}


def test_bitwise_nand_minimal_width():
    # {6} -> AND 6 = 0b110, width 3, NAND -> 0b001 = 1
    truth = evaluate_counting(spec_of(6, 6, [("keep_positive",)], "bitwise_nand"))
    assert truth.value == 1
    # {5, 6}: AND = 4 (0b100), max 6 needs 3 bits -> ~100 & 111 = 011 = 3
    truth = evaluate_counting(spec_of(5, 6, [("keep_positive",)], "bitwise_nand"))
    assert truth.value == 3


def test_bitwise_on_negative_raises():
    with pytest.raises(ValueError):
        evaluate_counting(spec_of(-4, -1, [("keep_negative",)], "bitwise_and"))


def test_empty_pipeline_raises():
    with pytest.raises(EmptyPipelineError):
        evaluate_counting(spec_of(1, 5, [("keep_negative",)], "count"))


def test_spec_validation():
    with pytest.raises(ValueError):
        spec_of(1, 10, [("square",)], "count")  # zero filters
    with pytest.raises(ValueError):
        spec_of(10, 1, [("keep_even",)], "count")  # inverted range
    with pytest.raises(ValueError):
        PipelineStep("multiply_constant", 0)
    with pytest.raises(ValueError):
        PipelineStep("keep_divisible_by", 1)


def test_payload_roundtrip():
    spec = spec_of(-7, 30, [("keep_odd",), ("add_constant", 3), ("keep_above", 2)], "median")
    assert CountingSpec.from_payload(spec.to_payload()) == spec


def test_generator_deterministic():
    a = generate_counting(CountingConfig(count=50, seed=123))
    b = generate_counting(CountingConfig(count=50, seed=123))
    assert [x.to_json_line() for x in a] == [y.to_json_line() for y in b]


def test_generator_unique_specs_500_seed7():
    instances = generate_counting(CountingConfig(count=500, seed=7))
    keys = {json.dumps(inst.spec, sort_keys=True) for inst in instances}
    assert len(keys) == 500


def test_generator_step_accounting():
    for inst in generate_counting(CountingConfig(count=100, seed=2)):
        meta = inst.complexity
        spec = CountingSpec.from_payload(inst.spec)
        assert meta["total_steps"] == len(spec.pipeline)
        assert meta["total_steps"] == meta["n_filters"] + meta["n_transforms"]
        assert 1 <= meta["total_steps"] <= 7
        assert 1 <= meta["n_filters"] <= 4
        assert 0 <= meta["n_transforms"] <= 3
        assert meta["range_scale"] == spec.range_hi - spec.range_lo + 1


def test_generator_bitwise_safety():
    from rlvr_tasks.counting import apply_step

    config = CountingConfig(
        count=60,
        seed=3,
        operator_whitelist=["bitwise_and", "bitwise_or", "bitwise_xor", "bitwise_nand"],
    )
    for inst in generate_counting(config):
        spec = CountingSpec.from_payload(inst.spec)
        values = list(range(spec.range_lo, spec.range_hi + 1))
        for step in spec.pipeline:
            values = apply_step(values, step)
        assert values and min(values) >= 0


def test_generator_rejects_empty_whitelist():
    with pytest.raises(GenerationError):
        generate_counting(CountingConfig(count=1, operator_whitelist=[]))


def test_generator_rejects_unknown_operator():
    with pytest.raises(GenerationError):
        generate_counting(CountingConfig(count=1, operator_whitelist=["fizzbuzz"]))


def test_oracle_equivalence_sample():
    instances = generate_counting(CountingConfig(count=200, seed=31))
    for inst in instances:
        kind, value = naive_counting(inst.spec)
        assert inst.truth.kind == ("real" if kind == "real" else "int")
        assert inst.truth.value == value, inst.spec


def test_prompt_mentions_rounding_for_mean():
    spec = spec_of(1, 9, [("keep_even",)], "mean")
    assert "rounded to two decimal places" in render_counting_prompt(spec)


def test_product_capped():
    instances = generate_counting(
        CountingConfig(count=40, seed=13, operator_whitelist=["product"])
    )
    for inst in instances:
        assert abs(inst.truth.value) <= 1 << 62
