import json

import pytest

from rlvr_tasks.core import (
    DatasetError,
    GroundTruth,
    ProblemInstance,
    Rng,
    derive_seed,
    read_dataset,
    round_half_away,
    write_dataset,
)
from rlvr_tasks.counting import CountingConfig, generate_counting


def test_rng_determinism():
    a = [Rng(0).next_u64() for _ in range(100)]
    b = [Rng(0).next_u64() for _ in range(100)]
    assert a == b


def test_rng_seeds_differ():
    assert Rng(1).next_u64() != Rng(2).next_u64()


def test_rng_seed_42_fixture():
    # Frozen at first implementation; the stream algorithm must never change.
    rng = Rng(42)
    draws = [rng.next_u64() for _ in range(8)]
    assert draws == [
        13679457532755275413,
        2949826092126892291,
        5139283748462763858,
        6349198060258255764,
        701532786141963250,
        16015981125662989062,
        4028864712777624925,
        14769051326987775908,
    ]


def test_rng_randint_bounds():
    rng = Rng(7)
    draws = [rng.randint(-3, 5) for _ in range(500)]
    assert min(draws) == -3 and max(draws) == 5


def test_rng_sample_distinct():
    rng = Rng(9)
    picked = rng.sample(list(range(20)), 10)
    assert len(set(picked)) == 10


def test_derive_seed_stable():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


def test_round_half_away():
    from fractions import Fraction

    assert round_half_away(Fraction(1, 2), 0) == 1.0
    assert round_half_away(Fraction(-1, 2), 0) == -1.0
    assert round_half_away(Fraction(25, 1000), 2) == 0.03
    assert round_half_away(Fraction(-25, 1000), 2) == -0.03
    assert round_half_away(Fraction(14, 3), 2) == 4.67


def test_truth_normalization():
    assert GroundTruth.vertex_set([3, 1, 1, 2]).value == (1, 2, 3)
    assert GroundTruth.partition([2, 0], [1]).value == ((0, 2), (1,))
    assert GroundTruth.partition([1], [2, 0]).value == ((0, 2), (1,))
    seq = GroundTruth.node_sequence([2, 0, 1])
    assert seq.value == (2, 0, 1)


def test_truth_json_roundtrip():
    cases = [
        GroundTruth.int_scalar(16),
        GroundTruth.real_scalar(4.67, 2),
        GroundTruth.vertex_set([1, 2, 3, 4]),
        GroundTruth.edge_set([(0, 2), (0, 4)]),
        GroundTruth.node_sequence([0, 1, 2]),
        GroundTruth.partition([0, 1], [2, 3]),
        GroundTruth.coordinate(-5.0, 1.0),
        GroundTruth.orientation("north"),
        GroundTruth.relative_orientation("left-of"),
    ]
    for truth in cases:
        assert GroundTruth.from_json(json.loads(json.dumps(truth.to_json()))) == truth


@pytest.fixture
def small_dataset():
    return generate_counting(CountingConfig(count=3, seed=5))


def test_write_read_roundtrip(tmp_path, small_dataset):
    path = tmp_path / "data.jsonl"
    n = write_dataset(small_dataset, path)
    assert n == 3
    loaded = read_dataset(path)
    assert loaded == small_dataset


def test_write_empty(tmp_path):
    path = tmp_path / "empty.jsonl"
    assert write_dataset([], path) == 0
    assert read_dataset(path) == []


def test_write_duplicate_id(tmp_path, small_dataset):
    dup = small_dataset + [small_dataset[0]]
    with pytest.raises(DatasetError, match="counting-5-0"):
        write_dataset(dup, tmp_path / "dup.jsonl")


def test_read_corrupted_line(tmp_path, small_dataset):
    path = tmp_path / "bad.jsonl"
    write_dataset(small_dataset, path)
    lines = path.read_text().splitlines()
    lines[1] = lines[1][:-5]  # mangle line 2
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="line 2"):
        read_dataset(path)


def test_read_unknown_schema_version(tmp_path, small_dataset):
    path = tmp_path / "ver.jsonl"
    write_dataset(small_dataset, path)
    record = json.loads(path.read_text().splitlines()[0])
    record["schema_version"] = 999
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(DatasetError, match="schema_version"):
        read_dataset(path)


def test_read_rejects_tampered_prompt(tmp_path, small_dataset):
    path = tmp_path / "tamper.jsonl"
    write_dataset(small_dataset, path)
    record = json.loads(path.read_text().splitlines()[0])
    record["prompt"] = record["prompt"] + " EXTRA"
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(DatasetError, match="prompt"):
        read_dataset(path)


def test_instance_rejects_unknown_family():
    with pytest.raises(ValueError):
        ProblemInstance("x", "riddles", "p", {}, GroundTruth.int_scalar(1), {}, 0)
