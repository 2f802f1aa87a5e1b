#!/usr/bin/env python3
"""Build client test fixtures: a small dataset plus 50 completions with the
library-computed reward breakdown each one must score.

The expected rewards are computed through the exact pipeline the service
runs (including the offline regex normalizer fallback), so the client
round-trip test checks strict equality against the live server."""

import json
import sys
from pathlib import Path

from rlvr_tasks.core import write_dataset
from rlvr_tasks.counting import CountingConfig, generate_counting
from rlvr_tasks.graphs import GraphConfig, generate_graphs
from rlvr_tasks.harness import render_truth_completion, score_completion
from rlvr_tasks.parsing import RegexNormalizer
from rlvr_tasks.spatial import SpatialConfig, generate_spatial

OUT_DIR = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def wrongish(i: int) -> tuple[str, bool]:
    variants = [
        ('{"answer": [0]}', False),
        ("Answer: -999", False),
        ("I give up on this problem.", False),
        ("", False),
        ('{"answer": {"x": 0.0, "y": 0.0}}', False),
        ("thinking about it and then", True),
        ('{"answer": "north"}', False),
        ("the answer is 3", False),
    ]
    return variants[i % len(variants)]


def main() -> int:
    instances = (
        generate_counting(CountingConfig(count=10, seed=2024))
        + generate_graphs(GraphConfig(count=10, seed=2024, node_bounds=(5, 10)))
        + generate_spatial(SpatialConfig(count=10, seed=2024))
    )
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    write_dataset(instances, OUT_DIR / "dataset.jsonl")

    normalizer = RegexNormalizer()
    items = []
    for i in range(50):
        inst = instances[i % len(instances)]
        if i % 2 == 0:
            text, truncated = render_truth_completion(inst), False
        else:
            text, truncated = wrongish(i // 2)
        result = score_completion(inst, text, truncated, normalizer=normalizer)
        items.append(
            {
                "problem_id": inst.id,
                "completion": text,
                "truncated": truncated,
                "verdict": result.verdict,
                "reward": result.reward.to_json(),
                "normalizer_used": result.normalizer_used,
            }
        )
    (OUT_DIR / "expected.json").write_text(json.dumps(items, indent=2) + "\n")
    print(f"wrote {len(instances)} problems and {len(items)} scored fixtures to {OUT_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
