"""Difficulty calibration and dataset curation.

Pass rates come from one record per (problem, model) pair. Tiers use the
calibration thresholds: Easy when at least 67% of roster models passed,
Medium at 34-66%, Hard below 34%. Threshold comparisons are done in
integer arithmetic (passes * 100 vs threshold * roster) so boundaries are
exact for any roster size.

Curation samples a stratified test set first, then draws each training
subset independently from the remainder: easy subsets from the Easy tier
only, mixed subsets with floor(size/3) per tier plus one extra per tier
in (Easy, Medium, Hard) order until the size is met.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .core import DatasetError, Rng

TIERS = ("easy", "medium", "hard")

EASY_MIN_PERCENT = 67
MEDIUM_MIN_PERCENT = 34


class CalibrationError(ValueError):
    """Bad or incomplete calibration inputs."""


@dataclass(frozen=True)
class CalibrationRecord:
    problem_id: str
    model_id: str
    passed: bool

    def to_json_line(self) -> str:
        return json.dumps(
            {"problem_id": self.problem_id, "model_id": self.model_id, "passed": self.passed}
        )


def write_records(records: Iterable[CalibrationRecord], destination: str | os.PathLike) -> int:
    items = list(records)
    with open(destination, "w", encoding="utf-8") as fh:
        for rec in items:
            fh.write(rec.to_json_line())
            fh.write("\n")
    return len(items)


def read_records(source: str | os.PathLike) -> list[CalibrationRecord]:
    records = []
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    CalibrationRecord(str(obj["problem_id"]), str(obj["model_id"]), bool(obj["passed"]))
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise DatasetError(f"line {lineno}: bad calibration record ({exc})") from exc
    return records


def tier_for(passes: int, roster_size: int) -> str:
    if passes * 100 >= EASY_MIN_PERCENT * roster_size:
        return "easy"
    if passes * 100 >= MEDIUM_MIN_PERCENT * roster_size:
        return "medium"
    return "hard"


@dataclass
class TierManifest:
    roster: tuple[str, ...]
    pass_rates: dict[str, float]  # problem_id -> fraction of roster that passed
    tiers: dict[str, str]  # problem_id -> tier
    thresholds: dict[str, float] = field(
        default_factory=lambda: {
            "easy_min": EASY_MIN_PERCENT / 100,
            "medium_min": MEDIUM_MIN_PERCENT / 100,
        }
    )

    def problems_in_tier(self, tier: str) -> list[str]:
        return sorted(pid for pid, t in self.tiers.items() if t == tier)

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "roster": list(self.roster),
            "thresholds": self.thresholds,
            "problems": {
                pid: {"pass_rate": self.pass_rates[pid], "tier": self.tiers[pid]}
                for pid in sorted(self.pass_rates)
            },
        }

    @staticmethod
    def from_json(obj: dict) -> "TierManifest":
        problems = obj["problems"]
        return TierManifest(
            roster=tuple(obj["roster"]),
            pass_rates={pid: rec["pass_rate"] for pid, rec in problems.items()},
            tiers={pid: rec["tier"] for pid, rec in problems.items()},
            thresholds=obj.get("thresholds", {}),
        )

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path: str | os.PathLike) -> "TierManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return TierManifest.from_json(json.load(fh))


def compute_tiers(records: Sequence[CalibrationRecord], roster: Sequence[str]) -> TierManifest:
    """Aggregate pass records into per-problem pass rates and tiers.

    Every problem must have exactly one record per roster model; gaps and
    duplicates are reported explicitly."""
    roster = tuple(roster)
    if not roster:
        raise CalibrationError("empty model roster")
    roster_set = set(roster)
    by_problem: dict[str, dict[str, bool]] = {}
    for rec in records:
        if rec.model_id not in roster_set:
            raise CalibrationError(f"record for model {rec.model_id!r} not in roster")
        cell = by_problem.setdefault(rec.problem_id, {})
        if rec.model_id in cell:
            raise CalibrationError(
                f"duplicate record for ({rec.problem_id!r}, {rec.model_id!r})"
            )
        cell[rec.model_id] = rec.passed
    gaps = []
    for pid, cell in sorted(by_problem.items()):
        missing = roster_set - set(cell)
        if missing:
            gaps.append((pid, sorted(missing)))
    if gaps:
        preview = "; ".join(f"{pid}: {missing}" for pid, missing in gaps[:5])
        raise CalibrationError(
            f"{len(gaps)} problems are missing records for some roster models ({preview})"
        )
    pass_rates = {}
    tiers = {}
    for pid, cell in by_problem.items():
        passes = sum(1 for ok in cell.values() if ok)
        pass_rates[pid] = passes / len(roster)
        tiers[pid] = tier_for(passes, len(roster))
    return TierManifest(roster=roster, pass_rates=pass_rates, tiers=tiers)


@dataclass
class CurationPlan:
    train_sizes: tuple[int, ...] = (100, 200, 500)
    test_size: int = 200
    seed: int = 0


@dataclass
class SplitManifest:
    subsets: dict[str, list[str]]  # subset name -> problem ids
    seed: int

    def to_json(self) -> dict:
        return {"schema_version": 1, "seed": self.seed, "subsets": self.subsets}

    @staticmethod
    def from_json(obj: dict) -> "SplitManifest":
        return SplitManifest(subsets=dict(obj["subsets"]), seed=int(obj["seed"]))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path: str | os.PathLike) -> "SplitManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return SplitManifest.from_json(json.load(fh))


def _tier_quotas(size: int) -> dict[str, int]:
    base, extra = divmod(size, 3)
    quotas = {}
    for i, tier in enumerate(TIERS):
        quotas[tier] = base + (1 if i < extra else 0)
    return quotas


def curate_splits(manifest: TierManifest, plan: CurationPlan) -> SplitManifest:
    """Sample the test set and the easy/mixed training subsets.

    The test set is stratified evenly across tiers (a tier short of its
    quota is drained and the deficit spread over the other tiers). Train
    subsets come from the remaining problems and are disjoint from the
    test set by construction; they are drawn independently, not nested."""
    rng = Rng(plan.seed)
    pools = {tier: manifest.problems_in_tier(tier) for tier in TIERS}
    total = sum(len(p) for p in pools.values())
    if plan.test_size > total:
        raise CalibrationError(
            f"test size {plan.test_size} exceeds population {total}"
        )

    test_ids: list[str] = []
    quotas = _tier_quotas(plan.test_size)
    deficit = 0
    for tier in TIERS:
        want = quotas[tier]
        have = len(pools[tier])
        if have < want:
            deficit += want - have
            quotas[tier] = have
    while deficit > 0:
        progressed = False
        for tier in TIERS:
            if deficit == 0:
                break
            if quotas[tier] < len(pools[tier]):
                quotas[tier] += 1
                deficit -= 1
                progressed = True
        if not progressed:
            break
    remainder: dict[str, list[str]] = {}
    for tier in TIERS:
        picked = sorted(rng.sample(pools[tier], quotas[tier]))
        test_ids.extend(picked)
        taken = set(picked)
        remainder[tier] = [pid for pid in pools[tier] if pid not in taken]

    subsets: dict[str, list[str]] = {"test": sorted(test_ids)}

    shortfalls = []
    for size in plan.train_sizes:
        if len(remainder["easy"]) < size:
            shortfalls.append(
                f"easy_{size}: need {size} easy problems outside test, have {len(remainder['easy'])}"
            )
        for tier, want in _tier_quotas(size).items():
            if len(remainder[tier]) < want:
                shortfalls.append(
                    f"mixed_{size}: need {want} {tier} problems outside test, "
                    f"have {len(remainder[tier])}"
                )
    if shortfalls:
        raise CalibrationError("insufficient population: " + "; ".join(shortfalls))

    for size in plan.train_sizes:
        subsets[f"easy_{size}"] = sorted(rng.sample(remainder["easy"], size))
        mixed: list[str] = []
        for tier, want in _tier_quotas(size).items():
            mixed.extend(rng.sample(remainder[tier], want))
        subsets[f"mixed_{size}"] = sorted(mixed)

    return SplitManifest(subsets=subsets, seed=plan.seed)


def verify_manifest(splits: SplitManifest, manifest: TierManifest) -> dict:
    """Re-check every SplitManifest invariant; returns a machine-readable report."""
    checks: list[dict] = []

    def check(name: str, subset: str, passed: bool, detail: str = "") -> None:
        checks.append({"check": name, "subset": subset, "passed": passed, "detail": detail})

    known = set(manifest.tiers)
    test = set(splits.subsets.get("test", ()))
    for name, ids in sorted(splits.subsets.items()):
        dupes = len(ids) - len(set(ids))
        check("no_duplicates", name, dupes == 0, f"{dupes} duplicate ids" if dupes else "")
        unknown = [pid for pid in ids if pid not in known]
        check(
            "ids_known",
            name,
            not unknown,
            f"{len(unknown)} ids missing from tier manifest" if unknown else "",
        )
        if name == "test":
            continue
        overlap = sorted(set(ids) & test)
        check(
            "disjoint_from_test",
            name,
            not overlap,
            f"overlaps test on {overlap[:5]}" if overlap else "",
        )
        size = int(name.rsplit("_", 1)[1]) if "_" in name else None
        if size is not None:
            check("size", name, len(ids) == size, f"expected {size}, got {len(ids)}")
        if name.startswith("easy_"):
            stray = [pid for pid in ids if manifest.tiers.get(pid) != "easy"]
            check(
                "easy_tier_only",
                name,
                not stray,
                f"{len(stray)} ids outside the easy tier" if stray else "",
            )
        if name.startswith("mixed_") and size:
            counts = {tier: 0 for tier in TIERS}
            for pid in ids:
                tier = manifest.tiers.get(pid)
                if tier in counts:
                    counts[tier] += 1
            target = size / 3
            balanced = all(abs(counts[tier] - target) <= 1 for tier in TIERS)
            check("stratification", name, balanced, f"tier counts {counts}")
    return {"ok": all(c["passed"] for c in checks), "checks": checks}
