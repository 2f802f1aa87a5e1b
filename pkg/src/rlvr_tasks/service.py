"""Verification and reward service for external RL training loops.

JSON-over-HTTP under /v1: fetch problems (never the truth), score single
completions or batches, inspect telemetry counters. The problem store is
immutable after load; counters only ever increase.

Configuration comes from CLI flags or RLVR_SERVICE_* environment
variables (RLVR_SERVICE_DATASETS, RLVR_SERVICE_BIND, RLVR_SERVICE_PORT,
RLVR_SERVICE_LENGTH_THRESHOLD).
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .core import FAMILIES, ProblemInstance
from .harness import score_completion
from .parsing import RegexNormalizer
from .rewards import DEFAULT_LENGTH_THRESHOLD, TELEMETRY_CATEGORIES

API_VERSION = 1


class RewardRequest(BaseModel):
    problem_id: str
    completion: str
    truncated: bool = False


class BatchRewardRequest(BaseModel):
    problem_ids: list[str]
    completions: list[str]
    truncated: Optional[list[bool]] = None


class _Counters:
    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {
            family: {category: 0 for category in TELEMETRY_CATEGORIES} for family in FAMILIES
        }

    def bump(self, family: str, category: str) -> None:
        with self._lock:
            self._counts[family][category] += 1

    def snapshot(self) -> dict:
        with self._lock:
            families = {f: dict(c) for f, c in self._counts.items()}
        total = sum(sum(c.values()) for c in families.values())
        return {"families": families, "total": total}


class ServiceState:
    def __init__(
        self,
        instances: list[ProblemInstance],
        length_threshold: int = DEFAULT_LENGTH_THRESHOLD,
        normalizer=None,
    ):
        self.problems = {inst.id: inst for inst in instances}
        self.length_threshold = length_threshold
        self.normalizer = normalizer if normalizer is not None else RegexNormalizer()
        self.counters = _Counters()


def _problem_view(inst: ProblemInstance) -> dict:
    # Deliberately omits `truth` (and any solver witness lives only there).
    return {
        "schema_version": API_VERSION,
        "id": inst.id,
        "family": inst.family,
        "prompt": inst.prompt,
        "spec": inst.spec,
        "complexity": inst.complexity,
        "seed": inst.seed,
    }


def _score_payload(state: ServiceState, problem_id: str, completion: str, truncated: bool) -> dict:
    inst = state.problems[problem_id]
    result = score_completion(
        inst,
        completion,
        truncated,
        normalizer=state.normalizer,
        length_threshold=state.length_threshold,
    )
    state.counters.bump(inst.family, result.reward.category)
    return {
        "schema_version": API_VERSION,
        "problem_id": problem_id,
        "family": inst.family,
        "verdict": result.verdict,
        "reward": result.reward.to_json(),
        "normalizer_used": result.normalizer_used,
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="rlvr-tasks reward service")

    def not_found(problem_id: str) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"error": f"unknown problem_id {problem_id!r}"},
        )

    @app.get("/health")
    @app.get("/v1/health")
    def health():
        return {"status": "ok", "problems": len(state.problems), "schema_version": API_VERSION}

    @app.get("/v1/problems/{problem_id}")
    def get_problem(problem_id: str):
        inst = state.problems.get(problem_id)
        if inst is None:
            return not_found(problem_id)
        return _problem_view(inst)

    @app.post("/v1/reward")
    def reward(req: RewardRequest):
        if req.problem_id not in state.problems:
            return not_found(req.problem_id)
        return _score_payload(state, req.problem_id, req.completion, req.truncated)

    @app.post("/v1/verify")
    def verify(req: RewardRequest):
        if req.problem_id not in state.problems:
            return not_found(req.problem_id)
        inst = state.problems[req.problem_id]
        result = score_completion(
            inst,
            req.completion,
            req.truncated,
            normalizer=state.normalizer,
            length_threshold=state.length_threshold,
        )
        state.counters.bump(inst.family, result.reward.category)
        return {
            "schema_version": API_VERSION,
            "problem_id": req.problem_id,
            "verdict": result.verdict,
            "parsed": result.parsed.to_json(),
            "normalizer_used": result.normalizer_used,
        }

    @app.post("/v1/reward/batch")
    def reward_batch(req: BatchRewardRequest):
        if len(req.problem_ids) != len(req.completions):
            return JSONResponse(
                status_code=400,
                content={"error": "problem_ids and completions must have equal length"},
            )
        flags = req.truncated or [False] * len(req.problem_ids)
        if len(flags) != len(req.problem_ids):
            return JSONResponse(
                status_code=400,
                content={"error": "truncated must match problem_ids in length"},
            )
        results = []
        for pid, completion, trunc in zip(req.problem_ids, req.completions, flags):
            if pid not in state.problems:
                results.append({"error": f"unknown problem_id {pid!r}"})
            else:
                results.append(_score_payload(state, pid, completion, trunc))
        return {"schema_version": API_VERSION, "results": results}

    @app.get("/v1/metrics")
    def metrics():
        snap = state.counters.snapshot()
        snap["schema_version"] = API_VERSION
        return snap

    return app


def serve(
    instances: list[ProblemInstance],
    host: str = "127.0.0.1",
    port: int = 8080,
    length_threshold: int = DEFAULT_LENGTH_THRESHOLD,
) -> None:
    """Run the service until interrupted (blocking).

    Binds the socket before starting so `port=0` reports the actual port."""
    import socket

    import uvicorn

    state = ServiceState(instances, length_threshold)
    app = create_app(state)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    bound_host, bound_port = sock.getsockname()
    print(f"listening on {bound_host}:{bound_port}", flush=True)
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    server.run(sockets=[sock])
