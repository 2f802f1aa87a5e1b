"""2D board/particle simulation for spatial reasoning tasks.

A 20x20 board centered at the origin carries 2-4 particles, each with a
position on half-unit coordinates and a cardinal orientation. An ordered
action sequence moves/turns particles or translates/rotates the whole
board (particles ride along). Queries ask for absolute or relative
location or orientation after all actions.

All arithmetic is exact: positions are dyadic halves and every operation
(integer steps, quarter-turn rotations, integer translations) preserves
that, so there is no floating drift to tolerate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .core import GenerationError, GroundTruth, ProblemInstance, Rng

CARDINALS = ("east", "north", "west", "south")
_VECTORS = {"east": (1.0, 0.0), "north": (0.0, 1.0), "west": (-1.0, 0.0), "south": (0.0, -1.0)}

TURNS = ("left", "right", "around")
_TURN_QUARTERS = {"left": 1, "right": 3, "around": 2}

QUERY_KINDS = (
    "absolute_location",
    "absolute_orientation",
    "relative_location",
    "relative_orientation",
)

RELATIVE_ORIENTATION_TOKENS = ("same", "left-of", "opposite", "right-of")

BOARD_SIZE = 20


def rotate_cardinal(token: str, quarter_turns: int) -> str:
    return CARDINALS[(CARDINALS.index(token) + quarter_turns) % 4]


@dataclass(frozen=True)
class Particle:
    id: str
    x: float
    y: float
    facing: str

    def __post_init__(self):
        if self.facing not in CARDINALS:
            raise ValueError(f"bad orientation {self.facing!r}")


@dataclass(frozen=True)
class Action:
    """One simulation step.

    type: "move" (id, direction forward|backward, steps), "turn" (id, turn),
    "board_translate" (dx, dy), "board_rotate" (quarter_turns 1..3).
    """

    type: str
    id: Optional[str] = None
    direction: Optional[str] = None
    steps: Optional[int] = None
    turn: Optional[str] = None
    dx: Optional[float] = None
    dy: Optional[float] = None
    quarter_turns: Optional[int] = None

    def __post_init__(self):
        if self.type == "move":
            if self.direction not in ("forward", "backward"):
                raise ValueError(f"bad move direction {self.direction!r}")
            if not (isinstance(self.steps, int) and 1 <= self.steps <= 10):
                raise ValueError("move steps must be an integer in [1, 10]")
        elif self.type == "turn":
            if self.turn not in TURNS:
                raise ValueError(f"bad turn {self.turn!r}")
        elif self.type == "board_translate":
            if self.dx is None or self.dy is None:
                raise ValueError("board_translate requires dx and dy")
        elif self.type == "board_rotate":
            if self.quarter_turns not in (1, 2, 3):
                raise ValueError("board_rotate requires quarter_turns in 1..3")
        else:
            raise ValueError(f"unknown action type {self.type!r}")

    def to_payload(self) -> dict:
        out = {"type": self.type}
        for field in ("id", "direction", "steps", "turn", "dx", "dy", "quarter_turns"):
            val = getattr(self, field)
            if val is not None:
                out[field] = val
        return out

    @staticmethod
    def from_payload(obj: dict) -> "Action":
        return Action(
            type=obj["type"],
            id=obj.get("id"),
            direction=obj.get("direction"),
            steps=obj.get("steps"),
            turn=obj.get("turn"),
            dx=obj.get("dx"),
            dy=obj.get("dy"),
            quarter_turns=obj.get("quarter_turns"),
        )


@dataclass(frozen=True)
class Query:
    kind: str
    a: str
    b: Optional[str] = None

    def __post_init__(self):
        if self.kind not in QUERY_KINDS:
            raise ValueError(f"unknown query kind {self.kind!r}")
        if self.kind.startswith("relative") and self.b is None:
            raise ValueError(f"{self.kind} needs two particle ids")

    def to_payload(self) -> dict:
        out = {"type": self.kind, "a": self.a}
        if self.b is not None:
            out["b"] = self.b
        return out

    @staticmethod
    def from_payload(obj: dict) -> "Query":
        return Query(obj["type"], obj["a"], obj.get("b"))


@dataclass(frozen=True)
class SpatialProblem:
    particles: tuple[Particle, ...]
    actions: tuple[Action, ...]
    query: Query
    board_size: int = BOARD_SIZE
    board_center: tuple[float, float] = (0.0, 0.0)
    board_facing: str = "north"

    def __post_init__(self):
        ids = [p.id for p in self.particles]
        if len(set(ids)) != len(ids):
            raise ValueError("particle ids must be unique")
        half = self.board_size / 2
        for p in self.particles:
            if abs(p.x - self.board_center[0]) > half or abs(p.y - self.board_center[1]) > half:
                raise ValueError(f"particle {p.id} starts outside the board")
        known = set(ids)
        for act in self.actions:
            if act.id is not None and act.id not in known:
                raise ValueError(f"action references unknown particle {act.id!r}")
        if self.query.a not in known or (self.query.b is not None and self.query.b not in known):
            raise ValueError("query references unknown particle")
        if not self.actions:
            raise ValueError("at least one action is required")

    def to_payload(self) -> dict:
        return {
            "kind": "spatial",
            "board": {
                "size": self.board_size,
                "center": [self.board_center[0], self.board_center[1]],
                "orientation": self.board_facing,
            },
            "particles": [
                {"id": p.id, "position": [p.x, p.y], "orientation": p.facing}
                for p in self.particles
            ],
            "actions": [a.to_payload() for a in self.actions],
            "query": self.query.to_payload(),
        }

    @staticmethod
    def from_payload(obj: dict) -> "SpatialProblem":
        if obj.get("kind") != "spatial":
            raise ValueError(f"not a spatial spec payload: kind={obj.get('kind')!r}")
        board = obj["board"]
        return SpatialProblem(
            particles=tuple(
                Particle(p["id"], float(p["position"][0]), float(p["position"][1]), p["orientation"])
                for p in obj["particles"]
            ),
            actions=tuple(Action.from_payload(a) for a in obj["actions"]),
            query=Query.from_payload(obj["query"]),
            board_size=int(board["size"]),
            board_center=(float(board["center"][0]), float(board["center"][1])),
            board_facing=board["orientation"],
        )


def simulate(problem: SpatialProblem) -> GroundTruth:
    """Apply all actions in order and answer the query exactly."""
    state = {p.id: p for p in problem.particles}
    cx, cy = problem.board_center
    board_facing = problem.board_facing

    for act in problem.actions:
        if act.type == "move":
            p = state[act.id]
            vx, vy = _VECTORS[p.facing]
            sign = 1 if act.direction == "forward" else -1
            state[act.id] = replace(
                p, x=p.x + sign * act.steps * vx, y=p.y + sign * act.steps * vy
            )
        elif act.type == "turn":
            p = state[act.id]
            state[act.id] = replace(p, facing=rotate_cardinal(p.facing, _TURN_QUARTERS[act.turn]))
        elif act.type == "board_translate":
            cx += act.dx
            cy += act.dy
            for pid, p in state.items():
                state[pid] = replace(p, x=p.x + act.dx, y=p.y + act.dy)
        elif act.type == "board_rotate":
            q = act.quarter_turns
            board_facing = rotate_cardinal(board_facing, q)
            for pid, p in state.items():
                x, y = p.x, p.y
                for _ in range(q):
                    x, y = cx - (y - cy), cy + (x - cx)
                state[pid] = replace(p, x=x, y=y, facing=rotate_cardinal(p.facing, q))
        else:  # pragma: no cover - Action validates its type
            raise ValueError(f"unknown action {act.type!r}")

    q = problem.query
    if q.kind == "absolute_location":
        p = state[q.a]
        return GroundTruth.coordinate(p.x, p.y)
    if q.kind == "absolute_orientation":
        return GroundTruth.orientation(state[q.a].facing)
    if q.kind == "relative_location":
        pa, pb = state[q.a], state[q.b]
        return GroundTruth.coordinate(pa.x - pb.x, pa.y - pb.y)
    if q.kind == "relative_orientation":
        ia = CARDINALS.index(state[q.a].facing)
        ib = CARDINALS.index(state[q.b].facing)
        return GroundTruth.relative_orientation(RELATIVE_ORIENTATION_TOKENS[(ia - ib) % 4])
    raise ValueError(f"unknown query kind {q.kind!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.1f}"


def _action_sentence(act: Action) -> str:
    if act.type == "move":
        unit = "step" if act.steps == 1 else "steps"
        return f"{act.id} moves {act.steps} {unit} {act.direction}."
    if act.type == "turn":
        if act.turn == "around":
            return f"{act.id} turns around."
        return f"{act.id} turns {act.turn}."
    if act.type == "board_translate":
        return (
            f"The board shifts by ({_fmt(act.dx)}, {_fmt(act.dy)}); "
            "every particle shifts with it."
        )
    degrees = act.quarter_turns * 90
    return (
        f"The board rotates {degrees} degrees counterclockwise about its center; "
        "every particle's position and facing direction rotate with it."
    )


_QUERY_SENTENCES = {
    "absolute_location": "what is the location of {a}?",
    "absolute_orientation": "which direction is {a} facing?",
    "relative_location": (
        "what is the location of {a}, relative to {b} "
        "(that is, {a}'s coordinates minus {b}'s coordinates)?"
    ),
    "relative_orientation": "what is the orientation of {a}, relative to {b}?",
}

_LOCATION_FORMAT = (
    'Give your final answer as a JSON object of the form '
    '{"answer": {"x": <number>, "y": <number>}}.'
)
_ORIENTATION_FORMAT = (
    'Give your final answer as a JSON object of the form {"answer": "<direction>"} '
    'where <direction> is one of "east", "north", "west", "south".'
)
_RELATIVE_ORIENTATION_FORMAT = (
    'Give your final answer as a JSON object of the form {"answer": "<relation>"} '
    'where <relation> is one of "same", "left-of", "opposite", "right-of"; '
    '"left-of" means the first particle faces 90 degrees counterclockwise from the '
    'second, and "right-of" means 90 degrees clockwise.'
)


def render_spatial_prompt(problem: SpatialProblem) -> str:
    n = len(problem.particles)
    cx, cy = problem.board_center
    roster = "; ".join(
        f"{p.id} at ({_fmt(p.x)}, {_fmt(p.y)}) facing {p.facing}" for p in problem.particles
    )
    lines = [
        f"Consider a square grid of size {problem.board_size}x{problem.board_size} "
        f"centered at ({_fmt(cx)}, {_fmt(cy)}). The board faces {problem.board_facing}. "
        f"It has {n} particles: {roster}. "
        "Particles may move beyond the board's boundary.",
        "The following actions are applied in order:",
    ]
    for i, act in enumerate(problem.actions, start=1):
        lines.append(f"{i}. {_action_sentence(act)}")
    q = problem.query
    question = _QUERY_SENTENCES[q.kind].format(a=q.a, b=q.b)
    lines.append(f"After all actions, {question}")
    if q.kind in ("absolute_location", "relative_location"):
        lines.append(_LOCATION_FORMAT)
    elif q.kind == "absolute_orientation":
        lines.append(_ORIENTATION_FORMAT)
    else:
        lines.append(_RELATIVE_ORIENTATION_FORMAT)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@dataclass
class SpatialConfig:
    count: int
    action_count_bounds: tuple[int, int] = (1, 10)
    particle_count_bounds: tuple[int, int] = (2, 4)
    query_mix: Optional[Sequence[str]] = None  # draw uniformly from this list
    seed: int = 0
    max_attempts_per_instance: int = 10_000

    def validate(self) -> None:
        alo, ahi = self.action_count_bounds
        if not (1 <= alo <= ahi):
            raise GenerationError(f"action_count_bounds must start at >= 1: {self.action_count_bounds}")
        plo, phi = self.particle_count_bounds
        if not (2 <= plo <= phi <= 4):
            raise GenerationError(
                f"particle_count_bounds must lie within [2, 4]: {self.particle_count_bounds}"
            )
        if self.query_mix is not None:
            unknown = [q for q in self.query_mix if q not in QUERY_KINDS]
            if unknown:
                raise GenerationError(f"unknown query kinds: {unknown}")
            if not self.query_mix:
                raise GenerationError("query_mix is empty")


def _draw_problem(rng: Rng, config: SpatialConfig) -> SpatialProblem:
    n = rng.randint(*config.particle_count_bounds)
    particles = tuple(
        Particle(
            f"P{i + 1}",
            rng.randint(-19, 19) / 2,
            rng.randint(-19, 19) / 2,
            rng.choice(CARDINALS),
        )
        for i in range(n)
    )
    ids = [p.id for p in particles]
    n_actions = rng.randint(*config.action_count_bounds)
    actions = []
    for _ in range(n_actions):
        roll = rng.random()
        if roll < 0.45:
            actions.append(
                Action(
                    "move",
                    id=rng.choice(ids),
                    direction="forward" if rng.random() < 0.5 else "backward",
                    steps=rng.randint(1, 10),
                )
            )
        elif roll < 0.70:
            actions.append(Action("turn", id=rng.choice(ids), turn=rng.choice(TURNS)))
        elif roll < 0.85:
            dx, dy = 0, 0
            while dx == 0 and dy == 0:
                dx, dy = rng.randint(-5, 5), rng.randint(-5, 5)
            actions.append(Action("board_translate", dx=float(dx), dy=float(dy)))
        else:
            actions.append(Action("board_rotate", quarter_turns=rng.randint(1, 3)))
    kinds = tuple(config.query_mix) if config.query_mix else QUERY_KINDS
    kind = rng.choice(kinds)
    if kind.startswith("relative"):
        a, b = rng.sample(ids, 2)
        query = Query(kind, a, b)
    else:
        query = Query(kind, rng.choice(ids))
    return SpatialProblem(
        particles=particles,
        actions=tuple(actions),
        query=query,
        board_facing=rng.choice(CARDINALS),
    )


def generate_spatial(config: SpatialConfig) -> list[ProblemInstance]:
    """Generate `config.count` unique spatial instances, deterministically."""
    config.validate()
    rng = Rng(config.seed)
    instances: list[ProblemInstance] = []
    seen: set[str] = set()
    for ordinal in range(config.count):
        problem = None
        for _ in range(config.max_attempts_per_instance):
            candidate = _draw_problem(rng, config)
            key = json.dumps(candidate.to_payload(), sort_keys=True)
            if key in seen:
                continue
            seen.add(key)
            problem = candidate
            break
        if problem is None:
            raise GenerationError(
                f"exhausted {config.max_attempts_per_instance} attempts at instance {ordinal}"
            )
        instances.append(
            ProblemInstance(
                id=f"spatial-{config.seed}-{ordinal}",
                family="spatial",
                prompt=render_spatial_prompt(problem),
                spec=problem.to_payload(),
                truth=simulate(problem),
                complexity={
                    "n_actions": len(problem.actions),
                    "query_kind": problem.query.kind,
                },
                seed=config.seed,
            )
        )
    return instances
