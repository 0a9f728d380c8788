"""Independent tabular Q-learner run by each UAV.

The state key is the UAV's grid cell, its altitude level and a coarse
bucket of the distance to the closest neighbour. Connection scores and
energy only enter through the reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .radio import UavPosition
from .world import AreaSpec

DEFAULT_LADDER = (100.0, 120.0, 140.0, 160.0, 180.0, 200.0)
DEFAULT_BUCKETS = (50.0, 200.0)
STEP_M = 20.0
SCORE_BITS = 16


class Action(IntEnum):
    UP = 0
    DOWN = 1
    FORWARD = 2    # +y
    BACKWARD = 3   # -y
    LEFT = 4       # -x
    RIGHT = 5      # +x
    STATIONARY = 6


N_ACTIONS = len(Action)

_MOVES = {
    Action.FORWARD: (0.0, 1.0),
    Action.BACKWARD: (0.0, -1.0),
    Action.LEFT: (-1.0, 0.0),
    Action.RIGHT: (1.0, 0.0),
}


class Bucket(IntEnum):
    NEAR = 0
    MID = 1
    FAR = 2


class StateKey(NamedTuple):
    grid_x: int
    grid_y: int
    alt_level: int
    neighbor_bucket: Bucket


@dataclass(frozen=True)
class LearnParams:
    learning_rate: float = 0.1
    discount_factor: float = 0.9
    epsilon_start: float = 1.0
    epsilon_decay: float = 0.95
    epsilon_min: float = 0.05
    max_step: int = 10000

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0 <= self.discount_factor <= 1:
            raise ValueError("discount_factor must lie in [0, 1]")
        if not 0 <= self.epsilon_min <= self.epsilon_start <= 1:
            raise ValueError("need 0 <= epsilon_min <= epsilon_start <= 1")
        if not 0 < self.epsilon_decay <= 1:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if self.max_step < 0:
            raise ValueError("max_step must be >= 0")

    def epsilon(self, episode: int) -> float:
        return max(self.epsilon_min, self.epsilon_start * self.epsilon_decay ** episode)


class QTable:
    """Dense Q-values over (grid_x, grid_y, alt_level, bucket, action)."""

    def __init__(self, nx: int, ny: int, n_alt: int, n_buckets: int = len(Bucket)):
        shape = (nx, ny, n_alt, n_buckets, N_ACTIONS)
        self.values = np.zeros(shape)
        self.visited = np.zeros(shape, dtype=bool)

    @classmethod
    def for_area(cls, area: AreaSpec, ladder: Sequence[float] = DEFAULT_LADDER,
                 cell: float = STEP_M) -> "QTable":
        return cls(int(area.width // cell) + 1, int(area.height // cell) + 1, len(ladder))

    @property
    def n_states(self) -> int:
        return int(np.prod(self.values.shape[:-1]))

    @property
    def entry_count(self) -> int:
        """Number of (state, action) cells written at least once."""
        return int(self.visited.sum())

    def row(self, s: StateKey) -> np.ndarray:
        return self.values[s]

    def __getitem__(self, key):
        s, a = key
        return float(self.values[s][a])

    def copy(self) -> "QTable":
        q = QTable.__new__(QTable)
        q.values = self.values.copy()
        q.visited = self.visited.copy()
        return q


def _alt_level(h: float, ladder: Sequence[float]) -> int:
    for k, level in enumerate(ladder):
        if abs(h - level) <= 1e-6:
            return k
    raise ValueError(f"altitude {h} is not on the ladder {tuple(ladder)}")


def _uav_distance(a: UavPosition, b: UavPosition) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.h - b.h) ** 2)


def discretize_state(pos: UavPosition, neighbors: Sequence[UavPosition], area: AreaSpec,
                     ladder: Sequence[float] = DEFAULT_LADDER,
                     thresholds: tuple[float, float] = DEFAULT_BUCKETS,
                     cell: float = STEP_M) -> StateKey:
    if not area.contains(pos.x, pos.y):
        raise ValueError(f"UAV at ({pos.x}, {pos.y}) is outside the area")
    alt = _alt_level(pos.h, ladder)
    if neighbors:
        d = min(_uav_distance(pos, n) for n in neighbors)
        near, mid = thresholds
        bucket = Bucket.NEAR if d < near else Bucket.MID if d < mid else Bucket.FAR
    else:
        bucket = Bucket.FAR
    return StateKey(int(pos.x // cell), int(pos.y // cell), alt, bucket)


def apply_action(pos: UavPosition, a: Action, area: AreaSpec,
                 ladder: Sequence[float] = DEFAULT_LADDER,
                 step: float = STEP_M) -> tuple[UavPosition, bool]:
    """Move one step; returns (new position, hit_boundary).

    A move that would leave the area or the altitude ladder is a no-op with
    ``hit_boundary`` set.
    """
    a = Action(a)
    if a is Action.STATIONARY:
        return pos, False
    if a in (Action.UP, Action.DOWN):
        k = _alt_level(pos.h, ladder) + (1 if a is Action.UP else -1)
        if 0 <= k < len(ladder):
            return UavPosition(pos.x, pos.y, float(ladder[k])), False
        return pos, True
    dx, dy = _MOVES[a]
    x, y = pos.x + dx * step, pos.y + dy * step
    if area.contains(x, y):
        return UavPosition(x, y, pos.h), False
    return pos, True


def select_action(q: QTable, s: StateKey, epsilon: float, rng: np.random.Generator) -> Action:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0 and rng.random() < epsilon:
        return Action(int(rng.integers(N_ACTIONS)))
    return Action(int(np.argmax(q.row(s))))


def energy_term(e_now: float, e_prev: float) -> float:
    total = e_now + e_prev
    if total == 0:
        return 0.0
    return (e_prev - e_now) / total


def compute_reward(own_now: int, own_prev: int, e_now: float, e_prev: float,
                   locality_now: int, locality_prev: int) -> float:
    """Cooperative factor + relative energy saving + own-connectivity bonus."""
    coop = 1.0 if locality_now > locality_prev else -1.0
    bonus = 1.0 if own_now > own_prev else (0.0 if own_now == own_prev else -1.0)
    return coop + energy_term(e_now, e_prev) + bonus


def q_update(q: QTable, s: StateKey, a: Action, r: float, s_next: StateKey,
             p: LearnParams) -> QTable:
    """One-step Q-learning backup of cell (s, a), in place."""
    if not math.isfinite(r):
        raise ValueError("reward must be finite")
    target = r + p.discount_factor * float(q.values[s_next].max())
    cell = (*s, int(a))
    q.values[cell] = (1.0 - p.learning_rate) * q.values[cell] + p.learning_rate * target
    q.visited[cell] = True
    return q


def broadcast_and_collect(self_id: int, all_scores: Mapping[int, int] | Sequence[int],
                          positions: Sequence[UavPosition],
                          proximity_radius: float) -> list[tuple[int, int]]:
    """Connection scores heard from the other UAVs within ``proximity_radius``."""
    if not 0 <= self_id < len(positions):
        raise ValueError(f"unknown UAV {self_id}")
    me = positions[self_id]
    heard = []
    for j, pos in enumerate(positions):
        if j != self_id and _uav_distance(me, pos) <= proximity_radius:
            heard.append((j, int(all_scores[j])))
    return heard


def locality_score(own: int, neighbor_scores: Sequence[tuple[int, int]]) -> int:
    return own + sum(c for _, c in neighbor_scores)


def communication_cost(neighbor_scores: Sequence[tuple[int, int]], bits: int = SCORE_BITS) -> int:
    """Bits received this step: one fixed-size message per heard neighbour."""
    return len(neighbor_scores) * bits


@dataclass
class AgentObservation:
    connection_score: int
    energy_avg: float
    covered_area: float
    neighbor_scores: list[tuple[int, int]]
    broadcast_bits: int = SCORE_BITS

    @property
    def locality(self) -> int:
        return locality_score(self.connection_score, self.neighbor_scores)

    @property
    def communication_bits(self) -> int:
        return communication_cost(self.neighbor_scores, self.broadcast_bits)
