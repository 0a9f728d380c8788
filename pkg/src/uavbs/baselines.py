"""Comparison strategies: exhaustive search, iterative search, cluster Q-learning.

The iterative search and cluster Q-learning are representative versions of
the centralised schemes the DQLSI learner is compared against (coordinate
ascent over 3D placement, and k-means partitioning followed by per-UAV
Q-learning), not line-by-line reproductions of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import TYPE_CHECKING, Sequence

import numba
import numpy as np
from scipy.optimize import linear_sum_assignment

from .agent import (DEFAULT_LADDER, STEP_M, Action, LearnParams, apply_action, energy_term)
from .energy import EnergyLedger, PowerModelParams, step_energy, total_energy
from .metrics import MAX_STEP, EpisodeMetrics
from .radio import (ChannelParams, UavPosition, as_array, associate_xy, covered_area,
                    received_power)
from .world import AreaSpec, WorldState, step_mobility

if TYPE_CHECKING:
    from .config import ExperimentConfig


class SearchBudgetExceeded(ValueError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"exhaustive search needs {required} combinations, budget is {budget}; "
                         "use a coarser lattice")
        self.required = required
        self.budget = budget


@dataclass
class PlacementSolution:
    positions: list[UavPosition]
    total_connected: int
    total_energy_j: float
    covered_km2: float
    per_uav_connected: list[int] = field(default_factory=list)
    energy_per_uav: list[float] = field(default_factory=list)
    steps: int = 0
    history: list[int] = field(default_factory=list)


def lattice(area: AreaSpec, spacing: float, altitudes: Sequence[float]) -> np.ndarray:
    """Cell-centred candidate points, sorted lexicographically by (x, y, h)."""
    xs = np.arange(spacing / 2, area.width, spacing)
    ys = np.arange(spacing / 2, area.height, spacing)
    pts = np.array([(x, y, h) for x in xs for y in ys for h in sorted(altitudes)], dtype=float)
    return pts.reshape(-1, 3)


def _evaluate(world: WorldState, positions: Sequence[UavPosition], channel: ChannelParams):
    res = associate_xy(world.positions, as_array(positions), channel)
    return res.total, [int(c) for c in res.per_uav_score]


# -- exhaustive search --------------------------------------------------------

@numba.njit(cache=True)
def _served(P, idx, l, interference, threshold, noise, capacity):  # pragma: no cover - compiled
    """Capped connected total when only the first ``l`` chosen UAVs fly."""
    counts = np.zeros(l, np.int64)
    for i in range(P.shape[1]):
        bj = 0
        bp = P[idx[0], i]
        for m in range(1, l):
            p = P[idx[m], i]
            if p > bp:
                bp = p
                bj = m
        if bp / ((interference[i] - bp) + noise) >= threshold:
            counts[bj] += 1
    tot = 0
    for m in range(l):
        tot += min(counts[m], capacity)
    return tot


@numba.njit(cache=True)
def _best_combination(P, n, threshold, noise, capacity, floor):  # pragma: no cover - compiled
    """Depth-first over index-ordered combinations with an admissible bound.

    Adding UAVs only adds interference, so a partial choice's served total
    never grows; a further UAV k can serve device i only if
    P[k, i] >= threshold * (power already chosen at i). Pruning is on
    ``bound <= best``, so the first optimum in lexicographic order survives.
    """
    K, D = P.shape
    idx = np.zeros(n, np.int64)
    partial = np.zeros((n + 1, D))
    best = floor
    best_idx = np.full(n, -1, np.int64)
    caps = np.zeros(K, np.int64)
    l = 0
    while l >= 0:
        if idx[l] > K - n + l:
            l -= 1
            if l >= 0:
                idx[l] += 1
            continue
        partial[l + 1] = partial[l] + P[idx[l]]
        if l == n - 1:
            tot = _served(P, idx, n, partial[n], threshold, noise, capacity)
            if tot > best:
                best = tot
                best_idx[:] = idx
            idx[l] += 1
            continue
        have = _served(P, idx, l + 1, partial[l + 1], threshold, noise, capacity)
        m = 0
        for k in range(idx[l] + 1, K):
            c = 0
            for i in range(D):
                if P[k, i] >= threshold * partial[l + 1, i]:
                    c += 1
            caps[m] = min(c, capacity)
            m += 1
        need = n - l - 1
        if have + np.sort(caps[:m])[m - need:].sum() <= best:
            idx[l] += 1
            continue
        l += 1
        idx[l] = idx[l - 1] + 1
    return best, best_idx


def _greedy_total(P: np.ndarray, n: int, channel: ChannelParams) -> int:
    """Served total of a one-at-a-time greedy pick; a lower bound for the search."""
    chosen: list[int] = []
    total = 0
    for _ in range(n):
        best_k, best_t = -1, -1
        for k in range(len(P)):
            if k in chosen:
                continue
            t = _served_py(P, chosen + [k], channel)
            if t > best_t:
                best_k, best_t = k, t
        chosen.append(best_k)
        total = best_t
    return total


def _served_py(P: np.ndarray, chosen: list[int], channel: ChannelParams) -> int:
    sub = P[chosen]
    s = sub.sum(axis=0)
    best = sub.argmax(axis=0)
    bp = sub.max(axis=0)
    ok = bp / ((s - bp) + channel.noise_power) >= channel.sinr_threshold
    counts = np.bincount(best[ok], minlength=len(chosen))
    return int(np.minimum(counts, channel.capacity).sum())


def _nearest_neighbour_tour(start: np.ndarray, points: np.ndarray) -> np.ndarray:
    left = list(range(len(points)))
    order = []
    cur = start
    while left:
        d = np.linalg.norm(points[left] - cur, axis=1)
        k = left.pop(int(np.argmin(d)))
        order.append(k)
        cur = points[k]
    return points[order]


def _fly(ledger: EnergyLedger, a: np.ndarray, b: np.ndarray, power: PowerModelParams, step_m: float) -> int:
    """Charge the flight a -> b at one grid step per time step; returns steps flown."""
    n_steps = math.ceil(float(np.linalg.norm(b - a)) / step_m - 1e-9)
    v = step_m / power.dt
    for _ in range(n_steps):
        step_energy(ledger, v, power)
    return n_steps


def exhaustive_search(world: WorldState, n_uavs: int, candidates: np.ndarray, channel: ChannelParams,
                      power: PowerModelParams | None = None, *,
                      starts: Sequence[UavPosition] | None = None, step_m: float = STEP_M,
                      budget: int = 100_000_000) -> PlacementSolution:
    """Best ``n_uavs``-subset of ``candidates`` by total connected devices.

    Every combination is scored; ties keep the lexicographically smallest
    position tuple. Energy: each UAV physically visits every candidate on a
    nearest-neighbour tour (hovering one step at each) and then flies to its
    assigned point.
    """
    power = power or PowerModelParams()
    candidates = np.asarray(candidates, dtype=float).reshape(-1, 3)
    order = np.lexsort((candidates[:, 2], candidates[:, 1], candidates[:, 0]))
    candidates = candidates[order]
    K = len(candidates)
    if K == 0:
        raise ValueError("empty candidate lattice")
    if not 1 <= n_uavs <= K:
        raise ValueError(f"cannot place {n_uavs} UAVs on {K} candidate points")
    required = comb(K, n_uavs)
    if required > budget:
        raise SearchBudgetExceeded(required, budget)

    if channel.interference_range is None:
        P = received_power(world.positions, candidates, channel).T.copy() if world.n_devices else np.zeros((K, 0))
        floor = _greedy_total(P, n_uavs, channel) - 1
        _, best_idx = _best_combination(P, n_uavs, channel.sinr_threshold, channel.noise_power,
                                        channel.capacity, floor)
        best_idx = [int(k) for k in best_idx]
    else:
        # range-limited interference does not fit the kernel's running sums
        best, best_idx = -1, None
        for combo in _combinations(K, n_uavs):
            tot, _ = _evaluate(world, [UavPosition(*candidates[k]) for k in combo], channel)
            if tot > best:
                best, best_idx = tot, list(combo)
    chosen = [UavPosition(*map(float, candidates[k])) for k in best_idx]

    starts = list(starts) if starts is not None else [UavPosition(*candidates[0])] * n_uavs
    ledgers = [EnergyLedger(power.dt) for _ in range(n_uavs)]
    ends = []
    steps = 0
    for k in range(n_uavs):
        cur = np.array(starts[k], dtype=float)
        n_k = 0
        for pt in _nearest_neighbour_tour(cur, candidates):
            n_k += _fly(ledgers[k], cur, pt, power, step_m)
            step_energy(ledgers[k], 0.0, power)
            n_k += 1
            cur = pt
        ends.append(cur)
        steps = max(steps, n_k)
    cost = np.array([[np.linalg.norm(e - np.array(c)) for c in chosen] for e in ends])
    rows, cols = linear_sum_assignment(cost)
    final = [chosen[c] for c in cols[np.argsort(rows)]]
    for k in range(n_uavs):
        _fly(ledgers[k], ends[k], np.array(final[k]), power, step_m)

    return _solution(world, final, channel, ledgers, steps, None)


def _combinations(K: int, n: int):
    from itertools import combinations
    return combinations(range(K), n)


def _solution(world: WorldState, positions: list[UavPosition], channel: ChannelParams,
              ledgers: list[EnergyLedger], steps: int, history: list[int] | None,
              raster_cell: float = 10.0) -> PlacementSolution:
    tot, per = _evaluate(world, positions, channel)
    energies = [total_energy(l) for l in ledgers]
    return PlacementSolution(
        positions=positions, total_connected=tot, total_energy_j=math.fsum(energies),
        covered_km2=covered_area(positions, channel, world.area, raster_cell),
        per_uav_connected=per, energy_per_uav=energies, steps=steps, history=history or [tot],
    )


# -- iterative search ---------------------------------------------------------

def iterative_search(world: WorldState, n_uavs: int, channel: ChannelParams,
                     power: PowerModelParams | None = None, *,
                     starts: Sequence[UavPosition], ladder: Sequence[float] = DEFAULT_LADDER,
                     step_m: float = STEP_M, max_rounds: int = 50) -> PlacementSolution:
    """Coordinate ascent on the flight lattice.

    UAVs take turns; each probes its 7-action neighbourhood with the others
    held fixed and moves to the best strictly improving neighbour. Stops
    after a round with no move or after ``max_rounds``. Probing costs a
    flight out and back, during which the other UAVs hover.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if len(starts) != n_uavs:
        raise ValueError("need one start point per UAV")
    power = power or PowerModelParams()
    positions = list(starts)
    ledgers = [EnergyLedger(power.dt) for _ in range(n_uavs)]
    move_v = step_m / power.dt
    current, _ = _evaluate(world, positions, channel)
    history = [current]
    steps = 0

    def elapse(k: int, n_steps: int, moving: bool):
        nonlocal steps
        for _ in range(n_steps):
            for j in range(n_uavs):
                step_energy(ledgers[j], move_v if (j == k and moving) else 0.0, power)
        steps += n_steps

    for _ in range(max_rounds):
        moved = False
        for k in range(n_uavs):
            best_val, best_pos = current, None
            for a in Action:
                if a is Action.STATIONARY:
                    continue
                cand, blocked = apply_action(positions[k], a, world.area, ladder, step_m)
                if blocked:
                    continue
                trial = positions[:k] + [cand] + positions[k + 1:]
                val, _ = _evaluate(world, trial, channel)
                elapse(k, 2, True)
                if val > best_val:
                    best_val, best_pos = val, cand
            if best_pos is not None:
                positions[k] = best_pos
                current = best_val
                elapse(k, 1, True)
                moved = True
        history.append(current)
        if not moved:
            break
    return _solution(world, positions, channel, ledgers, steps, history)


# -- cluster Q-learning -------------------------------------------------------

def kmeans(points: np.ndarray, k: int, rng: np.random.Generator, iterations: int = 100) -> np.ndarray:
    """Lloyd iterations from a k-means++ seeding; empty clusters re-seed at a random point."""
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise ValueError("cannot cluster an empty point set")
    centers = [points[rng.integers(len(points))]]
    for _ in range(1, k):
        d2 = np.min(((points[:, None] - np.array(centers)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total == 0:
            centers.append(points[rng.integers(len(points))])
        else:
            centers.append(points[rng.choice(len(points), p=d2 / total)])
    centers = np.array(centers)
    for _ in range(iterations):
        labels = np.argmin(((points[:, None] - centers[None]) ** 2).sum(-1), axis=1)
        new = centers.copy()
        for j in range(k):
            members = points[labels == j]
            new[j] = members.mean(axis=0) if len(members) else points[rng.integers(len(points))]
        if np.array_equal(new, centers):
            break
        centers = new
    return centers


_CQL_ACTIONS = (Action.UP, Action.DOWN, Action.STATIONARY)


class ClusterQL:
    """k-means placement plus altitude-only Q-learning per UAV.

    Centroids come from a snapshot of the device positions taken at the
    episode boundary and stay fixed for the episode; each UAV then learns
    only its altitude.
    """

    def __init__(self, world: WorldState, n_uavs: int, channel: ChannelParams,
                 power: PowerModelParams, learn: LearnParams, *, ladder: Sequence[float] = DEFAULT_LADDER,
                 step_m: float = STEP_M, seed: int = 0, kmeans_iterations: int = 100,
                 raster_cell: float = 10.0):
        if n_uavs < 1:
            raise ValueError("n_uavs must be >= 1")
        self.world0 = world
        self.n = n_uavs
        self.channel = channel
        self.power = power
        self.learn = learn
        self.ladder = tuple(ladder)
        self.step_m = step_m
        self.seed = seed
        self.kmeans_iterations = kmeans_iterations
        self.raster_cell = raster_cell
        self.q = np.zeros((n_uavs, len(self.ladder), len(_CQL_ACTIONS)))

    @classmethod
    def from_config(cls, cfg: "ExperimentConfig", world: WorldState, seed: int) -> "ClusterQL":
        return cls(world, cfg.n_uavs, cfg.channel, cfg.energy, cfg.learning.params,
                   ladder=cfg.learning.altitudes, step_m=cfg.learning.step_m, seed=seed,
                   kmeans_iterations=cfg.cql.kmeans_iterations, raster_cell=cfg.raster_cell_m)

    def placement(self, world: WorldState) -> list[UavPosition]:
        area = world.area
        if world.n_devices == 0:
            cents = np.array([[area.width / 2, area.height / 2]] * self.n)
        else:
            cents = kmeans(world.positions, self.n, np.random.default_rng([self.seed, 0xCC]),
                           self.kmeans_iterations)
        out = []
        for x, y in cents:
            x = min(max(round(x / self.step_m) * self.step_m, 0.0), area.width)
            y = min(max(round(y / self.step_m) * self.step_m, 0.0), area.height)
            out.append(UavPosition(float(x), float(y), self.ladder[0]))
        return out

    def run_episode(self, episode: int, *, run_index: int = 0) -> EpisodeMetrics:
        lp = self.learn
        world = self.world0
        rng = np.random.default_rng([self.seed, episode])
        eps = lp.epsilon(episode)
        positions = self.placement(world)
        n = self.n
        ledgers = [EnergyLedger(self.power.dt) for _ in range(n)]
        spent = [0.0] * n
        rewards = [0.0] * n
        v_move = self.step_m / self.power.dt
        res = associate_xy(world.positions, as_array(positions), self.channel)
        prev_c = [int(c) for c in res.per_uav_score]
        prev_e: list[float | None] = [None] * n
        levels = [0] * n
        t = 0
        for t in range(1, lp.max_step + 1):
            acts = []
            for i in range(n):
                if rng.random() < eps:
                    a = int(rng.integers(len(_CQL_ACTIONS)))
                else:
                    a = int(np.argmax(self.q[i, levels[i]]))
                acts.append(a)
                new, _ = apply_action(positions[i], _CQL_ACTIONS[a], world.area, self.ladder, self.step_m)
                step_energy(ledgers[i], v_move if new != positions[i] else 0.0, self.power)
                spent[i] += self.power.dt * ledgers[i].per_step_power[-1]
                positions[i] = new
            world = step_mobility(world, rng)
            res = associate_xy(world.positions, as_array(positions), self.channel)
            for i in range(n):
                c = int(res.per_uav_score[i])
                e_now = spent[i] / t
                e_prev = e_now if prev_e[i] is None else prev_e[i]
                bonus = 1.0 if c > prev_c[i] else (0.0 if c == prev_c[i] else -1.0)
                r = energy_term(e_now, e_prev) + bonus
                s = levels[i]
                s_next = self.ladder.index(positions[i].h)
                target = r + lp.discount_factor * self.q[i, s_next].max()
                self.q[i, s, acts[i]] = (1 - lp.learning_rate) * self.q[i, s, acts[i]] + lp.learning_rate * target
                levels[i] = s_next
                rewards[i] += r
                prev_c[i], prev_e[i] = c, e_now
        metrics = EpisodeMetrics(
            run=run_index, episode=episode, rewards=tuple(rewards),
            energy_j=tuple(total_energy(l) for l in ledgers), connected=tuple(prev_c),
            n_devices=world.n_devices,
            covered_km2=covered_area(positions, self.channel, world.area, self.raster_cell),
            steps=t, cause=MAX_STEP,
        )
        self.last_positions = positions
        return metrics


def cluster_ql(world: WorldState, n_uavs: int, channel: ChannelParams, learn: LearnParams, *,
               power: PowerModelParams | None = None, n_episodes: int = 100,
               ladder: Sequence[float] = DEFAULT_LADDER, step_m: float = STEP_M, seed: int = 0,
               kmeans_iterations: int = 100) -> PlacementSolution:
    """Train for ``n_episodes`` and report the last episode's outcome."""
    learner = ClusterQL(world, n_uavs, channel, power or PowerModelParams(), learn, ladder=ladder,
                        step_m=step_m, seed=seed, kmeans_iterations=kmeans_iterations)
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    history = []
    for e in range(n_episodes):
        m = learner.run_episode(e)
        history.append(m.total_connected)
    return PlacementSolution(
        positions=list(learner.last_positions), total_connected=m.total_connected,
        total_energy_j=math.fsum(m.energy_j), covered_km2=m.covered_km2,
        per_uav_connected=list(m.connected), energy_per_uav=list(m.energy_j),
        steps=m.steps, history=history,
    )


# -- config adapters ----------------------------------------------------------

def exhaustive_search_from_config(cfg: "ExperimentConfig", world: WorldState) -> PlacementSolution:
    cands = lattice(cfg.area, cfg.es.lattice_spacing_m, cfg.es.altitudes)
    return exhaustive_search(world, cfg.n_uavs, cands, cfg.channel, cfg.energy, starts=cfg.starts(),
                             step_m=cfg.learning.step_m, budget=cfg.es.budget)


def iterative_search_from_config(cfg: "ExperimentConfig", world: WorldState) -> PlacementSolution:
    return iterative_search(world, cfg.n_uavs, cfg.channel, cfg.energy, starts=cfg.starts(),
                            ladder=cfg.learning.altitudes, step_m=cfg.learning.step_m,
                            max_rounds=cfg.is_.max_rounds)
