"""Episodes, runs and experiments.

A run owns one device scenario (spawned from the run seed) and one set of
Q-tables that persist across its episodes. Every episode restarts the UAVs
at their start points and the devices at their spawn positions; device
motion within the episode comes from an episode-specific random stream.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import baselines
from .agent import (QTable, apply_action, broadcast_and_collect, communication_cost,
                    compute_reward, discretize_state, locality_score, q_update, select_action)
from .config import ExperimentConfig, checked
from .energy import EnergyLedger, step_energy, total_energy
from .metrics import (DEAD, GOAL, MAX_STEP, EpisodeMetrics, csv_header, csv_row, emit_csv,
                      emit_summary_csv, summarize)
from .radio import UavPosition, as_array, associate_xy, covered_area
from .world import WorldState, step_mobility

log = logging.getLogger(__name__)

OUTPUT_ENV = "UAVBS_OUTPUT_DIR"


class RunError(RuntimeError):
    def __init__(self, seed: int, cause: Exception):
        super().__init__(f"run with seed {seed} failed: {cause}")
        self.seed = seed


def episode_rng(run_seed: int, episode_index: int) -> np.random.Generator:
    return np.random.default_rng([run_seed, episode_index])


def fresh_qtables(cfg: ExperimentConfig) -> list[QTable]:
    return [QTable.for_area(cfg.area, cfg.learning.altitudes, cfg.learning.step_m)
            for _ in range(cfg.n_uavs)]


def _neighbors(i: int, positions: Sequence[UavPosition], radius: float) -> list[UavPosition]:
    me = positions[i]
    out = []
    for j, p in enumerate(positions):
        if j != i and ((p.x - me.x) ** 2 + (p.y - me.y) ** 2 + (p.h - me.h) ** 2) <= radius * radius:
            out.append(p)
    return out


def run_episode(cfg: ExperimentConfig, run_seed: int, episode_index: int,
                qtables: list[QTable] | None = None, *, world: WorldState | None = None,
                run_index: int | None = None) -> EpisodeMetrics:
    """One DQLSI episode; ``qtables`` are updated in place.

    Per step, in UAV-id order: observe state, pick an action, move; then
    devices move, association is recomputed and every agent gets its reward
    and Q-update.
    """
    checked(cfg)
    lc, lp = cfg.learning, cfg.learning.params
    if world is None:
        world = cfg.scenario.build_world(run_seed)
    if qtables is None:
        qtables = fresh_qtables(cfg)
    if run_index is None:
        run_index = run_seed - cfg.base_seed
    n = cfg.n_uavs
    area, ladder, thr = cfg.area, lc.altitudes, lc.thresholds
    chan, power = cfg.channel, cfg.energy

    if lp.max_step == 0:
        return EpisodeMetrics(run_index, episode_index, (0.0,) * n, (0.0,) * n, (0,) * n,
                              world.n_devices, 0.0, 0, MAX_STEP)

    rng = episode_rng(run_seed, episode_index)
    eps = lp.epsilon(episode_index)
    move_speed = lc.step_m / power.dt
    positions = cfg.starts()
    ledgers = [EnergyLedger(power.dt) for _ in range(n)]
    spent = [0.0] * n
    rewards = [0.0] * n
    comm_bits = 0

    scores = associate_xy(world.positions, as_array(positions), chan).per_uav_score
    prev_c = [int(c) for c in scores]
    prev_loc = [locality_score(prev_c[i], broadcast_and_collect(i, prev_c, positions, lc.proximity_radius_m))
                for i in range(n)]
    prev_e: list[float | None] = [None] * n

    capacity_bound = min(world.n_devices, n * chan.capacity)
    goal_target = lc.goal_fraction * capacity_bound
    streak = 0
    cause = MAX_STEP
    states = [discretize_state(positions[i], _neighbors(i, positions, lc.proximity_radius_m),
                               area, ladder, thr, lc.step_m) for i in range(n)]
    t = 0
    for t in range(1, lp.max_step + 1):
        actions = [select_action(qtables[i], states[i], eps, rng) for i in range(n)]
        moved = []
        for i in range(n):
            new, _ = apply_action(positions[i], actions[i], area, ladder, lc.step_m)
            v = move_speed if new != positions[i] else 0.0
            step_energy(ledgers[i], v, power)
            spent[i] += power.dt * ledgers[i].per_step_power[-1]
            moved.append(new)
        positions = moved
        world = step_mobility(world, rng)
        scores = associate_xy(world.positions, as_array(positions), chan).per_uav_score
        now_c = [int(c) for c in scores]

        for i in range(n):
            heard = broadcast_and_collect(i, now_c, positions, lc.proximity_radius_m)
            comm_bits += communication_cost(heard, lc.broadcast_bits)
            loc = locality_score(now_c[i], heard)
            e_now = spent[i] / t
            e_prev = e_now if prev_e[i] is None else prev_e[i]
            r = compute_reward(now_c[i], prev_c[i], e_now, e_prev, loc, prev_loc[i])
            s_next = discretize_state(positions[i], _neighbors(i, positions, lc.proximity_radius_m),
                                      area, ladder, thr, lc.step_m)
            q_update(qtables[i], states[i], actions[i], r, s_next, lp)
            rewards[i] += r
            states[i] = s_next
            prev_c[i], prev_loc[i], prev_e[i] = now_c[i], loc, e_now

        if lc.goal_sustain_steps > 0:
            streak = streak + 1 if sum(now_c) >= goal_target else 0
            if streak >= lc.goal_sustain_steps:
                cause = GOAL
                break
        if lc.battery_j is not None and max(spent) >= lc.battery_j:
            cause = DEAD
            break

    return EpisodeMetrics(
        run=run_index, episode=episode_index, rewards=tuple(rewards),
        energy_j=tuple(total_energy(l) for l in ledgers), connected=tuple(prev_c),
        n_devices=world.n_devices,
        covered_km2=covered_area(positions, chan, area, cfg.raster_cell_m),
        steps=t, cause=cause, comm_bits=comm_bits,
    )


def run_dqlsi(cfg: ExperimentConfig, run_index: int) -> list[EpisodeMetrics]:
    seed = cfg.base_seed + run_index
    world = cfg.scenario.build_world(seed)
    qtables = fresh_qtables(cfg)
    return [run_episode(cfg, seed, e, qtables, world=world, run_index=run_index)
            for e in range(cfg.n_episodes)]


def run_cql(cfg: ExperimentConfig, run_index: int) -> list[EpisodeMetrics]:
    seed = cfg.base_seed + run_index
    world = cfg.scenario.build_world(seed)
    learner = baselines.ClusterQL.from_config(cfg, world, seed)
    return [learner.run_episode(e, run_index=run_index) for e in range(cfg.n_episodes)]


def solution_metrics(sol: baselines.PlacementSolution, run_index: int, n_devices: int) -> EpisodeMetrics:
    n = len(sol.positions)
    return EpisodeMetrics(run_index, 0, (0.0,) * n, tuple(sol.energy_per_uav),
                          tuple(sol.per_uav_connected), n_devices, sol.covered_km2,
                          sol.steps, MAX_STEP)


def run_search(cfg: ExperimentConfig, run_index: int, strategy: str) -> list[EpisodeMetrics]:
    seed = cfg.base_seed + run_index
    world = cfg.scenario.build_world(seed)
    if strategy == "es":
        sol = baselines.exhaustive_search_from_config(cfg, world)
    else:
        sol = baselines.iterative_search_from_config(cfg, world)
    return [solution_metrics(sol, run_index, world.n_devices)]


def run_strategy(cfg: ExperimentConfig, run_index: int, strategy: str | None = None) -> list[EpisodeMetrics]:
    strategy = strategy or cfg.strategy
    if strategy == "dqlsi":
        return run_dqlsi(cfg, run_index)
    if strategy == "cql":
        return run_cql(cfg, run_index)
    if strategy in ("es", "is"):
        return run_search(cfg, run_index, strategy)
    raise ValueError(f"unknown strategy {strategy!r}")


@dataclass
class ExperimentResult:
    metrics: list[EpisodeMetrics]
    summary: dict[str, dict[str, float]]
    n_agents: int

    def rows(self) -> list[dict[str, str]]:
        header = csv_header(self.n_agents)
        return [dict(zip(header, csv_row(m))) for m in self.metrics]


def run_experiment(cfg: ExperimentConfig, strategy: str | None = None) -> ExperimentResult:
    """``n_runs`` independent runs with seeds ``base_seed + run``.

    Learning strategies contribute ``n_episodes`` rows per run, search
    baselines a single row. The summary covers each run's final episodes.
    """
    checked(cfg)
    metrics: list[EpisodeMetrics] = []
    for run in range(cfg.n_runs):
        try:
            metrics.extend(run_strategy(cfg, run, strategy))
        except Exception as exc:
            raise RunError(cfg.base_seed + run, exc) from exc
        log.info("run %d done", run)
    header = csv_header(cfg.n_uavs)
    rows = [dict(zip(header, csv_row(m))) for m in metrics]
    return ExperimentResult(metrics, summarize(rows), cfg.n_uavs)


def output_dir(cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or cfg.output_dir)


def write_outputs(result: ExperimentResult, out: str | Path) -> tuple[Path, Path]:
    out = Path(out)
    episodes = emit_csv(result.metrics, out / "episodes.csv", result.n_agents)
    summary = emit_summary_csv(result.summary, out / "summary.csv")
    return episodes, summary

