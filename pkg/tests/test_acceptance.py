"""Acceptance criteria 1-14, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the pytest terminal summary,
or on stdout when this file is run as a script). Quantitative scenarios use
the shipped configs in ``configs/``: four Gaussian hotspots, 100-step
episodes, 100 episodes x 20 runs.
"""

import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from uavbs import runner
from uavbs.agent import (N_ACTIONS, Action, Bucket, LearnParams, QTable, StateKey, apply_action,
                         compute_reward, discretize_state, q_update, select_action)
from uavbs.baselines import exhaustive_search, lattice
from uavbs.config import load_config
from uavbs.energy import EnergyLedger, PowerModelParams, propulsion_power, total_energy
from uavbs.radio import ChannelParams, UavPosition, associate_xy
from uavbs.world import (AreaSpec, Clustered, GroundDevice, Static, Uniform, WorldState, spawn_devices,
                         step_mobility)

from conftest import record
from oracles import brute_force_association, corridor_value_iteration, single_uav_best

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
N_COMPARE_SEEDS = 10


def final_window(metrics, runs=None):
    """Per-run mean over the last five episodes, keyed by run index."""
    by_run = {}
    for m in metrics:
        by_run.setdefault(m.run, []).append(m)
    out = {}
    for r, ms in by_run.items():
        if runs is not None and r not in runs:
            continue
        tail = sorted(ms, key=lambda m: m.episode)[-5:]
        out[r] = (float(np.mean([m.connected_fraction for m in tail])),
                  float(np.mean([m.total_energy_j for m in tail])))
    return out


@pytest.fixture(scope="module")
def static_cfg():
    return load_config(CONFIGS / "static.ini")


@pytest.fixture(scope="module")
def dynamic_cfg():
    return load_config(CONFIGS / "dynamic.ini")


@pytest.fixture(scope="module")
def static_dqlsi(static_cfg):
    return runner.run_experiment(static_cfg, "dqlsi")


@pytest.fixture(scope="module")
def dynamic_dqlsi(dynamic_cfg):
    return runner.run_experiment(dynamic_cfg, "dqlsi")


@pytest.fixture(scope="module")
def search_baselines(static_cfg):
    cfg = static_cfg.with_(n_runs=N_COMPARE_SEEDS)
    return runner.run_experiment(cfg, "es"), runner.run_experiment(cfg, "is")


# -- quantitative -------------------------------------------------------------

def test_c01_static_connectivity(static_dqlsi):
    frac = static_dqlsi.summary["connected_fraction"]["mean"]
    ok = frac >= 0.85
    record(1, ok, f"static DQLSI final-window connected fraction {frac:.4f} (need >= 0.85)")
    assert ok


def test_c02_dynamic_connectivity(dynamic_dqlsi):
    frac = dynamic_dqlsi.summary["connected_fraction"]["mean"]
    ok = frac >= 0.80
    record(2, ok, f"dynamic DQLSI final-window connected fraction {frac:.4f} (need >= 0.80)")
    assert ok


def test_c03_dynamic_ordering(dynamic_cfg, dynamic_dqlsi):
    cql = runner.run_experiment(dynamic_cfg, "cql")
    d = dynamic_dqlsi.summary["connected_fraction"]["mean"]
    c = cql.summary["connected_fraction"]["mean"]
    gap = d - c
    ok = gap >= 0.25
    record(3, ok, f"DQLSI-D {d:.4f} vs CQL-D {c:.4f}: gap {100 * gap:+.1f} pp (need >= +25 pp)")
    assert ok


def test_c04_energy_ordering(static_dqlsi, search_baselines):
    es, _ = search_baselines
    seeds = set(range(N_COMPARE_SEEDS))
    dq = final_window(static_dqlsi.metrics, seeds)
    e_dq = float(np.mean([v[1] for v in dq.values()]))
    e_es = float(np.mean([m.total_energy_j for m in es.metrics]))
    ok = e_es >= 2.0 * e_dq
    record(4, ok, f"ES energy {e_es / 1e3:.0f} kJ vs DQLSI {e_dq / 1e3:.0f} kJ, ratio {e_es / e_dq:.2f} (need >= 2)")
    assert ok


def test_c05_connectivity_ordering(static_dqlsi, search_baselines):
    es, is_ = search_baselines
    seeds = set(range(N_COMPARE_SEEDS))
    dq = final_window(static_dqlsi.metrics, seeds)
    f_dq = float(np.mean([v[0] for v in dq.values()]))
    f_es = float(np.mean([m.connected_fraction for m in es.metrics]))
    f_is = float(np.mean([m.connected_fraction for m in is_.metrics]))
    ok = f_es >= f_dq >= f_is
    record(5, ok, f"ES {f_es:.4f} >= DQLSI {f_dq:.4f} >= IS {f_is:.4f} over {len(seeds)} seeds")
    assert ok


# -- property suites -----------------------------------------------------------

def test_c06_hover_identity():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        p = PowerModelParams(kappa0=rng.uniform(1, 500), kappai=rng.uniform(1, 500),
                             u_tip=rng.uniform(50, 300), v0=rng.uniform(1, 20), nu=rng.uniform(0.1, 2),
                             s_solidity=rng.uniform(0.01, 0.2), rotor_area=rng.uniform(0.1, 2),
                             rho=rng.uniform(0.5, 1.5), induced_sign=int(rng.choice([1, -1])))
        want = p.kappa0 + p.kappai
        worst = max(worst, abs(propulsion_power(0.0, p) - want) / want)
    ok = worst <= 1e-9
    record(6, ok, f"hover power = kappa0 + kappai over 1000 draws, worst rel err {worst:.1e}")
    assert ok


def test_c07_energy_resummation():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(2000):
        dt = float(rng.uniform(0.1, 10))
        trace = list(rng.uniform(0, 1000, int(rng.integers(0, 300))))
        led = EnergyLedger(dt, trace)
        if total_energy(led) != dt * math.fsum(trace):
            mismatches += 1
        k = len(trace) // 2
        if total_energy(EnergyLedger(dt, trace[:k]) + EnergyLedger(dt, trace[k:])) != total_energy(led):
            mismatches += 1
    ok = mismatches == 0
    record(7, ok, f"total energy == dt * sum(trace) exactly on 2000 random traces, {mismatches} mismatches")
    assert ok


def test_c08_reward_table():
    examples = [compute_reward(6, 5, 10, 10, 13, 12), compute_reward(5, 5, 10, 10, 12, 13),
                compute_reward(5, 6, 1, 2, 13, 12)]
    exact = examples[0] == 2.0 and examples[1] == -1.0 and examples[2] == 1.0 + (1.0 / 3.0) - 1.0
    rng = np.random.default_rng(8)
    lo, hi = math.inf, -math.inf
    for _ in range(100_000):
        c = rng.integers(0, 200, 4)
        e = rng.uniform(0, 1e5, 2) * (rng.random(2) > 0.05)
        r = compute_reward(int(c[0]), int(c[1]), float(e[0]), float(e[1]), int(c[2]), int(c[3]))
        lo, hi = min(lo, r), max(hi, r)
    ok = exact and -3.0 <= lo and hi <= 3.0
    record(8, ok, f"reward examples {examples[0]:g}, {examples[1]:g}, {examples[2]:.6f}; "
                  f"range over 1e5 draws [{lo:.3f}, {hi:.3f}]")
    assert ok


def test_c09_q_update():
    rng = np.random.default_rng(9)
    q = QTable(3, 3, 2)
    cells = [StateKey(x, y, a, Bucket(b)) for x in range(3) for y in range(3) for a in range(2) for b in range(3)]
    discount = 0.9
    single = True
    params = [LearnParams(learning_rate=lr, discount_factor=discount) for lr in (0.05, 0.1, 0.5, 1.0)]
    si = rng.integers(0, len(cells), 1_000_000)
    s2i = rng.integers(0, len(cells), 1_000_000)
    acts = rng.integers(0, N_ACTIONS, 1_000_000)
    rewards = rng.uniform(-3, 3, 1_000_000)
    lrs = rng.integers(0, len(params), 1_000_000)
    for k in range(1_000_000):
        if k % 1000 == 0:
            before = q.values.copy()
        q_update(q, cells[si[k]], Action(int(acts[k])), float(rewards[k]), cells[s2i[k]], params[lrs[k]])
        if k % 1000 == 0:
            changed = np.argwhere(q.values != before)
            single &= len(changed) <= 1 and (len(changed) == 0 or tuple(changed[0]) == (*cells[si[k]], int(acts[k])))
    bound = 3.0 / (1.0 - discount)
    peak = float(np.abs(q.values).max())
    ok = single and peak <= bound
    record(9, ok, f"single-cell updates; max |Q| after 1e6 updates {peak:.3f} (bound {bound:.1f})")
    assert ok


def test_c10_corridor():
    area, ladder = AreaSpec(80.0, 1.0), (100.0,)
    p = LearnParams(learning_rate=0.5, discount_factor=0.9, epsilon_decay=0.97, epsilon_min=0.05)
    q = QTable(5, 1, 1)
    rng = np.random.default_rng(10)
    updates, episode = 0, 0
    while updates < 10_000:
        pos = UavPosition(0.0, 0.0, 100.0)
        for _ in range(50):
            s = discretize_state(pos, [], area, ladder)
            a = select_action(q, s, p.epsilon(episode), rng)
            pos, _ = apply_action(pos, a, area, ladder)
            s2 = discretize_state(pos, [], area, ladder)
            done = s2.grid_x == 4
            # terminal transitions do not bootstrap
            q_update(q, s, a, 1.0 if done else 0.0, s2, LearnParams(p.learning_rate, 0.0) if done else p)
            updates += 1
            if done:
                break
        episode += 1
    oracle = corridor_value_iteration(0.9, N_ACTIONS, int(Action.LEFT), int(Action.RIGHT))
    learned = [int(np.argmax(q.row(StateKey(c, 0, 0, Bucket.FAR)))) for c in range(4)]
    optimal = [int(np.argmax(oracle[c])) for c in range(4)]
    ok = learned == optimal
    record(10, ok, f"greedy corridor policy {learned} vs value iteration {optimal} after {updates} updates")
    assert ok


def test_c11_es_oracle():
    rng = np.random.default_rng(11)
    instances, bad = 0, 0
    area = AreaSpec(500.0, 500.0)
    for spacing, alts in ((100.0, (100.0,)), (125.0, (100.0,)), (250.0, (100.0, 140.0, 180.0)),
                          (170.0, (100.0, 200.0))):
        cands = lattice(area, spacing, alts)
        assert len(cands) <= 25
        for _ in range(100):
            n_dev = int(rng.integers(0, 60))
            pts = rng.uniform(0, 500, (n_dev, 2))
            h, radius = alts[0], float(rng.uniform(20, 400))
            chan = ChannelParams(noise_power=1.0 / (5.0 * (h * h + radius * radius)),
                                 capacity=int(rng.integers(1, 40)))
            w = WorldState.from_devices(area, [GroundDevice(i, tuple(p), Static()) for i, p in enumerate(pts)])
            sol = exhaustive_search(w, 1, cands, chan)
            best, where = single_uav_best(pts, cands, chan)
            instances += 1
            bad += sol.total_connected != best or tuple(sol.positions[0]) != where
    ok = bad == 0
    record(11, ok, f"1-UAV exhaustive search == brute force on {instances} instances, {bad} mismatches")
    assert ok


def test_c12_association():
    rng = np.random.default_rng(12)
    bad, over = 0, 0
    for _ in range(400):
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 51))
        uavs = [(float(x), float(y), float(h)) for x, y, h in
                zip(rng.uniform(0, 1000, m), rng.uniform(0, 1000, m), rng.choice([100.0, 140.0, 200.0], m))]
        xy = rng.uniform(0, 1000, (n, 2))
        p = ChannelParams(capacity=int(rng.integers(1, 25)), sinr_threshold=float(rng.choice([0.5, 1.0, 5.0])))
        r = associate_xy(xy, np.array(uavs), p)
        over += int((r.per_uav_score > p.capacity).any())
        bad += r.assignment.tolist() != brute_force_association(xy.tolist(), uavs, p)
    ok = bad == 0 and over == 0
    record(12, ok, f"400 random instances: {over} capacity violations, {bad} brute-force mismatches")
    assert ok


def test_c13_rwm_containment():
    area = AreaSpec()
    w = spawn_devices(area, 0, 1000, Uniform(), seed=13)
    rng = np.random.default_rng(13)
    outside = 0
    for _ in range(1000):
        w = step_mobility(w, rng)
        x, y = w.positions[:, 0], w.positions[:, 1]
        outside += int(((x < 0) | (x > area.width) | (y < 0) | (y > area.height)).sum())
    # a crowded corner with fast walkers exercises the reflections
    small = AreaSpec(30.0, 30.0)
    fast = spawn_devices(small, 0, 100, Clustered(((1.0, 1.0),), spread=2.0), seed=14)
    fast = WorldState(small, fast.positions, fast.mobile, fast.speed * 20.0, fast.heading,
                      fast.steps_remaining, fast.rng_seed, fast.mobility_params)
    for _ in range(10_000):
        fast = step_mobility(fast, rng)
        x, y = fast.positions[:, 0], fast.positions[:, 1]
        outside += int(((x < 0) | (x > small.width) | (y < 0) | (y > small.height)).sum())
    ok = outside == 0
    record(13, ok, f"2e6 device mobility steps (1e6 on 1 km^2, 1e6 fast on 30 m^2), {outside} out of bounds")
    assert ok


def test_c14_determinism(tmp_path):
    text = (CONFIGS / "dynamic.ini").read_text()
    text = text.replace("n_runs = 20", "n_runs = 2").replace("n_episodes = 100", "n_episodes = 5")
    cfg = tmp_path / "det.ini"
    cfg.write_text(text)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        env = {**os.environ, runner.OUTPUT_ENV: str(out)}
        subprocess.run([sys.executable, "-m", "uavbs", "run", str(cfg)], check=True, env=env,
                       capture_output=True)
        outs.append(((out / "episodes.csv").read_bytes(), (out / "summary.csv").read_bytes()))
    ok = outs[0] == outs[1] and len(outs[0][0]) > 0
    record(14, ok, f"two `run` executions, identical base_seed: CSVs byte-identical = {ok}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
