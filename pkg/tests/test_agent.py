import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from uavbs.agent import (N_ACTIONS, Action, AgentObservation, Bucket, LearnParams,
                         QTable, StateKey, apply_action, broadcast_and_collect, communication_cost,
                         compute_reward, discretize_state, energy_term, locality_score, q_update,
                         select_action)
from uavbs.radio import UavPosition
from uavbs.world import AreaSpec

AREA = AreaSpec()


def test_seven_actions():
    assert N_ACTIONS == 7
    assert [a.name for a in Action] == ["UP", "DOWN", "FORWARD", "BACKWARD", "LEFT", "RIGHT", "STATIONARY"]


def test_discretize_origin():
    assert discretize_state(UavPosition(0, 0, 100), [], AREA) == (0, 0, 0, Bucket.FAR)


def test_discretize_near_neighbor():
    s = discretize_state(UavPosition(500, 500, 120), [UavPosition(530, 500, 120)], AREA)
    assert s == StateKey(25, 25, 1, Bucket.NEAR)


def test_discretize_buckets():
    me = UavPosition(500, 500, 100)
    assert discretize_state(me, [UavPosition(600, 500, 100)], AREA).neighbor_bucket is Bucket.MID
    assert discretize_state(me, [UavPosition(800, 500, 100)], AREA).neighbor_bucket is Bucket.FAR
    # closest neighbour wins
    s = discretize_state(me, [UavPosition(800, 500, 100), UavPosition(510, 500, 100)], AREA)
    assert s.neighbor_bucket is Bucket.NEAR


def test_discretize_identical_inputs():
    p = UavPosition(260, 740, 180)
    assert discretize_state(p, [], AREA) == discretize_state(UavPosition(*p), [], AREA)


def test_discretize_errors():
    with pytest.raises(ValueError):
        discretize_state(UavPosition(0, 0, 110), [], AREA)
    with pytest.raises(ValueError):
        discretize_state(UavPosition(-1, 0, 100), [], AREA)


def test_state_count():
    q = QTable.for_area(AREA)
    assert q.values.shape == (51, 51, 6, 3, 7)
    assert q.n_states == 51 * 51 * 6 * 3


def test_apply_action_cases():
    p = UavPosition(500, 500, 120)
    assert apply_action(p, Action.STATIONARY, AREA) == (p, False)
    assert apply_action(p, Action.FORWARD, AREA) == (UavPosition(500, 520, 120), False)
    assert apply_action(p, Action.BACKWARD, AREA)[0] == UavPosition(500, 480, 120)
    assert apply_action(p, Action.LEFT, AREA)[0] == UavPosition(480, 500, 120)
    assert apply_action(p, Action.UP, AREA)[0] == UavPosition(500, 500, 140)
    assert apply_action(p, Action.DOWN, AREA)[0] == UavPosition(500, 500, 100)
    edge = UavPosition(990, 500, 120)
    assert apply_action(edge, Action.RIGHT, AREA) == (edge, True)
    top = UavPosition(10, 10, 200)
    assert apply_action(top, Action.UP, AREA) == (top, True)


def test_select_greedy_and_ties():
    q = QTable(1, 1, 1)
    s = StateKey(0, 0, 0, Bucket.FAR)
    rng = np.random.default_rng(0)
    assert select_action(q, s, 0.0, rng) is Action.UP
    q.values[s][6] = 1.0
    assert select_action(q, s, 0.0, rng) is Action.STATIONARY
    with pytest.raises(ValueError):
        select_action(q, s, 1.5, rng)


def test_select_uniform_when_epsilon_one():
    q = QTable(1, 1, 1)
    s = StateKey(0, 0, 0, Bucket.FAR)
    rng = np.random.default_rng(42)
    counts = np.bincount([select_action(q, s, 1.0, rng) for _ in range(70_000)], minlength=7)
    assert np.abs(counts / 70_000 - 1 / 7).max() < 0.01
    assert chisquare(counts).pvalue > 0.001


@settings(max_examples=100, deadline=None)
@given(row=st.lists(st.floats(-50, 50), min_size=7, max_size=7),
       scale=st.floats(0.01, 100), shift=st.floats(-100, 100))
def test_greedy_affine_invariant(row, scale, shift):
    s = StateKey(0, 0, 0, Bucket.FAR)
    a, b = QTable(1, 1, 1), QTable(1, 1, 1)
    a.values[s] = row
    b.values[s] = np.array(row) * scale + shift
    if len(set(b.values[s])) == 7 and len(set(row)) == 7:
        rng = np.random.default_rng(0)
        assert select_action(a, s, 0.0, rng) == select_action(b, s, 0.0, rng)


def test_reward_examples():
    assert compute_reward(6, 5, 10, 10, 13, 12) == 2.0
    assert compute_reward(5, 5, 10, 10, 12, 13) == -1.0
    assert compute_reward(5, 6, 1, 2, 13, 12) == pytest.approx(1 / 3, abs=1e-15)


def test_energy_term_zero_over_zero():
    assert energy_term(0.0, 0.0) == 0.0


@settings(max_examples=300, deadline=None)
@given(on=st.integers(0, 200), op=st.integers(0, 200), en=st.floats(0, 1e6), ep=st.floats(0, 1e6),
       ln=st.integers(0, 600), lp=st.integers(0, 600))
def test_reward_bounds_and_antisymmetry(on, op, en, ep, ln, lp):
    r = compute_reward(on, op, en, ep, ln, lp)
    assert -3.0 <= r <= 3.0
    assert -1.0 <= energy_term(en, ep) <= 1.0
    if on != op:
        swapped = compute_reward(op, on, en, ep, ln, lp)
        assert r - swapped == pytest.approx(2.0 if on > op else -2.0)


def _pair():
    return StateKey(0, 0, 0, Bucket.FAR), StateKey(1, 0, 0, Bucket.FAR)


def test_q_update_overwrite():
    q = QTable(2, 1, 1)
    s, s2 = _pair()
    q_update(q, s, Action.UP, 5.0, s2, LearnParams(learning_rate=1.0, discount_factor=0.0))
    assert q[s, Action.UP] == 5.0
    assert q.entry_count == 1


def test_q_update_hand_value():
    q = QTable(2, 1, 1)
    s, s2 = _pair()
    q.values[s2][3] = 10.0
    q_update(q, s, Action.RIGHT, 1.0, s2, LearnParams(learning_rate=0.5, discount_factor=0.9))
    assert q[s, Action.RIGHT] == pytest.approx(5.0)


def test_q_update_rejects_nonfinite():
    q = QTable(2, 1, 1)
    s, s2 = _pair()
    with pytest.raises(ValueError):
        q_update(q, s, Action.UP, float("nan"), s2, LearnParams())


def test_learn_params_validation():
    for kw in (dict(learning_rate=0), dict(discount_factor=1.5), dict(epsilon_min=0.5, epsilon_start=0.2),
               dict(epsilon_decay=0), dict(max_step=-1)):
        with pytest.raises(ValueError):
            LearnParams(**kw)


def test_epsilon_schedule():
    p = LearnParams(epsilon_decay=0.5, epsilon_min=0.1)
    assert [p.epsilon(e) for e in range(5)] == [1.0, 0.5, 0.25, 0.125, 0.1]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**20), a=st.integers(0, 6), r=st.floats(-3, 3))
def test_q_update_single_cell(seed, a, r):
    rng = np.random.default_rng(seed)
    q = QTable(3, 3, 2)
    q.values[:] = rng.uniform(-5, 5, q.values.shape)
    before = q.copy()
    s = StateKey(int(rng.integers(3)), int(rng.integers(3)), int(rng.integers(2)), Bucket(int(rng.integers(3))))
    s2 = StateKey(int(rng.integers(3)), int(rng.integers(3)), int(rng.integers(2)), Bucket(int(rng.integers(3))))
    q_update(q, s, Action(a), r, s2, LearnParams())
    diff = np.argwhere(q.values != before.values)
    assert len(diff) <= 1
    if len(diff):
        assert tuple(diff[0]) == (*s, a)


def test_broadcast_filters_by_distance():
    pos = [UavPosition(0, 0, 100), UavPosition(100, 0, 100), UavPosition(0, 300, 100), UavPosition(900, 900, 100)]
    scores = [10, 20, 30, 40]
    heard = broadcast_and_collect(0, scores, pos, 500)
    assert heard == [(1, 20), (2, 30)]
    assert locality_score(scores[0], heard) == 60
    assert communication_cost(heard, 16) == 32
    assert broadcast_and_collect(0, scores, pos, 1500) == [(1, 20), (2, 30), (3, 40)]
    assert communication_cost(broadcast_and_collect(0, scores, pos, 1500), 16) == 3 * 16


def test_broadcast_single_uav():
    heard = broadcast_and_collect(0, {0: 7}, [UavPosition(0, 0, 100)], 1500)
    assert heard == []
    assert locality_score(7, heard) == 7
    with pytest.raises(ValueError):
        broadcast_and_collect(3, [1], [UavPosition(0, 0, 100)], 10)


def test_observation():
    obs = AgentObservation(5, 100.0, 0.1, [(1, 3), (2, 4)])
    assert obs.locality == 12
    assert obs.communication_bits == 32
