import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgesim.baselines import pcu_step
from edgesim.engine import (
    POWER_TIE_WEIGHT,
    BoundUndefinedError,
    ControllerConfig,
    ControllerState,
    delay_bound,
    engine_step,
    objective_weights,
    power_bound,
    queue_update,
    slot_objective,
)
from edgesim.rejo import ExhaustiveSolver, RejoConfig, RejoSolver, SlotProblem, all_activations
from edgesim.system_model import SlotInput, SlotMetrics, SystemParams
from edgesim.topology import build_grid_topology

Q = 1750.0
PARAMS = SystemParams()


def busy_slot(topo, lam=12.0, h=40.0):
    return SlotInput(np.full(topo.num_regions, lam), np.full(topo.num_stations, h))


@pytest.mark.parametrize("q, power, expected", [(0.0, Q, 0.0), (5.0, Q - 10, 0.0), (100.0, 1800.0, 150.0)])
def test_queue_update(q, power, expected):
    assert queue_update(q, power, Q) == expected


@given(st.lists(st.floats(0, 5000), min_size=1, max_size=60), st.floats(1, 4000))
def test_queue_telescoping_and_nonnegative(powers, budget):
    q = 0.0
    for p in powers:
        q = queue_update(q, p, budget)
        assert q >= 0
    assert q / len(powers) >= np.mean(powers) - budget - 1e-9 * max(np.mean(powers), budget)


def metrics(cost, power):
    z = np.zeros(1)
    return SlotMetrics(z, np.array([power]), z, z, np.array([cost]), z)


def test_slot_objective():
    m = metrics(3.2, 1700.0)
    assert slot_objective(m, 200.0, 50.0) == pytest.approx(85640.0)
    assert slot_objective(m, 200.0, 0.0) == pytest.approx(200 * 3.2)
    assert slot_objective(m, 0.0, 7.0) == pytest.approx(7 * 1700.0)


def test_zero_weights_become_power_minimization():
    assert objective_weights(0.0, 0.0) == (0.0, 1.0)
    assert objective_weights(200.0, 0.0) == (200.0, 200.0 * POWER_TIE_WEIGHT)
    assert objective_weights(200.0, 3.0) == (200.0, 3.0)


def test_zero_traffic_slot_drains_queue(grid5):
    slot = SlotInput(np.zeros(25), np.full(16, 40.0))
    state = ControllerState(q=2000.0)
    decision, m, new = engine_step(state, grid5, PARAMS, slot, ControllerConfig(), ExhaustiveSolver())
    assert decision.num_sleeping == 7
    assert m.cost_total == 0.0
    assert new.q == pytest.approx(2000.0 - (Q - 9 * 80.0))
    assert new.t == 1
    _, _, drained = engine_step(ControllerState(q=500.0), grid5, PARAMS, slot, ControllerConfig(), ExhaustiveSolver())
    assert drained.q == 0.0


def test_huge_deficit_sleeps_seven(grid5):
    decision, _, _ = engine_step(ControllerState(q=1e7), grid5, PARAMS, busy_slot(grid5), ControllerConfig(), seed=3)
    assert decision.num_sleeping == 7


def test_empty_queue_matches_delay_only_baseline(grid5):
    slot = busy_slot(grid5)
    decision, _, _ = engine_step(ControllerState(), grid5, PARAMS, slot, ControllerConfig(), seed=11)
    pcu = pcu_step(grid5, PARAMS, slot, V=200.0, seed=11)
    assert decision.key() == tuple(pcu.activation)
    np.testing.assert_allclose(decision.local_fraction, pcu.local_fraction)


def test_power_only_step_is_minimum_power_among_all_activations():
    topo = build_grid_topology(3, 4)
    slot = busy_slot(topo, lam=6.0)
    cfg = ControllerConfig(V=0.0)
    decision, m, _ = engine_step(ControllerState(q=30.0), topo, PARAMS, slot, cfg, ExhaustiveSolver())
    problem = SlotProblem(topo, PARAMS, slot, 0.0, 30.0)
    _, obj, _, power = problem.evaluate_batch(all_activations(topo.num_stations))
    assert m.power_total == pytest.approx(power[np.isfinite(obj)].min())
    rejo, m_rejo, _ = engine_step(ControllerState(q=30.0), topo, PARAMS, slot, cfg, RejoSolver(), seed=2)
    assert m.power_total <= m_rejo.power_total + 1e-9


def test_zero_weights_pick_minimum_power():
    topo = build_grid_topology(3, 4)
    slot = busy_slot(topo, lam=6.0)
    _, m, _ = engine_step(ControllerState(), topo, PARAMS, slot, ControllerConfig(V=0.0), ExhaustiveSolver())
    problem = SlotProblem(topo, PARAMS, slot, 0.0, 1.0)
    _, obj, _, power = problem.evaluate_batch(all_activations(topo.num_stations))
    assert m.power_total == pytest.approx(power[np.isfinite(obj)].min())


def test_pinned_deficit_leaves_queue_alone(grid5):
    state = ControllerState(q=12.0, t=4)
    _, _, new = engine_step(state, grid5, PARAMS, busy_slot(grid5), ControllerConfig(), seed=0, pinned_q=1e6)
    assert new.q == 12.0 and new.t == 5


def test_step_is_deterministic(grid5):
    args = (ControllerState(q=300.0), grid5, PARAMS, busy_slot(grid5), ControllerConfig())
    d1, m1, s1 = engine_step(*args, RejoSolver(RejoConfig(tau=1.0)), seed=5)
    d2, m2, s2 = engine_step(*args, RejoSolver(RejoConfig(tau=1.0)), seed=5)
    assert d1.key() == d2.key() and s1 == s2
    np.testing.assert_array_equal(d1.local_fraction, d2.local_fraction)


def test_negative_queue_rejected():
    with pytest.raises(ValueError):
        ControllerState(q=-1.0)


def test_controller_validation_and_cap_warning():
    with pytest.raises(ValueError, match="Q"):
        ControllerConfig(Q=0.0)
    with pytest.warns(UserWarning):
        ControllerConfig(Q=5000.0).check_caps(np.full(16, 250.0))


# -- bounds ----------------------------------------------------------------------

CAPS = np.full(8, 250.0)  # sum 2000 = Q + 250


def test_delay_bound_examples():
    assert delay_bound(200.0, Q, CAPS, 2.0) == pytest.approx(158.25)
    assert delay_bound(1e12, Q, CAPS, 2.0) == pytest.approx(2.0)
    assert delay_bound(200.0, 2000.0, CAPS, 2.0) == pytest.approx(2.0)
    with pytest.raises(BoundUndefinedError):
        delay_bound(0.0, Q, CAPS, 2.0)


def test_power_bound_examples():
    assert power_bound(200.0, Q, CAPS, 2.0, Q - 100.0) == pytest.approx(2066.5)
    assert power_bound(0.0, 2000.0, CAPS, 2.0, 1900.0) == pytest.approx(2000.0)
    with pytest.raises(BoundUndefinedError):
        power_bound(200.0, Q, CAPS, 2.0, Q)


@given(st.floats(0, 1e4), st.floats(1e-3, 1e4), st.floats(0, 100))
def test_power_bound_increasing_in_v(V, dV, c_star):
    assert power_bound(V + dV, Q, CAPS, c_star, 1000.0) >= power_bound(V, Q, CAPS, c_star, 1000.0)
