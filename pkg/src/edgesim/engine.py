"""Online drift-plus-penalty controller with a virtual power-deficit queue."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .rejo import InfeasibleInstanceError, RejoSolver, SlotProblem
from .system_model import Decision, SlotInput, SlotMetrics, SystemParams
from .topology import Topology


class BoundUndefinedError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    V: float = 200.0
    Q: float = 1750.0
    horizon: int = 200

    def __post_init__(self):
        if not self.V >= 0:
            raise ValueError("V: must be >= 0")
        if not self.Q > 0:
            raise ValueError("Q: must be > 0")
        if self.horizon < 1:
            raise ValueError("horizon: must be >= 1")

    def check_caps(self, power_caps) -> None:
        if self.Q >= float(np.sum(power_caps)):
            warnings.warn("Q >= sum of per-station caps; the delay bound degenerates", stacklevel=2)


@dataclass(frozen=True)
class ControllerState:
    q: float = 0.0
    t: int = 0

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("deficit queue cannot be negative")


def queue_update(q: float, slot_power: float, Q: float) -> float:
    return max(q + slot_power - Q, 0.0)


def slot_objective(metrics: SlotMetrics, V: float, q: float) -> float:
    return V * metrics.cost_total + q * metrics.power_total


POWER_TIE_WEIGHT = 1e-9


def objective_weights(V: float, q: float) -> tuple[float, float]:
    """Weights actually handed to the slot solver.

    A zero objective (V = q = 0) is replaced by pure power minimization. With
    q = 0 a negligible power weight breaks ties between equal-delay decisions
    (e.g. every cover of a zero-traffic slot) in favour of lower power.
    """
    if V == 0 and q == 0:
        return 0.0, 1.0
    if q == 0:
        return V, POWER_TIE_WEIGHT * V
    return V, q


def engine_step(
    state: ControllerState,
    topology: Topology,
    params: SystemParams,
    slot: SlotInput,
    config: ControllerConfig,
    solver=None,
    warm_start: Decision | None = None,
    seed: int | None = None,
    pinned_q: float | None = None,
) -> tuple[Decision, SlotMetrics, ControllerState]:
    """One slot: minimize ``V*c + q*P`` and advance the deficit queue.

    ``pinned_q`` overrides the queue for the decision and leaves it unchanged
    afterwards (diagnostic mode).
    """
    solver = solver or RejoSolver()
    q = state.q if pinned_q is None else pinned_q
    V, w = objective_weights(config.V, q)
    problem = SlotProblem(topology, params, slot, V, w)
    best = solver.solve(problem, warm_start, seed=seed)
    if not best.feasible:
        raise InfeasibleInstanceError("solver returned no feasible decision")
    decision = best.decision()
    metrics = problem.metrics(decision)
    if pinned_q is None:
        new_q = queue_update(state.q, metrics.power_total, config.Q)
    else:
        new_q = state.q
    return decision, metrics, ControllerState(new_q, state.t + 1)


def delay_bound(V: float, Q: float, power_caps, c_star: float) -> float:
    """Long-run average delay guarantee ``c* + (sum caps - Q)^2 / (2V)``."""
    if not V > 0:
        raise BoundUndefinedError("delay bound needs V > 0")
    gap = float(np.sum(power_caps)) - Q
    return c_star + gap * gap / (2.0 * V)


def power_bound(V: float, Q: float, power_caps, c_star: float, p_star: float) -> float:
    """Long-run average power guarantee ``((sum caps - Q)^2 + 2V c*) / (2 (Q - P*)) + Q``."""
    if not Q > p_star:
        raise BoundUndefinedError(f"power bound needs Q > P* (Q={Q}, P*={p_star})")
    gap = float(np.sum(power_caps)) - Q
    return (gap * gap + 2.0 * V * c_star) / (2.0 * (Q - p_star)) + Q
