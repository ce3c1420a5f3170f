"""Comparison policies sharing the per-slot solver with the online controller."""
from __future__ import annotations

import enum

from .engine import objective_weights
from .rejo import Evaluation, InfeasibleInstanceError, RejoSolver, SlotProblem
from .system_model import SlotInput, SystemParams
from .topology import Topology


class PolicyKind(str, enum.Enum):
    ENGINE = "ENGINE"
    STSC = "STSC"
    PCU = "PCU"
    DCU = "DCU"
    ORACLE = "ORACLE"

    @classmethod
    def parse(cls, name: str) -> PolicyKind:
        try:
            return cls(name.upper())
        except ValueError:
            raise ValueError(f"policy: unknown policy {name!r}; choose from {[p.value for p in cls]}") from None


def _delay_weight(V: float) -> float:
    return V if V > 0 else 1.0


def pcu_step(
    topology: Topology,
    params: SystemParams,
    slot: SlotInput,
    V: float = 1.0,
    solver=None,
    warm_start=None,
    seed: int | None = None,
) -> Evaluation:
    """Delay-only policy: minimize c subject to the per-slot constraints."""
    solver = solver or RejoSolver()
    V, q = objective_weights(_delay_weight(V), 0.0)
    return solver.solve(SlotProblem(topology, params, slot, V, q), warm_start, seed=seed)


def dcu_step(
    topology: Topology,
    params: SystemParams,
    slot: SlotInput,
    solver=None,
    warm_start=None,
    seed: int | None = None,
) -> Evaluation:
    """Power-only policy: minimize P subject to the per-slot constraints."""
    solver = solver or RejoSolver()
    return solver.solve(SlotProblem(topology, params, slot, 0.0, 1.0), warm_start, seed=seed)


def stsc_step(
    topology: Topology,
    params: SystemParams,
    slot: SlotInput,
    Q: float,
    V: float = 1.0,
    solver=None,
    warm_start=None,
    seed: int | None = None,
) -> tuple[Evaluation, bool]:
    """Minimize c with the budget Q enforced in every slot.

    Returns ``(evaluation, flagged)``; when no activation meets the budget the
    minimum-power decision is returned with ``flagged = True``.
    """
    solver = solver or RejoSolver()
    V, q = objective_weights(_delay_weight(V), 0.0)
    problem = SlotProblem(topology, params, slot, V, q, power_budget=Q)
    try:
        best = solver.solve(problem, warm_start, seed=seed)
    except InfeasibleInstanceError:
        best = None
    if best is None or not best.feasible:
        return dcu_step(topology, params, slot, solver, warm_start, seed), True
    return best, False

