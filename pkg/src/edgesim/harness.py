"""Slot-by-slot simulation loop, exogenous generators, sweeps and bound checks."""
from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import spearmanr

from . import engine
from .baselines import PolicyKind, dcu_step, pcu_step, stsc_step
from .engine import ControllerConfig, ControllerState
from .rejo import ExhaustiveSolver, RejoConfig, RejoSolver
from .system_model import Decision, SlotInput, SlotMetrics, SystemParams, evaluate_slot
from .topology import Topology


@dataclass(frozen=True)
class TrafficModel:
    """Truncated-normal per-region traffic; ``mean``/``std`` are scalars or per-region lists."""

    mean: float | tuple[float, ...] = 12.0
    std: float | tuple[float, ...] = 3.0
    rng_seed: int = 1

    def __post_init__(self):
        if np.any(np.asarray(self.mean) < 0):
            raise ValueError("traffic.mean: must be >= 0")
        if np.any(np.asarray(self.std) < 0):
            raise ValueError("traffic.std: must be >= 0")

    def sample(self, rng: np.random.Generator, num_regions: int) -> np.ndarray:
        mean = np.broadcast_to(np.asarray(self.mean, dtype=float), (num_regions,))
        std = np.broadcast_to(np.asarray(self.std, dtype=float), (num_regions,))
        return np.maximum(rng.normal(mean, std), 0.0)


@dataclass(frozen=True)
class CongestionModel:
    kind: str = "uniform"  # "uniform" | "constant"
    h_min: float = 20.0
    h_max: float = 60.0
    constant: float = 1.0
    rng_seed: int = 2

    def __post_init__(self):
        if self.kind not in ("uniform", "constant"):
            raise ValueError("congestion.kind: must be 'uniform' or 'constant'")
        if self.kind == "uniform" and not 0 <= self.h_min <= self.h_max:
            raise ValueError("congestion.h_min/h_max: need 0 <= h_min <= h_max")
        if self.constant < 0:
            raise ValueError("congestion.constant: must be >= 0")

    def sample(self, rng: np.random.Generator, num_stations: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(num_stations, self.constant)
        return rng.uniform(self.h_min, self.h_max, size=num_stations)


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    params: SystemParams = field(default_factory=SystemParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    rejo: RejoConfig = field(default_factory=RejoConfig)
    traffic: TrafficModel = field(default_factory=TrafficModel)
    congestion: CongestionModel = field(default_factory=CongestionModel)


@dataclass(frozen=True)
class TraceRow:
    t: int
    q: float | None
    decision: Decision
    metrics: SlotMetrics
    slot: SlotInput
    flagged: bool = False

    @property
    def power(self) -> float:
        return self.metrics.power_total

    @property
    def cost(self) -> float:
        return self.metrics.cost_total


@dataclass
class RunResult:
    policy: PolicyKind
    seed: int
    rows: list[TraceRow]
    final_q: float | None = None
    Q: float | None = None

    @property
    def T(self) -> int:
        return len(self.rows)

    @property
    def mean_cost(self) -> float:
        return float(np.mean([r.cost for r in self.rows]))

    @property
    def mean_power(self) -> float:
        return float(np.mean([r.power for r in self.rows]))

    @property
    def mean_sleeping(self) -> float:
        return float(np.mean([r.decision.num_sleeping for r in self.rows]))

    @property
    def mean_local_fraction(self) -> float:
        """Average over slots of the mean local fraction across active stations."""
        per_slot = [float(np.mean(r.decision.local_fraction[r.decision.activation == 1])) for r in self.rows]
        return float(np.mean(per_slot))

    def sleep_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(r.decision.num_sleeping for r in self.rows).items()))

    @property
    def flagged_slots(self) -> int:
        return sum(r.flagged for r in self.rows)

    def telescoping_holds(self, rtol: float = 1e-9) -> bool:
        """``q(T+1)/T >= mean(P) - Q`` up to floating-point rounding."""
        if self.final_q is None:
            return True
        lhs = self.final_q / self.T
        rhs = self.mean_power - self.Q
        return lhs >= rhs - rtol * max(abs(self.mean_power), abs(self.Q), 1.0)

    def summary(self) -> dict:
        return {
            "policy": self.policy.value,
            "seed": self.seed,
            "slots": self.T,
            "mean_cost": self.mean_cost,
            "mean_power": self.mean_power,
            "mean_sleeping": self.mean_sleeping,
            "mean_local_fraction": self.mean_local_fraction,
            "sleep_histogram": {str(k): v for k, v in self.sleep_histogram().items()},
            "flagged_slots": self.flagged_slots,
            "final_q": self.final_q,
        }


def _streams(scenario: Scenario, seed: int):
    return (
        np.random.default_rng([scenario.traffic.rng_seed, seed]),
        np.random.default_rng([scenario.congestion.rng_seed, seed]),
        np.random.default_rng([scenario.rejo.rng_seed, seed]),
    )


def generate_inputs(scenario: Scenario, seed: int, T: int) -> list[SlotInput]:
    traffic_rng, congestion_rng, _ = _streams(scenario, seed)
    topo = scenario.topology
    return [
        SlotInput(
            scenario.traffic.sample(traffic_rng, topo.num_regions),
            scenario.congestion.sample(congestion_rng, topo.num_stations),
        )
        for _ in range(T)
    ]


def run_simulation(
    scenario: Scenario,
    policy: PolicyKind | str = PolicyKind.ENGINE,
    seed: int = 0,
    T: int | None = None,
    pinned_q: float | None = None,
    inputs: list[SlotInput] | None = None,
) -> RunResult:
    """Simulate ``T`` slots under ``policy``; deterministic in ``seed``.

    The previous slot's activation warm-starts each slot's search. With
    ``pinned_q`` the controller decides every slot at that deficit and the
    queue is not advanced.
    """
    policy = PolicyKind.parse(policy) if isinstance(policy, str) else policy
    T = T or scenario.controller.horizon
    inputs = inputs if inputs is not None else generate_inputs(scenario, seed, T)
    _, _, solver_rng = _streams(scenario, seed)
    slot_seeds = solver_rng.integers(2**63 - 1, size=T)
    topo, params, ctrl = scenario.topology, scenario.params, scenario.controller
    solver = ExhaustiveSolver() if policy is PolicyKind.ORACLE else RejoSolver(scenario.rejo)
    uses_queue = policy in (PolicyKind.ENGINE, PolicyKind.ORACLE)

    state = ControllerState()
    warm = Decision.all_active(topo.num_stations)
    rows = []
    for t, (slot, s) in enumerate(zip(inputs, slot_seeds), start=1):
        flagged = False
        if uses_queue:
            q_now = state.q if pinned_q is None else pinned_q
            decision, metrics, state = engine.engine_step(
                state, topo, params, slot, ctrl, solver, warm, seed=int(s), pinned_q=pinned_q
            )
        else:
            q_now = None
            if policy is PolicyKind.PCU:
                ev = pcu_step(topo, params, slot, ctrl.V, solver, warm, int(s))
            elif policy is PolicyKind.DCU:
                ev = dcu_step(topo, params, slot, solver, warm, int(s))
            else:
                ev, flagged = stsc_step(topo, params, slot, ctrl.Q, ctrl.V, solver, warm, int(s))
            decision = ev.decision()
            metrics = evaluate_slot(topo, params, decision, slot)
        rows.append(TraceRow(t, q_now, decision, metrics, slot, flagged))
        warm = decision
    final_q = state.q if uses_queue and pinned_q is None else None
    return RunResult(policy, seed, rows, final_q, ctrl.Q if final_q is not None else None)


# -- batches and sweeps -------------------------------------------------------


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("EDGESIM_THREADS", "1")))
    except ValueError:
        return 1


def _run_task(args) -> RunResult:
    scenario, policy, seed, pinned_q = args
    return run_simulation(scenario, policy, seed, pinned_q=pinned_q)


def run_batch(scenario: Scenario, policy, seeds, pinned_q: float | None = None, workers: int | None = None):
    """Run one simulation per seed; results are ordered like ``seeds``."""
    tasks = [(scenario, policy, int(s), pinned_q) for s in seeds]
    workers = workers or max_workers()
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


SWEEP_PARAMETERS = ("Q", "V", "tau", "traffic_mean", "pinned_q")


def with_parameter(scenario: Scenario, name: str, value: float) -> Scenario:
    if name == "Q":
        return replace(scenario, controller=replace(scenario.controller, Q=float(value)))
    if name == "V":
        return replace(scenario, controller=replace(scenario.controller, V=float(value)))
    if name == "tau":
        return replace(scenario, rejo=replace(scenario.rejo, tau=float(value)))
    if name == "traffic_mean":
        return replace(scenario, traffic=replace(scenario.traffic, mean=float(value)))
    if name == "pinned_q":
        return scenario
    raise ValueError(f"unknown sweep parameter {name!r}; choose from {SWEEP_PARAMETERS}")


@dataclass
class SweepPoint:
    value: float
    mean_cost: float
    mean_power: float
    mean_sleeping: float
    mean_local_fraction: float
    cost_stderr: float
    seeds: int


@dataclass
class SweepResult:
    parameter: str
    policy: str
    points: list[SweepPoint]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    def spearman(self, name: str) -> float:
        """Rank correlation between the swept value and a seed-averaged column."""
        x, y = self.column("value"), self.column(name)
        if np.ptp(y) == 0:
            return 0.0
        return float(spearmanr(x, y).statistic)

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "policy": self.policy,
            "points": [vars(p) for p in self.points],
            "spearman": {
                k: self.spearman(k) for k in ("mean_cost", "mean_power", "mean_sleeping", "mean_local_fraction")
            },
        }


def sweep(
    parameter: str,
    values,
    scenario: Scenario,
    policy: PolicyKind | str = PolicyKind.ENGINE,
    seeds=(0,),
    T: int | None = None,
    workers: int | None = None,
) -> SweepResult:
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")
    policy = PolicyKind.parse(policy) if isinstance(policy, str) else policy
    seeds = [int(s) for s in seeds]
    if T is not None:
        scenario = replace(scenario, controller=replace(scenario.controller, horizon=T))
    tasks = []
    for v in values:
        sc = with_parameter(scenario, parameter, v)
        pinned = float(v) if parameter == "pinned_q" else None
        tasks.extend((sc, policy, s, pinned) for s in seeds)
    workers = workers or max_workers()
    if workers <= 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    points = []
    for i, v in enumerate(values):
        batch = results[i * len(seeds):(i + 1) * len(seeds)]
        costs = np.array([r.mean_cost for r in batch])
        points.append(
            SweepPoint(
                value=float(v),
                mean_cost=float(costs.mean()),
                mean_power=float(np.mean([r.mean_power for r in batch])),
                mean_sleeping=float(np.mean([r.mean_sleeping for r in batch])),
                mean_local_fraction=float(np.mean([r.mean_local_fraction for r in batch])),
                cost_stderr=float(costs.std(ddof=1) / np.sqrt(len(costs))) if len(costs) > 1 else 0.0,
                seeds=len(batch),
            )
        )
    return SweepResult(parameter, policy.value, points)


# -- long-run guarantees --------------------------------------------------------


def verify_bounds(
    engine_runs: list[RunResult],
    pcu_runs: list[RunResult],
    dcu_runs: list[RunResult],
    controller: ControllerConfig,
    power_caps,
) -> dict:
    """Compare ENGINE's long-run averages with the drift-plus-penalty guarantees.

    The optimal delay ``c*`` is estimated by PCU's average cost and the minimum
    achievable power ``P*`` by DCU's average power.
    """
    c_bar = float(np.mean([r.mean_cost for r in engine_runs]))
    p_bar = float(np.mean([r.mean_power for r in engine_runs]))
    c_star = float(np.mean([r.mean_cost for r in pcu_runs]))
    p_star = float(np.mean([r.mean_power for r in dcu_runs]))
    V, Q = controller.V, controller.Q
    report = {
        "slots": engine_runs[0].T if engine_runs else 0,
        "seeds": len(engine_runs),
        "V": V,
        "Q": Q,
        "sum_power_caps": float(np.sum(power_caps)),
        "c_star_estimate": c_star,
        "p_star_estimate": p_star,
        "mean_cost": c_bar,
        "mean_power": p_bar,
        "telescoping_ok": all(r.telescoping_holds() for r in engine_runs),
    }
    try:
        bound = engine.delay_bound(V, Q, power_caps, c_star)
        report.update(delay_bound=bound, delay_margin=bound - c_bar, delay_ok=c_bar <= bound)
    except engine.BoundUndefinedError as exc:
        report.update(delay_bound=None, delay_margin=None, delay_ok=None, delay_note=str(exc))
    try:
        bound = engine.power_bound(V, Q, power_caps, c_star, p_star)
        report.update(power_bound=bound, power_margin=bound - p_bar, power_ok=p_bar <= bound)
    except engine.BoundUndefinedError as exc:
        report.update(power_bound=None, power_margin=None, power_ok=None, power_note="bound inapplicable: " + str(exc))
    return report


# -- search convergence vs temperature -------------------------------------------


def iterations_to_settle(objectives, rtol: float = 0.01, settle_fraction: float = 0.9) -> int:
    """First iteration after which the trace stays within ``rtol`` of its final value.

    Returns ``len(objectives)`` (not converged) when that point falls in the last
    ``1 - settle_fraction`` of the budget.
    """
    cur = np.asarray(objectives, dtype=float)
    final = cur[-1]
    outside = np.flatnonzero(np.abs(cur - final) > rtol * abs(final))
    first = 0 if len(outside) == 0 else int(outside[-1]) + 1
    return first if first <= settle_fraction * len(cur) else len(cur)


def rejo_convergence(
    scenario: Scenario,
    taus,
    seeds=range(30),
    V: float = 3.0,
    q: float = 3.0,
    iterations: int = 2000,
    slot_seed: int = 0,
) -> list[dict]:
    """Objective-vs-iteration behaviour of the search on one slot for several temperatures.

    Each run starts from all stations active and uses a fixed iteration budget
    (no stall stop).
    """
    from .rejo import SlotProblem, gibbs_search

    slot = generate_inputs(scenario, slot_seed, 1)[0]
    problem = SlotProblem(scenario.topology, scenario.params, slot, V, q)
    warm = np.ones(scenario.topology.num_stations, dtype=np.int8)
    out = []
    for tau in taus:
        settle, finals, curves = [], [], []
        for s in seeds:
            cfg = RejoConfig(tau=float(tau), max_iterations=iterations, stall_window=iterations + 1, rng_seed=int(s))
            best, trace = gibbs_search(problem, warm, cfg)
            settle.append(iterations_to_settle(trace.current_objectives))
            finals.append(best.objective)
            curves.append(trace.current_objectives)
        out.append(
            {
                "tau": float(tau),
                "mean_iterations_to_settle": float(np.mean(settle)),
                "converged_fraction": float(np.mean(np.array(settle) < iterations)),
                "mean_best_objective": float(np.mean(finals)),
                "mean_curve": np.mean(curves, axis=0).tolist(),
            }
        )
    return out
