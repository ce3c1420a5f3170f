"""Randomized joint activation / offloading search for one slot.

The search walks over activation vectors by flipping one station at a time.
For each visited activation the local fractions are set by the per-station
inner problem, which separates across stations once the activation (and hence
every station's arrivals) is fixed. A flip is accepted with the logistic
(Glauber) probability, so the walk has the Gibbs distribution
``exp(-o(a) / tau)`` over feasible activations as its stationary law.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit, logsumexp

from .system_model import (
    ComputeParams,
    Decision,
    SlotInput,
    SlotMetrics,
    SystemParams,
    evaluate_slot,
    tx_weights,
)
from .topology import Topology, UnsupportedSizeError, coverage_feasible

MAX_ORACLE_STATIONS = 16
_ORACLE_CHUNK = 4096
_TIE_RTOL = 1e-12


class InfeasibleInstanceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RejoConfig:
    tau: float = 1.0
    max_iterations: int | None = None  # default 50 * N
    stall_window: int | None = None  # default 10 * N
    rng_seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau: must be > 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations: must be >= 1")
        if self.stall_window is not None and self.stall_window < 1:
            raise ValueError("stall_window: must be >= 1")

    def resolved(self, num_stations: int) -> tuple[int, int]:
        max_it = self.max_iterations if self.max_iterations is not None else 50 * num_stations
        stall = self.stall_window if self.stall_window is not None else 10 * num_stations
        return max_it, stall


# -- inner offloading problem -------------------------------------------------


def _interior_load(V, q, h, chi, kappa):
    """Stationary point of the convex per-station cost in the local load x."""
    V, q, h, chi = (np.asarray(v, dtype=float) for v in (V, q, h, chi))
    slope = V * h - q * kappa
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = chi - np.sqrt(V * chi / slope)
    return np.where(slope > 0, x, 0.0)


def inner_offload_solve(V, q, h, chi, mu, compute: ComputeParams, b_max):
    """Local fraction minimizing ``V*(c_lo + c_rem) + q*P_com`` over ``[0, b_max]``.

    Vectorized over its array arguments. Returns 0 wherever ``mu == 0``.
    """
    mu = np.asarray(mu, dtype=float)
    b_max = np.clip(np.asarray(b_max, dtype=float), 0.0, 1.0)
    rho = compute.compute_fraction
    if compute.linear:
        x = _interior_load(V, q, h, chi, compute.compute_power_coefficient)
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(mu > 0, x / (rho * mu), 0.0)
        out = np.where(mu > 0, np.clip(b, 0.0, b_max), 0.0)
    else:
        shape = np.broadcast(V, q, h, chi, mu, b_max).shape
        args = [np.broadcast_to(np.asarray(v, dtype=float), shape).ravel() for v in (V, q, h, chi, mu, b_max)]
        out = np.array([_numeric_inner(*vals, compute) for vals in zip(*args)]).reshape(shape)
    return float(out) if out.ndim == 0 else out


def _numeric_inner(V, q, h, chi, mu, b_max, compute: ComputeParams) -> float:
    if mu <= 0 or b_max <= 0:
        return 0.0
    rho = compute.compute_fraction

    def f(b):
        x = rho * b * mu
        return V * (x / (chi - x) + rho * (1 - b) * mu * h) + q * float(compute.power(x))

    grid = np.linspace(0.0, b_max, 401)
    vals = np.array([f(b) for b in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if res.fun <= vals[i]:
            return float(res.x)
    return float(grid[i])


def offload_limit(chi, mu, headroom, compute: ComputeParams):
    """Upper bound on the local fraction from the utilization and power caps.

    ``headroom`` is ``P_cap - P_op - P_tx``. Returns ``-inf`` where the station is
    over its power cap even with nothing processed locally.
    """
    chi, mu, headroom = (np.asarray(v, dtype=float) for v in (chi, mu, headroom))
    rho = compute.compute_fraction
    per_b = rho * mu if compute.utilization_includes_rho else mu
    with np.errstate(divide="ignore", invalid="ignore"):
        util = np.where(per_b > 0, compute.utilization_cap * chi / per_b, np.inf)
        power = np.where(mu > 0, compute.max_load_for_power(headroom) / (rho * mu), np.inf)
    bmax = np.minimum(1.0, np.minimum(util, power))
    bmax = np.where(mu > 0, bmax, 0.0)
    return np.where(headroom < -1e-9, -np.inf, bmax)


def acceptance_probability(candidate, incumbent, tau: float):
    """Logistic acceptance ``1 / (1 + exp((candidate - incumbent) / tau))``."""
    with np.errstate(invalid="ignore"):
        out = expit(-(np.asarray(candidate, dtype=float) - np.asarray(incumbent, dtype=float)) / tau)
    return float(out) if np.ndim(out) == 0 else out


def gibbs_stationary_distribution(objectives, tau: float) -> np.ndarray:
    o = np.asarray(objectives, dtype=float)
    if o.size == 0:
        raise ValueError("need at least one state")
    if not tau > 0:
        raise ValueError("tau must be > 0")
    logits = -o / tau
    return np.exp(logits - logsumexp(logits))


# -- slot problem -------------------------------------------------------------


@dataclass
class Evaluation:
    activation: np.ndarray
    local_fraction: np.ndarray
    objective: float
    cost: float
    power: float

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.objective)

    def decision(self) -> Decision:
        return Decision(self.activation, self.local_fraction)


@dataclass
class SlotProblem:
    """One slot's activation problem: minimize ``V*c + q*P`` over feasible activations.

    With ``power_budget`` set, the network power is additionally capped at that
    value; for each activation the local fractions then come from the
    Lagrangian of the cap (bisection on its multiplier).
    """

    topology: Topology
    params: SystemParams
    slot: SlotInput
    V: float
    q: float
    power_budget: float | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.slot.check_shape(self.topology)
        self._cover = self.topology.cover_matrix.astype(float)
        self._txw = tx_weights(self.topology, self.params.radio)
        self._chi = self.topology.service_rates
        self._pcap = self.topology.power_caps

    @property
    def num_stations(self) -> int:
        return self.topology.num_stations

    def _fixed(self, A):
        counts = A @ self._cover
        covered = np.all(counts > 0, axis=1)
        share = self.slot.traffic / np.where(counts > 0, counts, 1.0)
        mu = A * (share @ self._cover.T)
        p_fixed = A * (self.params.radio.operational_power + share @ self._txw.T)
        bmax = offload_limit(self._chi, mu, self._pcap - p_fixed, self.params.compute)
        ok = covered & np.all((A == 0) | (bmax >= 0), axis=1)
        return mu, p_fixed, np.where(A > 0, bmax, 0.0), ok

    def _totals(self, A, mu, p_fixed, b):
        compute = self.params.compute
        rho = compute.compute_fraction
        load = rho * b * mu
        with np.errstate(divide="ignore", invalid="ignore"):
            c_lo = np.where(load > 0, load / (self._chi - load), 0.0)
        c_rem = rho * (1.0 - b) * mu * self.slot.congestion
        power = np.sum(p_fixed + A * compute.power(load), axis=1)
        cost = np.sum(A * (c_lo + c_rem), axis=1)
        return cost, power

    def _solve_b(self, A, mu, bmax, q):
        b = inner_offload_solve(self.V, q, self.slot.congestion, self._chi, mu, self.params.compute, bmax)
        return A * b

    def evaluate_batch(self, A) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(B, objective, cost, power)`` for each row of ``A``; infeasible rows get inf."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        mu, p_fixed, bmax, ok = self._fixed(A)
        if self.power_budget is None:
            B = self._solve_b(A, mu, bmax, self.q)
            cost, power = self._totals(A, mu, p_fixed, B)
            obj = self.V * cost + self.q * power
        else:
            B, cost, power, ok = self._budgeted(A, mu, p_fixed, bmax, ok)
            obj = self.V * cost + self.q * power
        obj = np.where(ok, obj, np.inf)
        return B, obj, cost, power

    def _budgeted(self, A, mu, p_fixed, bmax, ok):
        budget = self.power_budget
        zero = np.zeros_like(A)
        _, p_min = self._totals(A, mu, p_fixed, zero)
        ok = ok & (p_min <= budget * (1 + 1e-12))
        lo = np.full(len(A), self.q)
        B = self._solve_b(A, mu, bmax, lo[:, None])
        cost, power = self._totals(A, mu, p_fixed, B)
        need = ok & (power > budget)
        if not np.any(need):
            return B, cost, power, ok
        hi = np.where(need, np.maximum(2.0 * self.q, 1.0), lo)
        for _ in range(200):
            B_hi = self._solve_b(A, mu, bmax, hi[:, None])
            _, p_hi = self._totals(A, mu, p_fixed, B_hi)
            grow = need & (p_hi > budget)
            if not np.any(grow):
                break
            hi = np.where(grow, hi * 4.0, hi)
        for _ in range(60):
            mid = np.where(need, 0.5 * (lo + hi), lo)
            B_mid = self._solve_b(A, mu, bmax, mid[:, None])
            _, p_mid = self._totals(A, mu, p_fixed, B_mid)
            over = p_mid > budget
            lo = np.where(need & over, mid, lo)
            hi = np.where(need & ~over, mid, hi)
        B = np.where(need[:, None], self._solve_b(A, mu, bmax, hi[:, None]), B)
        cost, power = self._totals(A, mu, p_fixed, B)
        return B, cost, power, ok

    def evaluate(self, activation) -> Evaluation:
        a = np.asarray(activation, dtype=np.int8)
        key = a.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            B, obj, cost, power = self.evaluate_batch(a[None, :])
            hit = Evaluation(a.copy(), B[0], float(obj[0]), float(cost[0]), float(power[0]))
            self._cache[key] = hit
        return hit

    def metrics(self, decision: Decision) -> SlotMetrics:
        return evaluate_slot(self.topology, self.params, decision, self.slot)


# -- search -------------------------------------------------------------------


@dataclass
class RejoTrace:
    stations: np.ndarray
    proposed_modes: np.ndarray
    objectives: np.ndarray  # candidate objective; nan when the candidate was infeasible
    probabilities: np.ndarray
    accepted: np.ndarray
    current_objectives: np.ndarray  # incumbent objective after each iteration
    messages: int
    best_objective: float

    @property
    def iterations(self) -> int:
        return len(self.stations)

    def rows(self):
        for i in range(self.iterations):
            yield (
                i + 1,
                int(self.stations[i]),
                int(self.proposed_modes[i]),
                float(self.objectives[i]),
                float(self.probabilities[i]),
                bool(self.accepted[i]),
            )


def gibbs_search(
    problem: SlotProblem, warm_start, config: RejoConfig, record_states: bool = False
) -> tuple[Evaluation, RejoTrace] | tuple[Evaluation, RejoTrace, np.ndarray]:
    """Run the single-flip logistic-acceptance walk and return the best state visited."""
    topology = problem.topology
    N = topology.num_stations
    a = np.array(warm_start.activation if isinstance(warm_start, Decision) else warm_start, dtype=np.int8)
    if a.shape != (N,) or not coverage_feasible(topology, a):
        raise ValueError("warm start must be a coverage-feasible activation vector")
    max_it, stall = config.resolved(N)
    rng = np.random.default_rng(config.rng_seed)
    picks = rng.integers(N, size=max_it)
    draws = rng.random(max_it)

    current = problem.evaluate(a)
    best = current if current.feasible else None
    stations, modes, objs, probs, acc, cur_objs = [], [], [], [], [], []
    visits = [] if record_states else None
    messages = 0
    since_best = 0
    for it in range(max_it):
        n = int(picks[it])
        cand = a.copy()
        cand[n] ^= 1
        accepted = False
        if coverage_feasible(topology, cand):
            ev = problem.evaluate(cand)
        else:
            ev = None
        if ev is not None and ev.feasible:
            k = acceptance_probability(ev.objective, current.objective, config.tau)
            objs.append(ev.objective)
            if draws[it] < k:
                accepted = True
                a = cand
                current = ev
                messages += 1
        else:
            k = 0.0
            objs.append(np.nan)
        stations.append(n)
        modes.append(int(cand[n]))
        probs.append(k)
        acc.append(accepted)
        cur_objs.append(current.objective)
        if record_states:
            visits.append(a.copy())
        if accepted and (best is None or current.objective < best.objective):
            best = current
            since_best = 0
        else:
            since_best += 1
            if since_best >= stall and best is not None:
                break
    if best is None:
        raise InfeasibleInstanceError("no feasible activation was visited")
    trace = RejoTrace(
        stations=np.array(stations, dtype=int),
        proposed_modes=np.array(modes, dtype=int),
        objectives=np.array(objs, dtype=float),
        probabilities=np.array(probs, dtype=float),
        accepted=np.array(acc, dtype=bool),
        current_objectives=np.array(cur_objs, dtype=float),
        messages=messages,
        best_objective=best.objective,
    )
    if record_states:
        return best, trace, np.array(visits, dtype=np.int8).reshape(-1, N)
    return best, trace


def rejo_solve(
    topology: Topology,
    params: SystemParams,
    slot: SlotInput,
    V: float,
    q: float,
    warm_start,
    config: RejoConfig,
    power_budget: float | None = None,
) -> tuple[Decision, RejoTrace]:
    problem = SlotProblem(topology, params, slot, V, q, power_budget)
    best, trace = gibbs_search(problem, warm_start, config)
    return best.decision(), trace


def all_activations(num_stations: int) -> np.ndarray:
    """Every 0/1 vector of length N in lexicographic order."""
    return np.array(list(product((0, 1), repeat=num_stations)), dtype=np.int8)


def exhaustive_search(problem: SlotProblem) -> Evaluation:
    N = problem.num_stations
    if N > MAX_ORACLE_STATIONS:
        raise UnsupportedSizeError(f"exhaustive search supports N <= {MAX_ORACLE_STATIONS}, got {N}")
    states = all_activations(N)
    objs = np.empty(len(states))
    for start in range(0, len(states), _ORACLE_CHUNK):
        _, o, _, _ = problem.evaluate_batch(states[start:start + _ORACLE_CHUNK])
        objs[start:start + _ORACLE_CHUNK] = o
    best = float(np.min(objs))
    if not np.isfinite(best):
        raise InfeasibleInstanceError("no feasible activation exists for this slot")
    idx = int(np.flatnonzero(objs <= best + _TIE_RTOL * max(abs(best), 1.0))[0])
    return problem.evaluate(states[idx])


def exhaustive_oracle(
    topology: Topology,
    params: SystemParams,
    slot: SlotInput,
    V: float,
    q: float,
    power_budget: float | None = None,
) -> Decision:
    """Global minimizer of ``V*c + q*P`` by enumeration; ties go to the lexicographically smallest activation."""
    return exhaustive_search(SlotProblem(topology, params, slot, V, q, power_budget)).decision()


# -- solver interface ----------------------------------------------------------


class RejoSolver:
    """Per-slot solver backed by the randomized search."""

    name = "rejo"

    def __init__(self, config: RejoConfig | None = None):
        self.config = config or RejoConfig()

    def solve(self, problem: SlotProblem, warm_start, seed: int | None = None) -> Evaluation:
        cfg = self.config
        if seed is not None:
            cfg = RejoConfig(cfg.tau, cfg.max_iterations, cfg.stall_window, seed)
        if warm_start is None or not coverage_feasible(problem.topology, _activation(warm_start)):
            warm_start = np.ones(problem.num_stations, dtype=np.int8)
        best, _ = gibbs_search(problem, warm_start, cfg)
        return best


class ExhaustiveSolver:
    name = "exhaustive"

    def solve(self, problem: SlotProblem, warm_start=None, seed: int | None = None) -> Evaluation:
        return exhaustive_search(problem)


def _activation(x):
    return x.activation if isinstance(x, Decision) else np.asarray(x)


# -- stationarity check ----------------------------------------------------------


def shared_region_instance(num_stations: int = 2):
    """One region covered by ``num_stations`` stations at increasing distances.

    Every non-empty activation is feasible and objective gaps between states
    are O(0.1 - 1), so the Gibbs law is far from uniform yet not degenerate for
    temperatures around 0.1 - 1.
    """
    from .system_model import ComputeParams, RadioParams
    from .topology import BaseStation, Region, from_positions

    if not 1 <= num_stations <= 12:
        raise ValueError("shared-region instance supports 1..12 stations")
    region = Region(0, (0.0, 0.0))
    stations = [
        BaseStation(n, (0.4 + 0.15 * n, 0.0), coverage_radius=5.0, max_service_rate=4.0, power_cap=100.0)
        for n in range(num_stations)
    ]
    topo = from_positions([region], stations)
    params = SystemParams(
        RadioParams(bandwidth=1.0, target_rate=1.0, operational_power=0.25),
        ComputeParams(compute_fraction=0.5, utilization_cap=0.9, compute_power_coefficient=0.5),
    )
    slot = SlotInput(np.array([2.0]), np.full(num_stations, 1.0))
    return topo, params, slot


def gibbs_check(
    num_stations: int = 2,
    tau: float = 0.1,
    iterations: int = 100_000,
    seed: int = 0,
    V: float = 1.0,
    q: float = 1.0,
    burn_in: int | None = None,
) -> dict:
    """Compare visit frequencies of a long fixed-temperature walk with the Gibbs law.

    Returns a report with both distributions over the feasible states and their
    total-variation distance.
    """
    topo, params, slot = shared_region_instance(num_stations)
    problem = SlotProblem(topo, params, slot, V, q)
    states = all_activations(num_stations)
    _, objs, _, _ = problem.evaluate_batch(states)
    feasible = np.isfinite(objs)
    states, objs = states[feasible], objs[feasible]
    target = gibbs_stationary_distribution(objs, tau)

    config = RejoConfig(tau=tau, max_iterations=iterations, stall_window=iterations + 1, rng_seed=seed)
    _, trace, visits = gibbs_search(problem, np.ones(num_stations, dtype=np.int8), config, record_states=True)
    burn_in = iterations // 100 if burn_in is None else burn_in
    visits = visits[burn_in:]
    weights = 1 << np.arange(num_stations - 1, -1, -1)
    codes = visits.astype(np.int64) @ weights
    counts = np.bincount(codes, minlength=1 << num_stations)
    empirical = counts[states.astype(np.int64) @ weights] / len(visits)
    tv = 0.5 * float(np.abs(empirical - target).sum())
    return {
        "stations": num_stations,
        "tau": tau,
        "iterations": iterations,
        "burn_in": burn_in,
        "states": ["".join(map(str, s)) for s in states],
        "objectives": objs.tolist(),
        "stationary": target.tolist(),
        "empirical": empirical.tolist(),
        "total_variation": tv,
        "messages": trace.messages,
    }
