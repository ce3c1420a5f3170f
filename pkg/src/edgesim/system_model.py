"""Per-slot traffic dispatch, power and delay model.

Every function accepts either a single activation vector of shape ``(N,)`` or a
batch of shape ``(K, N)``; the batch form is what the exhaustive oracle uses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import Topology, uncovered_regions

FEASIBILITY_RTOL = 1e-9


class CoverageError(ValueError):
    def __init__(self, regions):
        self.regions = list(regions)
        super().__init__(f"regions not covered by any active station: {self.regions}")


class OverloadError(ValueError):
    pass


@dataclass(frozen=True)
class RadioParams:
    bandwidth: float = 1.0e6
    pathloss_constant: float = 1.0
    pathloss_exponent: float = 4.0
    noise_power: float = 1.0
    target_rate: float = 2.0e6
    operational_power: float = 80.0
    min_distance: float = 0.01

    def __post_init__(self):
        _check(self.bandwidth > 0, "bandwidth", "must be > 0")
        _check(self.pathloss_constant > 0, "pathloss_constant", "must be > 0")
        _check(self.pathloss_exponent >= 2, "pathloss_exponent", "must be >= 2")
        _check(self.noise_power > 0, "noise_power", "must be > 0")
        _check(self.target_rate > 0, "target_rate", "must be > 0")
        _check(self.operational_power >= 0, "operational_power", "must be >= 0")
        _check(self.min_distance > 0, "min_distance", "must be > 0")

    @property
    def rate_factor(self) -> float:
        """``(2^(r0/W) - 1) * noise / beta``: power per unit traffic at unit distance."""
        return (2.0 ** (self.target_rate / self.bandwidth) - 1.0) * self.noise_power / self.pathloss_constant


@dataclass(frozen=True)
class ComputeParams:
    """Edge-server parameters.

    ``power_table`` optionally replaces the linear compute-power curve with a
    piecewise-linear one given as ``(loads, powers)``, both strictly increasing
    and starting at load 0.
    """

    compute_fraction: float = 0.5
    utilization_cap: float = 0.9
    compute_power_coefficient: float = 4.0
    utilization_includes_rho: bool = True
    power_table: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self):
        _check(0 < self.compute_fraction < 1, "compute_fraction", "must lie in (0, 1)")
        _check(0 < self.utilization_cap < 1, "utilization_cap", "must lie in (0, 1)")
        _check(self.compute_power_coefficient >= 0, "compute_power_coefficient", "must be >= 0")
        if self.power_table is not None:
            xs, ys = (tuple(float(v) for v in part) for part in self.power_table)
            _check(len(xs) == len(ys) >= 2, "power_table", "needs >= 2 matching points")
            _check(xs[0] == 0 and ys[0] >= 0, "power_table", "must start at load 0 with power >= 0")
            _check(bool(np.all(np.diff(xs) > 0) and np.all(np.diff(ys) > 0)), "power_table",
                   "loads and powers must be strictly increasing")
            object.__setattr__(self, "power_table", (xs, ys))

    @property
    def linear(self) -> bool:
        return self.power_table is None

    def power(self, load):
        """Compute power g(load)."""
        load = np.asarray(load, dtype=float)
        if self.linear:
            return self.compute_power_coefficient * load
        xs, ys = self.power_table
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        return np.where(load <= xs[-1], np.interp(load, xs, ys), ys[-1] + slope * (load - xs[-1]))

    def max_load_for_power(self, budget):
        """Largest load whose compute power stays within ``budget`` (inf when g is flat)."""
        budget = np.asarray(budget, dtype=float)
        if self.linear:
            if self.compute_power_coefficient == 0:
                return np.where(budget >= 0, np.inf, -np.inf)
            with np.errstate(over="ignore"):
                return budget / self.compute_power_coefficient
        xs, ys = self.power_table
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        inside = np.interp(budget, ys, xs)
        return np.where(budget < ys[0], -np.inf, np.where(budget <= ys[-1], inside, xs[-1] + (budget - ys[-1]) / slope))


@dataclass(frozen=True)
class SystemParams:
    radio: RadioParams = field(default_factory=RadioParams)
    compute: ComputeParams = field(default_factory=ComputeParams)


@dataclass(frozen=True)
class SlotInput:
    traffic: np.ndarray
    congestion: np.ndarray

    def __post_init__(self):
        lam = np.array(self.traffic, dtype=float)
        h = np.array(self.congestion, dtype=float)
        if lam.ndim != 1 or h.ndim != 1:
            raise ValueError("traffic and congestion must be 1-D")
        if np.any(lam < 0) or np.any(h < 0):
            raise ValueError("traffic and congestion must be nonnegative")
        lam.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "traffic", lam)
        object.__setattr__(self, "congestion", h)

    def check_shape(self, topology: Topology) -> None:
        if self.traffic.shape != (topology.num_regions,):
            raise ValueError(f"traffic must have length {topology.num_regions}")
        if self.congestion.shape != (topology.num_stations,):
            raise ValueError(f"congestion must have length {topology.num_stations}")


@dataclass(frozen=True)
class Decision:
    activation: np.ndarray
    local_fraction: np.ndarray

    def __post_init__(self):
        a = np.array(self.activation, dtype=np.int8)
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("activation entries must be 0 or 1")
        b = np.array(self.local_fraction, dtype=float)
        if b.shape != a.shape:
            raise ValueError("activation and local_fraction must have the same shape")
        if np.any(b < 0) or np.any(b > 1):
            raise ValueError("local_fraction entries must lie in [0, 1]")
        b = np.where(a == 1, b, 0.0)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "activation", a)
        object.__setattr__(self, "local_fraction", b)

    @classmethod
    def all_active(cls, n: int) -> Decision:
        return cls(np.ones(n, dtype=np.int8), np.zeros(n))

    @property
    def num_sleeping(self) -> int:
        return int(np.sum(self.activation == 0))

    def key(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.activation)


@dataclass(frozen=True)
class SlotMetrics:
    arrivals: np.ndarray
    p_op: np.ndarray
    p_tx: np.ndarray
    p_com: np.ndarray
    c_lo: np.ndarray
    c_rem: np.ndarray

    @property
    def power_per_station(self) -> np.ndarray:
        return self.p_op + self.p_tx + self.p_com

    @property
    def power_total(self) -> float:
        return float(np.sum(self.power_per_station))

    @property
    def cost_total(self) -> float:
        return float(np.sum(self.c_lo + self.c_rem))


def _check(ok: bool, name: str, msg: str) -> None:
    if not ok:
        raise ValueError(f"{name}: {msg}")


def _active_counts(topology: Topology, a: np.ndarray) -> np.ndarray:
    return a.astype(float) @ topology.cover_matrix


def _region_shares(topology: Topology, a: np.ndarray, traffic) -> np.ndarray:
    """Per-region traffic handed to each active coverer, lambda_m / |A_m|."""
    counts = _active_counts(topology, a)
    if np.any(counts == 0):
        row = a if a.ndim == 1 else a[np.flatnonzero(np.any(counts == 0, axis=1))[0]]
        raise CoverageError(uncovered_regions(topology, row))
    return np.asarray(traffic, dtype=float) / counts


def bs_arrivals(topology: Topology, activation, traffic) -> np.ndarray:
    a = np.asarray(activation)
    share = _region_shares(topology, a, traffic)
    return a * (share @ topology.cover_matrix.T)


def tx_weights(topology: Topology, radio: RadioParams) -> np.ndarray:
    """Per-unit-traffic transmit power from station n to region m, zero off-coverage."""
    d = np.maximum(topology.distances, radio.min_distance)
    return np.where(topology.cover_matrix, radio.rate_factor * d**radio.pathloss_exponent, 0.0)


def transmission_power(topology: Topology, radio: RadioParams, activation, traffic) -> np.ndarray:
    a = np.asarray(activation)
    share = _region_shares(topology, a, traffic)
    return a * (share @ tx_weights(topology, radio).T)


def computation_power(compute: ComputeParams, b, mu):
    return compute.power(compute.compute_fraction * np.asarray(b, dtype=float) * np.asarray(mu, dtype=float))


def local_delay(chi, load):
    """M/M/1-PS mean response cost ``load / (chi - load)``."""
    chi = np.asarray(chi, dtype=float)
    load = np.asarray(load, dtype=float)
    if np.any(load >= chi):
        raise OverloadError("local load reaches the service rate")
    out = load / (chi - load)
    return float(out) if out.ndim == 0 else out


def remote_delay(compute: ComputeParams, b, mu, h):
    out = compute.compute_fraction * (1.0 - np.asarray(b, dtype=float)) * np.asarray(mu, dtype=float) * np.asarray(h, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def utilization_load(compute: ComputeParams, b, mu):
    """The quantity capped by gamma * chi in the utilization constraint."""
    load = np.asarray(b, dtype=float) * np.asarray(mu, dtype=float)
    return compute.compute_fraction * load if compute.utilization_includes_rho else load


def evaluate_slot(
    topology: Topology, params: SystemParams, decision: Decision, slot: SlotInput
) -> SlotMetrics:
    slot.check_shape(topology)
    a = decision.activation
    if a.shape != (topology.num_stations,):
        raise ValueError(f"decision must cover {topology.num_stations} stations")
    b = decision.local_fraction
    rho = params.compute.compute_fraction
    mu = bs_arrivals(topology, a, slot.traffic)
    p_tx = transmission_power(topology, params.radio, a, slot.traffic)
    load = rho * b * mu
    return SlotMetrics(
        arrivals=mu,
        p_op=params.radio.operational_power * a.astype(float),
        p_tx=p_tx,
        p_com=computation_power(params.compute, b, mu) * a,
        c_lo=local_delay(topology.service_rates, load) * a,
        c_rem=remote_delay(params.compute, b, mu, slot.congestion) * a,
    )


@dataclass(frozen=True)
class Violation:
    constraint: str  # "coverage" | "utilization" | "power_cap"
    index: int
    amount: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.feasible


def check_feasibility(
    topology: Topology, params: SystemParams, decision: Decision, slot: SlotInput
) -> FeasibilityReport:
    """List every violated per-slot constraint; violations are data, not errors."""
    slot.check_shape(topology)
    a = decision.activation
    missing = uncovered_regions(topology, a)
    if missing:
        return FeasibilityReport(tuple(Violation("coverage", m, 1.0) for m in missing))
    b = decision.local_fraction
    mu = bs_arrivals(topology, a, slot.traffic)
    chi = topology.service_rates
    out = []
    util = utilization_load(params.compute, b, mu)
    cap = params.compute.utilization_cap * chi
    for n in np.flatnonzero(util > cap * (1 + FEASIBILITY_RTOL)):
        out.append(Violation("utilization", int(n), float(util[n] - cap[n])))
    power = (
        params.radio.operational_power * a
        + transmission_power(topology, params.radio, a, slot.traffic)
        + computation_power(params.compute, b, mu) * a
    )
    pbar = topology.power_caps
    for n in np.flatnonzero(power > pbar * (1 + FEASIBILITY_RTOL)):
        out.append(Violation("power_cap", int(n), float(power[n] - pbar[n])))
    return FeasibilityReport(tuple(out))
