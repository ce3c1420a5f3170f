"""Static network geometry: regions, base stations, coverage and minimum covers.

Indices are zero-based throughout the package. Region ``m`` and station ``n``
are positions in ``Topology.regions`` / ``Topology.stations``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

COVERAGE_TOL = 1e-9
MAX_COVER_STATIONS = 25


class TopologyError(ValueError):
    pass


class UnsupportedSizeError(ValueError):
    pass


@dataclass(frozen=True)
class Region:
    id: int
    centroid: tuple[float, float]


@dataclass(frozen=True)
class BaseStation:
    id: int
    position: tuple[float, float]
    coverage_radius: float
    max_service_rate: float
    power_cap: float

    def __post_init__(self):
        if self.coverage_radius <= 0:
            raise TopologyError(f"station {self.id}: coverage_radius must be > 0")
        if self.max_service_rate <= 0:
            raise TopologyError(f"station {self.id}: max_service_rate must be > 0")
        if self.power_cap <= 0:
            raise TopologyError(f"station {self.id}: power_cap must be > 0")


@dataclass(frozen=True)
class Topology:
    """Regions, stations and the coverage relation between them.

    ``coverage[m]`` is the sorted tuple of station indices covering region ``m``;
    ``distances[n, m]`` is the centroid-to-station Euclidean distance.
    """

    regions: tuple[Region, ...]
    stations: tuple[BaseStation, ...]
    coverage: tuple[tuple[int, ...], ...]
    distances: np.ndarray = field(repr=False)

    def __post_init__(self):
        M, N = len(self.regions), len(self.stations)
        if M == 0 or N == 0:
            raise TopologyError("topology needs at least one region and one station")
        for i, r in enumerate(self.regions):
            if r.id != i:
                raise TopologyError(f"region ids must be dense 0..{M - 1}; got {r.id} at {i}")
        for i, s in enumerate(self.stations):
            if s.id != i:
                raise TopologyError(f"station ids must be dense 0..{N - 1}; got {s.id} at {i}")
        if len(self.coverage) != M:
            raise TopologyError("coverage must list one entry per region")
        d = np.asarray(self.distances, dtype=float)
        if d.shape != (N, M):
            raise TopologyError(f"distances must have shape ({N}, {M})")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)
        for m, covering in enumerate(self.coverage):
            if not covering:
                raise TopologyError(f"region {m} is not covered by any station")
            if any(not 0 <= n < N for n in covering):
                raise TopologyError(f"region {m} lists an unknown station")
        cov = np.zeros((N, M), dtype=bool)
        for m, covering in enumerate(self.coverage):
            cov[list(covering), m] = True
        cov.setflags(write=False)
        object.__setattr__(self, "_cover_matrix", cov)

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @property
    def num_stations(self) -> int:
        return len(self.stations)

    @property
    def cover_matrix(self) -> np.ndarray:
        """Boolean ``(N, M)`` matrix, true where station n covers region m."""
        return self._cover_matrix

    @property
    def service_rates(self) -> np.ndarray:
        return np.array([s.max_service_rate for s in self.stations], dtype=float)

    @property
    def power_caps(self) -> np.ndarray:
        return np.array([s.power_cap for s in self.stations], dtype=float)

    def coverage_consistent(self) -> bool:
        """True iff ``n in B_m`` exactly when ``d[n, m] <= radius_n``."""
        radii = np.array([s.coverage_radius for s in self.stations])[:, None]
        return bool(np.array_equal(self.distances <= radii + COVERAGE_TOL, self.cover_matrix))

    def covering_counts(self) -> np.ndarray:
        return self.cover_matrix.sum(axis=0)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "regions": [{"id": r.id, "centroid": list(r.centroid)} for r in self.regions],
            "stations": [
                {
                    "id": s.id,
                    "position": list(s.position),
                    "coverage_radius": s.coverage_radius,
                    "max_service_rate": s.max_service_rate,
                    "power_cap": s.power_cap,
                }
                for s in self.stations
            ],
            "coverage": [list(c) for c in self.coverage],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Topology:
        regions = [Region(int(r["id"]), tuple(map(float, r["centroid"]))) for r in doc["regions"]]
        stations = [
            BaseStation(
                id=int(s["id"]),
                position=tuple(map(float, s["position"])),
                coverage_radius=float(s["coverage_radius"]),
                max_service_rate=float(s["max_service_rate"]),
                power_cap=float(s["power_cap"]),
            )
            for s in doc["stations"]
        ]
        if "coverage" not in doc:
            return from_positions(regions, stations)
        topo = cls(
            regions=tuple(regions),
            stations=tuple(stations),
            coverage=tuple(tuple(sorted(int(n) for n in c)) for c in doc["coverage"]),
            distances=_distance_matrix(regions, stations),
        )
        if not topo.coverage_consistent():
            raise TopologyError("explicit coverage lists disagree with distances and radii")
        return topo

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_json(cls, path: str | Path) -> Topology:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _distance_matrix(regions, stations) -> np.ndarray:
    pos = np.array([s.position for s in stations], dtype=float).reshape(-1, 2)
    cen = np.array([r.centroid for r in regions], dtype=float).reshape(-1, 2)
    return np.linalg.norm(pos[:, None, :] - cen[None, :, :], axis=-1)


def from_positions(regions, stations) -> Topology:
    """Build a topology deriving coverage from distance <= coverage radius."""
    regions, stations = tuple(regions), tuple(stations)
    d = _distance_matrix(regions, stations)
    radii = np.array([s.coverage_radius for s in stations])
    coverage = tuple(
        tuple(int(n) for n in np.flatnonzero(d[:, m] <= radii + COVERAGE_TOL)) for m in range(len(regions))
    )
    return Topology(regions=regions, stations=stations, coverage=coverage, distances=d)


def build_grid_topology(
    grid_rows: int,
    grid_cols: int,
    coverage_radius: float = 1.0,
    max_service_rate: float = 16.0,
    power_cap: float = 250.0,
) -> Topology:
    """Unit-square regions with stations on every interior grid intersection.

    Region ``(r, c)`` has centroid ``(c + 0.5, r + 0.5)`` and index ``r * cols + c``.
    Station ``(i, j)`` sits at ``(j, i)`` for ``1 <= i < rows``, ``1 <= j < cols``.
    """
    if grid_rows < 1 or grid_cols < 1:
        raise TopologyError("grid dimensions must be >= 1")
    regions = [
        Region(r * grid_cols + c, (c + 0.5, r + 0.5)) for r in range(grid_rows) for c in range(grid_cols)
    ]
    stations = [
        BaseStation(k, (float(j), float(i)), coverage_radius, max_service_rate, power_cap)
        for k, (i, j) in enumerate(product(range(1, grid_rows), range(1, grid_cols)))
    ]
    if not stations:
        raise TopologyError(f"a {grid_rows}x{grid_cols} grid has no interior intersections")
    return from_positions(regions, stations)


def coverage_feasible(topology: Topology, activation) -> bool:
    a = np.asarray(activation)
    if a.shape != (topology.num_stations,):
        raise ValueError(f"activation must have length {topology.num_stations}, got shape {a.shape}")
    return bool(np.all(a.astype(bool) @ topology.cover_matrix))


def uncovered_regions(topology: Topology, activation) -> list[int]:
    a = np.asarray(activation).astype(bool)
    return [int(m) for m in np.flatnonzero(~(a @ topology.cover_matrix))]


def minimum_cover_size(topology: Topology) -> int:
    """Smallest number of active stations that covers every region (branch and bound)."""
    N = topology.num_stations
    if N > MAX_COVER_STATIONS:
        raise UnsupportedSizeError(f"minimum cover search supports N <= {MAX_COVER_STATIONS}, got {N}")
    region_masks = [sum(1 << n for n in covering) for covering in topology.coverage]
    station_regions = [
        sum(1 << m for m in range(topology.num_regions) if topology.cover_matrix[n, m]) for n in range(N)
    ]
    full = (1 << topology.num_regions) - 1
    max_reach = max(bin(s).count("1") for s in station_regions)
    best = N

    def search(covered: int, used: int):
        nonlocal best
        if covered == full:
            best = min(best, used)
            return
        remaining = bin(full & ~covered).count("1")
        if used + math.ceil(remaining / max_reach) >= best:
            return
        # branch on the uncovered region with the fewest candidate stations
        m = min(
            (m for m in range(topology.num_regions) if not covered >> m & 1),
            key=lambda m: bin(region_masks[m]).count("1"),
        )
        for n in topology.coverage[m]:
            search(covered | station_regions[n], used + 1)

    search(0, 0)
    return best
