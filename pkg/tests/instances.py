"""Random small instances shared by several test modules."""
import numpy as np

from edgesim.rejo import SlotProblem, all_activations
from edgesim.system_model import ComputeParams, RadioParams, SlotInput, SystemParams
from edgesim.topology import BaseStation, Region, build_grid_topology, from_positions


def random_instance(rng: np.random.Generator, max_stations: int = 8, max_regions: int = 6):
    """Random geometric instance with a feasible slot problem.

    Draws are repeated until every region has a coverer and some activation
    satisfies all per-station caps.
    """
    while True:
        inst = _draw(rng, max_stations, max_regions)
        topo, params, slot, V, q = inst
        if np.isfinite(SlotProblem(topo, params, slot, V, q).evaluate_batch(all_activations(topo.num_stations))[1]).any():
            return inst


def _draw(rng, max_stations, max_regions):
    while True:
        N = int(rng.integers(1, max_stations + 1))
        M = int(rng.integers(1, max_regions + 1))
        radius = float(rng.uniform(0.8, 1.6))
        regions = [Region(m, tuple(rng.uniform(0, 2, 2))) for m in range(M)]
        stations = [
            BaseStation(n, tuple(rng.uniform(0, 2, 2)), radius, float(rng.uniform(5, 20)), float(rng.uniform(150, 400)))
            for n in range(N)
        ]
        try:
            topo = from_positions(regions, stations)
        except ValueError:
            continue
        break
    params = SystemParams(
        RadioParams(operational_power=float(rng.uniform(10, 100))),
        ComputeParams(
            compute_fraction=float(rng.uniform(0.2, 0.8)),
            utilization_cap=float(rng.uniform(0.5, 0.95)),
            compute_power_coefficient=float(rng.uniform(0, 5)),
        ),
    )
    slot = SlotInput(rng.uniform(0, 10, M), rng.uniform(0, 50, N))
    V = float(rng.uniform(1, 300))
    q = float(rng.uniform(0, 300))
    return topo, params, slot, V, q


GRID_SHAPES = ((2, 2), (2, 3), (2, 4), (2, 5), (3, 3), (3, 4), (3, 5), (2, 9))  # 1 to 8 stations


def random_grid_instance(rng: np.random.Generator):
    """Sub-grid of the default layout (at most 8 stations) with randomized parameters."""
    while True:
        rows, cols = GRID_SHAPES[rng.integers(len(GRID_SHAPES))]
        topo = build_grid_topology(rows, cols, 1.0, float(rng.uniform(10, 20)), float(rng.uniform(150, 400)))
        params = SystemParams(
            RadioParams(operational_power=float(rng.uniform(10, 100))),
            ComputeParams(
                compute_fraction=float(rng.uniform(0.2, 0.8)),
                utilization_cap=float(rng.uniform(0.5, 0.95)),
                compute_power_coefficient=float(rng.uniform(0, 5)),
            ),
        )
        slot = SlotInput(rng.uniform(0, 15, topo.num_regions), rng.uniform(0, 60, topo.num_stations))
        V, q = float(rng.uniform(1, 300)), float(rng.uniform(0, 300))
        if np.isfinite(SlotProblem(topo, params, slot, V, q).evaluate_batch(all_activations(topo.num_stations))[1]).any():
            return topo, params, slot, V, q
