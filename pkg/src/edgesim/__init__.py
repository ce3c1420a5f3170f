"""Energy-constrained edge computing in dense cellular networks: simulator and solvers."""
from .baselines import PolicyKind
from .engine import ControllerConfig, ControllerState, engine_step, queue_update, slot_objective
from .harness import CongestionModel, RunResult, Scenario, TrafficModel, run_simulation, sweep
from .rejo import RejoConfig, exhaustive_oracle, rejo_solve
from .system_model import ComputeParams, Decision, RadioParams, SlotInput, SystemParams, evaluate_slot
from .topology import Topology, build_grid_topology, coverage_feasible, minimum_cover_size

__version__ = "0.1.0"
