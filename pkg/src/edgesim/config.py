"""Experiment configuration documents (JSON) and their validation."""
from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .baselines import PolicyKind
from .engine import ControllerConfig
from .harness import CongestionModel, Scenario, TrafficModel
from .rejo import RejoConfig
from .system_model import ComputeParams, RadioParams, SystemParams
from .topology import Topology, build_grid_topology


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TopologySpec:
    grid: tuple[int, int] | None = None  # (5, 5) when no file is given
    file: str | None = None
    coverage_radius: float = 1.0
    max_service_rate: float = 16.0
    power_cap: float = 250.0

    def __post_init__(self):
        if self.grid is not None and self.file is not None:
            raise ValueError("grid: give either 'grid' or 'file', not both")
        if self.grid is None and self.file is None:
            object.__setattr__(self, "grid", (5, 5))
        if self.grid is not None:
            grid = _parse_grid(self.grid)
            object.__setattr__(self, "grid", grid)
        if self.coverage_radius <= 0:
            raise ValueError("coverage_radius: must be > 0")
        if self.max_service_rate <= 0:
            raise ValueError("max_service_rate: must be > 0")
        if self.power_cap <= 0:
            raise ValueError("power_cap: must be > 0")

    def build(self, base_dir: Path | None = None) -> Topology:
        if self.file is not None:
            path = Path(self.file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return Topology.from_json(path)
        rows, cols = self.grid
        return build_grid_topology(rows, cols, self.coverage_radius, self.max_service_rate, self.power_cap)


def _parse_grid(value) -> tuple[int, int]:
    if isinstance(value, str):
        m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", value)
        if not m:
            raise ValueError(f"grid: expected 'RxC', got {value!r}")
        return int(m.group(1)), int(m.group(2))
    rows, cols = value
    if int(rows) < 1 or int(cols) < 1:
        raise ValueError("grid: dimensions must be >= 1")
    return int(rows), int(cols)


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologySpec = field(default_factory=TopologySpec)
    radio: RadioParams = field(default_factory=RadioParams)
    compute: ComputeParams = field(default_factory=ComputeParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    rejo: RejoConfig = field(default_factory=RejoConfig)
    traffic: TrafficModel = field(default_factory=TrafficModel)
    congestion: CongestionModel = field(default_factory=CongestionModel)
    policy: str = "ENGINE"
    seeds: tuple[int, ...] = (0,)

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind.parse(self.policy).value)
        if not self.seeds:
            raise ValueError("seeds: need at least one seed")

    def scenario(self, base_dir: Path | None = None) -> Scenario:
        return Scenario(
            topology=self.topology.build(base_dir),
            params=SystemParams(self.radio, self.compute),
            controller=self.controller,
            rejo=self.rejo,
            traffic=self.traffic,
            congestion=self.congestion,
        )


_SECTIONS = {
    "topology": TopologySpec,
    "radio": RadioParams,
    "compute": ComputeParams,
    "controller": ControllerConfig,
    "rejo": RejoConfig,
    "traffic": TrafficModel,
    "congestion": CongestionModel,
}


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _listed(value):
    if isinstance(value, dict):
        return {k: _listed(v) for k, v in value.items()}
    if isinstance(value, (tuple, list)):
        return [_listed(v) for v in value]
    return value


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    kwargs = {k: _tupled(v) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}.{exc}" if where else str(exc)) from None


def parse_config(document) -> ExperimentConfig:
    """Validate a config document (JSON text or already-decoded dict).

    A top-level ``grid`` key (``"5x5"`` or ``[5, 5]``) is shorthand for
    ``topology.grid``.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(document, dict):
        raise ConfigError("config document must be a JSON object")
    doc = dict(document)
    if "grid" in doc:
        topo = dict(doc.get("topology", {}))
        if "grid" in topo:
            raise ConfigError("grid: given both at top level and under topology")
        topo["grid"] = doc.pop("grid")
        doc["topology"] = topo
    kwargs = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        elif key in ("policy", "seeds"):
            kwargs[key] = _tupled(value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def to_document(config: ExperimentConfig) -> dict:
    """Fully resolved document; ``parse_config(to_document(c)) == c``."""
    return _listed(dataclasses.asdict(config))


def dumps(config: ExperimentConfig) -> str:
    return json.dumps(to_document(config), indent=2, sort_keys=True)
