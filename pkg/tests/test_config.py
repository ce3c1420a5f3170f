import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgesim.config import ConfigError, ExperimentConfig, TopologySpec, dumps, load_config, parse_config, to_document
from edgesim.topology import build_grid_topology


def test_minimal_document_gets_defaults():
    cfg = parse_config({"grid": "5x5", "policy": "ENGINE"})
    assert cfg.topology.grid == (5, 5)
    assert cfg.controller.V == 200.0 and cfg.controller.Q == 1750.0 and cfg.controller.horizon == 200
    assert cfg.policy == "ENGINE"
    topo = cfg.scenario().topology
    assert topo.num_regions == 25 and topo.num_stations == 16


def test_empty_document_is_the_default_config():
    assert parse_config("{}") == ExperimentConfig()


def test_utilization_cap_out_of_range():
    with pytest.raises(ConfigError, match=r"compute\.utilization_cap"):
        parse_config({"compute": {"utilization_cap": 1.2}})


@pytest.mark.parametrize(
    "doc, where",
    [
        ({"radio": {"bandwith": 1}}, "radio"),
        ({"colour": 1}, "colour"),
        ({"policy": "GREEDY"}, "policy"),
        ({"grid": "5by5"}, "grid"),
        ({"seeds": []}, "seeds"),
        ({"rejo": {"tau": -1}}, "rejo.tau"),
        ({"grid": "3x3", "topology": {"grid": [3, 3]}}, "grid"),
        ({"topology": "5x5"}, "topology"),
    ],
)
def test_errors_name_the_field(doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(doc)


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match="line 2 column"):
        parse_config('{"grid": "5x5",\n  oops}')


def test_grid_given_as_list():
    assert parse_config({"topology": {"grid": [3, 4]}}).topology.grid == (3, 4)


def test_topology_file(tmp_path):
    build_grid_topology(3, 3).to_json(tmp_path / "topo.json")
    (tmp_path / "cfg.json").write_text(json.dumps({"topology": {"file": "topo.json"}}))
    cfg = load_config(tmp_path / "cfg.json")
    assert cfg.topology.grid is None
    assert cfg.scenario(tmp_path).topology.num_stations == 4
    with pytest.raises(ValueError, match="either"):
        TopologySpec(grid=(3, 3), file="topo.json")


def test_power_table_roundtrip():
    cfg = parse_config({"compute": {"power_table": [[0, 5, 10], [0, 10, 30]]}})
    assert cfg.compute.power_table == ((0.0, 5.0, 10.0), (0.0, 10.0, 30.0))
    assert parse_config(dumps(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(
    V=st.floats(0, 1e4),
    Q=st.floats(1, 1e4),
    tau=st.floats(1e-4, 1e4),
    gamma=st.floats(0.01, 0.99),
    seeds=st.lists(st.integers(0, 1000), min_size=1, max_size=4),
    policy=st.sampled_from(["ENGINE", "PCU", "DCU", "STSC", "ORACLE"]),
)
def test_parse_emit_parse_fixpoint(V, Q, tau, gamma, seeds, policy):
    doc = {
        "controller": {"V": V, "Q": Q},
        "rejo": {"tau": tau},
        "compute": {"utilization_cap": gamma},
        "seeds": seeds,
        "policy": policy,
    }
    cfg = parse_config(doc)
    text = dumps(cfg)
    again = parse_config(text)
    assert again == cfg
    assert dumps(again) == text
    assert to_document(again) == json.loads(text)
