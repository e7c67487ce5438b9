import json

import pytest

from ppverify.io import (FileFormatError, data_path, dump_stage_graphs, load_protocol,
                         load_stage_graphs, protocol_from_dict, protocol_to_dict, save_protocol,
                         stage_graph_from_dict, stage_graph_to_dict)
from ppverify.presburger import parse_formula
from ppverify.protolib import gen_flock_linear, gen_majority
from ppverify.stagegraph import check_stage_graph


def test_golden_majority(majority):
    assert majority == gen_majority().protocol
    assert majority.transitions == gen_majority().protocol.transitions


def test_fig1_contents(fig1):
    right, left = fig1
    assert right.target == 1 and left.target == 0
    assert sorted(right.stages) == ["S1", "S2", "S3", "S4"]
    assert sorted(left.stages) == ["S1", "S2", "S3"]
    assert left.stages["S1"].rank.describe() == "AN + AY"


def test_protocol_roundtrip(tmp_path):
    p = gen_flock_linear(3).protocol
    path = tmp_path / "f.json"
    save_protocol(p, path)
    assert load_protocol(path) == p
    assert protocol_from_dict(protocol_to_dict(p)) == p


def test_unknown_state_named(tmp_path):
    d = protocol_to_dict(gen_majority().protocol)
    d["transitions"][0][2] = "QQ"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(Exception, match="QQ"):
        load_protocol(path)


@pytest.mark.parametrize("mutate, where", [
    (lambda d: d.pop("states"), "states"),
    (lambda d: d.update(transitions="x"), "transitions"),
    (lambda d: d.update(outputs={"AY": 1}), "outputs"),
])
def test_schema_errors_name_field(mutate, where):
    d = protocol_to_dict(gen_majority().protocol)
    mutate(d)
    with pytest.raises(Exception, match=where):
        protocol_from_dict(d)


def test_missing_and_invalid_files(tmp_path):
    with pytest.raises(FileFormatError, match="not found"):
        load_protocol(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(FileFormatError, match="invalid JSON"):
        load_protocol(bad)


def test_stage_graph_errors(majority):
    base = {"target": 1, "initial": "S1", "edges": [],
            "stages": [{"id": "S1", "constraint": "AY >= ZZ"}]}
    with pytest.raises(FileFormatError, match="stages\\[0\\].constraint.*ZZ"):
        stage_graph_from_dict(majority, base)
    base["stages"][0]["constraint"] = "AY >="
    with pytest.raises(FileFormatError, match="constraint"):
        stage_graph_from_dict(majority, base)
    base["stages"][0]["constraint"] = "true"
    base["edges"] = [["S1", "S1"]]
    with pytest.raises(FileFormatError):
        stage_graph_from_dict(majority, base)


def test_stage_graph_roundtrip(tmp_path, majority, fig1, majority_phi):
    path = tmp_path / "g.json"
    dump_stage_graphs(list(fig1), path)
    again = load_stage_graphs(majority, path)
    for g in again:
        assert check_stage_graph(majority, g, majority_phi).passed
    assert stage_graph_to_dict(again[0]) == stage_graph_to_dict(fig1[0])


def test_data_path_exists():
    assert data_path("majority.json").exists()
    assert data_path("fig1.json").exists()
    assert parse_formula("x >= y")
