import json
import os
import pathlib

import pytest

jsonschema = pytest.importorskip("jsonschema")

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCENARIOS = pathlib.Path(os.environ.get("EDGETB_SCENARIOS", ROOT / "scenarios"))
SCHEMA = json.loads((ROOT / "docs" / "scenario.schema.json").read_text())


@pytest.fixture(scope="module")
def validator():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)
    return jsonschema.Draft202012Validator(SCHEMA)


@pytest.mark.parametrize("name", ["system_a", "system_b", "system_c"])
def test_fixtures_match_schema(validator, name):
    doc = json.loads((SCENARIOS / f"{name}.json").read_text())
    errors = sorted(validator.iter_errors(doc), key=str)
    assert not errors, errors[0].message


@pytest.mark.parametrize(
    "patch",
    [
        {"schema_version": 2},
        {"nodes": [{"id": "n1"}]},
        {"events": [{"at_ms": 0, "type": "volcano"}]},
        {"topics": [{"name": "_orch.hb"}]},
        {"events": [{"at_ms": 0, "type": "battery", "node": "n1", "pct": 140}]},
    ],
)
def test_schema_and_loader_reject_alike(validator, patch):
    doc = json.loads((SCENARIOS / "system_a.json").read_text())
    doc.update(patch)
    assert list(validator.iter_errors(doc))
    edgetb = pytest.importorskip("edgetb")
    with pytest.raises(edgetb.EdgeError):
        edgetb.validate_scenario(json.dumps(doc))
