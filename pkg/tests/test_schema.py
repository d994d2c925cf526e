import copy
import json

import pytest

from cubenav import (
    SchemaError,
    SchemaValidationError,
    load_schema,
    serialize_constellation,
    validate_constellation,
)

from conftest import SCHEMA_PATH


def test_fig1_schema_loads(schema_doc):
    c = load_schema(schema_doc)
    assert {f.name for f in c.facts} == {"FVENTES"}
    assert {d.name for d in c.dimensions} == {"DCLIENTS", "DPRODUITS", "DTEMPS"}
    assert set(c.star_of("FVENTES")) == {"DCLIENTS", "DPRODUITS", "DTEMPS"}
    assert [m.name for m in c.fact("FVENTES").measures] == ["REMISE", "MONTANT"]

    dclients = c.dimension("DCLIENTS")
    assert dclients.id_attr == "CODEC"
    hgeofr = dclients.hierarchy("HGEOFR")
    assert hgeofr.params == ("CODEC", "VILLE", "NDEPT", "REGION")
    assert hgeofr.weak_of("NDEPT") == ("NOMDEPT",)
    assert hgeofr.coarsest() == "REGION"
    assert dclients.hierarchy("HGEOUS").params == ("CODEC", "VILLE", "ETAT")
    assert dclients.parameter_names() == {"CODEC", "VILLE", "NDEPT", "REGION", "ETAT"}
    assert dclients.weak_names() == {"NOMC", "NOMDEPT"}


def test_fig1_from_file_path():
    c = load_schema(SCHEMA_PATH)
    assert c.fact("FVENTES") is not None
    assert c.annotations is not None and c.preferences is not None


def test_minimal_star_schema():
    doc = {
        "facts": [{"name": "F", "measures": [{"name": "M", "kind": "decimal"}]}],
        "dimensions": [
            {
                "name": "D",
                "id": "ID",
                "attributes": [{"name": "ID", "kind": "string"}],
                "hierarchies": [{"name": "H", "params": ["ID"], "weak": {}}],
            }
        ],
        "star": {"F": ["D"]},
    }
    c = load_schema(doc)
    assert c.dimension("D").hierarchy("H").coarsest() == "ID"
    assert validate_constellation(c) == []


def test_round_trip(schema_doc):
    c = load_schema(schema_doc)
    again = load_schema(serialize_constellation(c))
    assert serialize_constellation(again) == serialize_constellation(c)
    assert validate_constellation(again) == []


def test_hierarchy_order_is_positional(schema_doc):
    h = load_schema(schema_doc).dimension("DCLIENTS").hierarchy("HGEOFR")
    for i, p in enumerate(h.params):
        assert not h.finer(p, p)  # irreflexive
        for q in h.params[i + 1 :]:
            assert h.finer(p, q) and not h.finer(q, p)
    # transitive by construction
    assert h.finer("CODEC", "NDEPT") and h.finer("NDEPT", "REGION") and h.finer("CODEC", "REGION")


def test_root_parameter_violation(schema_doc):
    doc = copy.deepcopy(schema_doc)
    hgeofr = doc["dimensions"][0]["hierarchies"][0]
    hgeofr["params"] = ["VILLE", "NDEPT", "REGION"]  # no longer rooted at CODEC
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "root parameter" for f in exc.value.findings)
    assert "HGEOFR" in str(exc.value)


def test_attribute_disjointness(schema_doc):
    doc = copy.deepcopy(schema_doc)
    doc["dimensions"][1]["attributes"].append({"name": "VILLE", "kind": "string"})
    doc["dimensions"][1]["hierarchies"][0]["params"] = ["CODEP", "VILLE", "GAMME"]
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "attribute disjointness" for f in exc.value.findings)


def test_duplicate_parameter_breaks_total_order(schema_doc):
    doc = copy.deepcopy(schema_doc)
    doc["dimensions"][0]["hierarchies"][1]["params"] = ["CODEC", "CODEC", "VILLE", "ETAT"]
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "total order violated" for f in exc.value.findings)


def test_findings_are_data_not_exceptions(schema_doc, constellation):
    assert validate_constellation(constellation) == []
    doc = copy.deepcopy(schema_doc)
    doc["dimensions"][0]["id"] = "MISSING"
    from cubenav.schema import _build

    findings = validate_constellation(_build(doc))
    rules = {f.rule for f in findings}
    assert "id attribute" in rules and "root parameter" in rules
    for f in findings:
        assert f.path and f.message


def test_star_invariants(schema_doc):
    doc = copy.deepcopy(schema_doc)
    doc["star"]["FVENTES"] = ["DCLIENTS", "DGHOST"]
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "unknown dimension in star" for f in exc.value.findings)

    doc = copy.deepcopy(schema_doc)
    doc["star"] = {}
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "star missing fact" for f in exc.value.findings)


def test_parse_errors():
    with pytest.raises(SchemaError):
        load_schema("{not json")
    with pytest.raises(SchemaError):
        load_schema('["top-level array"]')
    with pytest.raises(SchemaError):
        load_schema({"facts": [{"measures": []}]})  # missing name


def test_identifier_rule(schema_doc):
    doc = copy.deepcopy(schema_doc)
    doc["facts"][0]["name"] = "2BAD"
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "identifier" for f in exc.value.findings)


def test_unassigned_attribute_flagged(schema_doc):
    doc = copy.deepcopy(schema_doc)
    doc["dimensions"][1]["attributes"].append({"name": "COULEUR", "kind": "string"})
    with pytest.raises(SchemaValidationError) as exc:
        load_schema(doc)
    assert any(f.rule == "unassigned attribute" for f in exc.value.findings)
