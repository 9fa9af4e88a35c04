import csv
import io
import json

import jsonschema
import pytest

from haarpush import report as rep
from haarpush.chains import get_chain
from haarpush.verify import ChainConfig, run_suite


@pytest.fixture(scope="module")
def doc():
    cfgs = [ChainConfig(get_chain("z8-z4-z2"), measures=20), ChainConfig(get_chain("heis3-center"), n_random=1)]
    reports, skipped = run_suite(cfgs, ["main1", "main3", "modular", "compose"])
    return rep.build_document(reports, 0, skipped)


def test_json_validates_against_schema(doc):
    text = rep.render(doc, "json")
    jsonschema.validate(json.loads(text), rep.schema())
    assert rep.load_document(text) == json.loads(text)


def test_schema_rejects_missing_fields(doc):
    bad = json.loads(rep.to_json(doc))
    del bad["reports"][0]["rel_tol"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, rep.schema())


def test_markdown_has_one_row_per_record(doc):
    md = rep.render(doc, "md")
    table = [ln for ln in md.splitlines() if ln.startswith("| ")]
    assert len(table) - 1 == len(doc["reports"])
    assert table[0] == "| " + " | ".join(rep.COLUMNS) + " |"
    assert "compose" in md  # skipped on the Lie chain


def test_csv_has_one_row_per_record(doc):
    rows = list(csv.DictReader(io.StringIO(rep.render(doc, "csv"))))
    assert len(rows) == len(doc["reports"])
    assert tuple(rows[0]) == rep.COLUMNS


def test_summary_counts(doc):
    s = doc["summary"]
    assert s["total"] == len(doc["reports"]) == s["passed"] + s["failed"]


def test_strip_volatile(doc):
    a = rep.strip_volatile(doc)
    assert "run_id" not in a and all("wall_time" not in r for r in a["reports"])
    assert "run_id" in doc


def test_load_rejects_other_versions(doc):
    bad = json.loads(rep.to_json(doc))
    bad["schema_version"] = 2
    with pytest.raises(ValueError):
        rep.load_document(json.dumps(bad))
