"""Report documents: assembly, JSON/Markdown/CSV rendering and loading."""
from __future__ import annotations

import copy
import csv
import io
import json
import uuid
from importlib import resources

SCHEMA_VERSION = 1
VOLATILE = ("run_id", "wall_time")
COLUMNS = ("chain", "check", "passed", "abs_error", "rel_error", "rel_tol", "abs_floor", "n_values", "inputs_digest",
           "wall_time")


def schema():
    return json.loads(resources.files("haarpush").joinpath("report.schema.json").read_text())


def build_document(reports, seed, skipped=(), run_id=None):
    records = [r.to_dict() if hasattr(r, "to_dict") else dict(r) for r in reports]
    passed = sum(1 for r in records if r["passed"])
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": run_id or uuid.uuid4().hex,
        "seed": int(seed),
        "skipped": list(skipped),
        "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed},
        "reports": records,
    }


def strip_volatile(doc):
    """Copy without run id and timings, for reproducibility comparisons."""
    doc = copy.deepcopy(doc)
    doc.pop("run_id", None)
    for r in doc.get("reports", []):
        r.pop("wall_time", None)
    return doc


def to_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "PASS" if v else "FAIL"
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def rows(doc):
    for r in doc["reports"]:
        yield {
            "chain": r["chain"],
            "check": r["check"],
            "passed": r["passed"],
            "abs_error": r["abs_error"],
            "rel_error": r["rel_error"],
            "rel_tol": r["rel_tol"],
            "abs_floor": r["abs_floor"],
            "n_values": len(r["lhs"]),
            "inputs_digest": r["inputs_digest"],
            "wall_time": r["wall_time"],
        }


def to_markdown(doc) -> str:
    s = doc["summary"]
    out = [f"# Verification report (seed {doc['seed']})", "",
           f"{s['passed']} of {s['total']} checks passed.", "",
           "| " + " | ".join(COLUMNS) + " |",
           "|" + "---|" * len(COLUMNS)]
    for row in rows(doc):
        out.append("| " + " | ".join(_fmt(row[c]) for c in COLUMNS) + " |")
    if doc.get("skipped"):
        out += ["", "Skipped (not applicable to the chain): "
                + ", ".join(f"{k['chain']}/{k['check']}" for k in doc["skipped"])]
    return "\n".join(out) + "\n"


def to_csv(doc) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows(doc):
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()


RENDERERS = {"json": to_json, "md": to_markdown, "csv": to_csv}


def render(doc, fmt) -> str:
    return RENDERERS[fmt](doc)


def load_document(text):
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema version {doc.get('schema_version')!r}")
    return doc
