"""Canonical JSON/CSV rendering.

Every report exposed over HTTP must be byte-identical when produced by the
CLI, so both go through to_json(). Field order is the insertion order of the
dict built by each report's to_doc(); do not sort keys.
"""

import csv
import io
import json


def to_json(doc) -> str:
    """Render a report document as canonical JSON text (trailing newline)."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def to_csv(rows: list[dict], columns: list[str]) -> str:
    """Render rows as CSV with a fixed column set."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({col: _cell(row.get(col)) for col in columns})
    return buf.getvalue()


def _cell(value):
    if value is None:
        return ""
    return value
