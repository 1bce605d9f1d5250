"""SPARQL 1.1 results serialization (JSON and CSV)."""

from __future__ import annotations

import csv
import io
import json

from ..rdf import IRI, XSD, Literal, Term
from .evaluate import BindingTable

__all__ = ["RESULT_MEDIA_TYPES", "serialize_results", "parse_results_json"]

RESULT_MEDIA_TYPES = {
    "json": "application/sparql-results+json",
    "csv": "text/csv",
}


def _binding(term: Term) -> dict:
    if isinstance(term, IRI):
        return {"type": "uri", "value": term.value}
    out = {"type": "literal", "value": term.lexical}
    if term.language is not None:
        out["xml:lang"] = term.language
    elif term.datatype != XSD.string:
        out["datatype"] = term.datatype.value
    return out


def serialize_results(table: BindingTable, format: str = "json") -> bytes:
    """Compact, deterministic encoding. Unbound variables are omitted (JSON) or empty (CSV)."""
    if format == "json":
        doc = {
            "head": {"vars": list(table.vars)},
            "results": {
                "bindings": [
                    {v: _binding(row[v]) for v in table.vars if v in row} for row in table.rows
                ]
            },
        }
        return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(table.vars)
        for row in table.rows:
            writer.writerow([str(row[v]) if v in row else "" for v in table.vars])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown results format {format!r}")


def parse_results_json(data: bytes | str) -> BindingTable:
    doc = json.loads(data)
    table = BindingTable(list(doc["head"]["vars"]))
    for binding in doc["results"]["bindings"]:
        row: dict[str, Term] = {}
        for var, cell in binding.items():
            if cell["type"] == "uri":
                row[var] = IRI(cell["value"])
            elif cell["type"] in ("literal", "typed-literal"):
                if "xml:lang" in cell:
                    row[var] = Literal(cell["value"], language=cell["xml:lang"])
                else:
                    row[var] = Literal(cell["value"], IRI(cell.get("datatype", XSD.string.value)))
            else:
                raise ValueError(f"unsupported binding type {cell['type']!r}")
        table.rows.append(row)
    return table
