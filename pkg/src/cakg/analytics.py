"""Climate summaries computed from SPARQL results: monthly box-plot statistics and multi-year trend buckets."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
from dataclasses import asdict, dataclass, fields
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union
from urllib.parse import quote

from .client import query_remote
from .ontology import CA, DEFAULT_CONFIG, OntologyConfig
from .rdf import QUDT, RDFS, SOSA, XSD, escape_string
from .sparql import BindingTable, evaluate, parse_query, parse_results_json, round_scale
from .store import StoreView, TripleStore

__all__ = [
    "MonthlySummary",
    "TrendBucket",
    "StationNotFound",
    "Source",
    "select",
    "series_query",
    "daily_conditions_query",
    "collect_series",
    "quantile",
    "monthly_summary",
    "trend_buckets",
    "format_table",
    "emit_table",
    "read_table",
]

Source = Union[TripleStore, StoreView, str]
Series = Sequence[tuple[_dt.date, Decimal]]


class StationNotFound(LookupError):
    pass


@dataclass(frozen=True)
class MonthlySummary:
    month: int
    count: int
    mean: Optional[Decimal] = None
    median: Optional[Decimal] = None
    q1: Optional[Decimal] = None
    q3: Optional[Decimal] = None
    min: Optional[Decimal] = None
    max: Optional[Decimal] = None


@dataclass(frozen=True)
class TrendBucket:
    start_year: int
    span_years: int
    mean: Optional[Decimal]
    count: int


def _prefix_block(config: OntologyConfig) -> str:
    return "".join(
        f"PREFIX {label}: <{ns}>\n"
        for label, ns in (
            ("ca", CA), ("sosa", SOSA), ("qudt", QUDT), ("rdfs", RDFS), ("xsd", XSD),
        )
    )


def _made_by(config: OntologyConfig) -> str:
    return "sosa:madeBySensor" if config.standard_sosa else "sosa:isMadeBySensor"


def series_query(
    station_label: str,
    feature_key: str,
    year_from: int,
    year_to: int,
    config: OntologyConfig = DEFAULT_CONFIG,
) -> str:
    """SPARQL for one station's daily values of one feature over a year range."""
    stem = config.registry[feature_key].stem
    return (
        _prefix_block(config)
        + "SELECT ?obs ?date ?value WHERE {\n"
        + f'  ?station a ca:Station ; rdfs:label "{escape_string(station_label)}" .\n'
        + f"  ?sensor a ca:{stem}Sensor ; sosa:isHostedBy ?station .\n"
        + f"  ?obs a ca:{stem}Observation ; {_made_by(config)} ?sensor ;\n"
        + "       sosa:resultTime ?date ; sosa:hasResult ?result .\n"
        + "  ?result qudt:numericValue ?value .\n"
        + f'  FILTER(?date >= "{year_from:04d}-01-01"^^xsd:date && ?date <= "{year_to:04d}-12-31"^^xsd:date)\n'
        + "}\nORDER BY ?date\n"
    )


def daily_conditions_query(
    station_labels: Sequence[str] = ("SHANGHAI", "DUBLIN"),
    year_from: int = 1951,
    year_to: int = 2020,
    config: OntologyConfig = DEFAULT_CONFIG,
) -> str:
    """Daily temperature and precipitation side by side for the named stations."""
    made_by = _made_by(config)
    names = " || ".join(f'?name = "{escape_string(label)}"' for label in station_labels)
    return (
        _prefix_block(config)
        + "SELECT ?name ?date ?temperature ?precipitation WHERE {\n"
        + "  ?station a ca:Station ; rdfs:label ?name .\n"
        + "  ?tsensor a ca:TemperatureSensor ; sosa:isHostedBy ?station .\n"
        + f"  ?tobs a ca:TemperatureObservation ; {made_by} ?tsensor ;\n"
        + "        sosa:resultTime ?date ; sosa:hasResult ?tresult .\n"
        + "  ?tresult qudt:numericValue ?temperature .\n"
        + "  ?psensor a ca:PrecipitationSensor ; sosa:isHostedBy ?station .\n"
        + f"  ?pobs a ca:PrecipitationObservation ; {made_by} ?psensor ;\n"
        + "        sosa:resultTime ?date ; sosa:hasResult ?presult .\n"
        + "  ?presult qudt:numericValue ?precipitation .\n"
        + f"  FILTER(({names}) &&\n"
        + f'         ?date >= "{year_from:04d}-01-01"^^xsd:date && ?date <= "{year_to:04d}-12-31"^^xsd:date)\n'
        + "}\nORDER BY ?name ?date\n"
    )


def select(source: Source, query_text: str) -> BindingTable:
    """Run a SELECT locally (store or snapshot view) or against an endpoint URL."""
    if isinstance(source, str):
        return parse_results_json(query_remote(source, query_text))
    return evaluate(parse_query(query_text), source)


def collect_series(
    source: Source,
    station_label: str,
    feature_key: str,
    year_from: int,
    year_to: int,
    *,
    measure_key: Optional[str] = None,
    config: OntologyConfig = DEFAULT_CONFIG,
) -> list[tuple[_dt.date, Decimal]]:
    """Date-sorted (date, value) pairs for a station label and feature.

    ``measure_key`` narrows features that carry several daily statistics
    (tavg/tmax/tmin all belong to temperature).
    """
    if year_from > year_to:
        raise ValueError("year_from must not exceed year_to")
    probe = (
        _prefix_block(config)
        + f'SELECT ?station WHERE {{ ?station a ca:Station ; rdfs:label "{escape_string(station_label)}" }}'
    )
    if not select(source, probe).rows:
        raise StationNotFound(station_label)
    table = select(source, series_query(station_label, feature_key, year_from, year_to, config))
    suffix = "/" + quote(measure_key, safe="") if measure_key is not None else None
    series = []
    for row in table.rows:
        if suffix is not None and not row["obs"].value.endswith(suffix):
            continue
        series.append((row["date"].to_date(), row["value"].to_decimal()))
    series.sort(key=lambda pair: pair[0])
    return series


def quantile(sorted_values: Sequence[Decimal], p: Fraction) -> Fraction:
    """Linear interpolation between closest ranks at zero-based position p*(n-1)."""
    pos = Fraction(p) * (len(sorted_values) - 1)
    lo = pos.numerator // pos.denominator
    frac = pos - lo
    low = Fraction(sorted_values[lo])
    if frac == 0:
        return low
    return low + frac * (Fraction(sorted_values[lo + 1]) - low)


def monthly_summary(series: Iterable[tuple[_dt.date, Decimal]]) -> list[MonthlySummary]:
    """Box-plot statistics per calendar month, pooled across years.

    All statistics are exact and then rounded half-even to 6 decimals; months
    without data carry ``None`` statistics.
    """
    buckets: dict[int, list[Decimal]] = {m: [] for m in range(1, 13)}
    for day, value in series:
        buckets[day.month].append(Decimal(value))
    out = []
    for month, values in buckets.items():
        if not values:
            out.append(MonthlySummary(month, 0))
            continue
        values.sort()
        n = len(values)
        out.append(
            MonthlySummary(
                month=month,
                count=n,
                mean=round_scale(sum(map(Fraction, values)) / n),
                median=round_scale(quantile(values, Fraction(1, 2))),
                q1=round_scale(quantile(values, Fraction(1, 4))),
                q3=round_scale(quantile(values, Fraction(3, 4))),
                min=round_scale(values[0]),
                max=round_scale(values[-1]),
            )
        )
    return out


def trend_buckets(
    series: Iterable[tuple[_dt.date, Decimal]],
    start_year: Optional[int] = None,
    span_years: int = 5,
) -> list[TrendBucket]:
    """Mean of daily values per consecutive ``span_years`` window.

    Windows start at ``start_year`` (default: first data year) and run through
    the last data year; a trailing partial window is kept and shows up via its
    smaller count. Values before ``start_year`` are ignored.
    """
    if span_years < 1:
        raise ValueError("span_years must be >= 1")
    pairs = list(series)
    if not pairs:
        return []
    first = min(d.year for d, _ in pairs)
    last = max(d.year for d, _ in pairs)
    start = first if start_year is None else start_year
    if last < start:
        return []
    n_windows = (last - start) // span_years + 1
    sums = [Fraction(0)] * n_windows
    counts = [0] * n_windows
    for day, value in pairs:
        if day.year < start:
            continue
        k = (day.year - start) // span_years
        sums[k] += Fraction(Decimal(value))
        counts[k] += 1
    return [
        TrendBucket(
            start + k * span_years,
            span_years,
            round_scale(sums[k] / counts[k]) if counts[k] else None,
            counts[k],
        )
        for k in range(n_windows)
    ]


_COLUMNS = {
    "monthly": [f.name for f in fields(MonthlySummary)],
    "trend": [f.name for f in fields(TrendBucket)],
}
_TYPES = {"monthly": MonthlySummary, "trend": TrendBucket}


def _kind(items: Sequence, kind: Optional[str]) -> str:
    if kind is not None:
        if kind not in _COLUMNS:
            raise ValueError(f"unknown table kind {kind!r}")
        return kind
    if not items:
        raise ValueError("table kind is required for an empty table")
    return "monthly" if isinstance(items[0], MonthlySummary) else "trend"


def _json_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, Decimal):
        return format(value, "f")
    return json.dumps(value)


def format_table(items: Sequence, format: str = "csv", kind: Optional[str] = None) -> str:
    """CSV with a header row, or JSON as an array of objects, columns in declaration order.

    monthly: month,count,mean,median,q1,q3,min,max
    trend:   start_year,span_years,mean,count
    """
    columns = _COLUMNS[_kind(items, kind)]
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for item in items:
            row = asdict(item)
            writer.writerow(["" if row[c] is None else format_cell(row[c]) for c in columns])
        return buf.getvalue()
    if format == "json":
        objects = []
        for item in items:
            row = asdict(item)
            objects.append("{" + ", ".join(f'"{c}": {_json_value(row[c])}' for c in columns) + "}")
        return "[" + ",\n ".join(objects) + "]\n"
    raise ValueError(f"unknown table format {format!r}")


def format_cell(value) -> str:
    return format(value, "f") if isinstance(value, Decimal) else str(value)


def emit_table(
    items: Sequence,
    format: str,
    path: Union[str, os.PathLike],
    kind: Optional[str] = None,
) -> Path:
    path = Path(path)
    path.write_text(format_table(items, format, kind), encoding="utf-8")
    return path


def read_table(path: Union[str, os.PathLike], kind: str) -> list:
    """Read back a JSON table written by :func:`emit_table`."""
    cls = _TYPES[kind]
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh, parse_float=Decimal)
    out = []
    for row in rows:
        values = {}
        for f in fields(cls):
            v = row[f.name]
            values[f.name] = Decimal(v) if isinstance(v, int) and f.type != "int" else v
        out.append(cls(**values))
    return out
