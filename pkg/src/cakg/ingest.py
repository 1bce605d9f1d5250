"""NOAA CDO daily-summaries CSV to CA-ontology triples."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import logging
import os
import re
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import BinaryIO, Iterable, Optional, Sequence, TextIO, Union

from .ontology import (
    DEFAULT_CONFIG,
    FeatureRegistry,
    OntologyConfig,
    StationDescriptor,
    build_observation_triples,
    build_station_triples,
    default_prefixes,
)
from .rdf import IRI, Triple
from .store import TripleStore
from .turtle import SerializationConfig, serialize_turtle

__all__ = [
    "ColumnMapping",
    "IngestConfig",
    "ObservationRecord",
    "IngestWarning",
    "IngestReport",
    "IngestError",
    "MissingRequiredColumn",
    "MalformedRow",
    "MalformedCell",
    "UnknownFeature",
    "DEFAULT_MAPPINGS",
    "REQUIRED_COLUMNS",
    "parse_cdo_csv",
    "records_to_triples",
    "run_pipeline",
    "load_config",
]

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("STATION", "NAME", "LATITUDE", "LONGITUDE", "DATE")
_METADATA_COLUMNS = set(REQUIRED_COLUMNS) | {"ELEVATION"}
_DECIMAL_CELL = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)\Z")
_DATE_CELL = re.compile(r"\d{4}-\d{2}-\d{2}\Z")


class IngestError(Exception):
    pass


class MissingRequiredColumn(IngestError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"missing required column {name}")


class MalformedRow(IngestError):
    def __init__(self, line: int, reason: str = "") -> None:
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))


class MalformedCell(IngestError):
    def __init__(self, line: int, column: str, value: str) -> None:
        self.line = line
        self.column = column
        super().__init__(f"malformed value {value!r} in column {column} at line {line}")


class UnknownFeature(IngestError):
    def __init__(self, key: str) -> None:
        self.key = key
        super().__init__(f"unknown climate feature {key!r}")


@dataclass(frozen=True)
class ColumnMapping:
    column_name: str
    feature_key: str
    measure_key: str
    unit_override: Optional[IRI] = None


DEFAULT_MAPPINGS = (
    ColumnMapping("PRCP", "precipitation", "prcp"),
    ColumnMapping("TAVG", "temperature", "tavg"),
    ColumnMapping("TMAX", "temperature", "tmax"),
    ColumnMapping("TMIN", "temperature", "tmin"),
    ColumnMapping("AWND", "wind_speed", "awnd"),
)


@dataclass(frozen=True)
class IngestConfig:
    mappings: Sequence[ColumnMapping] = DEFAULT_MAPPINGS
    strict: bool = False
    missing_sentinel: Optional[str] = None
    ontology: OntologyConfig = DEFAULT_CONFIG

    def __post_init__(self) -> None:
        names = [m.column_name for m in self.mappings]
        if len(set(names)) != len(names):
            raise ValueError("mapped column names must be unique")
        for m in self.mappings:
            if m.feature_key not in self.ontology.registry:
                raise UnknownFeature(m.feature_key)

    def registry(self) -> FeatureRegistry:
        """The feature registry with any per-column unit overrides applied."""
        registry = self.ontology.registry
        for m in self.mappings:
            if m.unit_override is not None:
                registry = registry.with_unit(m.feature_key, m.unit_override)
        return registry


@dataclass(frozen=True)
class ObservationRecord:
    station: StationDescriptor
    date: _dt.date
    feature_key: str
    measure_key: str
    value: str  # exact decimal lexical form from the CSV cell

    @property
    def decimal(self) -> Decimal:
        return Decimal(self.value)


@dataclass(frozen=True)
class IngestWarning:
    line: Optional[int]
    column: Optional[str]
    message: str

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.column is not None:
            where.append(f"column {self.column}")
        return (", ".join(where) + ": " if where else "") + self.message


@dataclass
class IngestReport:
    rows: int = 0
    records: int = 0
    triples: int = 0
    warnings: list[IngestWarning] = field(default_factory=list)

    def summary(self) -> str:
        return f"rows={self.rows} records={self.records} triples={self.triples} warnings={len(self.warnings)}"


def _text_stream(document: Union[bytes, str, BinaryIO, TextIO]) -> TextIO:
    if isinstance(document, bytes):
        return io.StringIO(document.decode("utf-8-sig"))
    if isinstance(document, str):
        return io.StringIO(document)
    if isinstance(document, io.TextIOBase):
        return document
    return io.TextIOWrapper(document, encoding="utf-8-sig", newline="")


def _parse_date(text: str) -> Optional[_dt.date]:
    if not _DATE_CELL.match(text):
        return None
    try:
        return _dt.date.fromisoformat(text)
    except ValueError:
        return None


def _parse_records(
    document, config: IngestConfig
) -> tuple[list[ObservationRecord], list[IngestWarning], int]:
    reader = csv.reader(_text_stream(document))
    warnings: list[IngestWarning] = []
    records: list[ObservationRecord] = []
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingRequiredColumn(REQUIRED_COLUMNS[0]) from None
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    for name in REQUIRED_COLUMNS:
        if name not in header:
            raise MissingRequiredColumn(name)
    col = {name: i for i, name in enumerate(header)}
    mapped = [(m, col[m.column_name]) for m in config.mappings if m.column_name in col]
    known = _METADATA_COLUMNS | {m.column_name for m in config.mappings}
    unmapped = [h for h in header if h not in known]
    if unmapped:
        warnings.append(IngestWarning(None, None, "ignored unmapped columns: " + ", ".join(unmapped)))

    stations: dict[str, StationDescriptor] = {}
    rows = 0
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        rows += 1
        if len(row) != len(header):
            if config.strict:
                raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
            warnings.append(IngestWarning(line, None, f"skipped row with {len(row)} fields"))
            continue
        cells = [c.strip() for c in row]
        sid = cells[col["STATION"]]
        date = _parse_date(cells[col["DATE"]])
        try:
            if date is None:
                raise ValueError(f"date {cells[col['DATE']]!r} is not YYYY-MM-DD")
            station = stations.get(sid)
            if station is None:
                elevation = cells[col["ELEVATION"]] if "ELEVATION" in col else ""
                for label, text in (
                    ("LATITUDE", cells[col["LATITUDE"]]),
                    ("LONGITUDE", cells[col["LONGITUDE"]]),
                    ("ELEVATION", elevation),
                ):
                    if text and not _DECIMAL_CELL.match(text):
                        raise ValueError(f"{label} {text!r} is not a decimal")
                station = StationDescriptor(
                    sid,
                    cells[col["NAME"]],
                    Decimal(cells[col["LATITUDE"]]),
                    Decimal(cells[col["LONGITUDE"]]),
                    Decimal(elevation) if elevation else None,
                )
                stations[sid] = station
            else:
                lat, lon = cells[col["LATITUDE"]], cells[col["LONGITUDE"]]
                try:
                    same = Decimal(lat) == station.latitude and Decimal(lon) == station.longitude
                except ArithmeticError:
                    same = False
                if not same:
                    warnings.append(
                        IngestWarning(line, None, f"station {sid} coordinates ({lat}, {lon}) conflict with first row; keeping first")
                    )
        except (ValueError, ArithmeticError) as exc:
            if config.strict:
                raise MalformedRow(line, str(exc)) from None
            warnings.append(IngestWarning(line, None, f"skipped row: {exc}"))
            continue
        for mapping, index in mapped:
            text = cells[index]
            if not text or (config.missing_sentinel is not None and text == config.missing_sentinel):
                continue
            if not _DECIMAL_CELL.match(text):
                if config.strict:
                    raise MalformedCell(line, mapping.column_name, text)
                warnings.append(IngestWarning(line, mapping.column_name, f"skipped malformed value {text!r}"))
                continue
            records.append(ObservationRecord(station, date, mapping.feature_key, mapping.measure_key, text))
    return records, warnings, rows


def parse_cdo_csv(
    document: Union[bytes, str, BinaryIO, TextIO], config: IngestConfig = IngestConfig()
) -> tuple[list[ObservationRecord], list[IngestWarning]]:
    """Parse a CDO daily-summaries export: one record per filled, mapped cell.

    Empty cells are skipped silently, unmapped columns produce a single summary
    warning and malformed cells a warning each (or an exception when
    ``config.strict``).
    """
    records, warnings, _ = _parse_records(document, config)
    return records, warnings


def records_to_triples(
    records: Iterable[ObservationRecord],
    registry: Optional[FeatureRegistry] = None,
    config: OntologyConfig = DEFAULT_CONFIG,
) -> set[Triple]:
    registry = registry if registry is not None else config.registry
    triples: set[Triple] = set()
    seen_stations: set[StationDescriptor] = set()
    for rec in records:
        try:
            feature = registry[rec.feature_key]
        except KeyError:
            raise UnknownFeature(rec.feature_key) from None
        if rec.station not in seen_stations:
            seen_stations.add(rec.station)
            triples |= build_station_triples(rec.station, config)
        triples |= build_observation_triples(rec.station, feature, rec.date, rec.measure_key, rec.value, config)
    return triples


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_pipeline(
    csv_path: Union[str, os.PathLike],
    config: IngestConfig = IngestConfig(),
    output: Union[str, os.PathLike, TripleStore, None] = None,
) -> IngestReport:
    """Convert ``csv_path`` and write Turtle to ``output`` (a path) or insert into it (a store).

    The Turtle file is written atomically: on any error no partial file is left.
    """
    with open(csv_path, "rb") as fh:
        data = fh.read()
    records, warnings, rows = _parse_records(data, config)
    triples = records_to_triples(records, config.registry(), config.ontology)
    for w in warnings:
        log.warning("%s: %s", csv_path, w)
    if isinstance(output, TripleStore):
        output.insert(triples)
    elif output is not None:
        prefixes = default_prefixes(config.ontology)
        _write_atomic(Path(output), serialize_turtle(triples, SerializationConfig(prefixes)))
    return IngestReport(rows=rows, records=len(records), triples=len(triples), warnings=warnings)


def load_config(path: Union[str, os.PathLike], **overrides) -> IngestConfig:
    """Read an ingest TOML file with keys ``mappings``, ``strict``, ``missing_sentinel``, ``base_iri``.

    ``mappings`` is a table of column name -> {feature, measure, unit}.
    """
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    mappings = DEFAULT_MAPPINGS
    if "mappings" in doc:
        mappings = tuple(
            ColumnMapping(
                column,
                spec["feature"],
                spec.get("measure", column.lower()),
                IRI(spec["unit"]) if "unit" in spec else None,
            )
            for column, spec in doc["mappings"].items()
        )
    ontology = OntologyConfig(
        instance_base=overrides.pop("base_iri", None) or doc.get("base_iri", DEFAULT_CONFIG.instance_base),
        standard_sosa=overrides.pop("standard_sosa", None) or doc.get("standard_sosa", False),
    )
    return IngestConfig(
        mappings=mappings,
        strict=overrides.pop("strict", None) or doc.get("strict", False),
        missing_sentinel=overrides.pop("missing_sentinel", None) or doc.get("missing_sentinel"),
        ontology=ontology,
    )
