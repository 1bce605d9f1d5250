"""The CA vocabulary: SOSA subclasses per climate feature and the observation graph shape.

Each climate feature (temperature, precipitation, ...) gets its own
``<Stem>Observation``, ``<Stem>Sensor`` and ``<Stem>Result`` classes under the
CA class namespace. One daily value becomes::

    station  a ca:Station ; rdfs:label ... ; wgs84:lat ... ; wgs84:long ...
    sensor   a ca:<Stem>Sensor ; sosa:isHostedBy station
    obs      a ca:<Stem>Observation ; sosa:isMadeBySensor sensor ;
             sosa:resultTime date ; sosa:observedProperty cf:... ;
             sosa:hasResult result
    result   qudt:numericValue value

Result class and unit are stated once per feature in the ontology document
rather than repeated on every result node.
"""

from __future__ import annotations

import datetime as _dt
import os
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterable, Mapping, Optional
from urllib.parse import quote

from .rdf import (
    CF,
    IRI,
    OWL,
    QUDT,
    RDF,
    RDFS,
    SOSA,
    UNIT,
    WGS84,
    XSD,
    Literal,
    Namespace,
    Triple,
)
from .turtle import SerializationConfig, serialize_turtle

__all__ = [
    "CA",
    "CA_INSTANCE_BASE",
    "ClimateFeature",
    "FeatureRegistry",
    "StationDescriptor",
    "OntologyConfig",
    "InvalidStationId",
    "BUILTIN_REGISTRY",
    "DEFAULT_CONFIG",
    "default_prefixes",
    "mint_iris",
    "build_station_triples",
    "build_observation_triples",
    "ontology_triples",
    "emit_ontology_document",
]

CA = Namespace("http://example.org/ca#")
CA_INSTANCE_BASE = "http://example.org/ca/"


class InvalidStationId(ValueError):
    pass


@dataclass(frozen=True)
class ClimateFeature:
    key: str
    observation_class: IRI
    sensor_class: IRI
    result_class: IRI
    observed_property: IRI
    unit: IRI

    @classmethod
    def from_stem(
        cls,
        key: str,
        stem: str,
        observed_property: IRI,
        unit: IRI,
        namespace: str = CA,
    ) -> "ClimateFeature":
        ns = Namespace(namespace)
        return cls(
            key=key,
            observation_class=ns[stem + "Observation"],
            sensor_class=ns[stem + "Sensor"],
            result_class=ns[stem + "Result"],
            observed_property=observed_property,
            unit=unit,
        )

    @property
    def stem(self) -> str:
        return _local_name(self.observation_class)[: -len("Observation")]


def _local_name(iri: IRI) -> str:
    value = iri.value
    cut = max(value.rfind("#"), value.rfind("/"))
    return value[cut + 1:]


class FeatureRegistry(Mapping[str, ClimateFeature]):
    """Immutable key -> :class:`ClimateFeature` table."""

    def __init__(self, features: Iterable[ClimateFeature] = ()) -> None:
        table: dict[str, ClimateFeature] = {}
        for feature in features:
            if feature.key in table:
                raise ValueError(f"duplicate feature key {feature.key!r}")
            stems = {
                _local_name(feature.observation_class).removesuffix("Observation"),
                _local_name(feature.sensor_class).removesuffix("Sensor"),
                _local_name(feature.result_class).removesuffix("Result"),
            }
            if len(stems) != 1:
                raise ValueError(f"feature {feature.key!r} classes do not share a stem")
            table[feature.key] = feature
        self._table = table

    def __getitem__(self, key: str) -> ClimateFeature:
        return self._table[key]

    def __iter__(self):
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def with_unit(self, key: str, unit: IRI) -> "FeatureRegistry":
        return FeatureRegistry(
            replace(f, unit=unit) if f.key == key else f for f in self._table.values()
        )


BUILTIN_REGISTRY = FeatureRegistry(
    [
        ClimateFeature.from_stem("temperature", "Temperature", CF.air_temperature, UNIT.DEG_C),
        ClimateFeature.from_stem("precipitation", "Precipitation", CF.precipitation_amount, UNIT.MilliM),
        ClimateFeature.from_stem("wind_speed", "WindSpeed", CF.wind_speed, UNIT["M-PER-SEC"]),
        ClimateFeature.from_stem(
            "sea_level_pressure", "SeaLevelPressure", CF.air_pressure_at_sea_level, UNIT.HectoPA
        ),
    ]
)


@dataclass(frozen=True)
class StationDescriptor:
    station_id: str
    name: str
    latitude: Decimal
    longitude: Decimal
    elevation: Optional[Decimal] = None

    def __post_init__(self) -> None:
        if not self.station_id or not self.station_id.strip():
            raise InvalidStationId("station id is empty")
        for attr in ("latitude", "longitude", "elevation"):
            value = getattr(self, attr)
            if value is not None and not isinstance(value, Decimal):
                object.__setattr__(self, attr, Decimal(str(value)))
        if not Decimal(-90) <= self.latitude <= Decimal(90):
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not Decimal(-180) <= self.longitude <= Decimal(180):
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")
        if not all(v.is_finite() for v in (self.latitude, self.longitude, self.elevation) if v is not None):
            raise ValueError("station coordinates must be finite")


@dataclass(frozen=True)
class OntologyConfig:
    """Namespaces and spelling choices for generated data.

    ``standard_sosa`` switches ``sosa:isMadeBySensor`` to the published
    ``sosa:madeBySensor``.
    """

    instance_base: str = CA_INSTANCE_BASE
    standard_sosa: bool = False
    registry: FeatureRegistry = field(default=BUILTIN_REGISTRY, compare=False)

    def __post_init__(self) -> None:
        base = self.instance_base if self.instance_base.endswith("/") else self.instance_base + "/"
        IRI(base)
        object.__setattr__(self, "instance_base", base)

    @classmethod
    def from_env(cls, **overrides) -> "OntologyConfig":
        base = os.environ.get("CAKG_BASE_IRI")
        if base and "instance_base" not in overrides:
            overrides["instance_base"] = base
        return cls(**overrides)

    @property
    def made_by_sensor(self) -> IRI:
        return SOSA.madeBySensor if self.standard_sosa else SOSA.isMadeBySensor


DEFAULT_CONFIG = OntologyConfig()


def default_prefixes(config: OntologyConfig = DEFAULT_CONFIG) -> dict[str, str]:
    return {
        "ca": str(CA),
        "cai": config.instance_base,
        "sosa": str(SOSA),
        "cf": str(CF),
        "qudt": str(QUDT),
        "unit": str(UNIT),
        "wgs84": str(WGS84),
        "rdf": str(RDF),
        "rdfs": str(RDFS),
        "xsd": str(XSD),
        "owl": str(OWL),
    }


def _segment(station_id: str) -> str:
    if not station_id:
        raise InvalidStationId("station id is empty")
    return quote(station_id, safe="")


def mint_iris(
    station: StationDescriptor,
    feature: ClimateFeature,
    date: _dt.date,
    measure_key: str,
    config: OntologyConfig = DEFAULT_CONFIG,
) -> tuple[IRI, IRI, IRI, IRI]:
    """Deterministic (station, sensor, observation, result) IRIs."""
    base = config.instance_base
    sid = _segment(station.station_id)
    day = date.isoformat()
    measure = quote(measure_key, safe="")
    return (
        IRI(f"{base}station/{sid}"),
        IRI(f"{base}sensor/{sid}/{quote(feature.key, safe='')}"),
        IRI(f"{base}obs/{sid}/{day}/{measure}"),
        IRI(f"{base}result/{sid}/{day}/{measure}"),
    )


def station_iri(station_id: str, config: OntologyConfig = DEFAULT_CONFIG) -> IRI:
    return IRI(f"{config.instance_base}station/{_segment(station_id)}")


def build_station_triples(
    station: StationDescriptor, config: OntologyConfig = DEFAULT_CONFIG
) -> set[Triple]:
    node = station_iri(station.station_id, config)
    triples = {
        Triple(node, RDF.type, CA.Station),
        Triple(node, RDFS.label, Literal(station.name)),
        Triple(node, WGS84.lat, Literal(str(station.latitude), XSD.decimal)),
        Triple(node, WGS84.long, Literal(str(station.longitude), XSD.decimal)),
    }
    if station.elevation is not None:
        triples.add(Triple(node, WGS84.alt, Literal(str(station.elevation), XSD.decimal)))
    return triples


def build_observation_triples(
    station: StationDescriptor,
    feature: ClimateFeature,
    date: _dt.date,
    measure_key: str,
    value,
    config: OntologyConfig = DEFAULT_CONFIG,
) -> set[Triple]:
    """The 8 triples for one daily value: 2 for the sensor, 6 for observation and result.

    ``value`` may be a :class:`~decimal.Decimal` or an exact decimal string; a
    string is kept verbatim as the literal's lexical form.
    """
    station_node, sensor, obs, result = mint_iris(station, feature, date, measure_key, config)
    lexical = value if isinstance(value, str) else str(value)
    return {
        Triple(sensor, RDF.type, feature.sensor_class),
        Triple(sensor, SOSA.isHostedBy, station_node),
        Triple(obs, RDF.type, feature.observation_class),
        Triple(obs, config.made_by_sensor, sensor),
        Triple(obs, SOSA.resultTime, Literal(date.isoformat(), XSD.date)),
        Triple(obs, SOSA.observedProperty, feature.observed_property),
        Triple(obs, SOSA.hasResult, result),
        Triple(result, QUDT.numericValue, Literal(lexical, XSD.decimal)),
    }


def ontology_triples(registry: Iterable[ClimateFeature] | FeatureRegistry = BUILTIN_REGISTRY) -> set[Triple]:
    features = registry.values() if isinstance(registry, Mapping) else registry
    triples = {Triple(CA.Station, RDFS.subClassOf, SOSA.Platform)}
    for f in features:
        for cls, parent in (
            (f.observation_class, SOSA.Observation),
            (f.sensor_class, SOSA.Sensor),
            (f.result_class, SOSA.Result),
        ):
            triples.add(Triple(cls, RDFS.subClassOf, parent))
        triples.add(Triple(f.result_class, QUDT.unit, f.unit))
    return triples


def emit_ontology_document(
    registry: Iterable[ClimateFeature] | FeatureRegistry = BUILTIN_REGISTRY,
) -> str:
    """Turtle for the CA class hierarchy: one subclass axiom per class plus ``ca:Station``."""
    prefixes = {k: v for k, v in default_prefixes().items() if k != "cai"}
    return serialize_turtle(ontology_triples(registry), SerializationConfig(prefixes))
