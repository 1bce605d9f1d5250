"""RDF terms, triples and prefix handling shared by the rest of the toolkit."""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Mapping, NamedTuple, Optional, Union

__all__ = [
    "IRI",
    "Literal",
    "Term",
    "Triple",
    "Namespace",
    "RDFError",
    "EmptyIri",
    "IllegalCharacter",
    "MissingScheme",
    "LexicalFormInvalid",
    "UnknownPrefix",
    "validate_iri",
    "make_typed_literal",
    "expand_pname",
    "validate_prefix_label",
    "RDF",
    "RDFS",
    "XSD",
    "OWL",
    "SOSA",
    "WGS84",
    "QUDT",
    "UNIT",
    "CF",
]


class RDFError(ValueError):
    """Base class for lexical errors in RDF terms."""


class EmptyIri(RDFError):
    def __init__(self) -> None:
        super().__init__("IRI is empty")


class IllegalCharacter(RDFError):
    """Raised for a character excluded from Turtle IRIREF; ``position`` is 1-based."""

    def __init__(self, position: int, char: str) -> None:
        self.position = position
        self.char = char
        super().__init__(f"illegal character {char!r} in IRI at position {position}")


class MissingScheme(RDFError):
    def __init__(self, value: str) -> None:
        super().__init__(f"IRI has no scheme: {value!r}")


class LexicalFormInvalid(RDFError):
    def __init__(self, lexical: str, datatype: "IRI") -> None:
        self.lexical = lexical
        self.datatype = datatype
        super().__init__(f"{lexical!r} is not a valid lexical form for <{datatype.value}>")


class UnknownPrefix(RDFError):
    def __init__(self, label: str) -> None:
        self.label = label
        super().__init__(f"unknown prefix {label!r}")


_IRI_EXCLUDED = set(' <>"{}|^`\\')
_SCHEME = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:")


def _check_iri(value: str) -> None:
    if not value:
        raise EmptyIri()
    for i, ch in enumerate(value):
        if ch in _IRI_EXCLUDED or ord(ch) <= 0x20:
            raise IllegalCharacter(i + 1, ch)
    if not _SCHEME.match(value):
        raise MissingScheme(value)


@dataclass(frozen=True, order=True)
class IRI:
    value: str

    def __post_init__(self) -> None:
        _check_iri(self.value)

    def __str__(self) -> str:
        return self.value

    def n3(self) -> str:
        return f"<{self.value}>"


def validate_iri(candidate: str) -> IRI:
    """Return ``candidate`` as an :class:`IRI` or raise the first lexical problem found."""
    return IRI(candidate)


class Namespace(str):
    """A namespace IRI string; indexing or attribute access yields member IRIs."""

    def __getitem__(self, local: str) -> IRI:  # type: ignore[override]
        return IRI(str(self) + local)

    def __getattr__(self, local: str) -> IRI:
        if local.startswith("__"):
            raise AttributeError(local)
        return self[local]


RDF = Namespace("http://www.w3.org/1999/02/22-rdf-syntax-ns#")
RDFS = Namespace("http://www.w3.org/2000/01/rdf-schema#")
XSD = Namespace("http://www.w3.org/2001/XMLSchema#")
OWL = Namespace("http://www.w3.org/2002/07/owl#")
SOSA = Namespace("http://www.w3.org/ns/sosa/")
WGS84 = Namespace("http://www.w3.org/2003/01/geo/wgs84_pos#")
QUDT = Namespace("http://qudt.org/schema/qudt/")
UNIT = Namespace("http://qudt.org/vocab/unit/")
CF = Namespace("http://purl.oclc.org/NET/ssnx/cf/cf-property#")

_DECIMAL = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)\Z")
_INTEGER = re.compile(r"[+-]?\d+\Z")
_DATE = re.compile(r"(\d{4})-(\d{2})-(\d{2})\Z")
_LANG = re.compile(r"[A-Za-z]+(-[A-Za-z0-9]+)*\Z")


def _valid_date(lexical: str) -> bool:
    m = _DATE.match(lexical)
    if not m:
        return False
    try:
        _dt.date(int(m[1]), int(m[2]), int(m[3]))
    except ValueError:
        return False
    return True


_LEXICAL_CHECKS = {
    XSD.decimal.value: lambda s: bool(_DECIMAL.match(s)),
    XSD.integer.value: lambda s: bool(_INTEGER.match(s)),
    XSD.date.value: _valid_date,
    XSD.string.value: lambda s: True,
}


@dataclass(frozen=True)
class Literal:
    """A typed or language-tagged literal.

    Equality is structural: ``"1.0"`` and ``"1.00"`` are different terms even
    though they denote the same decimal value.
    """

    lexical: str
    datatype: IRI = XSD.string
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.language is not None:
            if not self.language or not self.language.isascii() or not _LANG.match(self.language):
                raise RDFError(f"invalid language tag {self.language!r}")
            if self.datatype != RDF.langString:
                object.__setattr__(self, "datatype", RDF.langString)
        elif self.datatype == RDF.langString:
            raise RDFError("rdf:langString literal requires a language tag")
        check = _LEXICAL_CHECKS.get(self.datatype.value)
        if check is not None and not check(self.lexical):
            raise LexicalFormInvalid(self.lexical, self.datatype)

    def __str__(self) -> str:
        return self.lexical

    def n3(self) -> str:
        quoted = '"' + escape_string(self.lexical) + '"'
        if self.language is not None:
            return f"{quoted}@{self.language}"
        if self.datatype == XSD.string:
            return quoted
        return f"{quoted}^^<{self.datatype.value}>"

    def to_decimal(self) -> Decimal:
        try:
            return Decimal(self.lexical)
        except InvalidOperation:
            raise LexicalFormInvalid(self.lexical, self.datatype) from None

    def to_date(self) -> _dt.date:
        return _dt.date.fromisoformat(self.lexical)


Term = Union[IRI, Literal]


class Triple(NamedTuple):
    subject: IRI
    predicate: IRI
    object: Term

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


def make_typed_literal(lexical: str, datatype: IRI) -> Literal:
    """Build a literal, validating the lexical form for xsd decimal/integer/date/string."""
    return Literal(lexical, datatype)


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def escape_string(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


_PN_PREFIX = re.compile(r"([A-Za-z]([A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)?\Z")


def validate_prefix_label(label: str) -> str:
    if not _PN_PREFIX.match(label):
        raise RDFError(f"invalid prefix label {label!r}")
    return label


def expand_pname(prefixed: str, prefixes: Mapping[str, str]) -> IRI:
    """Expand ``label:local`` against ``prefixes`` (label -> namespace IRI string)."""
    label, sep, local = prefixed.partition(":")
    if not sep:
        raise RDFError(f"not a prefixed name: {prefixed!r}")
    try:
        namespace = prefixes[label]
    except KeyError:
        raise UnknownPrefix(label) from None
    return IRI(str(namespace) + local)
