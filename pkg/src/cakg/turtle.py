"""Turtle and N-Triples serialization plus a parser for the matching subset.

The parser understands what :func:`serialize_turtle` writes, plus the usual
hand-written conveniences: ``@prefix``/``PREFIX`` directives, prefixed names,
``a``, ``;`` and ``,`` groups, short and long string literals with escapes,
``^^`` datatypes, language tags, numeric and boolean shorthand and ``#``
comments. Blank nodes, collections and ``@base`` are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

from .rdf import (
    IRI,
    RDF,
    XSD,
    Literal,
    RDFError,
    Term,
    Triple,
    UnknownPrefix,
    escape_string,
    validate_prefix_label,
)

__all__ = [
    "SerializationConfig",
    "TurtleSyntaxError",
    "serialize_ntriples",
    "serialize_turtle",
    "parse",
    "MEDIA_TYPES",
]

MEDIA_TYPES = {"turtle": "text/turtle", "ntriples": "application/n-triples"}


class TurtleSyntaxError(RDFError):
    def __init__(self, line: int, column: int, message: str) -> None:
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass
class SerializationConfig:
    prefixes: Mapping[str, str] = field(default_factory=dict)
    sort_output: bool = True
    group_by_subject: bool = True

    def __post_init__(self) -> None:
        for label, ns in self.prefixes.items():
            validate_prefix_label(label)
            IRI(str(ns))


def _sort_key(triple: Triple) -> tuple:
    # rdf:type first within a subject so `a` leads each block
    return (
        triple.subject.value,
        triple.predicate != RDF.type,
        triple.predicate.value,
        triple.object.n3(),
    )


def serialize_ntriples(triples: Iterable[Triple], sort_output: bool = True) -> str:
    lines = [t.n3() for t in triples]
    if sort_output:
        lines.sort()
    return "".join(line + "\n" for line in lines)


_PN_LOCAL_SAFE = re.compile(r"[A-Za-z0-9_]([A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?\Z")


class _Abbreviator:
    def __init__(self, prefixes: Mapping[str, str]) -> None:
        # longest namespace wins when several match
        self._bindings = sorted(
            ((str(ns), label) for label, ns in prefixes.items()),
            key=lambda item: -len(item[0]),
        )

    def iri(self, iri: IRI) -> str:
        for ns, label in self._bindings:
            if iri.value.startswith(ns):
                local = iri.value[len(ns):]
                if local == "" or _PN_LOCAL_SAFE.match(local):
                    return f"{label}:{local}"
        return iri.n3()

    def term(self, term: Term) -> str:
        if isinstance(term, IRI):
            return self.iri(term)
        quoted = '"' + escape_string(term.lexical) + '"'
        if term.language is not None:
            return f"{quoted}@{term.language}"
        if term.datatype == XSD.string:
            return quoted
        return f"{quoted}^^{self.iri(term.datatype)}"


def serialize_turtle(triples: Iterable[Triple], config: Optional[SerializationConfig] = None) -> str:
    """Serialize to Turtle. Every configured prefix gets an ``@prefix`` line."""
    config = config or SerializationConfig()
    abbrev = _Abbreviator(config.prefixes)
    out = [f"@prefix {label}: <{ns}> .\n" for label, ns in config.prefixes.items()]
    items = list(triples)
    if config.sort_output:
        items.sort(key=_sort_key)
    if items and out:
        out.append("\n")

    def verb(p: IRI) -> str:
        return "a" if p == RDF.type else abbrev.iri(p)

    if not config.group_by_subject:
        for s, p, o in items:
            out.append(f"{abbrev.iri(s)} {verb(p)} {abbrev.term(o)} .\n")
        return "".join(out)

    # group consecutive runs only, so unsorted input still serializes correctly
    i = 0
    while i < len(items):
        subject = items[i].subject
        j = i
        while j < len(items) and items[j].subject == subject:
            j += 1
        block = items[i:j]
        parts = []
        k = 0
        while k < len(block):
            pred = block[k].predicate
            objs = []
            while k < len(block) and block[k].predicate == pred:
                objs.append(abbrev.term(block[k].object))
                k += 1
            parts.append(f"{verb(pred)} " + " ,\n        ".join(objs))
        out.append(abbrev.iri(subject) + " " + " ;\n    ".join(parts) + " .\n")
        if j < len(items):
            out.append("\n")
        i = j
    return "".join(out)


# --- parsing -------------------------------------------------------------

_PN_CHARS_BASE = (
    "A-Za-z\u00c0-\u00d6\u00d8-\u00f6\u00f8-\u02ff\u0370-\u037d\u037f-\u1fff"
    "\u200c-\u200d\u2070-\u218f\u2c00-\u2fef\u3001-\ud7ff\uf900-\ufdcf\ufdf0-\ufffd"
)
_PN_CHARS_U = _PN_CHARS_BASE + "_"
_PN_CHARS = _PN_CHARS_U + r"\-0-9\u00b7\u0300-\u036f\u203f-\u2040"
_PLX = r"(?:%[0-9A-Fa-f]{2}|\\[_~.\-!$&'()*+,;=/?#@%])"
_PN_PREFIX = rf"[{_PN_CHARS_BASE}](?:[{_PN_CHARS}.]*[{_PN_CHARS}])?"
_PN_LOCAL = (
    rf"(?:[{_PN_CHARS_U}:0-9]|{_PLX})"
    rf"(?:(?:[{_PN_CHARS}.:]|{_PLX})*(?:[{_PN_CHARS}:]|{_PLX}))?"
)

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\r\n]*"),
    ("IRIREF", r"<([^<>\"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*>"),
    ("STRING_LONG", r'"""(?:[^"\\]|\\.|"(?!""))*"""' + r"|'''(?:[^'\\]|\\.|'(?!''))*'''"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"' + r"|'(?:[^'\\\n\r]|\\.)*'"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DATATYPE", r"\^\^"),
    ("DOUBLE", r"[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+)"),
    ("DECIMAL", r"[+-]?\d*\.\d+"),
    ("INTEGER", r"[+-]?\d+"),
    ("PNAME", rf"(?:{_PN_PREFIX})?:(?:{_PN_LOCAL})?"),
    ("BLANK", r"_:|\[|\(|\)|\]"),
    ("KEYWORD", r"[A-Za-z]+"),
    ("PUNCT", r"[.;,]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))

_STRING_ESCAPES = {
    "t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
    '"': '"', "'": "'", "\\": "\\",
}
_UCHAR = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")
_LOCAL_ESC = re.compile(r"\\([_~.\-!$&'()*+,;=/?#@%])")


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(document: str) -> Iterator[_Token]:
    pos = 0
    line = 1
    line_start = 0
    n = len(document)
    while pos < n:
        m = _TOKEN_RE.match(document, pos)
        if m is None:
            raise TurtleSyntaxError(line, pos - line_start + 1, f"unexpected character {document[pos]!r}")
        kind = m.lastgroup
        text = m.group()
        if kind not in ("WS", "COMMENT"):
            yield _Token(kind, text, line, pos - line_start + 1)
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()


def _unescape_string(body: str, tok: _Token) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1] if i + 1 < len(body) else ""
        if nxt in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[nxt])
            i += 2
        elif nxt == "u" and re.fullmatch(r"[0-9A-Fa-f]{4}", body[i + 2:i + 6]):
            out.append(chr(int(body[i + 2:i + 6], 16)))
            i += 6
        elif nxt == "U" and re.fullmatch(r"[0-9A-Fa-f]{8}", body[i + 2:i + 10]):
            out.append(chr(int(body[i + 2:i + 10], 16)))
            i += 10
        else:
            raise TurtleSyntaxError(tok.line, tok.column, f"bad string escape \\{nxt}")
    return "".join(out)


class _Parser:
    def __init__(self, document: str, fmt: str) -> None:
        self.tokens = list(_tokenize(document))
        self.i = 0
        self.ntriples = fmt == "ntriples"
        self.prefixes: dict[str, str] = {}
        self.triples: set[Triple] = set()
        self._end_line = document.count("\n") + 1

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, expected: str = "token") -> _Token:
        tok = self.peek()
        if tok is None:
            raise TurtleSyntaxError(self._end_line, 1, f"unexpected end of input, expected {expected}")
        self.i += 1
        return tok

    def error(self, tok: _Token, message: str) -> TurtleSyntaxError:
        return TurtleSyntaxError(tok.line, tok.column, message)

    def expect_punct(self, char: str) -> None:
        tok = self.next(repr(char))
        if tok.kind != "PUNCT" or tok.text != char:
            raise self.error(tok, f"expected {char!r}, found {tok.text!r}")

    def run(self) -> set[Triple]:
        while self.peek() is not None:
            tok = self.peek()
            if tok.kind == "LANGTAG" and tok.text in ("@prefix", "@base"):
                self.directive(sparql_style=False)
            elif tok.kind == "KEYWORD" and tok.text.upper() in ("PREFIX", "BASE"):
                self.directive(sparql_style=True)
            else:
                self.statement()
        return self.triples

    def directive(self, sparql_style: bool) -> None:
        tok = self.next()
        if self.ntriples:
            raise self.error(tok, "directives are not allowed in N-Triples")
        if tok.text.lstrip("@").lower() == "base":
            raise self.error(tok, "unsupported feature: base directive")
        name = self.next("prefix name")
        if name.kind != "PNAME" or not name.text.endswith(":") or name.text.count(":") != 1:
            raise self.error(name, f"expected prefix label, found {name.text!r}")
        iri_tok = self.next("IRI")
        if iri_tok.kind != "IRIREF":
            raise self.error(iri_tok, f"expected IRI, found {iri_tok.text!r}")
        self.prefixes[name.text[:-1]] = self.iriref(iri_tok).value
        if not sparql_style:
            self.expect_punct(".")

    def statement(self) -> None:
        subject = self.iri(self.next("subject"), "subject")
        while True:
            pred_tok = self.next("predicate")
            if pred_tok.kind == "KEYWORD" and pred_tok.text == "a" and not self.ntriples:
                predicate = RDF.type
            else:
                predicate = self.iri(pred_tok, "predicate")
            while True:
                obj = self.object(self.next("object"))
                self.triples.add(Triple(subject, predicate, obj))
                tok = self.next("'.'")
                if tok.kind == "PUNCT" and tok.text == "," and not self.ntriples:
                    continue
                break
            if tok.kind == "PUNCT" and tok.text == ";" and not self.ntriples:
                # trailing ';' before '.' is allowed
                while (nxt := self.peek()) is not None and nxt.kind == "PUNCT" and nxt.text == ";":
                    self.i += 1
                nxt = self.peek()
                if nxt is not None and nxt.kind == "PUNCT" and nxt.text == ".":
                    self.i += 1
                    return
                continue
            if tok.kind == "PUNCT" and tok.text == ".":
                return
            raise self.error(tok, f"expected '.', found {tok.text!r}")

    def iriref(self, tok: _Token) -> IRI:
        body = _UCHAR.sub(lambda m: chr(int(m[1] or m[2], 16)), tok.text[1:-1])
        try:
            return IRI(body)
        except RDFError as exc:
            raise self.error(tok, str(exc)) from None

    def iri(self, tok: _Token, role: str) -> IRI:
        if tok.kind == "IRIREF":
            return self.iriref(tok)
        if tok.kind == "PNAME" and not self.ntriples:
            label, _, local = tok.text.partition(":")
            if label not in self.prefixes:
                raise UnknownPrefix(label)
            try:
                return IRI(self.prefixes[label] + _LOCAL_ESC.sub(r"\1", local))
            except RDFError as exc:
                raise self.error(tok, str(exc)) from None
        if tok.kind == "BLANK":
            raise self.error(tok, "unsupported feature: blank nodes and collections")
        raise self.error(tok, f"expected IRI as {role}, found {tok.text!r}")

    def object(self, tok: _Token) -> Term:
        if tok.kind in ("STRING", "STRING_LONG"):
            if self.ntriples and (tok.kind == "STRING_LONG" or tok.text[0] == "'"):
                raise self.error(tok, "only double-quoted strings are allowed in N-Triples")
            quote = 3 if tok.kind == "STRING_LONG" else 1
            lexical = _unescape_string(tok.text[quote:-quote], tok)
            nxt = self.peek()
            try:
                if nxt is not None and nxt.kind == "LANGTAG" and nxt.text not in ("@prefix", "@base"):
                    self.i += 1
                    return Literal(lexical, language=nxt.text[1:])
                if nxt is not None and nxt.kind == "DATATYPE":
                    self.i += 1
                    return Literal(lexical, self.iri(self.next("datatype IRI"), "datatype"))
                return Literal(lexical)
            except TurtleSyntaxError:
                raise
            except RDFError as exc:
                raise self.error(tok, str(exc)) from None
        if not self.ntriples:
            if tok.kind == "INTEGER":
                return Literal(tok.text, XSD.integer)
            if tok.kind == "DECIMAL":
                return Literal(tok.text, XSD.decimal)
            if tok.kind == "DOUBLE":
                return Literal(tok.text, XSD.double)
            if tok.kind == "KEYWORD" and tok.text in ("true", "false"):
                return Literal(tok.text, XSD.boolean)
        return self.iri(tok, "object")


def parse(document: str, format: str = "turtle") -> set[Triple]:
    """Parse a Turtle or N-Triples document into a set of triples.

    Raises :class:`TurtleSyntaxError` with line and column on grammar
    violations and :class:`~cakg.rdf.UnknownPrefix` on unbound prefixes.
    """
    if format not in ("turtle", "ntriples"):
        raise ValueError(f"unknown RDF format {format!r}")
    return _Parser(document, format).run()
