"""Parser and printer for the SPARQL SELECT subset.

Supported: PREFIX, SELECT [DISTINCT] (variables | * | (AGG(?v) AS ?alias)),
WHERE { triple patterns with ``;``/``,`` and FILTER(...) }, GROUP BY,
ORDER BY [ASC|DESC], LIMIT, OFFSET. Everything else (OPTIONAL, UNION,
property paths, subqueries, BIND, VALUES, named graphs, functions ...) is
rejected with :class:`UnsupportedFeature`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..rdf import IRI, RDF, XSD, Literal, RDFError, escape_string
from ..store import TriplePattern, Variable
from ..turtle import _PN_LOCAL, _PN_PREFIX, _LOCAL_ESC, _unescape_string
from .ast import (
    AGGREGATES,
    COMPARATORS,
    Aggregate,
    Comparison,
    Expr,
    Logical,
    Not,
    OrderCondition,
    Projection,
    Query,
)

__all__ = [
    "QueryError",
    "SparqlSyntaxError",
    "UnsupportedFeature",
    "UnboundProjection",
    "parse_query",
    "format_query",
]


class QueryError(ValueError):
    pass


class SparqlSyntaxError(QueryError):
    def __init__(self, line: int, column: int, message: str) -> None:
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class UnsupportedFeature(SparqlSyntaxError):
    def __init__(self, line: int, column: int, feature: str) -> None:
        super().__init__(line, column, f"unsupported feature: {feature}")
        self.feature = feature


class UnboundProjection(QueryError):
    def __init__(self, var: str, reason: str = "does not appear in WHERE or GROUP BY") -> None:
        self.var = var
        super().__init__(f"projected variable ?{var} {reason}")


_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\r\n]*"),
    ("IRIREF", r"<[^<>\"{}|^`\\\x00-\x20]*>"),
    ("VAR", r"[?$]\w+"),
    ("STRING_LONG", r'"""(?:[^"\\]|\\.|"(?!""))*"""' + r"|'''(?:[^'\\]|\\.|'(?!''))*'''"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"' + r"|'(?:[^'\\\n\r]|\\.)*'"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DATATYPE", r"\^\^"),
    ("DOUBLE", r"[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+)"),
    ("DECIMAL", r"[+-]?\d*\.\d+"),
    ("INTEGER", r"[+-]?\d+"),
    ("PNAME", rf"(?:{_PN_PREFIX})?:(?:{_PN_LOCAL})?"),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP", r"<=|>=|!=|&&|\|\||[<>=!]"),
    ("PUNCT", r"[{}().;,*/|^+\[\]]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))

_UNSUPPORTED_KEYWORDS = {
    "OPTIONAL": "OPTIONAL",
    "UNION": "UNION",
    "MINUS": "MINUS",
    "BIND": "BIND",
    "VALUES": "VALUES",
    "SERVICE": "SERVICE (federation)",
    "GRAPH": "named graphs",
    "FROM": "named graphs (FROM)",
    "NAMED": "named graphs",
    "HAVING": "HAVING",
    "CONSTRUCT": "CONSTRUCT queries",
    "ASK": "ASK queries",
    "DESCRIBE": "DESCRIBE queries",
    "INSERT": "SPARQL Update",
    "DELETE": "SPARQL Update",
    "LOAD": "SPARQL Update",
    "CLEAR": "SPARQL Update",
    "DROP": "SPARQL Update",
    "BASE": "BASE",
    "EXISTS": "EXISTS",
}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    column: int

    @property
    def upper(self) -> str:
        return self.text.upper() if self.kind == "NAME" else ""


def _tokenize(text: str) -> list[_Tok]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind, value = m.lastgroup, m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(_Tok(kind, value, line, pos - line_start + 1))
        if "\n" in value:
            line += value.count("\n")
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Tok("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.i = 0
        self.query = Query()

    # token helpers
    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def fail(self, tok: _Tok, message: str) -> SparqlSyntaxError:
        if tok.kind == "NAME" and tok.upper in _UNSUPPORTED_KEYWORDS:
            return UnsupportedFeature(tok.line, tok.column, _UNSUPPORTED_KEYWORDS[tok.upper])
        found = "end of query" if tok.kind == "EOF" else repr(tok.text)
        return SparqlSyntaxError(tok.line, tok.column, f"{message}, found {found}")

    def is_keyword(self, word: str, offset: int = 0) -> bool:
        return self.peek(offset).upper == word

    def keyword(self, word: str) -> _Tok:
        tok = self.advance()
        if tok.upper != word:
            raise self.fail(tok, f"expected {word}")
        return tok

    def is_punct(self, char: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.text == char

    def punct(self, char: str) -> _Tok:
        tok = self.advance()
        if tok.kind != "PUNCT" or tok.text != char:
            raise self.fail(tok, f"expected {char!r}")
        return tok

    # grammar
    def parse(self) -> Query:
        q = self.query
        while self.is_keyword("PREFIX"):
            self.advance()
            name = self.advance()
            if name.kind != "PNAME" or not name.text.endswith(":") or name.text.count(":") != 1:
                raise self.fail(name, "expected prefix label")
            iri = self.advance()
            if iri.kind != "IRIREF":
                raise self.fail(iri, "expected IRI")
            q.prefixes[name.text[:-1]] = self.iriref(iri).value
        self.keyword("SELECT")
        if self.is_keyword("DISTINCT"):
            self.advance()
            q.distinct = True
        elif self.is_keyword("REDUCED"):
            self.advance()
        if self.is_punct("*"):
            self.advance()
        else:
            while self.peek().kind == "VAR" or self.is_punct("("):
                q.select.append(self.projection())
            if not q.select:
                raise self.fail(self.peek(), "expected projection")
        if self.is_keyword("WHERE"):
            self.advance()
        self.group_graph_pattern()
        self.solution_modifiers()
        tok = self.peek()
        if tok.kind != "EOF":
            raise self.fail(tok, "expected end of query")
        return q

    def projection(self) -> Projection:
        tok = self.advance()
        if tok.kind == "VAR":
            return Projection(Variable(tok.text[1:]))
        func = self.advance()
        if func.upper not in AGGREGATES:
            if func.kind == "NAME" and self.is_punct("("):
                raise UnsupportedFeature(func.line, func.column, f"function {func.text}")
            raise self.fail(func, "expected aggregate (COUNT, SUM, AVG, MIN, MAX)")
        self.punct("(")
        distinct = False
        if self.is_keyword("DISTINCT"):
            self.advance()
            distinct = True
        if self.is_punct("*"):
            if func.upper != "COUNT":
                raise self.fail(self.peek(), "'*' only allowed in COUNT")
            self.advance()
            var = None
        else:
            vtok = self.advance()
            if vtok.kind != "VAR":
                raise self.fail(vtok, "expected variable in aggregate")
            var = Variable(vtok.text[1:])
        self.punct(")")
        self.keyword("AS")
        alias = self.advance()
        if alias.kind != "VAR":
            raise self.fail(alias, "expected alias variable")
        self.punct(")")
        return Projection(Variable(alias.text[1:]), Aggregate(func.upper, var, distinct))

    def group_graph_pattern(self) -> None:
        self.punct("{")
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == "}":
                self.advance()
                return
            if tok.upper == "FILTER":
                self.advance()
                self.query.filters.append(self.filter_constraint())
                if self.is_punct("."):
                    self.advance()
                continue
            if tok.kind == "PUNCT" and tok.text == "{":
                raise UnsupportedFeature(tok.line, tok.column, "nested group or subquery")
            if tok.kind == "PUNCT" and tok.text in "[(":
                raise UnsupportedFeature(tok.line, tok.column, "blank nodes and collections")
            if tok.kind == "EOF":
                raise self.fail(tok, "expected '}'")
            self.triples_same_subject()
            if self.is_punct("."):
                self.advance()
            elif not (self.is_punct("}") or self.is_keyword("FILTER")):
                raise self.fail(self.peek(), "expected '.' or '}'")

    def triples_same_subject(self) -> None:
        subject = self.term(self.advance(), "subject")
        while True:
            ptok = self.advance()
            if ptok.kind == "NAME" and ptok.text == "a":
                predicate = RDF.type
            elif ptok.kind == "VAR":
                predicate = Variable(ptok.text[1:])
            else:
                predicate = self.iri(ptok)
                if predicate is None:
                    raise self.fail(ptok, "expected predicate")
            nxt = self.peek()
            if nxt.kind == "PUNCT" and nxt.text in "/|^*+" or (nxt.kind == "OP" and nxt.text == "!") \
                    or nxt.kind == "DATATYPE":
                raise UnsupportedFeature(nxt.line, nxt.column, "property paths")
            while True:
                obj = self.term(self.advance(), "object")
                self.query.where.append(TriplePattern(subject, predicate, obj))
                if self.is_punct(","):
                    self.advance()
                    continue
                break
            if self.is_punct(";"):
                while self.is_punct(";"):
                    self.advance()
                if self.is_punct(".") or self.is_punct("}") or self.is_keyword("FILTER"):
                    return
                continue
            return

    def iriref(self, tok: _Tok) -> IRI:
        try:
            return IRI(tok.text[1:-1])
        except RDFError as exc:
            raise SparqlSyntaxError(tok.line, tok.column, str(exc)) from None

    def iri(self, tok: _Tok) -> Optional[IRI]:
        if tok.kind == "IRIREF":
            return self.iriref(tok)
        if tok.kind == "PNAME":
            label, _, local = tok.text.partition(":")
            if label not in self.query.prefixes:
                raise self.fail(tok, f"unknown prefix {label!r}")
            try:
                return IRI(self.query.prefixes[label] + _LOCAL_ESC.sub(r"\1", local))
            except RDFError as exc:
                raise SparqlSyntaxError(tok.line, tok.column, str(exc)) from None
        return None

    def term(self, tok: _Tok, role: str):
        if tok.kind == "VAR":
            return Variable(tok.text[1:])
        iri = self.iri(tok)
        if iri is not None:
            return iri
        literal = self.literal(tok)
        if literal is not None:
            return literal
        if tok.kind == "PUNCT" and tok.text in "[(":
            raise UnsupportedFeature(tok.line, tok.column, "blank nodes and collections")
        if tok.kind == "PNAME" or (tok.kind == "NAME" and tok.text.startswith("_")):
            raise UnsupportedFeature(tok.line, tok.column, "blank nodes")
        raise self.fail(tok, f"expected {role}")

    def literal(self, tok: _Tok) -> Optional[Literal]:
        try:
            if tok.kind in ("STRING", "STRING_LONG"):
                quote = 3 if tok.kind == "STRING_LONG" else 1
                try:
                    lexical = _unescape_string(tok.text[quote:-quote], tok)
                except RDFError as exc:
                    raise SparqlSyntaxError(tok.line, tok.column, str(exc)) from None
                nxt = self.peek()
                if nxt.kind == "LANGTAG":
                    self.advance()
                    return Literal(lexical, language=nxt.text[1:])
                if nxt.kind == "DATATYPE":
                    self.advance()
                    dt_tok = self.advance()
                    datatype = self.iri(dt_tok)
                    if datatype is None:
                        raise self.fail(dt_tok, "expected datatype IRI")
                    return Literal(lexical, datatype)
                return Literal(lexical)
            if tok.kind == "INTEGER":
                return Literal(tok.text, XSD.integer)
            if tok.kind == "DECIMAL":
                return Literal(tok.text, XSD.decimal)
            if tok.kind == "DOUBLE":
                return Literal(tok.text, XSD.double)
            if tok.kind == "NAME" and tok.text in ("true", "false"):
                return Literal(tok.text, XSD.boolean)
        except SparqlSyntaxError:
            raise
        except RDFError as exc:
            raise SparqlSyntaxError(tok.line, tok.column, str(exc)) from None
        return None

    # FILTER expressions
    def filter_constraint(self) -> Expr:
        if not self.is_punct("("):
            tok = self.peek()
            if tok.kind == "NAME":
                raise UnsupportedFeature(tok.line, tok.column, f"function {tok.text}")
            raise self.fail(tok, "expected '(' after FILTER")
        self.advance()
        expr = self.or_expr()
        self.punct(")")
        return expr

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.peek().kind == "OP" and self.peek().text == "||":
            self.advance()
            left = Logical("||", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.relational()
        while self.peek().kind == "OP" and self.peek().text == "&&":
            self.advance()
            left = Logical("&&", left, self.relational())
        return left

    def relational(self) -> Expr:
        left = self.unary()
        tok = self.peek()
        if tok.kind == "OP" and tok.text in COMPARATORS:
            self.advance()
            return Comparison(tok.text, left, self.unary())
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "!":
            self.advance()
            return Not(self.unary())
        if tok.kind == "PUNCT" and tok.text == "(":
            self.advance()
            expr = self.or_expr()
            self.punct(")")
            return expr
        if tok.kind == "NAME" and tok.text not in ("true", "false"):
            if self.peek(1).kind == "PUNCT" and self.peek(1).text == "(":
                raise UnsupportedFeature(tok.line, tok.column, f"function {tok.text}")
        if tok.kind == "PUNCT" and tok.text in "+*/":
            raise UnsupportedFeature(tok.line, tok.column, "arithmetic expressions")
        self.advance()
        term = self.term(tok, "expression operand")
        nxt = self.peek()
        if nxt.kind == "PUNCT" and nxt.text in "+*/" or nxt.kind in ("INTEGER", "DECIMAL", "DOUBLE") \
                and nxt.text[0] in "+-":
            raise UnsupportedFeature(nxt.line, nxt.column, "arithmetic expressions")
        return term

    # modifiers
    def solution_modifiers(self) -> None:
        q = self.query
        if self.is_keyword("GROUP"):
            self.advance()
            self.keyword("BY")
            q.group_by = []
            while self.peek().kind == "VAR":
                q.group_by.append(Variable(self.advance().text[1:]))
            if not q.group_by:
                raise self.fail(self.peek(), "expected GROUP BY variable")
        if self.is_keyword("HAVING"):
            tok = self.peek()
            raise UnsupportedFeature(tok.line, tok.column, "HAVING")
        if self.is_keyword("ORDER"):
            self.advance()
            self.keyword("BY")
            q.order_by = []
            while True:
                tok = self.peek()
                if tok.kind == "VAR":
                    self.advance()
                    q.order_by.append(OrderCondition(Variable(tok.text[1:])))
                elif tok.upper in ("ASC", "DESC"):
                    self.advance()
                    self.punct("(")
                    vtok = self.advance()
                    if vtok.kind != "VAR":
                        if vtok.kind == "NAME":
                            raise UnsupportedFeature(vtok.line, vtok.column, "ORDER BY expressions")
                        raise self.fail(vtok, "expected variable")
                    self.punct(")")
                    q.order_by.append(OrderCondition(Variable(vtok.text[1:]), tok.upper == "DESC"))
                else:
                    break
            if not q.order_by:
                raise self.fail(self.peek(), "expected ORDER BY condition")
        seen = set()
        while self.peek().upper in ("LIMIT", "OFFSET") and self.peek().upper not in seen:
            word = self.advance().upper
            seen.add(word)
            num = self.advance()
            if num.kind != "INTEGER" or num.text[0] in "+-":
                raise self.fail(num, f"expected non-negative integer after {word}")
            if word == "LIMIT":
                q.limit = int(num.text)
            else:
                q.offset = int(num.text)


def _validate(q: Query) -> None:
    where_vars = set(q.where_variables())
    aliases = [p.var.name for p in q.select if p.aggregate is not None]
    names = [p.var.name for p in q.select]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise QueryError(f"variable ?{dup} projected twice")
    for alias in aliases:
        if alias in where_vars:
            raise QueryError(f"alias ?{alias} is already used in WHERE")
    if not q.select:
        if q.group_by is not None:
            raise QueryError("SELECT * cannot be combined with GROUP BY")
        return
    grouped = q.group_by is not None or bool(aliases)
    group_names = {v.name for v in q.group_by or ()}
    for proj in q.select:
        if proj.aggregate is not None:
            continue
        name = proj.var.name
        if grouped:
            if name not in group_names:
                raise UnboundProjection(name, "is neither grouped nor aggregated")
        elif name not in where_vars:
            raise UnboundProjection(name)


def parse_query(text: str) -> Query:
    """Parse ``text``; raises :class:`SparqlSyntaxError` (with line/column,
    also for undeclared prefixes), :class:`UnsupportedFeature` or
    :class:`UnboundProjection`."""
    query = _Parser(text).parse()
    _validate(query)
    return query


# printing --------------------------------------------------------------------


def _term(t) -> str:
    if isinstance(t, Variable):
        return "?" + t.name
    if isinstance(t, IRI):
        return t.n3()
    if t.language is not None:
        return f'"{escape_string(t.lexical)}"@{t.language}'
    return f'"{escape_string(t.lexical)}"^^<{t.datatype.value}>'


def _expr(e: Expr) -> str:
    if isinstance(e, Comparison):
        return f"({_expr(e.left)} {e.op} {_expr(e.right)})"
    if isinstance(e, Logical):
        return f"({_expr(e.left)} {e.op} {_expr(e.right)})"
    if isinstance(e, Not):
        return f"!{_expr(e.operand)}"
    return _term(e)


def format_query(q: Query) -> str:
    """Render a query in the supported grammar; ``parse_query(format_query(q)) == q``."""
    lines = [f"PREFIX {label}: <{ns}>" for label, ns in q.prefixes.items()]
    head = "SELECT DISTINCT" if q.distinct else "SELECT"
    if not q.select:
        head += " *"
    for p in q.select:
        if p.aggregate is None:
            head += f" ?{p.var.name}"
        else:
            agg = p.aggregate
            inner = "*" if agg.var is None else f"?{agg.var.name}"
            if agg.distinct:
                inner = "DISTINCT " + inner
            head += f" ({agg.func}({inner}) AS ?{p.var.name})"
    lines.append(head)
    lines.append("WHERE {")
    for s, p, o in q.where:
        lines.append(f"  {_term(s)} {_term(p)} {_term(o)} .")
    for f in q.filters:
        lines.append(f"  FILTER({_expr(f)})")
    lines.append("}")
    if q.group_by is not None:
        lines.append("GROUP BY " + " ".join("?" + v.name for v in q.group_by))
    if q.order_by is not None:
        lines.append(
            "ORDER BY "
            + " ".join(f"{'DESC' if c.descending else 'ASC'}(?{c.var.name})" for c in q.order_by)
        )
    if q.limit is not None:
        lines.append(f"LIMIT {q.limit}")
    if q.offset is not None:
        lines.append(f"OFFSET {q.offset}")
    return "\n".join(lines) + "\n"
