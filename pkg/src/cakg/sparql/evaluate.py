"""Evaluation of parsed queries against a triple store snapshot."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, localcontext
from fractions import Fraction
from functools import cmp_to_key
from typing import Optional, Sequence, Union

from ..rdf import IRI, RDF, XSD, Literal, Term
from ..store import StoreView, TripleStore, TriplePattern, Variable
from .ast import Aggregate, Comparison, Expr, Logical, Not, Query

__all__ = [
    "BindingTable",
    "QueryTimeout",
    "compare_terms",
    "comparable",
    "eval_filter",
    "plan_bgp",
    "evaluate",
    "round_scale",
    "format_decimal",
    "SCALE",
]

SCALE = 6

NUMERIC_TYPES = frozenset(
    XSD[t].value
    for t in (
        "decimal", "integer", "double", "float", "long", "int", "short", "byte",
        "nonNegativeInteger", "positiveInteger", "nonPositiveInteger", "negativeInteger",
        "unsignedLong", "unsignedInt", "unsignedShort", "unsignedByte",
    )
)

_IRI, _NUMERIC, _DATE, _STRING = range(4)


class QueryTimeout(Exception):
    pass


@dataclass
class BindingTable:
    vars: list[str]
    rows: list[dict[str, Term]] = field(default_factory=list)
    warnings: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def tuples(self) -> list[tuple]:
        return [tuple(row.get(v) for v in self.vars) for row in self.rows]


def _numeric_value(term: Literal) -> Optional[Decimal]:
    if term.datatype.value not in NUMERIC_TYPES:
        return None
    try:
        value = Decimal(term.lexical.strip())
    except InvalidOperation:
        return None
    return None if value.is_nan() else value


def _key(term: Term) -> tuple[int, object]:
    if isinstance(term, IRI):
        return _IRI, term.value
    num = _numeric_value(term)
    if num is not None:
        return _NUMERIC, num
    if term.datatype == XSD.date:
        return _DATE, term.lexical
    return _STRING, (term.lexical, term.language or "", term.datatype.value)


def comparable(a: Term, b: Term) -> bool:
    """True when both terms fall into the same kind (IRI, numeric, date, string)."""
    return _key(a)[0] == _key(b)[0]


def compare_terms(a: Term, b: Term) -> int:
    """Three-way comparison: by value within a kind, else by kind order
    IRI < numeric < date < string. Returns -1, 0 or 1."""
    ka, kb = _key(a), _key(b)
    if ka[0] != kb[0]:
        return -1 if ka[0] < kb[0] else 1
    if ka[1] == kb[1]:
        return 0
    return -1 if ka[1] < kb[1] else 1


# FILTER ------------------------------------------------------------------------

_ERROR = None  # evaluation error in three-valued logic


def _ebv(term: Term) -> Optional[bool]:
    if isinstance(term, IRI):
        return _ERROR
    if term.datatype == XSD.boolean:
        return term.lexical in ("true", "1")
    num = _numeric_value(term)
    if num is not None:
        return num != 0
    if term.datatype.value in NUMERIC_TYPES:
        return False
    if term.datatype in (XSD.string, RDF.langString):
        return term.lexical != ""
    return _ERROR


def _operand(expr: Expr, row: dict[str, Term]) -> Optional[Term]:
    if isinstance(expr, Variable):
        return row.get(expr.name)
    if isinstance(expr, (IRI, Literal)):
        return expr
    value = _truth(expr, row)
    return None if value is _ERROR else Literal("true" if value else "false", XSD.boolean)


_OPS = {
    "<": lambda c: c < 0,
    "<=": lambda c: c <= 0,
    "=": lambda c: c == 0,
    "!=": lambda c: c != 0,
    ">=": lambda c: c >= 0,
    ">": lambda c: c > 0,
}


def _truth(expr: Expr, row: dict[str, Term]) -> Optional[bool]:
    if isinstance(expr, Comparison):
        left, right = _operand(expr.left, row), _operand(expr.right, row)
        if left is None or right is None:
            return _ERROR
        if not comparable(left, right):
            return False
        return _OPS[expr.op](compare_terms(left, right))
    if isinstance(expr, Logical):
        left, right = _truth(expr.left, row), _truth(expr.right, row)
        if expr.op == "&&":
            if left is False or right is False:
                return False
            return _ERROR if _ERROR in (left, right) else True
        if left is True or right is True:
            return True
        return _ERROR if _ERROR in (left, right) else False
    if isinstance(expr, Not):
        value = _truth(expr.operand, row)
        return _ERROR if value is _ERROR else not value
    term = _operand(expr, row)
    return _ERROR if term is None else _ebv(term)


def eval_filter(expr: Expr, row: dict[str, Term]) -> bool:
    """Row passes only if the expression is true; errors and cross-kind comparisons are false."""
    return _truth(expr, row) is True


# BGP -----------------------------------------------------------------------------


def _view(store: Union[TripleStore, StoreView]) -> StoreView:
    return store.read() if isinstance(store, TripleStore) else store


def plan_bgp(patterns: Sequence[TriplePattern], store: Union[TripleStore, StoreView]) -> list[TriplePattern]:
    """Greedy join order: cheapest pattern first, then the cheapest one that
    shares a variable with what is already joined (falling back to the cheapest
    overall). Cardinalities come from index range counts on the constants."""
    view = _view(store)
    remaining = list(enumerate(patterns))
    costs = {i: view.count(p) for i, p in remaining}
    ordered: list[TriplePattern] = []
    bound: set[str] = set()
    while remaining:
        connected = [(i, p) for i, p in remaining if bound & set(p.variables())]
        pool = connected or remaining
        i, best = min(pool, key=lambda item: (costs[item[0]], item[0]))
        remaining.remove((i, best))
        ordered.append(best)
        bound.update(best.variables())
    return ordered


def _substitute(pattern: TriplePattern, row: dict[str, Term]) -> TriplePattern:
    return TriplePattern(
        *(row.get(t.name, t) if isinstance(t, Variable) else t for t in pattern)
    )


def _check(deadline: Optional[float]) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise QueryTimeout("query exceeded its time budget")


def _join(view: StoreView, patterns: list[TriplePattern], deadline: Optional[float]) -> list[dict[str, Term]]:
    rows: list[dict[str, Term]] = [{}]
    for pattern in patterns:
        _check(deadline)
        joined = []
        for n, row in enumerate(rows):
            if n & 1023 == 1023:
                _check(deadline)
            for match in view.match(_substitute(pattern, row)):
                if match:
                    merged = dict(row)
                    merged.update(match)
                    joined.append(merged)
                else:
                    joined.append(row)
        rows = joined
        if not rows:
            break
    return rows


# aggregation ------------------------------------------------------------------------


def round_scale(value: Union[Fraction, Decimal, int], scale: int = SCALE) -> Decimal:
    """Round an exact value to ``scale`` fractional digits, half to even."""
    scaled = Fraction(value) * 10 ** scale
    return Decimal(round(scaled)).scaleb(-scale)


def format_decimal(value: Decimal) -> str:
    """Canonical xsd:decimal lexical form: no exponent, no trailing zeros, at least one fraction digit."""
    text = format(value, "f")
    if "." in text:
        text = text.rstrip("0")
        if text.endswith("."):
            text += "0"
    else:
        text += ".0"
    if text in ("-0.0",):
        text = "0.0"
    return text


def _aggregate(agg: Aggregate, rows: list[dict[str, Term]], stats: list[int]) -> Optional[Term]:
    if agg.var is None:
        return Literal(str(len(rows)), XSD.integer)
    values = [row[agg.var.name] for row in rows if agg.var.name in row]
    if agg.distinct:
        values = list(dict.fromkeys(values))
    if agg.func == "COUNT":
        return Literal(str(len(values)), XSD.integer)
    if agg.func in ("MIN", "MAX"):
        if not values:
            return None
        best = values[0]
        for v in values[1:]:
            c = compare_terms(v, best)
            if (c < 0) if agg.func == "MIN" else (c > 0):
                best = v
        return best
    numbers = []
    all_integer = True
    for v in values:
        num = _numeric_value(v) if isinstance(v, Literal) else None
        if num is None or not num.is_finite():
            stats[0] += 1
            continue
        numbers.append(num)
        all_integer = all_integer and v.datatype != XSD.decimal and num == num.to_integral_value() \
            and v.datatype.value not in (XSD.double.value, XSD.float.value)
    with localcontext() as ctx:
        ctx.prec = 200
        total = sum(numbers, Decimal(0))
    if agg.func == "SUM":
        if all_integer:
            return Literal(str(int(total)), XSD.integer)
        return Literal(format_decimal(round_scale(total)), XSD.decimal)
    if agg.func == "AVG":
        if not numbers:
            return None if values else Literal("0.0", XSD.decimal)
        return Literal(format_decimal(round_scale(Fraction(total) / len(numbers))), XSD.decimal)
    raise ValueError(f"unknown aggregate {agg.func}")


def _group(query: Query, rows: list[dict[str, Term]], stats: list[int]) -> list[dict[str, Term]]:
    keys = [v.name for v in query.group_by or ()]
    groups: dict[tuple, list[dict[str, Term]]] = {}
    for row in rows:
        groups.setdefault(tuple(row.get(k) for k in keys), []).append(row)
    if not groups and query.group_by is None:
        groups[()] = []
    out = []
    for key, members in groups.items():
        result = {k: v for k, v in zip(keys, key) if v is not None}
        for proj in query.select:
            if proj.aggregate is not None:
                value = _aggregate(proj.aggregate, members, stats)
                if value is not None:
                    result[proj.var.name] = value
        out.append(result)
    return out


def _order(query: Query, rows: list[dict[str, Term]]) -> list[dict[str, Term]]:
    conditions = query.order_by or []

    def cmp(a: dict, b: dict) -> int:
        for cond in conditions:
            x, y = a.get(cond.var.name), b.get(cond.var.name)
            if x is None or y is None:
                c = (x is not None) - (y is not None)
            else:
                c = compare_terms(x, y)
            if c:
                return -c if cond.descending else c
        return 0

    return sorted(rows, key=cmp_to_key(cmp))


def evaluate(
    query: Query,
    store: Union[TripleStore, StoreView],
    *,
    deadline: Optional[float] = None,
    plan: bool = True,
) -> BindingTable:
    """Evaluate over one consistent read snapshot of ``store``.

    Order of operations: BGP join, FILTER, GROUP BY/aggregates, ORDER BY,
    projection, DISTINCT, OFFSET/LIMIT. ``deadline`` is a
    :func:`time.monotonic` value checked between join steps.
    """
    view = _view(store)
    patterns = plan_bgp(query.where, view) if plan and query.where else list(query.where)
    rows = _join(view, patterns, deadline)
    _check(deadline)
    if query.filters:
        rows = [r for r in rows if all(eval_filter(f, r) for f in query.filters)]
    stats = [0]
    if query.group_by is not None or query.has_aggregates:
        rows = _group(query, rows, stats)
    if query.order_by:
        rows = _order(query, rows)
    header = query.variables()
    rows = [{v: row[v] for v in header if v in row} for row in rows]
    if query.distinct:
        seen = set()
        unique = []
        for row in rows:
            key = tuple(row.get(v) for v in header)
            if key not in seen:
                seen.add(key)
                unique.append(row)
        rows = unique
    start = query.offset or 0
    stop = None if query.limit is None else start + query.limit
    return BindingTable(header, rows[start:stop], stats[0])
