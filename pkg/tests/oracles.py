"""Independent reference implementations used by the property and acceptance tests.

Nothing here touches the store indexes, the planner or the engine's filter
code: patterns are matched by scanning a plain list of triples and filters
are evaluated over Python values.
"""

from __future__ import annotations

import datetime as dt
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from cakg.rdf import IRI, XSD, Literal, Triple

EX = "http://ex.org/"


class TooLarge(Exception):
    pass


# random graphs ------------------------------------------------------------------


def random_terms(rng: random.Random, n_nodes: int = 40):
    nodes = [IRI(f"{EX}n{i}") for i in range(n_nodes)]
    preds = [IRI(f"{EX}p{i}") for i in range(6)]
    literals = []
    for i in range(25):
        kind = rng.choice(("int", "dec", "date", "str", "lang"))
        if kind == "int":
            literals.append(Literal(str(rng.randint(-20, 20)), XSD.integer))
        elif kind == "dec":
            literals.append(Literal(f"{rng.uniform(-20, 20):.{rng.choice((1, 2))}f}", XSD.decimal))
        elif kind == "date":
            day = dt.date(1951, 1, 1) + dt.timedelta(days=rng.randint(0, 25000))
            literals.append(Literal(day.isoformat(), XSD.date))
        elif kind == "str":
            literals.append(Literal(rng.choice(["a", "b", "SHANGHAI", "DUBLIN", 'q"x', "tab\tnl\n", "é"])))
        else:
            literals.append(Literal(rng.choice(["a", "hello"]), language=rng.choice(["en", "zh-Hans"])))
    return nodes, preds, literals


def random_graph(rng: random.Random, max_triples: int = 500) -> set[Triple]:
    nodes, preds, literals = random_terms(rng)
    size = rng.randint(0, max_triples)
    triples = set()
    for _ in range(size):
        s = rng.choice(nodes)
        p = rng.choice(preds)
        o = rng.choice(nodes) if rng.random() < 0.5 else rng.choice(literals)
        triples.add(Triple(s, p, o))
    return triples


# random queries ------------------------------------------------------------------


@dataclass
class GenQuery:
    patterns: list  # tuples of str ('?x') or Term
    filter: Optional[tuple]  # expression tree of tuples
    projection: Optional[list]  # None means *
    distinct: bool

    def text(self) -> str:
        def term(t):
            return t if isinstance(t, str) else t.n3()

        def expr(e):
            if e[0] in ("&&", "||"):
                return f"({expr(e[1])} {e[0]} {expr(e[2])})"
            if e[0] == "!":
                return f"!({expr(e[1])})"
            return f"{term(e[1])} {e[0]} {term(e[2])}"

        head = "SELECT DISTINCT" if self.distinct else "SELECT"
        head += " *" if self.projection is None else "".join(" " + v for v in self.projection)
        body = " .\n  ".join(" ".join(term(t) for t in p) for p in self.patterns)
        filt = f"\n  FILTER({expr(self.filter)})" if self.filter else ""
        return f"{head} WHERE {{\n  {body} .{filt}\n}}"

    def variables(self) -> list[str]:
        out = []
        for p in self.patterns:
            for t in p:
                if isinstance(t, str) and t not in out:
                    out.append(t)
        return out


def random_query(rng: random.Random, graph: set[Triple]) -> GenQuery:
    """Mostly walks real triples so joins hit data; some patterns are fully random."""
    nodes, preds, literals = random_terms(random.Random(0))
    triples = sorted(graph, key=lambda t: t.n3())
    objects = [t.object for t in triples] or literals
    var_names = [f"?v{i}" for i in range(6)]
    patterns = []
    bound: dict = {}  # term -> variable name
    picked: list[Triple] = []

    def var_for(term):
        if term not in bound:
            free = [v for v in var_names if v not in bound.values()]
            bound[term] = rng.choice(free) if free else rng.choice(var_names)
        return bound[term]

    for _ in range(rng.randint(1, 4)):
        seeded = triples and rng.random() < 0.8
        if seeded:
            if picked:
                anchors = {n for t in picked for n in (t.subject, t.object)}
                near = [t for t in triples if t.subject in anchors or t.object in anchors]
                t = rng.choice(near or triples)
            else:
                t = rng.choice(triples)
            picked.append(t)
            pattern = []
            for pos, term in enumerate(t):
                shared = term in bound
                keep = rng.random() < (0.25 if pos != 1 else 0.8)
                pattern.append(var_for(term) if shared or not keep else term)
            patterns.append(tuple(pattern))
        else:
            s = rng.choice(var_names) if rng.random() < 0.8 else rng.choice(nodes)
            p = rng.choice(preds) if rng.random() < 0.8 else rng.choice(var_names)
            o = rng.choice(var_names) if rng.random() < 0.6 else rng.choice(objects)
            patterns.append((s, p, o))
    used = []
    for p in patterns:
        for t in p:
            if isinstance(t, str) and t not in used:
                used.append(t)
    filt = None
    if used and rng.random() < 0.8:
        filt = _random_expr(rng, used, literals + nodes[:3] + objects[:5], depth=rng.randint(0, 2))
    projection = None
    if used and rng.random() < 0.6:
        projection = rng.sample(used, rng.randint(1, len(used)))
    return GenQuery(patterns, filt, projection, rng.random() < 0.3)


def _random_expr(rng, used, constants, depth):
    if depth > 0:
        op = rng.choice(("&&", "||", "!"))
        if op == "!":
            return ("!", _random_expr(rng, used, constants, depth - 1))
        return (op, _random_expr(rng, used, constants, depth - 1), _random_expr(rng, used, constants, depth - 1))
    left = rng.choice(used)
    right = rng.choice(used) if rng.random() < 0.25 else rng.choice(constants)
    return (rng.choice(("<", "<=", "=", "!=", ">=", ">")), left, right)


# naive evaluation ------------------------------------------------------------------

_NUMERIC = {XSD.decimal, XSD.integer}


def _value(term):
    if isinstance(term, IRI):
        return 0, term.value
    if term.datatype in _NUMERIC:
        return 1, Fraction(term.lexical)
    if term.datatype == XSD.date:
        return 2, dt.date.fromisoformat(term.lexical)
    return 3, (term.lexical, term.language or "", term.datatype.value)


def _truth(e, row):
    """True / False / None (error)."""
    op = e[0]
    if op == "&&":
        a, b = _truth(e[1], row), _truth(e[2], row)
        if a is False or b is False:
            return False
        return None if None in (a, b) else True
    if op == "||":
        a, b = _truth(e[1], row), _truth(e[2], row)
        if a is True or b is True:
            return True
        return None if None in (a, b) else False
    if op == "!":
        a = _truth(e[1], row)
        return None if a is None else not a
    left = row.get(e[1]) if isinstance(e[1], str) else e[1]
    right = row.get(e[2]) if isinstance(e[2], str) else e[2]
    if left is None or right is None:
        return None
    (ka, va), (kb, vb) = _value(left), _value(right)
    if ka != kb:
        return False
    return {
        "<": va < vb, "<=": va <= vb, "=": va == vb,
        "!=": va != vb, ">=": va >= vb, ">": va > vb,
    }[op]


def naive_evaluate(q: GenQuery, graph: set[Triple], limit_rows: int = 20000) -> Counter:
    """Multiset of projected rows: nested loops over full scans, then filter."""
    triples = list(graph)
    rows = [{}]
    for pattern in q.patterns:
        candidates = [
            t for t in triples
            if all(isinstance(pt, str) or pt == tt for pt, tt in zip(pattern, t))
        ]
        nxt = []
        for row in rows:
            for t in candidates:
                new = dict(row)
                ok = True
                for pt, tt in zip(pattern, t):
                    if isinstance(pt, str):
                        if new.setdefault(pt, tt) != tt:
                            ok = False
                            break
                if ok:
                    nxt.append(new)
            if len(nxt) > limit_rows:
                raise TooLarge
        rows = nxt
    if q.filter is not None:
        rows = [r for r in rows if _truth(q.filter, r) is True]
    header = q.projection if q.projection is not None else q.variables()
    projected = [tuple(r.get(v) for v in header) for r in rows]
    if q.distinct:
        projected = list(dict.fromkeys(projected))
    return Counter(projected)


def engine_multiset(table) -> Counter:
    return Counter(table.tuples())
