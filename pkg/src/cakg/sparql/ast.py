"""Query data model for the supported SPARQL subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..rdf import Term
from ..store import TriplePattern, Variable

__all__ = [
    "Comparison",
    "Logical",
    "Not",
    "Expr",
    "Aggregate",
    "Projection",
    "OrderCondition",
    "Query",
    "AGGREGATES",
    "COMPARATORS",
]

AGGREGATES = ("COUNT", "SUM", "AVG", "MIN", "MAX")
COMPARATORS = ("<", "<=", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class Comparison:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Logical:
    op: str  # "&&" or "||"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[Comparison, Logical, Not, Variable, Term]


@dataclass(frozen=True)
class Aggregate:
    func: str
    var: Optional[Variable]  # None means COUNT(*)
    distinct: bool = False


@dataclass(frozen=True)
class Projection:
    """A plain variable, or an aggregate bound to an alias."""

    var: Variable
    aggregate: Optional[Aggregate] = None


@dataclass(frozen=True)
class OrderCondition:
    var: Variable
    descending: bool = False


@dataclass
class Query:
    prefixes: dict[str, str] = field(default_factory=dict)
    select: list[Projection] = field(default_factory=list)  # empty means SELECT *
    where: list[TriplePattern] = field(default_factory=list)
    filters: list[Expr] = field(default_factory=list)
    distinct: bool = False
    group_by: Optional[list[Variable]] = None
    order_by: Optional[list[OrderCondition]] = None
    limit: Optional[int] = None
    offset: Optional[int] = None

    @property
    def has_aggregates(self) -> bool:
        return any(p.aggregate is not None for p in self.select)

    def where_variables(self) -> list[str]:
        names: list[str] = []
        for pattern in self.where:
            for name in pattern.variables():
                if name not in names:
                    names.append(name)
        return names

    def variables(self) -> list[str]:
        """Result header: the projection list, or every pattern variable for ``SELECT *``."""
        if self.select:
            return [p.var.name for p in self.select]
        return self.where_variables()
