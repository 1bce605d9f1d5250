"""SPARQL SELECT subset: parsing, evaluation and results formats."""

from .ast import Aggregate, Comparison, Logical, Not, OrderCondition, Projection, Query
from .evaluate import (
    BindingTable,
    QueryTimeout,
    comparable,
    compare_terms,
    eval_filter,
    evaluate,
    format_decimal,
    plan_bgp,
    round_scale,
)
from .parser import (
    QueryError,
    SparqlSyntaxError,
    UnboundProjection,
    UnsupportedFeature,
    format_query,
    parse_query,
)
from .results import RESULT_MEDIA_TYPES, parse_results_json, serialize_results

__all__ = [
    "Aggregate",
    "Comparison",
    "Logical",
    "Not",
    "OrderCondition",
    "Projection",
    "Query",
    "BindingTable",
    "QueryTimeout",
    "comparable",
    "compare_terms",
    "eval_filter",
    "evaluate",
    "format_decimal",
    "plan_bgp",
    "round_scale",
    "QueryError",
    "SparqlSyntaxError",
    "UnboundProjection",
    "UnsupportedFeature",
    "format_query",
    "parse_query",
    "RESULT_MEDIA_TYPES",
    "parse_results_json",
    "serialize_results",
]
