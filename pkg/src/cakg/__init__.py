"""Climate Analysis knowledge graph toolkit.

CDO daily-summaries CSV -> CA-ontology RDF -> indexed triple store -> SPARQL
(locally or over HTTP) -> monthly and multi-year climate summaries.
"""

from .rdf import IRI, Literal, Triple, expand_pname, make_typed_literal, validate_iri
from .store import TripleStore, TriplePattern, Variable

__version__ = "0.1.0"

__all__ = [
    "IRI",
    "Literal",
    "Triple",
    "TripleStore",
    "TriplePattern",
    "Variable",
    "expand_pname",
    "make_typed_literal",
    "validate_iri",
]
