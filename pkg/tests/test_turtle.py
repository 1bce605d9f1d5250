import datetime as dt
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_graph

from cakg.ontology import CA, BUILTIN_REGISTRY, StationDescriptor, build_observation_triples, default_prefixes
from cakg.rdf import IRI, RDF, XSD, Literal, Triple
from cakg.turtle import SerializationConfig, TurtleSyntaxError, parse, serialize_ntriples, serialize_turtle

EX = "http://ex.org/"
STATION = StationDescriptor("ST001", "SHANGHAI", "31.40", "121.46")


def one_day_graph():
    return build_observation_triples(
        STATION, BUILTIN_REGISTRY["temperature"], dt.date(2020, 9, 1), "tavg", "25.4")


def test_ntriples_empty_and_escaping():
    assert serialize_ntriples(set()) == ""
    t = Triple(IRI(EX + "s"), IRI(EX + "p"), Literal('a"b'))
    assert serialize_ntriples({t}) == '<http://ex.org/s> <http://ex.org/p> "a\\"b" .\n'


def test_ntriples_observation_sorted_lines():
    text = serialize_ntriples(one_day_graph())
    lines = text.splitlines()
    assert len(lines) == 8 and lines == sorted(lines)
    assert parse(text, "ntriples") == one_day_graph()


def test_turtle_empty_graph_headers_only():
    out = serialize_turtle(set(), SerializationConfig({"ca": str(CA), "sosa": "http://www.w3.org/ns/sosa/"}))
    assert [line for line in out.splitlines() if line.strip()] == [
        "@prefix ca: <http://example.org/ca#> .",
        "@prefix sosa: <http://www.w3.org/ns/sosa/> .",
    ]


def test_turtle_type_abbreviation():
    out = serialize_turtle({Triple(CA["station-ST001"], RDF.type, CA.Station)},
                           SerializationConfig({"ca": str(CA), "rdf": str(RDF)}))
    assert "ca:station-ST001 a ca:Station ." in out.splitlines()


def test_turtle_observation_roundtrip_and_determinism():
    config = SerializationConfig(default_prefixes())
    g = one_day_graph()
    first = serialize_turtle(g, config)
    assert parse(first) == g
    assert serialize_turtle(set(reversed(sorted(g, key=str))), config) == first


def test_numeric_shorthand():
    (t,) = parse("<a:s> <a:p> 25.4 .")
    assert t.object == Literal("25.4", XSD.decimal)
    (t,) = parse("<a:s> <a:p> -3 .")
    assert t.object == Literal("-3", XSD.integer)
    (t,) = parse("<a:s> <a:p> true .")
    assert t.object == Literal("true", XSD.boolean)


def test_prefix_without_dot_is_syntax_error():
    with pytest.raises(TurtleSyntaxError) as err:
        parse("@prefix ca: <h> ca:x ca:y ca:z .")
    assert err.value.line == 1


def test_predicate_and_object_lists():
    doc = """@prefix ex: <http://ex.org/> .
    ex:s a ex:C ; ex:p "x"@en , "y" ; ex:q \"\"\"multi
line\"\"\" .
    # trailing comment
    """
    g = parse(doc)
    assert len(g) == 4
    assert Triple(IRI(EX + "s"), IRI(EX + "q"), Literal("multi\nline")) in g


@pytest.mark.parametrize("doc", [
    "_:b <http://ex.org/p> <http://ex.org/o> .",
    "<http://ex.org/s> <http://ex.org/p> ( 1 2 ) .",
    "@base <http://ex.org/> .",
    "<http://ex.org/s> <http://ex.org/p> \"unterminated .",
    "<http://ex.org/s> <http://ex.org/p> \"x\"^^<http://www.w3.org/2001/XMLSchema#date> .",
])
def test_rejected_turtle(doc):
    with pytest.raises(Exception) as err:
        parse(doc)
    assert isinstance(err.value, ValueError)


def test_ntriples_mode_rejects_turtle_sugar():
    for doc in ["@prefix ex: <http://ex.org/> .", "<http://ex.org/s> a <http://ex.org/C> .",
                "<http://ex.org/s> <http://ex.org/p> 1 ."]:
        with pytest.raises(TurtleSyntaxError):
            parse(doc, "ntriples")


def test_cross_format_agreement():
    rng = random.Random(11)
    for _ in range(20):
        g = random_graph(rng, 200)
        assert parse(serialize_ntriples(g), "ntriples") == parse(
            serialize_turtle(g, SerializationConfig({"ex": EX})))


_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)
_iri = st.from_regex(r"\Ahttp://ex\.org/[a-z0-9_\-./#]{0,8}\Z").map(IRI)
_literal = st.one_of(
    _text.map(Literal),
    st.tuples(_text, st.sampled_from(["en", "de-CH"])).map(lambda t: Literal(t[0], language=t[1])),
    st.decimals(allow_nan=False, allow_infinity=False, places=3).map(lambda d: Literal(str(d), XSD.decimal)),
    st.integers(-10**6, 10**6).map(lambda i: Literal(str(i), XSD.integer)),
    st.dates().map(lambda d: Literal(d.isoformat(), XSD.date)),
)
_triples = st.sets(st.builds(Triple, _iri, _iri, st.one_of(_iri, _literal)), max_size=15)


@settings(max_examples=150, deadline=None)
@given(_triples)
def test_property_roundtrip_both_formats(g):
    assert parse(serialize_turtle(g, SerializationConfig({"ex": EX, "xsd": str(XSD)}))) == g
    assert parse(serialize_ntriples(g), "ntriples") == g
