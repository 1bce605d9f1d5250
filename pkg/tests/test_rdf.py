import pytest

from cakg.rdf import (
    IRI,
    RDF,
    XSD,
    EmptyIri,
    IllegalCharacter,
    LexicalFormInvalid,
    Literal,
    MissingScheme,
    Triple,
    UnknownPrefix,
    escape_string,
    expand_pname,
    make_typed_literal,
    validate_iri,
)


def test_validate_iri_ok():
    assert validate_iri("http://example.org/ca#Station") == IRI("http://example.org/ca#Station")


def test_validate_iri_space_position():
    with pytest.raises(IllegalCharacter) as err:
        validate_iri("http://ex.org/a b")
    assert err.value.position == 16


@pytest.mark.parametrize("bad", ["relative/path", "1http://x", ":nothing"])
def test_validate_iri_missing_scheme(bad):
    with pytest.raises(MissingScheme):
        validate_iri(bad)


def test_validate_iri_empty():
    with pytest.raises(EmptyIri):
        validate_iri("")


@pytest.mark.parametrize("ch", list('<>"{}|^`\\') + ["\n", "\x00"])
def test_iri_forbidden_characters(ch):
    with pytest.raises(IllegalCharacter):
        IRI(f"http://ex.org/{ch}")


def test_typed_literals():
    assert make_typed_literal("25.4", XSD.decimal) == Literal("25.4", XSD.decimal)
    assert make_typed_literal("2020-09-01", XSD.date).to_date().isoformat() == "2020-09-01"
    for lexical, datatype in [("2020-13-01", XSD.date), ("2021-02-29", XSD.date),
                              ("abc", XSD.decimal), ("1.5", XSD.integer)]:
        with pytest.raises(LexicalFormInvalid):
            make_typed_literal(lexical, datatype)


def test_language_literal_is_langstring():
    lit = Literal("hello", language="en")
    assert lit.datatype == RDF.langString
    assert lit.n3() == '"hello"@en'


def test_literal_equality_is_structural():
    assert Literal("25.4", XSD.decimal) != Literal("25.40", XSD.decimal)
    assert Literal("a") == Literal("a", XSD.string)


def test_expand_pname():
    assert expand_pname("ca:Station", {"ca": "http://example.org/ca#"}) == IRI("http://example.org/ca#Station")
    assert expand_pname("sosa:hasResult", {"sosa": "http://www.w3.org/ns/sosa/"}) == IRI(
        "http://www.w3.org/ns/sosa/hasResult")
    with pytest.raises(UnknownPrefix) as err:
        expand_pname("xx:y", {"ca": "http://example.org/ca#"})
    assert err.value.label == "xx"


def test_escape_and_ntriples_form():
    assert escape_string('a"b\\c\n\t') == 'a\\"b\\\\c\\n\\t'
    t = Triple(IRI("http://ex.org/s"), IRI("http://ex.org/p"), Literal("2", XSD.integer))
    assert t.n3() == '<http://ex.org/s> <http://ex.org/p> "2"^^<http://www.w3.org/2001/XMLSchema#integer> .'
