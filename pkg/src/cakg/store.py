"""Dictionary-encoded in-memory triple store with SPO, POS and OSP orderings.

Terms are mapped to dense integer ids in first-seen order. Each ordering is a
sorted list of id tuples, so any pattern whose bound positions form a prefix
of some ordering is answered with two bisections. Dispatch table:

    bound      index   prefix
    -------    -----   ------
    none       SPO     ()
    S          SPO     (s,)
    S P        SPO     (s, p)
    S P O      SPO     (s, p, o)
    P          POS     (p,)
    P O        POS     (p, o)
    O          OSP     (o,)
    S O        OSP     (o, s)

Writers are serialized by a lock and publish a new immutable epoch; readers
grab the current epoch once and never observe a half-applied batch.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
import threading
import zlib
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Union

from .rdf import IRI, Literal, Term, Triple

__all__ = [
    "Variable",
    "TriplePattern",
    "InsertReport",
    "Dictionary",
    "TripleStore",
    "StoreView",
    "SnapshotError",
    "VersionMismatch",
    "CorruptSnapshot",
]


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


PatternTerm = Union[Term, Variable]


class TriplePattern(NamedTuple):
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def variables(self) -> list[str]:
        seen = []
        for t in self:
            if isinstance(t, Variable) and t.name not in seen:
                seen.append(t.name)
        return seen


class InsertReport(NamedTuple):
    added: int
    duplicates: int


class Dictionary:
    """Append-only two-way term table. Ids are dense and assigned in first-seen order."""

    def __init__(self) -> None:
        self._ids: dict[Term, int] = {}
        self._terms: list[Term] = []

    def __len__(self) -> int:
        return len(self._terms)

    def id_of(self, term: Term) -> Optional[int]:
        return self._ids.get(term)

    def term_of(self, term_id: int) -> Term:
        return self._terms[term_id]

    def encode(self, term: Term) -> int:
        tid = self._ids.get(term)
        if tid is None:
            tid = len(self._terms)
            # append before publishing the id so readers never see a dangling id
            self._terms.append(term)
            self._ids[term] = tid
        return tid

    def terms(self) -> list[Term]:
        return list(self._terms)


class StoreView:
    """An immutable read snapshot of the store."""

    __slots__ = ("dictionary", "spo", "pos", "osp", "members")

    def __init__(self, dictionary: Dictionary, spo: list, pos: list, osp: list, members: frozenset):
        self.dictionary = dictionary
        self.spo = spo
        self.pos = pos
        self.osp = osp
        self.members = members

    def __len__(self) -> int:
        return len(self.spo)

    def _ids(self, pattern: TriplePattern) -> Optional[tuple]:
        ids = []
        for t in pattern:
            if isinstance(t, Variable):
                ids.append(None)
            else:
                tid = self.dictionary.id_of(t)
                if tid is None:
                    return None
                ids.append(tid)
        return tuple(ids)

    def _range(self, s, p, o) -> tuple[list, int, int, tuple]:
        """Pick an index for the bound ids; returns (index, lo, hi, permutation)."""
        if s is not None:
            if p is not None:
                prefix = (s, p) if o is None else (s, p, o)
                index, perm = self.spo, (0, 1, 2)
            elif o is not None:
                prefix, index, perm = (o, s), self.osp, (1, 2, 0)
            else:
                prefix, index, perm = (s,), self.spo, (0, 1, 2)
        elif p is not None:
            prefix = (p,) if o is None else (p, o)
            index, perm = self.pos, (2, 0, 1)
        elif o is not None:
            prefix, index, perm = (o,), self.osp, (1, 2, 0)
        else:
            return self.spo, 0, len(self.spo), (0, 1, 2)
        lo = bisect_left(index, prefix)
        hi = bisect_left(index, prefix[:-1] + (prefix[-1] + 1,), lo)
        return index, lo, hi, perm

    def match_ids(self, pattern: TriplePattern) -> Iterator[tuple[int, int, int]]:
        """Yield (s, p, o) id triples satisfying the bound positions."""
        ids = self._ids(pattern)
        if ids is None:
            return
        index, lo, hi, perm = self._range(*ids)
        a, b, c = perm
        for i in range(lo, hi):
            row = index[i]
            yield (row[a], row[b], row[c])

    def count(self, pattern: TriplePattern) -> int:
        ids = self._ids(pattern)
        if ids is None:
            return 0
        _, lo, hi, _ = self._range(*ids)
        return hi - lo

    def match(self, pattern: TriplePattern) -> Iterator[dict[str, Term]]:
        """Yield one binding row per matching triple. Repeated variables must agree."""
        term_of = self.dictionary.term_of
        positions = [(i, t.name) for i, t in enumerate(pattern) if isinstance(t, Variable)]
        for triple_ids in self.match_ids(pattern):
            row: dict[str, Term] = {}
            ok = True
            for i, name in positions:
                term = term_of(triple_ids[i])
                prev = row.get(name)
                if prev is not None and prev != term:
                    ok = False
                    break
                row[name] = term
            if ok:
                yield row

    def triples(self, pattern: Optional[TriplePattern] = None) -> Iterator[Triple]:
        if pattern is None:
            pattern = TriplePattern(Variable("s"), Variable("p"), Variable("o"))
        term_of = self.dictionary.term_of
        for s, p, o in self.match_ids(pattern):
            yield Triple(term_of(s), term_of(p), term_of(o))

    def __iter__(self) -> Iterator[Triple]:
        return self.triples()

    def __contains__(self, triple: Triple) -> bool:
        ids = self._ids(TriplePattern(*triple))
        return ids is not None and ids in self.members


_EMPTY = (lambda d: StoreView(d, [], [], [], frozenset()))


class TripleStore:
    """Many readers, one writer. See the module docstring for index dispatch."""

    def __init__(self, triples: Iterable[Triple] = ()) -> None:
        self._write_lock = threading.Lock()
        self._view = _EMPTY(Dictionary())
        if triples:
            self.insert(triples)

    # reads -----------------------------------------------------------------

    def read(self) -> StoreView:
        return self._view

    @property
    def dictionary(self) -> Dictionary:
        return self._view.dictionary

    def size(self) -> int:
        return len(self._view)

    __len__ = size

    def match(self, pattern: TriplePattern) -> Iterator[dict[str, Term]]:
        return self._view.match(pattern)

    def count(self, pattern: TriplePattern) -> int:
        return self._view.count(pattern)

    def triples(self, pattern: Optional[TriplePattern] = None) -> Iterator[Triple]:
        return self._view.triples(pattern)

    def __iter__(self) -> Iterator[Triple]:
        return self._view.triples()

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._view

    # writes ----------------------------------------------------------------

    @staticmethod
    def _build(dictionary: Dictionary, spo: list, new: Iterable[tuple]) -> StoreView:
        spo = sorted(spo + list(new)) if new else spo
        pos = sorted((p, o, s) for s, p, o in spo)
        osp = sorted((o, s, p) for s, p, o in spo)
        return StoreView(dictionary, spo, pos, osp, frozenset(spo))

    def insert(self, triples: Iterable[Triple]) -> InsertReport:
        """Add a batch. The batch becomes visible to readers all at once."""
        with self._write_lock:
            view = self._view
            dictionary = view.dictionary
            encode = dictionary.encode
            fresh: set[tuple] = set()
            seen = 0
            for s, p, o in triples:
                seen += 1
                key = (encode(s), encode(p), encode(o))
                if key not in view.members:
                    fresh.add(key)
            if fresh:
                self._view = self._build(dictionary, view.spo, fresh)
            return InsertReport(len(fresh), seen - len(fresh))

    def replace(self, triples: Iterable[Triple]) -> InsertReport:
        """Swap the whole contents for ``triples`` in one step."""
        dictionary = Dictionary()
        ids = {(dictionary.encode(s), dictionary.encode(p), dictionary.encode(o)) for s, p, o in triples}
        view = self._build(dictionary, [], ids)
        with self._write_lock:
            self._view = view
        return InsertReport(len(ids), 0)

    def clear(self) -> None:
        with self._write_lock:
            self._view = _EMPTY(Dictionary())

    # persistence -------------------------------------------------------------

    def save_snapshot(self, path: Union[str, os.PathLike]) -> None:
        data = _encode_snapshot(self._view)
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load_snapshot(cls, path: Union[str, os.PathLike]) -> "TripleStore":
        with open(path, "rb") as fh:
            data = fh.read()
        dictionary, spo = _decode_snapshot(data)
        store = cls()
        store._view = cls._build(dictionary, [], spo)
        return store


# snapshot format ------------------------------------------------------------
#
#   b"CAKG" | u8 version | u64 n_terms | term* | u64 n_triples | (u64 s,p,o)* | u32 crc32
#   term := u8 kind (0 iri, 1 literal) | str value  [| str datatype | str language]
#   str  := u32 byte length | utf-8 bytes

MAGIC = b"CAKG"
VERSION = 1


class SnapshotError(Exception):
    pass


class VersionMismatch(SnapshotError):
    pass


class CorruptSnapshot(SnapshotError):
    pass


def _put_str(buf: io.BytesIO, text: str) -> None:
    raw = text.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def _encode_snapshot(view: StoreView) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<B", VERSION))
    terms = view.dictionary.terms()
    buf.write(struct.pack("<Q", len(terms)))
    for term in terms:
        if isinstance(term, IRI):
            buf.write(b"\x00")
            _put_str(buf, term.value)
        else:
            buf.write(b"\x01")
            _put_str(buf, term.lexical)
            _put_str(buf, term.datatype.value)
            _put_str(buf, term.language or "")
    buf.write(struct.pack("<Q", len(view.spo)))
    for row in view.spo:
        buf.write(struct.pack("<QQQ", *row))
    payload = buf.getvalue()
    return payload + struct.pack("<I", zlib.crc32(payload))


class _Reader:
    def __init__(self, data: bytes, pos: int) -> None:
        self.data = data
        self.pos = pos

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CorruptSnapshot("snapshot truncated")
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values

    def string(self) -> str:
        (length,) = self.take("<I")
        end = self.pos + length
        if end > len(self.data):
            raise CorruptSnapshot("snapshot truncated")
        raw = self.data[self.pos:end]
        self.pos = end
        return raw.decode("utf-8")


def _decode_snapshot(data: bytes) -> tuple[Dictionary, list]:
    if len(data) < len(MAGIC) + 1 + 4 or data[:4] != MAGIC:
        raise CorruptSnapshot("not a CAKG snapshot")
    if data[4] != VERSION:
        raise VersionMismatch(f"snapshot version {data[4]}, expected {VERSION}")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise CorruptSnapshot("checksum mismatch")
    reader = _Reader(payload, 5)
    dictionary = Dictionary()
    try:
        (n_terms,) = reader.take("<Q")
        for _ in range(n_terms):
            (kind,) = reader.take("<B")
            if kind == 0:
                term: Term = IRI(reader.string())
            elif kind == 1:
                lexical, datatype, language = reader.string(), reader.string(), reader.string()
                term = Literal(lexical, IRI(datatype), language or None)
            else:
                raise CorruptSnapshot(f"unknown term kind {kind}")
            dictionary.encode(term)
        (n_triples,) = reader.take("<Q")
        spo = [reader.take("<QQQ") for _ in range(n_triples)]
    except (UnicodeDecodeError, ValueError) as exc:
        raise CorruptSnapshot(str(exc)) from None
    if reader.pos != len(payload):
        raise CorruptSnapshot("trailing bytes in snapshot")
    if len(dictionary) != n_terms or any(i >= n_terms for row in spo for i in row):
        raise CorruptSnapshot("inconsistent term ids")
    return dictionary, spo
