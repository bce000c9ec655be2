"""Parsers and serializers for the three input formats.

  .plp   policy files, s-expression grammar:
           full   := simple | "(or" simple+ ")"
           simple := NAME | "bot" | "(and" simple+ ")"
                   | "(some" NAME simple ")" | "(int" NAME NAT NAT ")"
  .plkb  main-KB files, one axiom per line:
           func N | range N N | sub N N | disj N N
  .horn  oracle files, one axiom per line:
           sub A B | subconj A B C | subex R A B | supex A R B
           | subrole R S | disj A B | bot A

NAME matches [A-Za-z_][A-Za-z0-9_.:-]*; `#` starts a comment; whitespace is
insignificant; LF and CRLF line endings are both accepted.  `Top` and `Bot`
are reserved oracle names.  Parsers report the first error with its 1-based
position instead of recovering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, List, Tuple

from .errors import ParseError
from .model import (
    BOT,
    Bottom,
    Conj,
    Exists,
    FullConcept,
    Interval,
    IntervalAtom,
    MainKB,
    Name,
    Signature,
    SimpleConcept,
    U64_MAX,
    conj,
)
from .oracle import HornAxiom, OracleOntology, _ARITIES

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.:\-]*")
_NAT_RE = re.compile(r"[0-9]+")
_RESERVED = frozenset({"and", "or", "some", "int", "bot"})


@dataclass(frozen=True)
class _Token:
    kind: str  # "(", ")", "name", "nat"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        pos = 0
        while pos < len(line):
            ch = line[pos]
            if ch == "#":
                break
            if ch.isspace():
                pos += 1
                continue
            if ch in "()":
                tokens.append(_Token(ch, ch, lineno, pos + 1))
                pos += 1
                continue
            m = _NAT_RE.match(line, pos)
            if m:
                tokens.append(_Token("nat", m.group(), lineno, pos + 1))
                pos = m.end()
                continue
            m = _NAME_RE.match(line, pos)
            if m:
                tokens.append(_Token("name", m.group(), lineno, pos + 1))
                pos = m.end()
                continue
            raise ParseError(f"unexpected character {ch!r}", lineno, pos + 1, ch)
    return tokens


class _PolicyParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def _peek(self) -> _Token:
        if self.pos >= len(self.tokens):
            last = self.tokens[-1] if self.tokens else _Token("name", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col + len(last.text))
        return self.tokens[self.pos]

    def _next(self) -> _Token:
        tok = self._peek()
        self.pos += 1
        return tok

    def _expect(self, kind: str) -> _Token:
        tok = self._next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}", tok.line, tok.col, tok.text)
        return tok

    def _name(self, what: str) -> str:
        tok = self._next()
        if tok.kind != "name" or tok.text in _RESERVED:
            raise ParseError(f"expected {what}", tok.line, tok.col, tok.text)
        return tok.text

    def _nat(self) -> int:
        tok = self._next()
        if tok.kind != "nat":
            raise ParseError("expected a natural number", tok.line, tok.col, tok.text)
        value = int(tok.text)
        if value > U64_MAX:
            raise ParseError("interval bound exceeds 64-bit unsigned range", tok.line, tok.col, tok.text)
        return value

    def parse_full(self) -> FullConcept:
        tok = self._peek()
        if tok.kind == "(" and self._op_ahead() == "or":
            self._next()  # (
            self._next()  # or
            disjuncts = [self.parse_simple()]
            while self._peek().kind != ")":
                disjuncts.append(self.parse_simple())
            self._next()  # )
            result = FullConcept(tuple(disjuncts))
        else:
            result = FullConcept((self.parse_simple(),))
        if self.pos != len(self.tokens):
            extra = self.tokens[self.pos]
            raise ParseError("unexpected trailing input", extra.line, extra.col, extra.text)
        return result

    def _op_ahead(self) -> str:
        nxt = self.pos + 1
        if nxt < len(self.tokens) and self.tokens[nxt].kind == "name":
            return self.tokens[nxt].text
        return ""

    def parse_simple(self) -> SimpleConcept:
        tok = self._next()
        if tok.kind == "name":
            if tok.text == "bot":
                return BOT
            if tok.text in _RESERVED:
                raise ParseError(f"reserved word {tok.text!r} cannot be a name", tok.line, tok.col, tok.text)
            return Name(tok.text)
        if tok.kind == "nat":
            raise ParseError("expected a concept", tok.line, tok.col, tok.text)
        if tok.kind == ")":
            raise ParseError("expected a concept", tok.line, tok.col, tok.text)
        op = self._next()
        if op.kind != "name":
            raise ParseError("expected an operator (and/some/int)", op.line, op.col, op.text)
        if op.text == "or":
            raise ParseError("union is not allowed inside a simple concept", op.line, op.col, op.text)
        if op.text == "and":
            parts = [self.parse_simple()]
            while self._peek().kind != ")":
                parts.append(self.parse_simple())
            self._next()
            return conj(parts)
        if op.text == "some":
            role = self._name("a role name")
            filler = self.parse_simple()
            self._expect(")")
            return Exists(role, filler)
        if op.text == "int":
            prop = self._name("a concrete property name")
            lo = self._nat()
            hi = self._nat()
            self._expect(")")
            return IntervalAtom(prop, Interval(lo, hi))
        raise ParseError(f"unknown operator {op.text!r}", op.line, op.col, op.text)


def parse_policy(text: str) -> FullConcept:
    """Parse a policy; unions are only legal at the top level."""
    return _PolicyParser(text).parse_full()


def _line_words(text: str) -> Iterator[Tuple[int, List[Tuple[str, int]]]]:
    """Yield (lineno, [(word, col), ...]) for non-empty, non-comment lines."""
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        hash_at = line.find("#")
        if hash_at >= 0:
            line = line[:hash_at]
        words = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]
        if words:
            yield lineno, words


def _check_name(word: str, lineno: int, col: int) -> str:
    if not _NAME_RE.fullmatch(word):
        raise ParseError("invalid name", lineno, col, word)
    return word


def parse_main_kb(text: str) -> MainKB:
    """Parse a main KB: func/range/sub/disj lines only."""
    func = set()
    ranges = set()
    inclusions = set()
    disjointness = set()
    for lineno, words in _line_words(text):
        (kw, kw_col), rest = words[0], words[1:]
        arity = {"func": 1, "range": 2, "sub": 2, "disj": 2}.get(kw)
        if arity is None:
            raise ParseError(f"unsupported axiom form {kw!r}", lineno, kw_col, kw)
        if len(rest) != arity:
            raise ParseError(f"{kw} takes {arity} name(s)", lineno, kw_col, kw)
        names = [_check_name(w, lineno, c) for w, c in rest]
        if kw == "func":
            func.add(names[0])
        elif kw == "range":
            ranges.add((names[0], names[1]))
        elif kw == "sub":
            inclusions.add((names[0], names[1]))
        else:
            disjointness.add((names[0], names[1]))
    return MainKB(func=func, ranges=ranges, inclusions=inclusions, disjointness=disjointness)


def parse_oracle_ontology(text: str) -> OracleOntology:
    """Parse an oracle ontology in the supported Horn normal forms."""
    axioms = []
    for lineno, words in _line_words(text):
        (kw, kw_col), rest = words[0], words[1:]
        arity = _ARITIES.get(kw)
        if arity is None:
            raise ParseError(f"unsupported axiom form {kw!r}", lineno, kw_col, kw)
        if len(rest) != arity:
            raise ParseError(f"{kw} takes {arity} name(s)", lineno, kw_col, kw)
        names = tuple(_check_name(w, lineno, c) for w, c in rest)
        axioms.append(HornAxiom(kw, names))
    return OracleOntology(tuple(axioms))


def parse_signature_decl(text: str) -> Signature:
    """Parse a declared-signature file: `concept N` / `role N` / `prop N` lines."""
    concepts = set()
    roles = set()
    props = set()
    for lineno, words in _line_words(text):
        (kw, kw_col), rest = words[0], words[1:]
        if kw not in ("concept", "role", "prop") or len(rest) != 1:
            raise ParseError("expected `concept N`, `role N`, or `prop N`", lineno, kw_col, kw)
        name = _check_name(rest[0][0], lineno, rest[0][1])
        {"concept": concepts, "role": roles, "prop": props}[kw].add(name)
    return Signature(frozenset(concepts), frozenset(roles), frozenset(props))


def serialize_simple(c: SimpleConcept) -> str:
    if isinstance(c, Name):
        return c.name
    if isinstance(c, Bottom):
        return "bot"
    if isinstance(c, IntervalAtom):
        return f"(int {c.prop} {c.iv.lo} {c.iv.hi})"
    if isinstance(c, Exists):
        return f"(some {c.role} {serialize_simple(c.filler)})"
    if isinstance(c, Conj):
        return "(and " + " ".join(serialize_simple(p) for p in c.parts) + ")"
    raise TypeError(f"not a simple concept: {type(c).__name__}")


def serialize_policy(c) -> str:
    """Serialized canonical form; round-trips through parse_policy."""
    if isinstance(c, SimpleConcept):
        return serialize_simple(c)
    if len(c.disjuncts) == 1:
        return serialize_simple(c.disjuncts[0])
    return "(or " + " ".join(serialize_simple(d) for d in c.disjuncts) + ")"


def serialize_main_kb(kb: MainKB) -> str:
    lines = [f"func {n}" for n in sorted(kb.func)]
    lines += [f"range {r} {a}" for r, a in sorted(kb.ranges)]
    lines += [f"sub {a} {b}" for a, b in sorted(kb.inclusions)]
    lines += [f"disj {a} {b}" for a, b in sorted(kb.disjointness)]
    return "\n".join(lines) + ("\n" if lines else "")


def serialize_oracle_ontology(onto: OracleOntology) -> str:
    lines = [ax.to_line() for ax in onto.axioms]
    return "\n".join(lines) + ("\n" if lines else "")
