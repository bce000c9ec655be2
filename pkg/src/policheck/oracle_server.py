"""Reference oracle process speaking the external-oracle line protocol.

Run as `python -m policheck.oracle_server [ontology.horn]`.  Reads one
request per line on stdin and writes one response per request on stdout:

    AX <axiom-line>          load one .horn axiom       -> 1 | E <message>
    Q A1 ... An : B1 ... Bk  conjunction vs disjunction -> 1 | 0 | E <message>
    QUIT                     terminate, no response

The backend is the built-in saturation index, rebuilt lazily after axiom
loads.  Malformed requests get an E response; the process never crashes on
bad input.
"""

from __future__ import annotations

import sys
from typing import List, Optional

from .errors import ParseError, ResourceLimitError
from .oracle import TOP, HornAxiom, OracleOntology, SaturationIndex, saturate
from .syntax import parse_oracle_ontology


class _Server:
    def __init__(self, axioms: List[HornAxiom]):
        self.axioms = axioms
        self._index: Optional[SaturationIndex] = None

    def index(self) -> SaturationIndex:
        if self._index is None:
            self._index = saturate(OracleOntology(tuple(self.axioms)))
        return self._index

    def handle(self, line: str) -> Optional[str]:
        line = line.strip()
        if not line:
            return "E empty request"
        if line == "QUIT":
            return None
        if line.startswith("AX "):
            return self._load(line[3:])
        if line.startswith("Q "):
            return self._query(line[2:])
        return f"E unknown request {line.split()[0]!r}"

    def _load(self, axiom_line: str) -> str:
        try:
            onto = parse_oracle_ontology(axiom_line)
        except ParseError as exc:
            return f"E {exc.message}"
        if len(onto.axioms) != 1:
            return "E expected exactly one axiom"
        self.axioms.append(onto.axioms[0])
        self._index = None
        return "1"

    def _query(self, body: str) -> str:
        parts = body.split()
        if ":" not in parts:
            return "E missing ':' separator"
        sep = parts.index(":")
        lhs, rhs = parts[:sep], parts[sep + 1 :]
        if not lhs or not rhs:
            return "E both sides of ':' must be non-empty"
        lhs_names = frozenset(lhs) - {TOP}
        try:
            answer = self.index().decide(lhs_names, frozenset(rhs))
        except ResourceLimitError as exc:
            return f"E {exc}"
        return "1" if answer else "0"


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    axioms: List[HornAxiom] = []
    for path in argv:
        try:
            with open(path, encoding="utf-8") as fh:
                axioms.extend(parse_oracle_ontology(fh.read()).axioms)
        except (OSError, ParseError) as exc:
            print(f"E cannot load {path}: {exc}", file=sys.stderr)
            return 1
    server = _Server(axioms)
    for raw in sys.stdin:
        response = server.handle(raw)
        if response is None:
            return 0
        print(response, flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
