"""Structural subsumption for elementary pairs.

An elementary pair has both sides simple, the pair interval safe, and the
left-hand side normalized.  Under those preconditions the check is a single
syntax-directed recursion over the right-hand side, with one oracle query
per concept-name target:

    bot on the left            -> true
    name D                     -> oracle: top-level names of C subsumed by D
    interval D on property f   -> some top-level f-atom of C contained in D
    existential D over role R  -> some top-level R-atom of C whose filler
                                  passes recursively
    conjunction D              -> every conjunct passes
    otherwise                  -> false

The preconditions are not checked here (hot path); the engine's debug mode
validates them separately.
"""

from __future__ import annotations

from typing import Optional

from .model import Bottom, Conj, Exists, IntervalAtom, Name, SimpleConcept, conjuncts, top_names
from .oracle import OracleHandle, OracleQuery, QueryCache, cached_query

DEPTH_CAP = 10_000


def sts_check(
    c: SimpleConcept,
    d: SimpleConcept,
    oracle: OracleHandle,
    cache: Optional[QueryCache] = None,
    *,
    depth_cap: int = DEPTH_CAP,
) -> bool:
    """True iff the elementary subsumption c <= d holds against the oracle."""
    if depth_cap <= 0:
        raise RuntimeError("structural check exceeded its recursion depth cap")
    if isinstance(c, Bottom):
        return True
    if isinstance(d, Name):
        # An empty left-hand name set is the empty conjunction, i.e. Top.
        q = OracleQuery(frozenset(top_names(c)), frozenset((d.name,)))
        return cached_query(oracle, cache, q)
    if isinstance(d, IntervalAtom):
        return any(
            p.prop == d.prop and d.iv.contains(p.iv)
            for p in conjuncts(c)
            if isinstance(p, IntervalAtom)
        )
    if isinstance(d, Exists):
        return any(
            sts_check(p.filler, d.filler, oracle, cache, depth_cap=depth_cap - 1)
            for p in conjuncts(c)
            if isinstance(p, Exists) and p.role == d.role
        )
    if isinstance(d, Conj):
        return all(
            sts_check(c, part, oracle, cache, depth_cap=depth_cap - 1)
            for part in d.parts
        )
    return False
