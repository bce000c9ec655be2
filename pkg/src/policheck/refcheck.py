"""Reference decision procedure via explicit tree models.

A normalized, consistent simple concept is turned into a finite pointed
tree interpretation (its canonical model); subsumption is then decided by
evaluating the right-hand side directly against that model using the
concept semantics, querying the oracle for concept-name membership.  This
path shares the normalizer and the oracle with the fast engine but replaces
the structural recursion with semantic evaluation, making it the ground
truth the engine is tested against.  It is deliberately cache-free and not
a performance path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .model import (
    Bottom,
    Conj,
    Exists,
    FullConcept,
    Interval,
    IntervalAtom,
    MainKB,
    Name,
    SimpleConcept,
    conjuncts,
    partition,
)
from .normalize import normalize_full, split_intervals
from .oracle import BuiltinOracle, OracleHandle, OracleOntology, OracleQuery


@dataclass(frozen=True)
class ModelNode:
    """One tree element: its concept-name label, role children, and
    concrete-property values (kept symbolically as interval unions)."""

    names: frozenset
    children: Tuple[Tuple[str, Tuple["ModelNode", ...]], ...]
    values: Tuple[Tuple[str, Tuple[Interval, ...]], ...]

    def role_children(self, role: str) -> Tuple["ModelNode", ...]:
        for r, nodes in self.children:
            if r == role:
                return nodes
        return ()

    def prop_values(self, prop: str) -> Tuple[Interval, ...]:
        for p, ivs in self.values:
            if p == prop:
                return ivs
        return ()


@dataclass(frozen=True)
class PointedModel:
    root: ModelNode


def build_canonical(c: SimpleConcept, oracle: Optional[OracleHandle] = None) -> PointedModel:
    """Tree model of a normalized simple concept c (c must not be bot).

    The root is labelled with c's top-level names, carries one child per
    top-level existential atom, and one interval set per concrete property.
    Structural symptoms of non-normalized input (bot or an empty interval
    anywhere) are rejected; when an oracle is given, name-set consistency is
    verified as well.
    """
    if isinstance(c, Bottom):
        raise ValueError("cannot build a model of bot")
    return PointedModel(_build_node(c, oracle))


def _build_node(c: SimpleConcept, oracle: Optional[OracleHandle]) -> ModelNode:
    names = []
    children: Dict[str, list] = {}
    values: Dict[str, list] = {}
    for part in conjuncts(c):
        if isinstance(part, Bottom):
            raise ValueError("input is not normalized: bot conjunct")
        if isinstance(part, Name):
            names.append(part.name)
        elif isinstance(part, IntervalAtom):
            if part.iv.is_empty():
                raise ValueError("input is not normalized: empty interval")
            values.setdefault(part.prop, []).append(part.iv)
        elif isinstance(part, Exists):
            children.setdefault(part.role, []).append(_build_node(part.filler, oracle))
        else:
            raise ValueError("input is not canonical: nested conjunction")
    name_set = frozenset(names)
    if oracle is not None and name_set:
        if oracle.query(OracleQuery(name_set, frozenset(("Bot",)))):
            raise ValueError("input is not normalized: inconsistent name set")
    return ModelNode(
        names=name_set,
        children=tuple(sorted((r, tuple(ns)) for r, ns in children.items())),
        values=tuple(sorted((p, tuple(ivs)) for p, ivs in values.items())),
    )


def eval_concept(
    node: ModelNode,
    d: SimpleConcept,
    oracle: OracleHandle,
    *,
    debug: bool = False,
) -> bool:
    """Semantic satisfaction of d at node.

    Name membership is delegated to the oracle against the node's label;
    intervals are satisfied when the node's value set for the property
    meets the queried interval.  With debug=True, every interval comparison
    asserts the interval-safety contract (intersection implies containment).
    """
    if isinstance(d, Bottom):
        return False
    if isinstance(d, Name):
        return oracle.query(OracleQuery(node.names, frozenset((d.name,))))
    if isinstance(d, IntervalAtom):
        stored = node.prop_values(d.prop)
        if debug:
            for iv in stored:
                assert d.iv.contains(iv) or not d.iv.overlaps(iv), (
                    "interval safety violated during evaluation"
                )
        return any(iv.overlaps(d.iv) for iv in stored)
    if isinstance(d, Exists):
        return any(
            eval_concept(child, d.filler, oracle, debug=debug)
            for child in node.role_children(d.role)
        )
    if isinstance(d, Conj):
        return all(eval_concept(node, part, oracle, debug=debug) for part in d.parts)
    raise TypeError(f"not a simple concept: {type(d).__name__}")


def ref_decide(
    main: MainKB,
    oracle: OracleOntology,
    lhs: FullConcept,
    rhs: FullConcept,
    *,
    split_cap: int = 1_000_000,
    debug: bool = False,
) -> bool:
    """Reference answer for: does the main KB plus the oracle entail lhs <= rhs.

    Pipeline: partition the KB, shift the name axioms into a fresh built-in
    oracle, normalize the left side, split intervals, then require every
    non-bot disjunct's canonical model to satisfy some right-hand disjunct.
    Intended for test-scale instances.
    """
    part = partition(main)
    handle = BuiltinOracle(oracle).load_shifted(part.shifted)
    normalized, _ = normalize_full(lhs, part.k_minus, handle)
    split = split_intervals(normalized, rhs, cap=split_cap)
    for disjunct in split.disjuncts:
        if isinstance(disjunct, Bottom):
            continue
        model = build_canonical(disjunct, handle if debug else None)
        if not any(
            eval_concept(model.root, d, handle, debug=debug) for d in rhs.disjuncts
        ):
            return False
    return True
