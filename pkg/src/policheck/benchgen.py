"""Seeded generators for synthetic benchmark suites.

Produces main KBs (roles and concrete properties, about half functional and
half ranged, no class axioms), vocabulary-linked policies (attributes picked
uniformly from the oracle's class list, inconsistent draws discarded and
redrawn), consent policies derived from business policies by opt-out style
mutations (conjunct deletion, replacement by super- or subclasses, interval
widening or narrowing, disjunct addition), and whole suites on disk with a
line-oriented manifest.

Identical parameters and seed produce byte-identical suites; nothing in the
generation path iterates over unordered sets.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import GenerationError, ParseError, ResourceLimitError
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
    conj,
    interval_atom_count,
    iter_nodes,
    partition,
)
from .normalize import normalize, normalize_full
from .oracle import BuiltinOracle, OracleOntology, HornAxiom
from .refcheck import ref_decide
from .syntax import serialize_main_kb, serialize_oracle_ontology, serialize_policy


@dataclass(frozen=True)
class GenParams:
    """Knobs for KB, policy, and mutation generation, plus the suite seed."""

    # main KB
    roles: int = 10
    properties: int = 5
    func_fraction: float = 0.5
    range_fraction: float = 0.5
    # full policy
    disjuncts: int = 10
    max_conjuncts: int = 10
    depth: int = 4
    # simple policy
    max_atoms: int = 30
    exists_per_level: int = 3
    max_intervals: int = 8
    max_interval_length: int = 50
    max_interval_start: int = 200
    # consent mutations
    p_delete: float = 0.3
    p_generalize: float = 0.3
    p_specialize: float = 0.1
    p_add_disjunct: float = 0.1
    # suite scale
    count: int = 3600
    seed: int = 0

    def __post_init__(self) -> None:
        for name in (
            "roles", "properties", "disjuncts", "max_conjuncts", "depth",
            "max_atoms", "exists_per_level", "max_intervals",
            "max_interval_length", "max_interval_start", "count",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in (
            "func_fraction", "range_fraction",
            "p_delete", "p_generalize", "p_specialize", "p_add_disjunct",
        ):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


KB_PRESETS: Dict[str, Dict[str, int]] = {
    "K1": {"roles": 10, "properties": 5},
    "K2": {"roles": 30, "properties": 10},
    "K3": {"roles": 50, "properties": 15},
}

POLICY_PRESETS: Dict[str, Dict[str, int]] = {
    "P1": {"max_interval_length": 50},
    "P2": {"max_interval_length": 80},
    "P3": {"max_interval_length": 150},
}


def preset_params(kb: str = "K1", policy: str = "P1", **overrides) -> GenParams:
    if kb not in KB_PRESETS:
        raise ValueError(f"unknown KB preset {kb!r}")
    if policy not in POLICY_PRESETS:
        raise ValueError(f"unknown policy preset {policy!r}")
    return GenParams(**{**KB_PRESETS[kb], **POLICY_PRESETS[policy], **overrides})


def role_names(p: GenParams) -> List[str]:
    return [f"role{i}" for i in range(p.roles)]


def prop_names(p: GenParams) -> List[str]:
    return [f"prop{i}" for i in range(p.properties)]


def gen_main_kb(
    p: GenParams,
    rng: Optional[random.Random] = None,
    vocab: Sequence[str] = (),
) -> MainKB:
    """Roles and concrete properties for policies; no class axioms.

    Each role/property is functional with probability func_fraction and each
    role gets a range axiom with probability range_fraction; range targets
    come from the vocabulary when one is given.
    """
    rng = rng or random.Random(p.seed)
    func = set()
    ranges = set()
    for role in role_names(p):
        if rng.random() < p.func_fraction:
            func.add(role)
        if rng.random() < p.range_fraction:
            target = rng.choice(list(vocab)) if vocab else f"RangeOf_{role}"
            ranges.add((role, target))
    for prop in prop_names(p):
        if rng.random() < p.func_fraction:
            func.add(prop)
    return MainKB(func=func, ranges=ranges)


class _LevelBudget:
    """Per-disjunct budgets: total atoms, total intervals, existentials per
    nesting level."""

    def __init__(self, p: GenParams):
        self.atoms = p.max_atoms
        self.intervals = p.max_intervals
        self.exists_at = [p.exists_per_level] * p.depth


def _gen_simple(
    p: GenParams,
    vocab: Sequence[str],
    roles: Sequence[str],
    props: Sequence[str],
    rng: random.Random,
    level: int,
    budget: _LevelBudget,
) -> SimpleConcept:
    parts: List[SimpleConcept] = []
    room = p.max_conjuncts

    n_exists = 0
    if level < p.depth and roles and budget.exists_at[level] > 0:
        n_exists = rng.randint(0, min(budget.exists_at[level], room - 1))
        budget.exists_at[level] -= n_exists
    room -= n_exists

    n_names = 0
    if budget.atoms > 0 and room > 0:
        n_names = rng.randint(1, min(3, budget.atoms, room))
        budget.atoms -= n_names
    room -= n_names

    n_ivs = 0
    if props and budget.intervals > 0 and room > 0:
        n_ivs = rng.randint(0, min(2, budget.intervals, room))
        budget.intervals -= n_ivs

    for _ in range(n_names):
        parts.append(Name(rng.choice(list(vocab))))
    for _ in range(n_ivs):
        prop = rng.choice(list(props))
        lo = rng.randint(0, p.max_interval_start)
        hi = lo + rng.randint(0, p.max_interval_length)
        parts.append(IntervalAtom(prop, Interval(lo, hi)))
    for _ in range(n_exists):
        role = rng.choice(list(roles))
        filler = _gen_simple(p, vocab, roles, props, rng, level + 1, budget)
        parts.append(Exists(role, filler))
    if not parts:
        parts.append(Name(rng.choice(list(vocab))))
    return conj(parts)


def gen_policy_detailed(
    p: GenParams,
    vocab: Sequence[str],
    rng: random.Random,
    *,
    oracle: Optional[BuiltinOracle] = None,
    k_minus: Optional[MainKB] = None,
    retry_cap: int = 50,
) -> Tuple[FullConcept, int]:
    """Generate a full policy; returns (policy, number of discarded draws).

    When an oracle is given, every simple disjunct is kept internally
    consistent: draws that normalize to bot are discarded and redrawn, up to
    retry_cap attempts each.
    """
    if not vocab:
        raise GenerationError("policy generation needs a non-empty vocabulary")
    roles = role_names(p)
    props = prop_names(p)
    k_minus = k_minus or MainKB()
    discards = 0
    disjuncts: List[SimpleConcept] = []
    for _ in range(max(1, p.disjuncts)):
        for attempt in range(retry_cap + 1):
            candidate = _gen_simple(p, vocab, roles, props, rng, 0, _LevelBudget(p))
            if oracle is None:
                break
            normalized, _ = normalize(candidate, k_minus, oracle)
            if not isinstance(normalized, Bottom):
                break
            discards += 1
        else:
            raise GenerationError(
                f"discarded {retry_cap} consecutive inconsistent draws; "
                "the vocabulary is over-constrained"
            )
        disjuncts.append(candidate)
    return FullConcept(tuple(disjuncts)), discards


def gen_policy(
    p: GenParams,
    vocab: Sequence[str],
    rng: random.Random,
    *,
    oracle: Optional[BuiltinOracle] = None,
    k_minus: Optional[MainKB] = None,
) -> FullConcept:
    policy, _ = gen_policy_detailed(p, vocab, rng, oracle=oracle, k_minus=k_minus)
    return policy


@dataclass(frozen=True)
class MutationRecord:
    disjunct: int
    kind: str
    detail: str


def _atoms_preorder(c: SimpleConcept) -> List[SimpleConcept]:
    return [n for n in iter_nodes(c) if isinstance(n, (Name, IntervalAtom))]


def _replace_atom_at(c: SimpleConcept, index: int, new: SimpleConcept, counter: List[int]) -> SimpleConcept:
    if isinstance(c, (Name, IntervalAtom)):
        here = counter[0]
        counter[0] += 1
        return new if here == index else c
    if isinstance(c, Exists):
        return Exists(c.role, _replace_atom_at(c.filler, index, new, counter))
    if isinstance(c, Conj):
        return conj([_replace_atom_at(p, index, new, counter) for p in c.parts])
    return c


def _deletable_positions(c: SimpleConcept, path: Tuple[int, ...] = ()) -> List[Tuple[Tuple[int, ...], int]]:
    out: List[Tuple[Tuple[int, ...], int]] = []
    if isinstance(c, Conj):
        for i, p in enumerate(c.parts):
            out.append((path, i))
            out.extend(_deletable_positions(p, path + (i,)))
    elif isinstance(c, Exists):
        out.extend(_deletable_positions(c.filler, path + (-1,)))
    return out


def _delete_at(c: SimpleConcept, path: Tuple[int, ...], idx: int) -> SimpleConcept:
    if not path:
        assert isinstance(c, Conj)
        remaining = [p for i, p in enumerate(c.parts) if i != idx]
        return conj(remaining)
    step, rest = path[0], path[1:]
    if step == -1:
        assert isinstance(c, Exists)
        return Exists(c.role, _delete_at(c.filler, rest, idx))
    assert isinstance(c, Conj)
    parts = list(c.parts)
    parts[step] = _delete_at(parts[step], rest, idx)
    return conj(parts)


def mutate_consent(
    business: FullConcept,
    p: GenParams,
    oracle: BuiltinOracle,
    rng: random.Random,
) -> Tuple[FullConcept, List[MutationRecord]]:
    """Derive a consent policy by mutating each simple business policy.

    Deletion and generalization (superclass replacement, interval widening)
    broaden the consent; specialization (subclass replacement, interval
    narrowing) restricts it; a fresh disjunct may be appended.  The applied
    mutations are returned alongside the policy.
    """
    if not isinstance(oracle, BuiltinOracle):
        raise TypeError("consent mutation needs the built-in oracle for class sampling")
    log: List[MutationRecord] = []
    out: List[SimpleConcept] = []
    for i, d in enumerate(business.disjuncts):
        if rng.random() < p.p_delete:
            positions = _deletable_positions(d)
            if positions:
                path, idx = positions[rng.randrange(len(positions))]
                d = _delete_at(d, path, idx)
                log.append(MutationRecord(i, "delete", f"conjunct {idx} at {path}"))
        if rng.random() < p.p_generalize:
            d2 = _replace_term(d, oracle, rng, broaden=True, p=p)
            if d2 is not None:
                log.append(MutationRecord(i, "generalize", ""))
                d = d2
        if rng.random() < p.p_specialize:
            d2 = _replace_term(d, oracle, rng, broaden=False, p=p)
            if d2 is not None:
                log.append(MutationRecord(i, "specialize", ""))
                d = d2
        out.append(d)
    if rng.random() < p.p_add_disjunct:
        vocab = sorted(oracle.signature().concepts)
        if vocab:
            extra = _gen_simple(
                p, vocab, role_names(p), prop_names(p), rng, 0, _LevelBudget(p)
            )
            out.append(extra)
            log.append(MutationRecord(len(out) - 1, "add_disjunct", ""))
    return FullConcept(tuple(out)), log


def _replace_term(
    d: SimpleConcept,
    oracle: BuiltinOracle,
    rng: random.Random,
    *,
    broaden: bool,
    p: GenParams,
) -> Optional[SimpleConcept]:
    atoms = _atoms_preorder(d)
    eligible: List[int] = []
    for i, a in enumerate(atoms):
        if isinstance(a, IntervalAtom):
            eligible.append(i)
        elif broaden and oracle.strict_superclasses(a.name):
            eligible.append(i)
        elif not broaden and oracle.strict_subclasses(a.name):
            eligible.append(i)
    if not eligible:
        return None
    index = eligible[rng.randrange(len(eligible))]
    atom = atoms[index]
    if isinstance(atom, IntervalAtom):
        lo, hi = atom.iv.lo, atom.iv.hi
        if broaden:
            new_iv = Interval(
                max(0, lo - rng.randint(0, p.max_interval_length)),
                hi + rng.randint(0, p.max_interval_length),
            )
        else:
            length = hi - lo
            d1 = rng.randint(0, length)
            d2 = rng.randint(0, length - d1)
            new_iv = Interval(lo + d1, hi - d2)
        new_atom: SimpleConcept = IntervalAtom(atom.prop, new_iv)
    else:
        pool = (
            oracle.strict_superclasses(atom.name)
            if broaden
            else oracle.strict_subclasses(atom.name)
        )
        new_atom = Name(pool[rng.randrange(len(pool))])
    return _replace_atom_at(d, index, new_atom, [0])


def gen_synthetic_oracle(
    classes: int,
    seed: int,
    *,
    roots: int = 8,
    extra_parent_p: float = 0.15,
    disjoint_root_pairs: int = 3,
) -> OracleOntology:
    """Random DAG class hierarchy with disjointness between top subtrees.

    Every class stays inside one root subtree, so every class is satisfiable
    even with the sprinkled disjointness axioms.
    """
    if classes <= 0:
        return OracleOntology(())
    rng = random.Random(seed)
    roots = max(1, min(roots, classes))
    names = [f"C{i:05d}" for i in range(classes)]
    subtree_members: List[List[str]] = [[names[r]] for r in range(roots)]
    axioms: List[HornAxiom] = []
    for i in range(roots, classes):
        tree = rng.randrange(roots)
        members = subtree_members[tree]
        parent = members[rng.randrange(len(members))]
        axioms.append(HornAxiom("sub", (names[i], parent)))
        if rng.random() < extra_parent_p and len(members) > 1:
            second = members[rng.randrange(len(members))]
            if second != parent:
                axioms.append(HornAxiom("sub", (names[i], second)))
        members.append(names[i])
    pairs = [(a, b) for a in range(roots) for b in range(a + 1, roots)]
    rng.shuffle(pairs)
    for a, b in pairs[:disjoint_root_pairs]:
        axioms.append(HornAxiom("disj", (names[a], names[b])))
    return OracleOntology(tuple(axioms))


@dataclass(frozen=True)
class ManifestRecord:
    """One suite query; file paths are relative to the manifest."""

    lhs: str
    rhs: str
    kb: str
    oracle: str
    seed: int
    ni: int
    expected: str  # true | false | unknown

    def to_line(self) -> str:
        return (
            f"lhs={self.lhs} rhs={self.rhs} kb={self.kb} oracle={self.oracle} "
            f"seed={self.seed} ni={self.ni} expected={self.expected}"
        )


def parse_manifest(text: str) -> List[ManifestRecord]:
    records = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields: Dict[str, str] = {}
        for word in line.split():
            if "=" not in word:
                raise ParseError("expected key=value fields", lineno, 1, word)
            key, value = word.split("=", 1)
            fields[key] = value
        try:
            records.append(
                ManifestRecord(
                    lhs=fields["lhs"],
                    rhs=fields["rhs"],
                    kb=fields["kb"],
                    oracle=fields["oracle"],
                    seed=int(fields["seed"]),
                    ni=int(fields["ni"]),
                    expected=fields["expected"],
                )
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad manifest record: {exc}", lineno, 1, line) from exc
    return records


def serialize_manifest(records: Sequence[ManifestRecord]) -> str:
    return "".join(r.to_line() + "\n" for r in records)


def gen_suite(
    p: GenParams,
    oracle_onto: OracleOntology,
    out_dir,
    *,
    count: Optional[int] = None,
    compute_expected: bool = True,
    expected_split_cap: int = 2048,
) -> List[ManifestRecord]:
    """Write a complete suite: main KB, oracle, policy pairs, and manifest.

    Expected answers come from the reference checker when the instance is
    small enough (estimated split size under expected_split_cap), otherwise
    they are recorded as unknown.  The ni label is measured on the business
    policy after normalization.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_queries = p.count if count is None else count

    vocab = oracle_onto.class_names()
    if not vocab:
        raise GenerationError("the oracle ontology declares no classes")
    rng = random.Random(p.seed)
    kb = gen_main_kb(p, rng, vocab)
    (out / "main.plkb").write_text(serialize_main_kb(kb), encoding="utf-8")
    (out / "vocab.horn").write_text(serialize_oracle_ontology(oracle_onto), encoding="utf-8")

    handle = BuiltinOracle(oracle_onto).load_shifted(partition(kb).shifted)
    k_minus = partition(kb).k_minus

    records: List[ManifestRecord] = []
    for qi in range(n_queries):
        qseed = rng.randrange(2**31)
        qrng = random.Random(qseed)
        business, _ = gen_policy_detailed(
            p, vocab, qrng, oracle=handle, k_minus=k_minus
        )
        consent, _ = mutate_consent(business, p, handle, qrng)

        normalized, _ = normalize_full(business, k_minus, handle)
        ni = max(interval_atom_count(d) for d in normalized.disjuncts)

        expected = "unknown"
        if compute_expected:
            try:
                answer = ref_decide(
                    kb, oracle_onto, business, consent, split_cap=expected_split_cap
                )
                expected = "true" if answer else "false"
            except ResourceLimitError:
                expected = "unknown"

        lhs_file = f"q{qi:04d}.lhs.plp"
        rhs_file = f"q{qi:04d}.rhs.plp"
        (out / lhs_file).write_text(serialize_policy(business) + "\n", encoding="utf-8")
        (out / rhs_file).write_text(serialize_policy(consent) + "\n", encoding="utf-8")
        records.append(
            ManifestRecord(
                lhs=lhs_file,
                rhs=rhs_file,
                kb="main.plkb",
                oracle="vocab.horn",
                seed=qseed,
                ni=ni,
                expected=expected,
            )
        )
    (out / "suite.manifest").write_text(serialize_manifest(records), encoding="utf-8")
    return records
