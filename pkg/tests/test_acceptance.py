"""Acceptance criteria, one test per criterion.

Each test prints a single PASS line (visible with `pytest -s`); a failing
criterion fails its test.  Criterion 8 (absolute third-party latencies) is
out of scope by design and represented by the cache/scaling evidence of
criterion 6.
"""

import random
import time

from policheck import (
    BruteForceOracle,
    BuiltinOracle,
    Engine,
    EngineConfig,
    FullConcept,
    Interval,
    IntervalAtom,
    Name,
    OracleQuery,
    build_canonical,
    conj,
    eval_concept,
    is_interval_safe,
    normalize,
    ref_decide,
    split_intervals,
    sts_check,
)
from policheck.benchgen import (
    gen_main_kb,
    gen_policy,
    gen_synthetic_oracle,
    mutate_consent,
    preset_params,
)
from policheck.model import Bottom, interval_atom_count, partition
from policheck.oracle import BOT_NAME

from support import (
    random_instance,
    random_propositional_ontology,
    random_simple,
)


def _report(criterion, detail):
    print(f"ACCEPTANCE CRITERION {criterion}: PASS ({detail})")


def test_criterion_1_engine_matches_reference():
    """Engine vs reference equivalence on 10,000 seeded random instances."""
    rng = random.Random(1001)
    n = 10_000
    t0 = time.perf_counter()
    for i in range(n):
        kb, onto, lhs, rhs = random_instance(rng)
        engine = Engine(kb, onto)
        got = engine.check(lhs, rhs)[0]
        want = ref_decide(kb, onto, lhs, rhs)
        assert got == want, (i, kb, onto, lhs, rhs)
    elapsed = time.perf_counter() - t0
    _report(1, f"{n} instances agree, {elapsed:.1f}s")


def test_criterion_2_oracle_ground_truth():
    """Built-in saturation vs brute force on role-free ontologies."""
    rng = random.Random(2002)
    names = [f"A{i}" for i in range(12)]
    randomized = 0
    exhaustive = 0
    t0 = time.perf_counter()
    for round_ in range(40):
        onto = random_propositional_ontology(rng, names, rng.randint(0, 24))
        builtin = BuiltinOracle(onto)
        brute = BruteForceOracle(onto.axioms, names)
        # exhaustive single-name coverage, Bot included on the right
        for a in names:
            for b in names + [BOT_NAME]:
                q = OracleQuery(frozenset({a}), frozenset({b}))
                assert builtin.query(q) == brute.query(q), (onto, q)
                exhaustive += 1
        for _ in range(130):
            lhs = frozenset(rng.sample(names, rng.randint(0, 4)))
            rhs = frozenset(rng.sample(names + [BOT_NAME], rng.randint(1, 3)))
            q = OracleQuery(lhs, rhs)
            assert builtin.query(q) == brute.query(q), (onto, q)
            randomized += 1
    assert randomized >= 5000
    elapsed = time.perf_counter() - t0
    _report(2, f"{exhaustive} exhaustive + {randomized} randomized queries agree, {elapsed:.1f}s")


def test_criterion_3_sts_matches_canonical_model():
    """sts_check equals canonical-model evaluation on elementary pairs."""
    rng = random.Random(3003)
    pairs = 0
    t0 = time.perf_counter()
    while pairs < 10_000:
        kb, onto, lhs, rhs = random_instance(rng)
        oracle = BuiltinOracle(onto).load_shifted(partition(kb).shifted)
        k_minus = partition(kb).k_minus
        normalized, _ = normalize(lhs.disjuncts[0], k_minus, oracle)
        if isinstance(normalized, Bottom):
            continue
        d = rhs.disjuncts[0]
        split = split_intervals(FullConcept((normalized,)), FullConcept((d,)))
        for ci in split.disjuncts:
            model = build_canonical(ci)
            assert sts_check(ci, d, oracle) == eval_concept(model.root, d, oracle), (
                ci, d, onto,
            )
            pairs += 1
    elapsed = time.perf_counter() - t0
    _report(3, f"{pairs} elementary pairs agree, {elapsed:.1f}s")


def test_criterion_4_normalization_soundness():
    """Reference answers invariant under LHS normalization; normalize
    idempotent; every split output passes the interval-safety verifier."""
    rng = random.Random(4004)
    n = 10_000
    t0 = time.perf_counter()
    for i in range(n):
        kb, onto, _, rhs = random_instance(rng)
        c = random_simple(rng)
        oracle = BuiltinOracle(onto).load_shifted(partition(kb).shifted)
        k_minus = partition(kb).k_minus

        once, _ = normalize(c, k_minus, oracle)
        twice, _ = normalize(once, k_minus, oracle)
        assert once == twice, (i, c)

        lhs = FullConcept((c,))
        norm_lhs = FullConcept((once,))
        assert ref_decide(kb, onto, lhs, rhs) == ref_decide(kb, onto, norm_lhs, rhs), (
            i, c, rhs,
        )

        split = split_intervals(norm_lhs, rhs)
        assert is_interval_safe(split, rhs), (i, c, rhs)
    elapsed = time.perf_counter() - t0
    _report(4, f"{n} concepts: invariant + idempotent + split-safe, {elapsed:.1f}s")


def test_criterion_5_splitting_blowup_law():
    """k interval atoms cut into s pieces yield exactly s**k disjuncts."""

    def crafted(k, s):
        lhs = conj([IntervalAtom(f"p{i}", Interval(1, 10 * s)) for i in range(k)])
        rhs = conj(
            [
                IntervalAtom(f"p{i}", Interval(1, 10 * j))
                for i in range(k)
                for j in range(1, s)
            ]
        )
        return FullConcept((lhs,)), FullConcept((rhs,))

    checked = []
    for k, s in ((3, 2), (4, 3), (1, 5), (2, 2), (5, 2), (2, 6)):
        lhs, rhs = crafted(k, s)
        out = split_intervals(lhs, rhs)
        assert len(out.disjuncts) == s**k, (k, s, len(out.disjuncts))
        assert is_interval_safe(out, rhs)
        checked.append(f"{s}^{k}={s**k}")
    _report(5, "exact counts " + ", ".join(checked))


def _interval_sweep_suite(n_queries, seeds):
    """Business/consent pairs sharing one name skeleton per query, with ni
    interval atoms added per simple policy.

    The consent keeps a widened copy of every business interval (so every
    split piece stays covered and the check remains true, processing all
    split disjuncts like the real mutation workload) plus one extra
    disjunct whose narrow intervals inject the cut points; each business
    interval is cut into three pieces, so splitting scales as 3**ni.
    Interval bounds depend only on the property index, never the disjunct,
    so every bucket issues the same distinct name queries.
    """
    classes = 8_000
    onto = gen_synthetic_oracle(classes, seed=seeds)
    vocab = onto.class_names()
    params = preset_params(
        "K1", "P1",
        disjuncts=10, depth=2, max_conjuncts=4, max_atoms=12,
        exists_per_level=2, max_intervals=0,
        p_delete=0.25, p_generalize=0.4, p_specialize=0.0, p_add_disjunct=0.0,
        seed=seeds,
    )
    rng = random.Random(seeds)
    kb = gen_main_kb(params, rng, vocab)
    shared = BuiltinOracle(onto)
    shared.index  # saturate once; buckets then fork this handle
    k_minus = partition(kb).k_minus

    skeletons = []
    for _ in range(n_queries):
        business = gen_policy(params, vocab, rng, oracle=shared, k_minus=k_minus)
        consent, _ = mutate_consent(business, params, shared, rng)
        skeletons.append((business, consent))

    def atoms(ni, lo_off, hi_off):
        return [
            IntervalAtom(f"iv{k}", Interval(20 * k + lo_off, 20 * k + hi_off))
            for k in range(ni)
        ]

    def business_with(policy, ni):
        if not ni:
            return policy
        return FullConcept(tuple(conj([d, *atoms(ni, 3, 15)]) for d in policy.disjuncts))

    def consent_with(policy, ni):
        # "SplitMarker" matches nothing, so the cutter disjunct costs one
        # deterministic oracle query per pair and only contributes cuts
        cutter = conj([Name("SplitMarker"), *atoms(ni, 7, 11)])
        if ni:
            covered = tuple(conj([d, *atoms(ni, 0, 18)]) for d in policy.disjuncts)
        else:
            covered = policy.disjuncts
        return FullConcept((cutter,) + covered)

    suite = {}
    for ni in range(5):
        suite[ni] = [
            (business_with(b, ni), consent_with(c, ni)) for b, c in skeletons
        ]
    return kb, onto, shared, k_minus, suite


def test_criterion_6_cache_effectiveness_trend():
    """Uncached oracle calls grow >= 5x from ni=0 to ni=4 while cached
    distinct calls stay within +/-25% of the ni=0 baseline."""
    t0 = time.perf_counter()
    kb, onto, shared, k_minus, suite = _interval_sweep_suite(n_queries=4, seeds=6006)

    uncached_calls = {}
    cached_calls = {}
    split_sizes = {}
    for ni, pairs in suite.items():
        eng_u = Engine(kb, shared.fork(), EngineConfig(use_caches=False))
        eng_c = Engine(kb, shared.fork(), EngineConfig(use_caches=True))
        splits = []
        for lhs, rhs in pairs:
            answer_u, stats_u = eng_u.check(lhs, rhs)
            answer_c, stats_c = eng_c.check(lhs, rhs)
            assert answer_u == answer_c
            # measured ni matches the bucket label
            assert stats_u.ni == ni
            splits.append(stats_u.disj_after_split)
        uncached_calls[ni] = eng_u.stats_snapshot().oracle_calls
        cached_calls[ni] = eng_c.stats_snapshot().oracle_calls
        split_sizes[ni] = sum(splits) / len(splits)

    growth = uncached_calls[4] / uncached_calls[0]
    assert growth >= 5.0, (uncached_calls, growth)
    base = cached_calls[0]
    for ni in range(5):
        assert abs(cached_calls[ni] - base) <= 0.25 * base, cached_calls
    # qualitative splitting growth: 10 disjuncts before, hundreds at ni=4
    assert split_sizes[0] == 10.0
    assert split_sizes[4] >= 100.0
    elapsed = time.perf_counter() - t0
    _report(
        6,
        f"uncached {uncached_calls[0]} -> {uncached_calls[4]} calls ({growth:.1f}x), "
        f"cached {base} -> {cached_calls[4]} (flat), "
        f"mean split {split_sizes[0]:.0f} -> {split_sizes[4]:.0f}, {elapsed:.1f}s",
    )


def test_criterion_7_throughput_floor():
    """Cached checks against a 10,000-class oracle sustain the CI floor of
    200 checks/second (soft target 1,000/s)."""
    classes = 10_000
    onto = gen_synthetic_oracle(classes, seed=7007)
    vocab = onto.class_names()
    params = preset_params(
        "K1", "P1",
        max_intervals=1,
        p_delete=0.3, p_generalize=0.4, p_specialize=0.0, p_add_disjunct=0.0,
        seed=7007,
    )
    rng = random.Random(7007)
    kb = gen_main_kb(params, rng, vocab)
    engine = Engine(kb, onto)
    k_minus = partition(kb).k_minus

    businesses = [
        gen_policy(params, vocab, rng, oracle=engine.oracle, k_minus=k_minus)
        for _ in range(16)
    ]
    stream = []
    for business in businesses:
        for _ in range(75):
            consent, _ = mutate_consent(business, params, engine.oracle, rng)
            stream.append((business, consent))
    rng.shuffle(stream)

    for business in businesses:  # warm the normalization cache
        engine.check(business, business)

    t0 = time.perf_counter()
    for lhs, rhs in stream:
        engine.check(lhs, rhs)
    elapsed = time.perf_counter() - t0
    throughput = len(stream) / elapsed
    assert all(interval_atom_count(d) <= 1 for b in businesses for d in b.disjuncts)
    assert throughput >= 200.0, f"{throughput:.0f} checks/s"
    _report(
        7,
        f"{len(stream)} checks in {elapsed:.2f}s = {throughput:.0f} checks/s "
        f"(soft target 1000/s, floor 200/s)",
    )


def test_criterion_8_absolute_latencies_not_reproduced():
    """Third-party reasoner timings are out of scope; criterion 6 carries
    the cache/scaling evidence instead."""
    _report(8, "not applicable by design; see criterion 6")
