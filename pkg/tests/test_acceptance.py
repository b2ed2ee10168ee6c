"""One test per acceptance criterion; each prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear even
without ``-s``).
"""

import itertools
import time

import numpy as np
import pytest
from conftest import CASE_FILE, EMPTY_SET_ROWS
from oracles import (
    basic_vertices,
    globally_by_paths,
    lp_min_error,
    policy_extremes,
    random_chain_dict,
    same_vector_sets,
    until_by_paths,
)
from test_abstraction import random_rows
from test_engine import masks, random_mdpa
from test_intervals import random_row, random_stochastic_near
from test_pctl import random_state

from lmc_abstraction import (
    Empty,
    Infinite,
    abstract_block,
    build_imdpa,
    build_standard_abstraction,
    check_lmc,
    classify,
    compare_abstractions,
    contains,
    envelope,
    extremal_probability,
    gamma_relaxation,
    load_model,
    optimal_error,
    optimal_set,
    parse_formula,
    representative_error,
    tighten,
    to_text,
    validate_model,
    vertices,
)
from lmc_abstraction.pctl import Atom, TrueF, Until

EQ = 1e-12


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return emit


def close(a, b, tol):
    return bool(np.all(np.abs(np.asarray(a, float) - np.asarray(b, float)) <= tol))


def test_criterion_1_standard_abstraction(report):
    t0 = time.perf_counter()
    lumped = build_standard_abstraction(load_model(CASE_FILE))
    elapsed = time.perf_counter() - t0
    ok = (
        abs(lumped.epsilon - 0.06) <= EQ
        and set(lumped.representatives) == {"s0", "s5", "s10"}
        and close(lumped.chain.matrix, [[0.2, 0.45, 0.35], [0.03, 0.97, 0.0], [0.44, 0.43, 0.13]], EQ)
        and elapsed < 1.0
    )
    report(1, ok, f"eps={lumped.epsilon:.12g} reps={lumped.representatives} time={elapsed:.3f}s")
    assert ok


def test_criterion_2_case_study_imdpa(report):
    t0 = time.perf_counter()
    imdpa = build_imdpa(load_model(CASE_FILE))
    elapsed = time.perf_counter() - t0
    betas = [d.beta for d in imdpa.details]
    expected_rows = [
        [[0.18, 0.22], [0.43, 0.49], [0.34, 0.34]],
        [[0.01, 0.02], [0.98, 0.98], [0.0, 0.02]],
        [[0.44, 0.45], [0.42, 0.45], [0.13, 0.13]],
    ]
    ok = (
        close(betas, [0.05, 0.02, 0.03], EQ)
        and all(close(r.pairs(), e, EQ) for r, e in zip(imdpa.interval_matrix.rows, expected_rows))
        and all(isinstance(classify(r), Infinite) for r in imdpa.interval_matrix.rows)
        and close(imdpa.xi, betas, 0.0)
        and elapsed < 1.0
    )
    report(2, ok, f"beta={[round(b, 12) for b in betas]} time={elapsed:.3f}s")
    assert ok


def test_criterion_3_empty_optimal_set_regression(report):
    beta = optimal_error(EMPTY_SET_ROWS)
    env = envelope(EMPTY_SET_ROWS)
    opt = optimal_set(EMPTY_SET_ROWS)
    g = gamma_relaxation(EMPTY_SET_ROWS)
    ok = (
        abs(beta - 0.03) <= EQ
        and close(env.pairs(), [[0.44, 0.5], [0.3, 0.34], [0.2, 0.26]], EQ)
        and isinstance(classify(opt), Empty)
        and abs(g.eps_star - 1 / 30) <= 1e-9
    )
    report(3, ok, f"beta={beta:.12g} eps_star={g.eps_star:.12g}")
    assert ok


def test_criterion_4_soundness_bracket(report):
    t0 = time.perf_counter()
    chain = load_model(CASE_FILE)
    table = compare_abstractions(chain, 'G<=K !"c"', range(1, 21))
    xi = max(table.xi)
    misses = []
    for row in table.rows:
        eps_k = 1 - (1 - xi) ** row.k
        if not (row.mdpa_pmin - eps_k - EQ <= row.p_concrete <= row.mdpa_pmax + eps_k + EQ):
            misses.append(row.k)
    dominated = all(1 - 0.95**k < 1 - 0.94**k for k in range(1, 21))
    elapsed = time.perf_counter() - t0
    ok = (
        not misses
        and abs(xi - 0.05) <= EQ
        and abs(table.std_epsilon - 0.06) <= EQ
        and dominated
        and elapsed < 5.0
    )
    report(4, ok, f"containment misses={misses} dominance={dominated} time={elapsed:.3f}s")
    assert ok


def test_criterion_5_oracle_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    bad = {"a": 0, "b": 0, "c": 0, "d": 0}

    # (a) vertex enumeration, 500 rows with m <= 6
    for _ in range(500):
        row = random_row(rng)
        if not same_vector_sets(vertices(row), basic_vertices(row.lower, row.upper), tol=EQ):
            bad["a"] += 1

    # (b) bounded until on chains, n <= 5, k <= 4
    for _ in range(100):
        n = int(rng.integers(1, 6))
        chain = validate_model(random_chain_dict(rng, n, min(n, 3), sparsity=0.3))
        sat1 = [("c" not in lab) for lab in chain.labels]
        sat2 = [("b" in lab) for lab in chain.labels]
        for k in range(5):
            vals = check_lmc(chain, f'P=? [ !"c" U<={k} "b" ]').values
            ref = [until_by_paths(chain.matrix, sat1, sat2, k, s) for s in range(n)]
            bad["b"] += not close(vals, ref, 1e-9)

    # (c) MDPA extremes against every memoryless policy, <= 3 blocks and actions
    for _ in range(60):
        mdpa = random_mdpa(rng, max_actions=3)
        sat1, sat2 = masks(mdpa, "a"), masks(mdpa, "b")
        for k, mode in itertools.product(range(5), ("min", "max")):
            res = extremal_probability(mdpa, Until(Atom("a"), Atom("b"), k), mode)
            bad["c"] += not close(res.values, policy_extremes(mdpa.actions, sat1, sat2, k, mode), 1e-9)
            res = extremal_probability(mdpa, Until(TrueF(), Atom("b"), k), mode)
            ref = policy_extremes(mdpa.actions, [True] * mdpa.m, sat2, k, mode)
            bad["c"] += not close(res.values, ref, 1e-9)

    # (d) tightening keeps exactly the same members, 10^4 vectors per row
    for _ in range(20):
        row = random_row(rng)
        t = tighten(row)
        xs = random_stochastic_near(rng, row, 10_000)
        bad["d"] += sum(contains(row, x) != contains(t, x) for x in xs)

    elapsed = time.perf_counter() - t0
    ok = not any(bad.values()) and elapsed < 60.0
    report(5, ok, f"mismatches={bad} time={elapsed:.1f}s")
    assert ok


def test_criterion_6_property_suite(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    viol = {"lower_bound": 0, "optimal_set": 0, "relaxation_bound": 0, "improvement": 0, "soundness": 0}
    unattainable = 0
    relaxation_cases = 0

    for _ in range(500):
        rows = random_rows(rng)
        beta = optimal_error(rows)
        if min(representative_error(rows, j) for j in range(len(rows))) < beta - EQ:
            viol["lower_bound"] += 1
        block = abstract_block(rows)
        if not block.used_relaxation:
            for x in vertices(block.optimal_set):
                viol["optimal_set"] += int(abs(np.max(np.abs(rows - x)) - beta) > EQ)
            outside = 0
            while outside < 100:
                x = rng.dirichlet(np.ones(rows.shape[1]))
                if contains(block.optimal_set, x):
                    continue
                outside += 1
                viol["optimal_set"] += int(np.max(np.abs(rows - x)) <= beta - EQ)
        else:
            relaxation_cases += 1
            env = block.envelope
            m = rows.shape[1]
            closed_form = max((1 - env.lower.sum()) / m, (env.upper.sum() - 1) / m)
            g = block.gamma
            stochastic = abs(g.r_star.sum() - 1) <= 1e-9 and np.all(g.r_star >= 0)
            if not stochastic or g.eps_star > closed_form + EQ:
                viol["relaxation_bound"] += 1
                # no stochastic vector at all gets below the true optimum
                if lp_min_error(rows) > closed_form + 1e-9:
                    unattainable += 1

    for _ in range(200):
        n = int(rng.integers(2, 9))
        labels = int(rng.integers(1, min(n, 4) + 1))
        chain = validate_model(random_chain_dict(rng, n, labels, decimals=int(rng.choice([2, 6]))))
        eps = build_standard_abstraction(chain).epsilon
        table = compare_abstractions(chain, 'G<=K !"c"', range(0, 11))
        viol["improvement"] += max(table.xi) > eps + EQ
        for row in table.rows:
            viol["soundness"] += not (row.mdpa_lo - 1e-9 <= row.p_concrete <= row.mdpa_hi + 1e-9)

    elapsed = time.perf_counter() - t0
    ok = not any(viol.values()) and elapsed < 120.0
    report(
        6,
        ok,
        f"violations={viol} (relaxation cases={relaxation_cases}, "
        f"closed-form bound below the LP optimum={unattainable}) time={elapsed:.1f}s",
    )
    assert ok


def test_criterion_7_parser_and_duality(report):
    rng = np.random.default_rng(7)
    trips = sum(parse_formula(to_text(f)) == f for f in (random_state(rng, int(rng.integers(1, 7))) for _ in range(1000)))
    worst = 0.0
    sat_mismatch = 0
    for _ in range(50):
        chain = validate_model(random_chain_dict(rng, 4, 2, sparsity=0.3))
        sat = [("a" in lab) for lab in chain.labels]
        for k in range(5):
            g = check_lmc(chain, f'P=? [ G<={k} "a" ]').values
            u = check_lmc(chain, f'P=? [ true U<={k} !"a" ]').values
            ref = [globally_by_paths(chain.matrix, sat, k, s) for s in range(4)]
            worst = max(worst, float(np.max(np.abs(g - (1 - u)))), float(np.max(np.abs(g - ref))))
            p = float(np.round(rng.random(), 3))
            if all(abs(v - p) > EQ for v in ref):
                res = check_lmc(chain, f'P<={p!r} [ G<={k} "a" ]').sat_set
                expected = {s for s, v in zip(chain.states, ref) if v <= p}
                sat_mismatch += res != expected
    ok = trips == 1000 and worst <= EQ and sat_mismatch == 0
    report(7, ok, f"round-trips={trips}/1000 duality max gap={worst:.3g} sat mismatches={sat_mismatch}")
    assert ok
