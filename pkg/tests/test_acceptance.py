"""Acceptance gate: one test per criterion, each printing a single
PASS/FAIL line at the stated tolerance.

Criteria 4, 5 and 8 contain sub-checks that depend on the printed
worst-case walk brackets for the m = 4 and m = 5 terms.  On the
cycle-free ball the exact walk counts (dynamic program, confirmed by
brute-force enumeration) exceed those brackets, so the affected
sub-checks fail; the failures are asserted as-is rather than weakened.
See the decisions ledger for the full analysis.
"""

import math
import os
import random

import numpy as np
import pytest

from qalr.balls import MarkedBall, enumerate_b1, extend_balls, tree_completion
from qalr.commgraph import (
    N_TERMS,
    build_commutativity_graph,
    closed_form_counts,
    count_exit_walks,
)
from qalr.lrbound import BoundParams, global_bound, local_bound
from qalr.qasim import HamiltonianSpec, edge_energy, evolve, evolve_rk4
from qalr.ratio import (
    certify_ratio,
    check_min_condition,
    omega_fraction,
    omega_fraction_min,
)
from qalr.schedule import (
    IntegralTable,
    Schedule,
    even_upper_bound,
    integral_quadrature,
    linear_integral,
    odd_upper_bound,
)

from conftest import ALPHA_REF, T_REF

FULL_SCALE = os.environ.get("QALR_FULL_SCALE") == "1"


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_ball_counts(db1, db2):
    ok = len(db1) == 3 and len(db2) == 123
    report(1, ok, f"|B_1| = {len(db1)} (want 3), |B_2| = {len(db2)} (want 123)")


@pytest.mark.skipif(
    not FULL_SCALE,
    reason="optional extended target (hours): set QALR_FULL_SCALE=1 to run",
)
def test_criterion_2_extended_radius_3_count(db2):
    db3 = extend_balls(db2)
    total = len(db2) + len(db3)
    report(2, total == 930449, f"combined radius-3 count = {total} (want 930449)")


def test_criterion_3_nested_integrals(linear):
    from fractions import Fraction

    exact_ok = (
        linear_integral(2) == Fraction(1, 24)
        and linear_integral(4) == Fraction(17, 40320)
    )
    quad = Schedule.polynomial((0.0, 1.0))
    agree_ok = all(
        abs(integral_quadrature(quad, m)[0] - float(linear_integral(m)))
        <= 1e-9 * float(linear_integral(m))
        for m in range(2, 11)
    )
    bounds_ok = all(
        linear_integral(2 * k) <= even_upper_bound(k)
        and linear_integral(2 * k + 1) <= odd_upper_bound(k)
        for k in range(1, 31)
    )
    ok = exact_ok and agree_ok and bounds_ok
    report(
        3,
        ok,
        f"exact values {exact_ok}, recurrence/quadrature 1e-9 {agree_ok}, "
        f"factorial bounds k<=30 {bounds_ok}",
    )


def test_criterion_4_walk_counting():
    formulas_ok = True
    domination_failures = []
    for d in (3, 4, 5):
        for k in (1, 2, 3, 4):
            bare = MarkedBall(d, 0, ((0, 1),), (0, 1))
            ball = tree_completion(bare, k + 2)
            cg = build_commutativity_graph(ball, q=k - 1)
            counts = count_exit_walks(cg, k).counts
            base = 2 * (d - 1) ** k
            formulas_ok &= counts[0] == base and counts[1] == base
            formulas_ok &= counts[2] == 2 * (d - 1) ** (k + 1) + (2 + d * k) * base
            for m in range(N_TERMS):
                if counts[m] > closed_form_counts(d, k, m):
                    domination_failures.append((d, k, m))
    ok = formulas_ok and not domination_failures
    report(
        4,
        ok,
        f"N_0/N_1/N_2 closed forms {formulas_ok}; enumeration <= printed "
        f"brackets violated at (d,k,m) = {domination_failures[:4]}"
        f"{'...' if len(domination_failures) > 4 else ''}"
        if domination_failures
        else "N_0/N_1/N_2 closed forms and bracket domination all hold",
    )


def test_criterion_5_bound_monotonicity(db2, linear, integrals_k3):
    table = IntegralTable.build(linear, 2 * 6 + 6)
    mono_ok = True
    for k in (2, 3, 4, 5):
        for T in np.linspace(0.5, 5.0, 20):
            for alpha in np.linspace(0.5, 3.0, 20):
                lo = global_bound(BoundParams(3, k + 1, T, alpha, linear), table).total
                hi = global_bound(BoundParams(3, k, T, alpha, linear), table).total
                mono_ok &= lo <= hi
    params = BoundParams(3, 3, T_REF, ALPHA_REF, linear)
    eps = global_bound(params, integrals_k3).total
    violators = [
        b.id for b in db2 if local_bound(b, params, integrals_k3).total > eps
    ]
    ok = mono_ok and not violators
    report(
        5,
        ok,
        f"k-monotonicity on 20x20 grid {mono_ok}; eps_loc <= eps fails for "
        f"{len(violators)}/123 balls {violators}",
    )


def test_criterion_6_simulation_sanity(db1, db2, linear):
    zero_ok = True
    drift_ok = True
    for ball in db1:
        psi, info = evolve(HamiltonianSpec(ball, ALPHA_REF, 0.0, linear))
        zero_ok &= abs(edge_energy(psi, ball.marked_edge) - 0.5) <= 1e-7
        psi, info = evolve(HamiltonianSpec(ball, ALPHA_REF, T_REF, linear))
        drift_ok &= info["norm_drift"] <= 1e-8
    rng = random.Random(11)
    sample = list(db1) + rng.sample(db2.balls(), 10)
    agree = 0.0
    for ball in sample:
        spec = HamiltonianSpec(ball, ALPHA_REF, T_REF, linear)
        e1 = edge_energy(evolve(spec)[0], ball.marked_edge)
        e2 = edge_energy(evolve_rk4(spec, steps=600)[0], ball.marked_edge)
        agree = max(agree, abs(e1 - e2))
    single = MarkedBall(3, 0, ((0, 1),), (0, 1))
    psi, _ = evolve(HamiltonianSpec(single, 1.0, 20.0, linear))
    adiabatic = edge_energy(psi, (0, 1))
    ok = zero_ok and drift_ok and agree <= 1e-6 and adiabatic > 0.9
    report(
        6,
        ok,
        f"T=0 energy 0.5 {zero_ok}, drift<=1e-8 {drift_ok}, "
        f"integrator agreement {agree:.2e} (<=1e-6), "
        f"adiabatic single edge {adiabatic:.3f} (>0.9)",
    )


def test_criterion_7_fraction_minimization():
    a, b, c = 0.5502, 0.6265, 0.70208
    cond_ok = bool(check_min_condition(a, b, c))
    value, xy = omega_fraction_min(a, b, c)
    corner_ok = abs(value - 0.70208) <= 1e-12 and xy == (0.0, 0.0)
    rng = random.Random(23)
    brute_ok = True
    for _ in range(100):
        t = sorted(rng.random() for _ in range(3))
        vmin, _ = omega_fraction_min(*t)
        best = math.inf
        steps = 100
        for i in range(steps + 1):
            x = 0.25 * i / steps
            y_max = (1.0 - 4.0 * x) / 3.0
            for j in range(steps + 1):
                best = min(best, omega_fraction(*t, x, y_max * j / steps))
        brute_ok &= vmin <= best + 1e-6
    ok = cond_ok and corner_ok and brute_ok
    report(
        7,
        ok,
        f"condition {cond_ok}, corner minimum {corner_ok}, "
        f"100-triple brute-force match {brute_ok}",
    )


def test_criterion_8_pipeline_smoke(union_db, warm_cache, linear):
    cert = certify_ratio(
        union_db, warm_cache, T_REF, ALPHA_REF, q=2, schedule=linear,
        threshold=0.7020,
    )
    recompute_ok = cert.is_consistent()
    ordering_violators = [
        e.ball_id
        for e in cert.survivors
        if e.corrected_local is not None
        and not e.corrected_global <= e.corrected_local + 1e-15
    ]
    ok = recompute_ok and not ordering_violators
    report(
        8,
        ok,
        f"ratio {cert.ratio:.6f} recomputes bit-for-bit {recompute_ok}; "
        f"energy-eps <= energy-eps_loc fails for {len(ordering_violators)} "
        f"survivor(s) {ordering_violators}",
    )


def test_criterion_9_full_scale_targets_stated():
    # the headline ratio 0.7020, the 7071-survivor count, the class minima
    # 0.5502 / 0.6265 and the cubic-schedule 0.7165 projection need the
    # full 930449-ball campaign (30-qubit states); they are wired as the
    # resumable campaign script, not reproduced at desk scale
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    campaign = os.path.join(here, "scripts", "full_campaign.py")
    ok = os.path.exists(campaign)
    report(
        9,
        ok,
        "full-scale targets are out of desk scope and wired as the "
        f"resumable campaign driver ({'present' if ok else 'missing'})",
    )
