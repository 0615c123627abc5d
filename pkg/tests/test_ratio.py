"""Cut-fraction minimization and the certification pipeline."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qalr.lrbound import BoundParams, global_bound
from qalr.qasim import EnergyCache, batch_simulate
from qalr.ratio import (
    MissingEnergyError,
    OmegaCounts,
    SurvivorEntry,
    certify_ratio,
    check_min_condition,
    filter_with_global_bound,
    omega_fraction,
    omega_fraction_min,
    optimize_T_alpha,
    origin_min_condition,
    refine_with_local_bound,
    scan_T_alpha,
)

from conftest import ALPHA_REF, T_REF, TREE_BALL_ID

REFERENCE_TRIPLE = (0.5502, 0.6265, 0.70208)


def brute_force_min(a, b, c, step=1e-3):
    best = math.inf
    x = 0.0
    while x <= 0.25 + 1e-12:
        y_max = (1.0 - 4.0 * x) / 3.0
        y = 0.0
        while y <= y_max + 1e-12:
            best = min(best, omega_fraction(a, b, c, x, y))
            y += step
        x += step
    return best


ordered_triples = st.tuples(
    st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0)
).map(lambda t: tuple(sorted(t)))


class TestOmegaCounts:
    def test_derived_tree_count(self):
        counts = OmegaCounts(n1=2, n2=1, n_nodes=20)
        assert counts.n_edges == 30
        assert counts.n3 == 30 - 10 - 3

    def test_rejects_overfull_classes(self):
        with pytest.raises(ValueError):
            OmegaCounts(n1=2, n2=2, n_nodes=12)

    def test_rejects_odd_node_count(self):
        with pytest.raises(ValueError):
            OmegaCounts(n1=0, n2=0, n_nodes=7)


class TestMinCondition:
    def test_reference_triples(self):
        assert check_min_condition(*REFERENCE_TRIPLE).holds
        assert check_min_condition(0.5, 0.57, 0.71).holds
        assert not check_min_condition(0.0, 0.0, 1.0).holds

    def test_ordering_violation_flagged(self):
        res = check_min_condition(0.9, 0.5, 0.7)
        assert not res.holds and res.ordering_violated

    def test_printed_condition_is_not_sufficient(self):
        # (0.5, 0.57, 0.71) passes the printed test but the functional
        # dips to (a + 4b + c)/5 at the vertex (1/4, 0)
        a, b, c = 0.5, 0.57, 0.71
        assert check_min_condition(a, b, c).holds
        assert not origin_min_condition(a, b, c)
        value, xy = omega_fraction_min(a, b, c)
        assert value == pytest.approx((a + 4 * b + c) / 5, abs=1e-12)
        assert xy == (0.25, 0.0)

    def test_exact_condition_on_reference_triple(self):
        assert origin_min_condition(*REFERENCE_TRIPLE)


class TestOmegaFractionMin:
    def test_reference_triple_exact(self):
        value, xy = omega_fraction_min(*REFERENCE_TRIPLE)
        assert abs(value - 0.70208) <= 1e-12
        assert xy == (0.0, 0.0)

    def test_equal_values_collapse(self):
        assert omega_fraction_min(0.7, 0.7, 0.7) == (0.7, (0.0, 0.0))

    def test_degenerate_extreme(self):
        value, xy = omega_fraction_min(0.0, 0.0, 1.0)
        assert value == pytest.approx(0.2, abs=1e-9)
        assert xy[0] == pytest.approx(0.25, abs=1e-6)
        assert xy[1] == pytest.approx(0.0, abs=1e-6)

    @given(triple=ordered_triples)
    @settings(max_examples=40, deadline=None)
    def test_matches_coarse_brute_force(self, triple):
        a, b, c = triple
        value, _ = omega_fraction_min(a, b, c)
        assert value <= brute_force_min(a, b, c, step=5e-3) + 1e-9

    @given(triple=ordered_triples)
    @settings(max_examples=60, deadline=None)
    def test_origin_condition_gives_exact_corner(self, triple):
        a, b, c = triple
        if origin_min_condition(a, b, c):
            assert omega_fraction_min(a, b, c) == (c, (0.0, 0.0))

    @given(triple=ordered_triples)
    @settings(max_examples=40, deadline=None)
    def test_result_is_attained_and_feasible(self, triple):
        a, b, c = triple
        value, (x, y) = omega_fraction_min(a, b, c)
        assert x >= 0 and y >= 0 and 4 * x + 3 * y <= 1 + 1e-12
        assert omega_fraction(a, b, c, x, y) == pytest.approx(value, abs=1e-12)


class TestFilterRefine:
    @staticmethod
    def entries_at_reference(union_db, warm_cache, eps):
        entries = []
        for ball in sorted(union_db, key=lambda b: b.id):
            rec = warm_cache.get(ball.id, T_REF, ALPHA_REF, "linear")
            entries.append(
                SurvivorEntry(
                    ball_id=ball.id,
                    omega_class=ball.omega_class,
                    energy=rec.energy,
                    corrected_global=rec.energy - eps,
                )
            )
        return entries

    def test_zero_threshold_keeps_nothing(self, union_db, warm_cache, linear):
        eps = global_bound(BoundParams(3, 3, T_REF, ALPHA_REF, linear)).total
        entries = self.entries_at_reference(union_db, warm_cache, eps)
        survivors, minima = filter_with_global_bound(entries, threshold=0.0)
        assert survivors == []
        assert minima.a == min(
            e.corrected_global for e in entries if e.omega_class == 1
        )

    def test_survivor_count_matches_recount(self, union_db, warm_cache, linear):
        eps = global_bound(BoundParams(3, 3, T_REF, ALPHA_REF, linear)).total
        entries = self.entries_at_reference(union_db, warm_cache, eps)
        threshold = 0.46
        survivors, _ = filter_with_global_bound(entries, threshold)
        recount = sum(1 for e in entries if e.energy - eps < threshold)
        assert len(survivors) == recount

    def test_refine_never_lowers_class_minima(
        self, union_db, warm_cache, linear, integrals_k3
    ):
        params = BoundParams(3, 3, T_REF, ALPHA_REF, linear)
        eps = global_bound(params, integrals_k3).total
        entries = self.entries_at_reference(union_db, warm_cache, eps)
        survivors, before = filter_with_global_bound(entries, threshold=0.7020)
        after = refine_with_local_bound(
            entries, survivors, union_db, params, integrals_k3
        )
        assert after.a >= before.a
        assert after.b >= before.b
        assert after.c >= before.c


class TestCertify:
    def test_reference_point_certificate(self, union_db, warm_cache, linear):
        cert = certify_ratio(
            union_db, warm_cache, T_REF, ALPHA_REF, q=2, schedule=linear,
            threshold=0.7020,
        )
        assert cert.is_consistent()
        assert cert.condition.holds
        assert cert.ratio == pytest.approx(0.4620, abs=5e-4)
        assert cert.minima.ordering_ok
        assert len(cert.survivors) == 126

    def test_zero_time_certificate(self, union_db, linear):
        cache = EnergyCache(None)
        batch_simulate(union_db, 0.0, ALPHA_REF, linear, cache=cache)
        cert = certify_ratio(
            union_db, cache, 0.0, ALPHA_REF, q=2, schedule=linear, threshold=0.7020
        )
        assert cert.eps_global == 0.0
        assert cert.ratio == pytest.approx(0.5, abs=1e-7)

    def test_missing_energies_listed(self, union_db, linear):
        with pytest.raises(MissingEnergyError) as err:
            certify_ratio(
                union_db, EnergyCache(None), T_REF, ALPHA_REF, q=2,
                schedule=linear, threshold=0.7,
            )
        assert len(err.value.ball_ids) == 126

    def test_serialization_roundtrip(self, union_db, warm_cache, linear):
        import json

        cert = certify_ratio(
            union_db, warm_cache, T_REF, ALPHA_REF, q=2, schedule=linear,
            threshold=0.7020,
        )
        data = json.loads(cert.to_json())
        assert data["ratio"] == cert.ratio
        assert data["class_minima"]["c"] == cert.minima.c
        assert "certified ratio" in cert.report()


class TestScan:
    def test_single_cell(self, db1, linear):
        cache = EnergyCache(None)
        batch_simulate(db1, 2.0, 1.5, linear, cache=cache)
        rows = scan_T_alpha(db1, cache, [2.0], [1.5], q=1, schedule=linear)
        assert len(rows) == 3
        eps = global_bound(BoundParams(3, 2, 2.0, 1.5, linear)).total
        for row in rows:
            rec = cache.get(row["ball_id"], 2.0, 1.5, "linear")
            assert row["max_corrected"] == pytest.approx(rec.energy - eps)

    def test_larger_T_grid_never_decreases_max(self, db1, linear):
        cache = EnergyCache(None)
        for T in (1.0, 2.0):
            batch_simulate(db1, T, 1.5, linear, cache=cache)
        small = scan_T_alpha(db1, cache, [1.0], [1.5], q=1, schedule=linear)
        large = scan_T_alpha(db1, cache, [1.0, 2.0], [1.5], q=1, schedule=linear)
        for s_row, l_row in zip(small, large):
            assert l_row["max_corrected"] >= s_row["max_corrected"]

    def test_local_scan_dominates_global_except_tree_ball(
        self, db2, warm_cache, linear
    ):
        rows_g = scan_T_alpha(
            db2, warm_cache, [T_REF], [ALPHA_REF], q=2, schedule=linear
        )
        rows_l = scan_T_alpha(
            db2, warm_cache, [T_REF], [ALPHA_REF], q=2, schedule=linear,
            use_local=True,
        )
        below = [
            g["ball_id"]
            for g, l in zip(rows_g, rows_l)
            if l["max_corrected"] < g["max_corrected"] - 1e-12
        ]
        assert below == [TREE_BALL_ID]

    def test_worst_n_selection(self, db1, linear):
        cache = EnergyCache(None)
        batch_simulate(db1, 2.0, 1.5, linear, cache=cache)
        rows = scan_T_alpha(
            db1, cache, [2.0], [1.5], q=1, schedule=linear, worst_n=2
        )
        assert len(rows) == 2

    def test_missing_energies_raise(self, db1, linear):
        with pytest.raises(MissingEnergyError):
            scan_T_alpha(db1, EnergyCache(None), [2.0], [1.5], q=1, schedule=linear)


class TestOptimize:
    def test_recovers_synthetic_peak(self):
        value, T, alpha = optimize_T_alpha(
            lambda t, a: -((t - 2.3) ** 2) - (a - 1.4) ** 2,
            [1.0, 2.0, 3.0],
            [1.0, 1.5, 2.0],
            refine_iters=40,
        )
        assert T == pytest.approx(2.3, abs=1e-3)
        assert value == pytest.approx(0.0, abs=1e-3)

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            optimize_T_alpha(lambda t, a: 0.0, [], [1.0])
