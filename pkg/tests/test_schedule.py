"""Schedules and nested time-ordered integrals."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qalr.schedule import (
    CoefficientTable,
    IntegralTable,
    Schedule,
    even_upper_bound,
    integral_quadrature,
    linear_integral,
    odd_upper_bound,
    schedule_weights,
)


class TestSchedule:
    def test_linear_values(self):
        s = Schedule.linear()
        assert s.value(0.0) == 0.0
        assert s.value(0.25) == 0.25
        assert s.value(1.0) == 1.0

    def test_endpoint_validation(self):
        with pytest.raises(ValueError):
            Schedule.polynomial((0.5, 0.5))  # f(0) != 0
        with pytest.raises(ValueError):
            Schedule.polynomial((0.0, 0.5))  # f(1) != 1

    def test_from_id_roundtrip(self):
        s = Schedule.from_id("poly:0.0,2.6,-4.8,3.2")
        assert Schedule.from_id(s.schedule_id) == s
        assert Schedule.from_id("linear") == Schedule.linear()

    def test_cubic_spelling_is_highest_order_first(self):
        s = Schedule.from_id("cubic:3.2,-4.8,2.6")
        assert s.coefficients == (0.0, 2.6, -4.8, 3.2)
        assert s.value(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_id_rejected(self):
        with pytest.raises(ValueError):
            Schedule.from_id("quartic:1")

    def test_weights(self):
        s = Schedule.linear()
        assert schedule_weights(s, "blue", 0.25) == pytest.approx(0.75)
        assert schedule_weights(s, "red", 0.25) == pytest.approx(0.25)
        with pytest.raises(ValueError):
            schedule_weights(s, "green", 0.5)
        with pytest.raises(ValueError):
            schedule_weights(s, "blue", 1.5)


class TestExactIntegrals:
    def test_pinned_exact_values(self):
        # hand-computed: I_2 = int (1-u) U du with U = u^2/2 ... = 1/24;
        # I_3 and I_4 by the same elementary iterated integration
        assert linear_integral(1) == Fraction(1, 2)
        assert linear_integral(2) == Fraction(1, 24)
        assert linear_integral(3) == Fraction(1, 80)
        assert linear_integral(4) == Fraction(17, 40320)

    def test_recurrence_matches_quadrature_oracle(self):
        s = Schedule.polynomial((0.0, 1.0))  # linear, via the quadrature path
        assert not s.is_linear
        for m in range(2, 11):
            exact = float(linear_integral(m))
            approx, _ = integral_quadrature(s, m)
            assert abs(approx - exact) <= 1e-9 * exact

    @pytest.mark.parametrize("k", range(1, 31))
    def test_factorial_upper_bounds(self, k):
        assert linear_integral(2 * k) <= even_upper_bound(k)
        assert linear_integral(2 * k + 1) <= odd_upper_bound(k)

    def test_positivity_and_decrease(self):
        values = [linear_integral(m) for m in range(2, 30)]
        assert all(v > 0 for v in values)
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_numerator_growth_is_convex(self):
        # log(I_2k * (4k)!) grows convexly in k
        logs = [
            math.log(float(linear_integral(2 * k))) + math.lgamma(4 * k + 1)
            for k in range(1, 16)
        ]
        diffs = [b - a for a, b in zip(logs, logs[1:])]
        assert all(d2 >= d1 for d1, d2 in zip(diffs, diffs[1:]))

    def test_coefficient_table(self):
        table = CoefficientTable.build(5)
        assert len(table.even) == 6
        assert len(table.odd) == 5
        assert table.even[0] == (Fraction(1),)
        assert table.odd[0] == (Fraction(1), Fraction(1, 2))


class TestQuadrature:
    def test_rejects_coarse_grid(self):
        with pytest.raises(ValueError):
            integral_quadrature(Schedule.linear(), 2, grid=4)

    def test_cubic_schedule_integrals_decrease(self):
        s = Schedule.from_id("cubic:3.2,-4.8,2.6")
        values = [integral_quadrature(s, m)[0] for m in range(2, 9)]
        assert all(v > 0 for v in values)
        assert all(a > b for a, b in zip(values, values[1:]))

    @given(c2=st.floats(-2.0, 2.0))
    @settings(max_examples=20, deadline=None)
    def test_quadratic_family_positive(self, c2):
        s = Schedule.polynomial((0.0, 1.0 - c2, c2))
        value, err = integral_quadrature(s, 3, tol=1e-6)
        assert err <= 1e-6 * abs(value) or value == 0.0


class TestIntegralTable:
    def test_linear_table_is_exact(self, linear):
        table = IntegralTable.build(linear, 12)
        assert table.method == "recurrence"
        assert table.value(2) == pytest.approx(1 / 24, abs=0)
        assert all(e == 0.0 for e in table.errors)

    def test_range_errors(self, linear):
        table = IntegralTable.build(linear, 8)
        with pytest.raises(KeyError):
            table.value(9)
        with pytest.raises(KeyError):
            table.value(1)

    def test_csv_rows(self, linear):
        table = IntegralTable.build(linear, 4)
        rows = list(table.to_csv_rows())
        assert [r[0] for r in rows] == [2, 3, 4]
        assert rows[0][1] == pytest.approx(1 / 24)

    def test_polynomial_table_matches_exact_on_linear_poly(self):
        table = IntegralTable.build(Schedule.polynomial((0.0, 1.0)), 10)
        assert table.method == "quadrature"
        for m in range(2, 11):
            assert table.value(m) == pytest.approx(
                float(linear_integral(m)), rel=1e-9
            )


@given(u=st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_weights_partition_unity(u):
    s = Schedule.from_id("cubic:3.2,-4.8,2.6")
    total = schedule_weights(s, "blue", u) + schedule_weights(s, "red", u)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_value_vectorized():
    s = Schedule.from_id("cubic:3.2,-4.8,2.6")
    u = np.linspace(0, 1, 5)
    np.testing.assert_allclose(s.value(u), [float(s.value(x)) for x in u])
