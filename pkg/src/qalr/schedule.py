"""Annealing schedules and their nested time-ordered integrals.

The interpolation function f drives the two families of Hamiltonian weights
(1 - f for the transverse-field terms, f for the edge terms).  The bound
machinery needs the nested integrals

    I_m = int_0^1 w_1(u_1) int_0^{u_1} w_2(u_2) ... int_0^{u_{m-1}} w_m(u_m) du...

with weights alternating w_1 = 1 - f, w_2 = f, w_3 = 1 - f, ...

For the linear schedule these are evaluated exactly with rational
recurrences; for general polynomial schedules an iterated cumulative
quadrature with Richardson extrapolation is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "Schedule",
    "CoefficientTable",
    "IntegralTable",
    "QuadratureError",
    "coeffs_even",
    "coeffs_odd",
    "integral_even",
    "integral_odd",
    "integral_quadrature",
    "linear_integral",
    "even_upper_bound",
    "odd_upper_bound",
    "schedule_weights",
]

_ENDPOINT_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Raised when the quadrature error estimate exceeds the requested tolerance."""


@dataclass(frozen=True)
class Schedule:
    """Interpolation function f on [0, 1] with f(0) = 0 and f(1) = 1.

    ``coefficients`` are the monomial coefficients c_i of
    f(s) = sum_i c_i s^i, lowest order first.  The linear schedule is
    ``Schedule.linear()``.
    """

    kind: str  # "linear" | "polynomial"
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if abs(self.value(0.0)) > _ENDPOINT_TOL:
            raise ValueError("schedule must satisfy f(0) = 0")
        if abs(self.value(1.0) - 1.0) > _ENDPOINT_TOL:
            raise ValueError("schedule must satisfy f(1) = 1")

    @classmethod
    def linear(cls) -> "Schedule":
        return cls("linear", (0.0, 1.0))

    @classmethod
    def polynomial(cls, coefficients) -> "Schedule":
        return cls("polynomial", tuple(float(c) for c in coefficients))

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    @property
    def schedule_id(self) -> str:
        if self.is_linear:
            return "linear"
        return "poly:" + ",".join(repr(c) for c in self.coefficients)

    @classmethod
    def from_id(cls, schedule_id: str) -> "Schedule":
        if schedule_id == "linear":
            return cls.linear()
        if schedule_id.startswith(("poly:", "cubic:")):
            coeffs = [float(c) for c in schedule_id.split(":", 1)[1].split(",")]
            if schedule_id.startswith("cubic:"):
                # cubic:c3,c2,c1 is highest order first, constant term zero
                coeffs = [0.0] + coeffs[::-1]
            return cls.polynomial(coeffs)
        raise ValueError(f"unrecognized schedule spec {schedule_id!r}")

    def value(self, u):
        """Evaluate f(u) (scalar or ndarray)."""
        return np.polynomial.polynomial.polyval(u, self.coefficients)


def schedule_weights(s: Schedule, node_type: str, u: float) -> float:
    """Hamiltonian weight at normalized time u: 1 - f(u) for node ("blue")
    operators, f(u) for edge ("red") operators."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"normalized time {u} outside [0, 1]")
    f = float(s.value(u))
    if node_type == "blue":
        return 1.0 - f
    if node_type == "red":
        return f
    raise ValueError(f"node_type must be 'blue' or 'red', got {node_type!r}")


# ---------------------------------------------------------------------------
# Linear schedule: exact rational recurrences
#
# I_{2k}(x)   = x^{3k}   sum_j a_j(k)   (-x)^j
# I_{2k+1}(x) = x^{3k+1} sum_j b_j(k+1) (-x)^j
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def coeffs_even(k: int) -> tuple[Fraction, ...]:
    """Row a_j(k), j = 0..k, for the even-depth linear-schedule integrals."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return (Fraction(1),)
    prev = coeffs_even(k - 1)
    row = [prev[0] / (3 * k * (3 * k - 1))]
    for j in range(1, k):
        row.append(
            prev[j] / ((3 * k + j - 1) * (3 * k + j))
            + prev[j - 1] / ((3 * k + j - 2) * (3 * k + j))
        )
    row.append(prev[k - 1] / (4 * k * (4 * k - 2)))
    return tuple(row)


@lru_cache(maxsize=None)
def coeffs_odd(k: int) -> tuple[Fraction, ...]:
    """Row b_j(k), j = 0..k, for the odd-depth linear-schedule integrals.

    Base row comes from I_1(x) = x - x^2/2.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return (Fraction(1), Fraction(1, 2))
    km = k - 1  # recurrence advances b(km) -> b(km + 1)
    prev = coeffs_odd(km)
    row = [prev[0] / (3 * km * (3 * km + 1))]
    for j in range(1, k):
        row.append(
            prev[j] / ((3 * km + j + 1) * (3 * km + j))
            + prev[j - 1] / ((3 * km + j + 1) * (3 * km + j - 1))
        )
    row.append(prev[km] / (4 * km * (4 * km + 2)))
    return tuple(row)


def integral_even(k: int) -> Fraction:
    """Exact I_{2k}(1) for the linear schedule."""
    if k < 1:
        raise ValueError("k must be >= 1")
    prev = coeffs_even(k - 1)
    return sum(
        (
            Fraction((-1) ** j) * prev[j]
            / ((3 * k + j - 1) * (3 * k + j) * (3 * k + j + 1))
            for j in range(k)
        ),
        Fraction(0),
    )


def integral_odd(k: int) -> Fraction:
    """Exact I_{2k+1}(1) for the linear schedule."""
    if k < 1:
        raise ValueError("k must be >= 1")
    row = coeffs_odd(k)
    return sum(
        (
            Fraction((-1) ** j) * row[j]
            / ((3 * k + j) * (3 * k + j + 1) * (3 * k + j + 2))
            for j in range(k + 1)
        ),
        Fraction(0),
    )


def linear_integral(m: int) -> Fraction:
    """Exact I_m(1) for the linear schedule, any depth m >= 1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1:
        return Fraction(1, 2)
    if m % 2 == 0:
        return integral_even(m // 2)
    return integral_odd((m - 1) // 2)


def even_upper_bound(k: int) -> Fraction:
    """Factorial upper bound 6^{k+1} k! / (3k+1)! for I_{2k}(1)."""
    return Fraction(6 ** (k + 1) * math.factorial(k), math.factorial(3 * k + 1))


def odd_upper_bound(k: int) -> Fraction:
    """Factorial upper bound 6^{k+2} (k+1)! / (3k+2)! for I_{2k+1}(1)."""
    return Fraction(6 ** (k + 2) * math.factorial(k + 1), math.factorial(3 * k + 2))


@dataclass(frozen=True)
class CoefficientTable:
    """Exact recurrence coefficients a_j(k) and b_j(k) up to depth K."""

    K: int
    even: tuple[tuple[Fraction, ...], ...] = field(repr=False, default=())
    odd: tuple[tuple[Fraction, ...], ...] = field(repr=False, default=())

    @classmethod
    def build(cls, K: int) -> "CoefficientTable":
        if K < 1:
            raise ValueError("K must be >= 1")
        return cls(
            K=K,
            even=tuple(coeffs_even(k) for k in range(K + 1)),
            odd=tuple(coeffs_odd(k) for k in range(1, K + 1)),
        )


# ---------------------------------------------------------------------------
# General schedules: iterated cumulative quadrature
# ---------------------------------------------------------------------------


def _nested_value(s: Schedule, m: int, n_points: int) -> float:
    """Trapezoid evaluation of I_m on a uniform grid with n_points intervals."""
    u = np.linspace(0.0, 1.0, n_points + 1)
    f = np.asarray(s.value(u), dtype=float)
    h = 1.0 / n_points
    g = np.ones_like(u)
    # innermost weight first: depth j has weight (1 - f) if j odd else f
    for depth in range(m, 0, -1):
        w = f if depth % 2 == 0 else 1.0 - f
        y = w * g
        g = np.concatenate(([0.0], np.cumsum(0.5 * h * (y[1:] + y[:-1]))))
    return float(g[-1])


def integral_quadrature(
    s: Schedule, m: int, grid: int = 4096, tol: float = 1e-9
) -> tuple[float, float]:
    """Numerical I_m for an arbitrary schedule.

    Evaluates the nested integral by iterated cumulative trapezoid rule on a
    uniform grid, then halves the step twice and Richardson-extrapolates.
    Returns (estimate, error bound).  Raises QuadratureError if the error
    bound exceeds ``tol`` relative to the estimate.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if grid < 8:
        raise ValueError("grid too coarse")
    t1 = _nested_value(s, m, grid)
    t2 = _nested_value(s, m, 2 * grid)
    t4 = _nested_value(s, m, 4 * grid)
    r1 = (4.0 * t2 - t1) / 3.0
    r2 = (4.0 * t4 - t2) / 3.0
    value = (16.0 * r2 - r1) / 15.0
    err = abs(r2 - r1) / 15.0
    if value != 0.0 and err > tol * abs(value):
        raise QuadratureError(
            f"I_{m} quadrature error {err:.3e} exceeds tolerance "
            f"{tol:.1e} * {abs(value):.3e}"
        )
    return value, err


@dataclass(frozen=True)
class IntegralTable:
    """Values of I_m for m = 2..M for one schedule.

    ``method`` is "recurrence" (exact, linear schedule) or "quadrature";
    ``errors`` holds a per-entry error bound (zero for exact entries).
    """

    schedule: Schedule
    values: tuple[float, ...]  # index m - 2
    errors: tuple[float, ...]
    method: str

    @classmethod
    def build(
        cls, schedule: Schedule, m_max: int, grid: int = 4096, tol: float = 1e-9
    ) -> "IntegralTable":
        if m_max < 2:
            raise ValueError("m_max must be >= 2")
        if schedule.is_linear:
            vals = tuple(float(linear_integral(m)) for m in range(2, m_max + 1))
            errs = (0.0,) * (m_max - 1)
            return cls(schedule, vals, errs, "recurrence")
        pairs = [integral_quadrature(schedule, m, grid, tol) for m in range(2, m_max + 1)]
        return cls(
            schedule,
            tuple(v for v, _ in pairs),
            tuple(e for _, e in pairs),
            "quadrature",
        )

    @property
    def m_max(self) -> int:
        return len(self.values) + 1

    def value(self, m: int) -> float:
        if not 2 <= m <= self.m_max:
            raise KeyError(f"I_{m} not in table (m = 2..{self.m_max})")
        return self.values[m - 2]

    def to_csv_rows(self):
        for m in range(2, self.m_max + 1):
            yield m, self.values[m - 2], self.method, self.errors[m - 2]
