"""Light-cone error bounds for the annealing dynamics.

Both bounds share a seven-term structure: term m (m = 0..5) carries
T^{2k+m} (2/alpha)^{e_m} I_{2k+m} times a walk count, with exponents
e_m = (k, k+1, k+1, k+2, k+2, k+3), plus a truncation remainder
T^{2k+6} (2/alpha)^{k+3} I_{2k+6} (2d)^{k+3}.

The global bound plugs in the worst-case (cycle-free ball) closed-form
counts; the local bound substitutes the exact exit-walk counts of one
ball, with an identical remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .balls import MarkedBall, tree_completion
from .commgraph import (
    N_TERMS,
    build_commutativity_graph,
    closed_form_counts,
    count_exit_walks,
    remainder_weight,
)
from .schedule import IntegralTable, Schedule

__all__ = ["BoundParams", "BoundBreakdown", "global_bound", "local_bound", "bound_scan"]


@dataclass(frozen=True)
class BoundParams:
    d: int
    k: int
    T: float
    alpha: float
    schedule: Schedule

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")

    @property
    def q(self) -> int:
        return self.k - 1


@dataclass(frozen=True)
class BoundBreakdown:
    """Per-term contributions and their sum."""

    params: BoundParams
    terms: tuple[float, ...]  # m = 0..5
    remainder: float

    @property
    def total(self) -> float:
        return sum(self.terms) + self.remainder


def _alpha_exponents(k: int) -> tuple[int, ...]:
    return (k, k + 1, k + 1, k + 2, k + 2, k + 3)


def _ensure_table(p: BoundParams, integrals: IntegralTable | None) -> IntegralTable:
    m_need = 2 * p.k + 6
    if integrals is None:
        return IntegralTable.build(p.schedule, m_need)
    if integrals.m_max < m_need:
        raise ValueError(
            f"integral table covers m <= {integrals.m_max}, need {m_need}"
        )
    if integrals.schedule.schedule_id != p.schedule.schedule_id:
        raise ValueError("integral table built for a different schedule")
    return integrals


def _assemble(p: BoundParams, counts, integrals: IntegralTable) -> BoundBreakdown:
    k = p.k
    exps = _alpha_exponents(k)
    terms = tuple(
        p.T ** (2 * k + m)
        * (2.0 / p.alpha) ** exps[m]
        * integrals.value(2 * k + m)
        * counts[m]
        for m in range(N_TERMS)
    )
    rem = (
        p.T ** (2 * k + 6)
        * (2.0 / p.alpha) ** (k + 3)
        * integrals.value(2 * k + 6)
        * remainder_weight(p.d, k)
    )
    return BoundBreakdown(params=p, terms=terms, remainder=rem)


def global_bound(p: BoundParams, integrals: IntegralTable | None = None) -> BoundBreakdown:
    """Worst-case light-cone error over all radius-q balls, via the
    cycle-free closed-form walk counts."""
    integrals = _ensure_table(p, integrals)
    counts = [closed_form_counts(p.d, p.k, m) for m in range(N_TERMS)]
    return _assemble(p, counts, integrals)


def local_bound(
    b: MarkedBall, p: BoundParams, integrals: IntegralTable | None = None
) -> BoundBreakdown:
    """Per-ball light-cone error using exact exit-walk counts on the
    ball's tree completion."""
    if b.d != p.d:
        raise ValueError(f"ball degree bound {b.d} != params degree {p.d}")
    if b.p < p.q:
        raise ValueError(f"ball radius {b.p} < q = {p.q}")
    integrals = _ensure_table(p, integrals)
    extra = max(0, p.k + 2 - b.p)
    ext = tree_completion(b, extra)
    cg = build_commutativity_graph(ext, q=p.q)
    counts = count_exit_walks(cg, p.k).counts
    return _assemble(p, counts, integrals)


def bound_scan(
    b: MarkedBall | None,
    T_grid,
    alpha_grid,
    p: BoundParams,
    integrals: IntegralTable | None = None,
) -> list[dict]:
    """Dense (T, alpha) table of the bound; local when a ball is given,
    global otherwise.  Rows ordered T-major, then alpha."""
    T_grid = list(T_grid)
    alpha_grid = list(alpha_grid)
    if not T_grid or not alpha_grid:
        raise ValueError("grids must be non-empty")
    integrals = _ensure_table(p, integrals)
    # walk counts are (T, alpha)-independent: compute once
    if b is None:
        counts = [closed_form_counts(p.d, p.k, m) for m in range(N_TERMS)]
    else:
        if b.p < p.q:
            raise ValueError(f"ball radius {b.p} < q = {p.q}")
        ext = tree_completion(b, max(0, p.k + 2 - b.p))
        cg = build_commutativity_graph(ext, q=p.q)
        counts = count_exit_walks(cg, p.k).counts
    rows = []
    for T in T_grid:
        for alpha in alpha_grid:
            bb = _assemble(replace(p, T=float(T), alpha=float(alpha)), counts, integrals)
            rows.append(
                {
                    "ball_id": None if b is None else b.id,
                    "T": float(T),
                    "alpha": float(alpha),
                    **{f"term_{m}": bb.terms[m] for m in range(N_TERMS)},
                    "remainder": bb.remainder,
                    "total": bb.total,
                }
            )
    return rows
