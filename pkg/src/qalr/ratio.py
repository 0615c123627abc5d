"""Certified approximation-ratio lower bounds from ball energies.

The pipeline: correct each ball's simulated marked-edge energy by the
worst-case light-cone error, keep the balls whose corrected value falls
below a threshold, recompute those with the tighter per-ball error, take
per-class minima (a, b, c) over the three radius-1 edge neighborhoods,
and minimize the cut-fraction functional

    f(x, y) = (a x + b (4x + 3y) + c (3/2 - 5x - 3y)) / (3/2 - x - y)

over {x >= 0, y >= 0, 4x + 3y <= 1}, where x and y are the densities of
square and triangle edges.  When 3.5 c <= 3.75 b + 0.75 a the minimum is
exactly c at the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .balls import BallDatabase, MarkedBall
from .lrbound import BoundParams, global_bound, local_bound
from .qasim import EnergyCache
from .schedule import IntegralTable, Schedule

__all__ = [
    "OmegaCounts",
    "MinConditionResult",
    "ClassMinima",
    "SurvivorEntry",
    "RatioCertificate",
    "MissingEnergyError",
    "omega_fraction",
    "omega_fraction_min",
    "check_min_condition",
    "origin_min_condition",
    "filter_with_global_bound",
    "refine_with_local_bound",
    "certify_ratio",
    "scan_T_alpha",
    "optimize_T_alpha",
]

OMEGA_CLASSES = (1, 2, 3)


class MissingEnergyError(KeyError):
    """Raised when the energy cache lacks records for some balls."""

    def __init__(self, ball_ids):
        self.ball_ids = sorted(ball_ids)
        super().__init__(
            f"{len(self.ball_ids)} ball(s) missing from the energy cache: "
            + ", ".join(self.ball_ids[:10])
            + ("..." if len(self.ball_ids) > 10 else "")
        )


@dataclass(frozen=True)
class OmegaCounts:
    """Edge-neighborhood class counts of a cubic graph: n1 squares,
    n2 triangles, derived n3 = |E| - 5 n1 - 3 n2 tree edges."""

    n1: int
    n2: int
    n_nodes: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("class counts must be nonnegative")
        if self.n_nodes <= 0 or self.n_nodes % 2:
            raise ValueError("cubic graphs have a positive even node count")
        if 4 * self.n1 + 3 * self.n2 > self.n_nodes:
            raise ValueError("4 n1 + 3 n2 exceeds the node count")
        if self.n3 < 0:
            raise ValueError("derived tree-edge count is negative")

    @property
    def n_edges(self) -> int:
        return 3 * self.n_nodes // 2

    @property
    def n3(self) -> int:
        return self.n_edges - 5 * self.n1 - 3 * self.n2


def omega_fraction(a: float, b: float, c: float, x: float, y: float) -> float:
    """The cut-fraction functional f(x, y) for class minima (a, b, c)."""
    return (a * x + b * (4 * x + 3 * y) + c * (1.5 - 5 * x - 3 * y)) / (1.5 - x - y)


@dataclass(frozen=True)
class MinConditionResult:
    """Outcome of the origin-minimum test 3.5 c <= 3.75 b + 0.75 a."""

    holds: bool
    ordering_violated: bool

    def __bool__(self) -> bool:
        return self.holds


def check_min_condition(a: float, b: float, c: float) -> MinConditionResult:
    """Printed origin-minimum test: 3.5 c <= 3.75 b + 0.75 a.

    Requires a <= b <= c; an ordering violation yields (False, flagged)
    rather than an exception.  Note this test bounds the three parts of
    the functional at different points of the feasible region, so it is
    necessary-looking but not sufficient; see origin_min_condition for
    the exact test used by the minimizer.
    """
    if not a <= b <= c:
        return MinConditionResult(holds=False, ordering_violated=True)
    return MinConditionResult(holds=3.5 * c <= 3.75 * b + 0.75 * a, ordering_violated=False)


def origin_min_condition(a: float, b: float, c: float) -> bool:
    """Exact origin-minimum test: a + 4b >= 4c (with a <= b <= c).

    Writing s = x + y, f(x, y) - c = [s(3b - 2c) - (2c - a - b)x] /
    (3/2 - s) with x <= s, so the numerator is >= s(a + 4b - 4c); the
    bound is attained along y = 0, making the condition tight (the
    competing minimum is the vertex value f(1/4, 0) = (a + 4b + c)/5).
    """
    return a <= b <= c and a + 4.0 * b >= 4.0 * c


def _feasible(x: float, y: float) -> bool:
    return x >= 0.0 and y >= 0.0 and 4.0 * x + 3.0 * y <= 1.0


def omega_fraction_min(
    a: float, b: float, c: float, grid: int = 400, refine_rounds: int = 40
) -> tuple[float, tuple[float, float]]:
    """Minimum of the cut-fraction functional over the feasible triangle
    {x >= 0, y >= 0, 4x + 3y <= 1}, with its argmin.

    When the origin condition holds the exact answer (c, (0, 0)) is
    returned.  Otherwise the vertices are combined with a fine grid and a
    shrinking local search; as a ratio of affine functions the minimum sits
    on the boundary, which the grid confirms.
    """
    if origin_min_condition(a, b, c):
        return c, (0.0, 0.0)
    best_v = math.inf
    best_xy = (0.0, 0.0)
    for x, y in [(0.0, 0.0), (0.25, 0.0), (0.0, 1.0 / 3.0)]:
        v = omega_fraction(a, b, c, x, y)
        if v < best_v:
            best_v, best_xy = v, (x, y)
    for i in range(grid + 1):
        x = 0.25 * i / grid
        y_max = (1.0 - 4.0 * x) / 3.0
        for j in range(grid + 1):
            y = y_max * j / grid
            v = omega_fraction(a, b, c, x, y)
            if v < best_v:
                best_v, best_xy = v, (x, y)
    # shrinking neighborhood search around the incumbent
    step = 0.25 / grid
    for _ in range(refine_rounds):
        x0, y0 = best_xy
        improved = False
        for dx in (-step, 0.0, step):
            for dy in (-step, 0.0, step):
                x, y = x0 + dx, y0 + dy
                if (dx or dy) and _feasible(x, y):
                    v = omega_fraction(a, b, c, x, y)
                    if v < best_v:
                        best_v, best_xy = v, (x, y)
                        improved = True
        if not improved:
            step /= 2.0
    return best_v, best_xy


# ---------------------------------------------------------------------------
# Filter / refine pipeline
# ---------------------------------------------------------------------------


@dataclass
class SurvivorEntry:
    """One ball that passed the global-bound filter."""

    ball_id: str
    omega_class: int
    energy: float
    corrected_global: float
    eps_loc: float | None = None
    corrected_local: float | None = None

    @property
    def corrected(self) -> float:
        return self.corrected_global if self.corrected_local is None else self.corrected_local


@dataclass
class ClassMinima:
    """Per-class minima of corrected energies: a for squares (Omega 1),
    b for triangles (Omega 2), c for tree neighborhoods (Omega 3)."""

    a: float
    b: float
    c: float
    argmin: dict = field(default_factory=dict)  # omega class -> ball id
    mode: dict = field(default_factory=dict)  # omega class -> "global" | "local"

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    @property
    def ordering_ok(self) -> bool:
        return self.a <= self.b <= self.c


def _minima_from(entries) -> ClassMinima:
    best = {}
    for e in entries:
        cur = best.get(e.omega_class)
        if cur is None or e.corrected < cur.corrected:
            best[e.omega_class] = e
    vals = {}
    argmin = {}
    mode = {}
    for cls in OMEGA_CLASSES:
        e = best.get(cls)
        if e is None:
            vals[cls] = math.inf
            continue
        vals[cls] = e.corrected
        argmin[cls] = e.ball_id
        mode[cls] = "global" if e.corrected_local is None else "local"
    return ClassMinima(a=vals[1], b=vals[2], c=vals[3], argmin=argmin, mode=mode)


def filter_with_global_bound(
    entries: list[SurvivorEntry], threshold: float
) -> tuple[list[SurvivorEntry], ClassMinima]:
    """Survivors are the balls whose globally-corrected energy lies below
    the threshold; the class minima cover the whole set."""
    survivors = [e for e in entries if e.corrected_global < threshold]
    return survivors, _minima_from(entries)


def refine_with_local_bound(
    entries: list[SurvivorEntry],
    survivors: list[SurvivorEntry],
    db: BallDatabase,
    params: BoundParams,
    integrals: IntegralTable | None = None,
) -> ClassMinima:
    """Replace each survivor's correction with its per-ball error bound
    (balls of radius < q keep the global correction) and recompute the
    class minima over the full set."""
    for e in survivors:
        ball = db.by_id(e.ball_id)
        if ball.p < params.q:
            continue
        e.eps_loc = local_bound(ball, params, integrals).total
        e.corrected_local = e.energy - e.eps_loc
    return _minima_from(entries)


@dataclass
class RatioCertificate:
    """Audited record of one ratio computation: every intermediate
    quantity needed to recompute the final ratio."""

    d: int
    q: int
    T: float
    alpha: float
    schedule_id: str
    threshold: float
    eps_global: float
    minima: ClassMinima
    survivors: list[SurvivorEntry]
    condition: MinConditionResult
    ratio: float
    argmin_xy: tuple[float, float]

    def recompute_ratio(self) -> float:
        """The final ratio from the certificate's own minima alone."""
        return omega_fraction_min(*self.minima.values)[0]

    def is_consistent(self) -> bool:
        return self.recompute_ratio() == self.ratio

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "q": self.q,
            "T": self.T,
            "alpha": self.alpha,
            "schedule_id": self.schedule_id,
            "threshold": self.threshold,
            "eps_global": self.eps_global,
            "class_minima": {
                "a": self.minima.a,
                "b": self.minima.b,
                "c": self.minima.c,
                "argmin": {str(k): v for k, v in self.minima.argmin.items()},
                "mode": {str(k): v for k, v in self.minima.mode.items()},
            },
            "condition_holds": self.condition.holds,
            "condition_ordering_violated": self.condition.ordering_violated,
            "ratio": self.ratio,
            "argmin_xy": list(self.argmin_xy),
            "survivors": [
                {
                    "ball_id": e.ball_id,
                    "omega_class": e.omega_class,
                    "energy": e.energy,
                    "corrected_global": e.corrected_global,
                    "eps_loc": e.eps_loc,
                    "corrected_local": e.corrected_local,
                }
                for e in self.survivors
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def report(self) -> str:
        lines = [
            f"ratio certificate (d={self.d}, q={self.q}, T={self.T}, "
            f"alpha={self.alpha}, schedule={self.schedule_id})",
            f"  global error bound  eps = {self.eps_global:.6e}",
            f"  filter threshold        = {self.threshold}",
            f"  survivors               = {len(self.survivors)}",
            f"  class minima  a = {self.minima.a:.8f}  ({self.minima.mode.get(1, '-')})",
            f"                b = {self.minima.b:.8f}  ({self.minima.mode.get(2, '-')})",
            f"                c = {self.minima.c:.8f}  ({self.minima.mode.get(3, '-')})",
            f"  origin condition holds  = {self.condition.holds}"
            + ("  [ordering violated]" if self.condition.ordering_violated else ""),
            f"  certified ratio        >= {self.ratio:.8f}"
            f"  at (x, y) = {self.argmin_xy}",
        ]
        return "\n".join(lines)


def _entries_for(db: BallDatabase, cache: EnergyCache, T, alpha, schedule_id):
    entries = []
    missing = []
    for ball in sorted(db, key=lambda b: b.id):
        rec = cache.get(ball.id, T, alpha, schedule_id)
        if rec is None:
            missing.append(ball.id)
            continue
        if ball.omega_class is None:
            raise ValueError(f"ball {ball.id} has no edge-neighborhood class")
        entries.append(
            SurvivorEntry(
                ball_id=ball.id,
                omega_class=ball.omega_class,
                energy=rec.energy,
                corrected_global=math.nan,
            )
        )
    if missing:
        raise MissingEnergyError(missing)
    return entries


def certify_ratio(
    db: BallDatabase,
    cache: EnergyCache,
    T: float,
    alpha: float,
    q: int,
    schedule: Schedule,
    threshold: float,
    integrals: IntegralTable | None = None,
) -> RatioCertificate:
    """Full filter -> refine -> minimize pipeline, producing an audited
    certificate.  Raises MissingEnergyError (listing ball ids) if the
    cache lacks any ball."""
    if q < 1:
        raise ValueError("q must be >= 1")
    params = BoundParams(d=db.d, k=q + 1, T=float(T), alpha=float(alpha), schedule=schedule)
    eps = global_bound(params, integrals).total
    entries = _entries_for(db, cache, T, alpha, schedule.schedule_id)
    for e in entries:
        e.corrected_global = e.energy - eps
    survivors, _ = filter_with_global_bound(entries, threshold)
    minima = refine_with_local_bound(entries, survivors, db, params, integrals)
    condition = check_min_condition(*minima.values)
    ratio, xy = omega_fraction_min(*minima.values)
    return RatioCertificate(
        d=db.d,
        q=q,
        T=float(T),
        alpha=float(alpha),
        schedule_id=schedule.schedule_id,
        threshold=threshold,
        eps_global=eps,
        minima=minima,
        survivors=survivors,
        condition=condition,
        ratio=ratio,
        argmin_xy=xy,
    )


def scan_T_alpha(
    db: BallDatabase,
    cache: EnergyCache,
    T_grid,
    alpha_grid,
    q: int,
    schedule: Schedule,
    use_local: bool = False,
    worst_n: int | None = None,
) -> list[dict]:
    """Per (ball, alpha) row: the maximum over the T-grid of the corrected
    energy, with global or per-ball error bounds.  ``worst_n`` keeps only
    the N balls with the smallest scan minimum."""
    T_grid = list(T_grid)
    alpha_grid = list(alpha_grid)
    if not T_grid or not alpha_grid:
        raise ValueError("grids must be non-empty")
    if q < 1:
        raise ValueError("q must be >= 1")
    k = q + 1
    integrals = IntegralTable.build(schedule, 2 * k + 6)
    balls = sorted(db, key=lambda b: b.id)
    rows = []
    eps_cache: dict[tuple, float] = {}

    def eps_for(ball, T, alpha) -> float:
        key = (None if not use_local else ball.id, T, alpha)
        if key not in eps_cache:
            p = BoundParams(d=db.d, k=k, T=T, alpha=alpha, schedule=schedule)
            if use_local and ball.p >= q:
                eps_cache[key] = local_bound(ball, p, integrals).total
            else:
                eps_cache[key] = global_bound(p, integrals).total
        return eps_cache[key]

    missing = []
    for ball in balls:
        for alpha in alpha_grid:
            best = -math.inf
            best_T = None
            for T in T_grid:
                rec = cache.get(ball.id, float(T), float(alpha), schedule.schedule_id)
                if rec is None:
                    missing.append(ball.id)
                    continue
                v = rec.energy - eps_for(ball, float(T), float(alpha))
                if v > best:
                    best, best_T = v, float(T)
            rows.append(
                {
                    "ball_id": ball.id,
                    "alpha": float(alpha),
                    "max_corrected": best,
                    "argmax_T": best_T,
                    "bound": "local" if (use_local and ball.p >= q) else "global",
                }
            )
    if missing:
        raise MissingEnergyError(set(missing))
    if worst_n is not None:
        low = {}
        for r in rows:
            low[r["ball_id"]] = min(low.get(r["ball_id"], math.inf), r["max_corrected"])
        keep = set(sorted(low, key=low.get)[:worst_n])
        rows = [r for r in rows if r["ball_id"] in keep]
    return rows


def optimize_T_alpha(
    evaluate,
    T_grid,
    alpha_grid,
    refine_iters: int = 20,
) -> tuple[float, float, float]:
    """Maximize evaluate(T, alpha) by grid search followed by coordinate
    golden-section refinement within the best cell.  Returns
    (best value, T, alpha)."""
    T_grid = sorted(float(t) for t in T_grid)
    alpha_grid = sorted(float(a) for a in alpha_grid)
    if not T_grid or not alpha_grid:
        raise ValueError("grids must be non-empty")
    best = (-math.inf, T_grid[0], alpha_grid[0])
    for T in T_grid:
        for a in alpha_grid:
            v = evaluate(T, a)
            if v > best[0]:
                best = (v, T, a)
    phi = (math.sqrt(5.0) - 1.0) / 2.0

    def golden(lo, hi, func):
        x1 = hi - phi * (hi - lo)
        x2 = lo + phi * (hi - lo)
        f1, f2 = func(x1), func(x2)
        for _ in range(refine_iters):
            if f1 < f2:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + phi * (hi - lo)
                f2 = func(x2)
            else:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - phi * (hi - lo)
                f1 = func(x1)
        return (x1, f1) if f1 >= f2 else (x2, f2)

    _, bT, ba = best
    iT = T_grid.index(bT)
    ia = alpha_grid.index(ba)
    T_lo = T_grid[max(iT - 1, 0)]
    T_hi = T_grid[min(iT + 1, len(T_grid) - 1)]
    a_lo = alpha_grid[max(ia - 1, 0)]
    a_hi = alpha_grid[min(ia + 1, len(alpha_grid) - 1)]
    if T_hi > T_lo:
        bT, v = golden(T_lo, T_hi, lambda t: evaluate(t, ba))
        if v > best[0]:
            best = (v, bT, ba)
    if a_hi > a_lo:
        ba, v = golden(a_lo, a_hi, lambda a: evaluate(best[1], a))
        if v > best[0]:
            best = (v, best[1], ba)
    return best
