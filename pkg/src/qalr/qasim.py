"""Statevector simulation of the annealing dynamics on a marked ball.

The Hamiltonian is applied matrix-free: the edge part is a precomputed
diagonal (cut counts per basis state), the transverse-field part a sum of
single-bit amplitude swaps.  The observable is the cut indicator of the
marked edge in the final state.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .balls import BallDatabase, MarkedBall
from .schedule import Schedule

__all__ = [
    "HilbertCapError",
    "HamiltonianSpec",
    "EnergyRecord",
    "EnergyCache",
    "apply_hamiltonian",
    "evolve",
    "evolve_rk4",
    "edge_energy",
    "uniform_state",
    "batch_simulate",
]

DEFAULT_HILBERT_CAP = 24
DEFAULT_TOL = 1e-8
NORM_DRIFT_FACTOR = 10.0
# Per-step solver tolerances sit well below the requested end-to-end
# tolerance so that accumulated norm drift stays within it.
SOLVER_SAFETY = 1e-3
SOLVER_TOL_FLOOR = 1e-13

CACHE_FIELDS = [
    "ball_id",
    "T",
    "alpha",
    "schedule_id",
    "energy",
    "method",
    "tol",
    "steps",
    "wall_time",
]


class HilbertCapError(ValueError):
    """Ball too large for the configured statevector cap."""


@dataclass(frozen=True)
class HamiltonianSpec:
    """Annealing Hamiltonian on one ball: qubit i is graph node i (nodes
    in canonical edge-list order), basis index bit i is node i's spin."""

    ball: MarkedBall
    alpha: float
    T: float
    schedule: Schedule
    hilbert_cap: int = DEFAULT_HILBERT_CAP

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        n = self.ball.nodes
        if n > self.hilbert_cap:
            raise HilbertCapError(
                f"ball has {n} nodes; statevector of dimension 2^{n} exceeds "
                f"the configured cap of 2^{self.hilbert_cap}"
            )

    @property
    def n(self) -> int:
        return self.ball.nodes

    def cut_counts(self) -> np.ndarray:
        """Number of cut edges per computational basis state."""
        n = self.n
        idx = np.arange(1 << n, dtype=np.int64)
        cuts = np.zeros(1 << n, dtype=np.float64)
        for u, v in self.ball.edges:
            cuts += (((idx >> u) ^ (idx >> v)) & 1).astype(np.float64)
        return cuts


def uniform_state(n: int) -> np.ndarray:
    return np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=np.complex128)


def _apply(spec: HamiltonianSpec, f: float, cuts: np.ndarray, v: np.ndarray) -> np.ndarray:
    """H(t) v with f = f(t/T):  -f * cuts ∘ v - ((1-f)/alpha) * sum_i flip_i(v)."""
    n = spec.n
    out = (-f) * cuts * v
    coeff = -(1.0 - f) / spec.alpha
    if coeff != 0.0:
        flips = np.zeros_like(v)
        for i in range(n):
            blocks = v.reshape(1 << (n - 1 - i), 2, 1 << i)
            flips += blocks[:, ::-1, :].reshape(-1)
        out += coeff * flips
    return out


def apply_hamiltonian(spec: HamiltonianSpec, t: float, v: np.ndarray) -> np.ndarray:
    """H(t) v, matrix-free."""
    if not 0.0 <= t <= max(spec.T, 0.0):
        raise ValueError(f"time {t} outside [0, {spec.T}]")
    if v.shape != (1 << spec.n,):
        raise ValueError(f"state dimension {v.shape} != 2^{spec.n}")
    u = t / spec.T if spec.T > 0 else 0.0
    return _apply(spec, float(spec.schedule.value(u)), spec.cut_counts(), v)


def edge_energy(v: np.ndarray, marked_edge: tuple[int, int]) -> float:
    """Expected cut indicator of the marked edge: sum of |amplitude|^2
    over basis states whose marked bits differ."""
    n = v.shape[0].bit_length() - 1
    if 1 << n != v.shape[0]:
        raise ValueError("state length is not a power of two")
    a, b = marked_edge
    idx = np.arange(1 << n, dtype=np.int64)
    mask = (((idx >> a) ^ (idx >> b)) & 1).astype(bool)
    return float(np.sum(np.abs(v[mask]) ** 2))


def _check_norm(v: np.ndarray, tol: float) -> float:
    drift = abs(float(np.linalg.norm(v)) - 1.0)
    if drift > NORM_DRIFT_FACTOR * tol:
        raise RuntimeError(f"statevector norm drift {drift:.3e} exceeds 10x tolerance")
    return drift


def evolve(spec: HamiltonianSpec, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, dict]:
    """Integrate the Schrödinger dynamics from the uniform superposition to
    time T with an adaptive high-order explicit scheme (DOP853).

    Returns (final state, info) where info records method, tolerance,
    accepted step count and norm drift.  The state is never renormalized.
    """
    psi0 = uniform_state(spec.n)
    if spec.T == 0:
        return psi0, {"method": "dop853", "tol": tol, "steps": 0, "norm_drift": 0.0}
    cuts = spec.cut_counts()
    invT = 1.0 / spec.T

    def rhs(t, y):
        f = float(spec.schedule.value(t * invT))
        return -1j * _apply(spec, f, cuts, y)

    solver_tol = max(tol * SOLVER_SAFETY, SOLVER_TOL_FLOOR)
    sol = solve_ivp(
        rhs,
        (0.0, spec.T),
        psi0,
        method="DOP853",
        rtol=solver_tol,
        atol=solver_tol,
        dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    psi = sol.y[:, -1]
    drift = _check_norm(psi, tol)
    return psi, {
        "method": "dop853",
        "tol": tol,
        "steps": int(sol.t.size - 1),
        "norm_drift": drift,
    }


def evolve_rk4(spec: HamiltonianSpec, steps: int = 2000) -> tuple[np.ndarray, dict]:
    """Cross-check integrator: fixed-step classical RK4 run at h and h/2
    with one Richardson extrapolation of the final state."""

    def run(n_steps: int) -> np.ndarray:
        psi = uniform_state(spec.n)
        if spec.T == 0:
            return psi
        cuts = spec.cut_counts()
        h = spec.T / n_steps
        invT = 1.0 / spec.T

        def deriv(t, y):
            f = float(spec.schedule.value(min(t * invT, 1.0)))
            return -1j * _apply(spec, f, cuts, y)

        t = 0.0
        for _ in range(n_steps):
            k1 = deriv(t, psi)
            k2 = deriv(t + 0.5 * h, psi + 0.5 * h * k1)
            k3 = deriv(t + 0.5 * h, psi + 0.5 * h * k2)
            k4 = deriv(t + h, psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        return psi

    coarse = run(steps)
    fine = run(2 * steps)
    psi = (16.0 * fine - coarse) / 15.0
    drift = _check_norm(psi, DEFAULT_TOL)
    return psi, {
        "method": "rk4-richardson",
        "tol": float(np.max(np.abs(fine - coarse)) / 15.0),
        "steps": 3 * steps,
        "norm_drift": drift,
    }


# ---------------------------------------------------------------------------
# Batch simulation with a resumable cache
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyRecord:
    ball_id: str
    T: float
    alpha: float
    schedule_id: str
    energy: float
    method: str
    tol: float
    steps: int
    wall_time: float

    def key(self) -> tuple:
        return (self.ball_id, self.T, self.alpha, self.schedule_id)

    def to_row(self) -> dict:
        return {
            "ball_id": self.ball_id,
            "T": repr(self.T),
            "alpha": repr(self.alpha),
            "schedule_id": self.schedule_id,
            "energy": repr(self.energy),
            "method": self.method,
            "tol": repr(self.tol),
            "steps": self.steps,
            "wall_time": f"{self.wall_time:.3f}",
        }

    @classmethod
    def from_row(cls, row: dict) -> "EnergyRecord":
        return cls(
            ball_id=row["ball_id"],
            T=float(row["T"]),
            alpha=float(row["alpha"]),
            schedule_id=row["schedule_id"],
            energy=float(row["energy"]),
            method=row["method"],
            tol=float(row["tol"]),
            steps=int(row["steps"]),
            wall_time=float(row["wall_time"]),
        )


class EnergyCache:
    """Append-only CSV of simulated edge energies, keyed on
    (ball_id, T, alpha, schedule_id)."""

    def __init__(self, path):
        self.path = path
        self._records: dict[tuple, EnergyRecord] = {}
        if path is not None and os.path.exists(path):
            with open(path, newline="") as fh:
                for row in csv.DictReader(fh):
                    rec = EnergyRecord.from_row(row)
                    self._records[rec.key()] = rec

    def __len__(self) -> int:
        return len(self._records)

    def get(self, ball_id: str, T: float, alpha: float, schedule_id: str):
        return self._records.get((ball_id, float(T), float(alpha), schedule_id))

    def records(self) -> list[EnergyRecord]:
        return list(self._records.values())

    def append(self, rec: EnergyRecord) -> None:
        if rec.key() in self._records:
            return
        self._records[rec.key()] = rec
        if self.path is not None:
            new_file = not os.path.exists(self.path)
            with open(self.path, "a", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CACHE_FIELDS)
                if new_file:
                    writer.writeheader()
                writer.writerow(rec.to_row())


@dataclass
class BatchResult:
    records: list[EnergyRecord] = field(default_factory=list)
    simulated: int = 0
    cached: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)  # (ball_id, reason)


def simulate_ball(
    ball: MarkedBall,
    T: float,
    alpha: float,
    schedule: Schedule,
    tol: float = DEFAULT_TOL,
    hilbert_cap: int = DEFAULT_HILBERT_CAP,
) -> EnergyRecord:
    spec = HamiltonianSpec(ball, alpha, T, schedule, hilbert_cap=hilbert_cap)
    t0 = time.perf_counter()
    psi, info = evolve(spec, tol=tol)
    energy = edge_energy(psi, ball.marked_edge)
    return EnergyRecord(
        ball_id=ball.id,
        T=float(T),
        alpha=float(alpha),
        schedule_id=schedule.schedule_id,
        energy=energy,
        method=info["method"],
        tol=info["tol"],
        steps=info["steps"],
        wall_time=time.perf_counter() - t0,
    )


def batch_simulate(
    db: BallDatabase,
    T: float,
    alpha: float,
    schedule: Schedule,
    cache: EnergyCache | None = None,
    tol: float = DEFAULT_TOL,
    hilbert_cap: int = DEFAULT_HILBERT_CAP,
    parallelism: int = 1,
    progress=None,
) -> BatchResult:
    """One energy record per ball in the database; balls already in the
    cache are skipped.  Per-ball failures are recorded and the batch
    continues.  Results do not depend on scheduling order."""
    result = BatchResult()
    schedule_id = schedule.schedule_id
    balls = sorted(db, key=lambda b: b.id)
    pending = []
    for ball in balls:
        hit = cache.get(ball.id, T, alpha, schedule_id) if cache is not None else None
        if hit is not None:
            result.records.append(hit)
            result.cached += 1
        else:
            pending.append(ball)

    def finish(ball, rec, err):
        if err is not None:
            result.failures.append((ball.id, err))
        else:
            result.records.append(rec)
            result.simulated += 1
            if cache is not None:
                cache.append(rec)
        if progress is not None:
            progress(ball, rec, err)

    if parallelism > 1 and pending:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = {
                pool.submit(
                    simulate_ball, ball, T, alpha, schedule, tol, hilbert_cap
                ): ball
                for ball in pending
            }
            for fut, ball in futures.items():
                try:
                    finish(ball, fut.result(), None)
                except Exception as exc:  # noqa: BLE001 - per-ball isolation
                    finish(ball, None, str(exc))
    else:
        for ball in pending:
            try:
                finish(ball, simulate_ball(ball, T, alpha, schedule, tol, hilbert_cap), None)
            except Exception as exc:  # noqa: BLE001 - per-ball isolation
                finish(ball, None, str(exc))

    result.records.sort(key=lambda r: r.ball_id)
    return result
