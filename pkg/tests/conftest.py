"""Shared fixtures: ball databases and a warm energy cache at the
reference operating point (T, alpha) = (3.33, 1.53)."""

import pytest

from qalr.balls import BallDatabase, enumerate_b1, extend_balls
from qalr.qasim import EnergyCache, batch_simulate
from qalr.schedule import IntegralTable, Schedule

T_REF = 3.33
ALPHA_REF = 1.53

# the unique radius-2 cubic ball with no cycles (exit-walk counts equal
# the worst-case closed forms on the m <= 3 terms)
TREE_BALL_ID = "899a6373dd46c3f6"


@pytest.fixture(scope="session")
def linear():
    return Schedule.linear()


@pytest.fixture(scope="session")
def db1():
    return enumerate_b1(3)


@pytest.fixture(scope="session")
def db2(db1):
    return extend_balls(db1)


@pytest.fixture(scope="session")
def union_db(db1, db2):
    db = BallDatabase(d=3, p=2)
    for ball in list(db1) + list(db2):
        db.add(ball)
    return db


@pytest.fixture(scope="session")
def integrals_k3(linear):
    return IntegralTable.build(linear, 2 * 3 + 6)


@pytest.fixture(scope="session")
def warm_cache(union_db, linear):
    """All 126 radius-1 and radius-2 energies at the reference point."""
    cache = EnergyCache(None)
    result = batch_simulate(union_db, T_REF, ALPHA_REF, linear, cache=cache)
    assert not result.failures
    return cache
