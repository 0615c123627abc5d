#!/usr/bin/env python3
"""Resumable driver for the full-scale certification campaign.

Target figures (not reachable on a desk machine): the combined radius-3
database of 930449 balls, the 7071 surviving tree-class balls at
threshold 0.7020, per-class minima 0.5502 / 0.6265 / 0.70208 and the
certified ratio above 0.7020 at (T, alpha) = (3.33, 1.53).  The largest
balls reach 30 nodes, i.e. 16+ GiB statevectors; plan for weeks of
compute or a large accelerator.

Every stage is idempotent: the ball database is written once, the energy
cache is append-only and keyed per (ball, T, alpha, schedule), so the
script can be re-run after interruption and will only do remaining work.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from qalr.balls import BallDatabase, enumerate_b1, extend_balls
from qalr.qasim import EnergyCache, batch_simulate
from qalr.ratio import certify_ratio
from qalr.schedule import Schedule


def stage_enumerate(args) -> BallDatabase:
    if os.path.exists(args.db):
        db = BallDatabase.load(args.db)
        print(f"[enumerate] loaded {len(db)} balls from {args.db}")
        return db
    db = enumerate_b1(3)
    print(f"[enumerate] p=1: {len(db)}")
    combined = BallDatabase(d=3, p=args.radius)
    for radius in range(2, args.radius + 1):
        db = extend_balls(db)
        print(f"[enumerate] p={radius}: {len(db)}")
        if radius == args.radius - 1:
            for ball in db:
                combined.add(ball)
    for ball in db:
        combined.add(ball)
    combined.save(args.db)
    print(f"[enumerate] wrote {len(combined)} balls to {args.db}")
    return combined


def stage_simulate(args, db: BallDatabase) -> EnergyCache:
    cache = EnergyCache(args.cache)
    schedule = Schedule.from_id(args.schedule)
    done = 0

    def progress(ball, rec, err):
        nonlocal done
        done += 1
        if err is not None:
            print(f"[simulate] {ball.id}: FAILED: {err}", file=sys.stderr)
        elif done % 100 == 0:
            print(f"[simulate] {done} processed, last {ball.id} ({rec.wall_time:.1f}s)")

    result = batch_simulate(
        db,
        args.T,
        args.alpha,
        schedule,
        cache=cache,
        hilbert_cap=args.hilbert_cap,
        parallelism=args.parallelism,
        progress=progress,
    )
    print(
        f"[simulate] {result.simulated} simulated, {result.cached} cached, "
        f"{len(result.failures)} failed"
    )
    if result.failures:
        print(
            "[simulate] failures leave the certificate incomplete; raise "
            "--hilbert-cap (memory permitting) and re-run",
            file=sys.stderr,
        )
    return cache


def stage_certify(args, db: BallDatabase, cache: EnergyCache) -> None:
    schedule = Schedule.from_id(args.schedule)
    cert = certify_ratio(
        db, cache, args.T, args.alpha, args.q, schedule, args.threshold
    )
    print(cert.report())
    with open(args.certificate, "w") as fh:
        fh.write(cert.to_json() + "\n")
    print(f"[certify] wrote {args.certificate}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--db", default="campaign_balls.jsonl")
    parser.add_argument("--cache", default="campaign_energies.csv")
    parser.add_argument("--certificate", default="campaign_certificate.json")
    parser.add_argument("--radius", type=int, default=3)
    parser.add_argument("--q", type=int, default=3)
    parser.add_argument("--T", type=float, default=3.33)
    parser.add_argument("--alpha", type=float, default=1.53)
    parser.add_argument("--schedule", default="linear")
    parser.add_argument("--threshold", type=float, default=0.7020)
    parser.add_argument("--hilbert-cap", type=int, default=24)
    parser.add_argument("--parallelism", type=int, default=1)
    parser.add_argument(
        "--stages",
        default="enumerate,simulate,certify",
        help="comma-separated subset of enumerate,simulate,certify",
    )
    args = parser.parse_args()
    stages = args.stages.split(",")

    db = stage_enumerate(args) if "enumerate" in stages else BallDatabase.load(args.db)
    cache = stage_simulate(args, db) if "simulate" in stages else EnergyCache(args.cache)
    if "certify" in stages:
        stage_certify(args, db, cache)
    return 0


if __name__ == "__main__":
    sys.exit(main())
