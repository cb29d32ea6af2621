#!/usr/bin/env python3
"""Benchmark the pick resolver against the exhaustive reference.

Generates seeded random repositories, resolves each request both ways,
checks the results agree, and prints timing percentiles.  Useful when
touching the solver's search order or pruning.

    python3 scripts/solver_bench.py --instances 300 --seed 7
"""

from __future__ import annotations

import argparse
import random
import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pickforge.index import PackageManifest, Repository
from pickforge.solver import SelectionRequest, enumerate_best, resolve_pick
from pickforge.versioning import parse_constraint, parse_version, satisfies

VERSION_POOL = ["0.9", "1.0", "1.1", "2.0", "2.0-rc1", "2.1", "3.0", "3.1"]
TOOL_POOL = ["8.12", "8.13", "8.14", "8.15"]


def random_constraint(rng: random.Random, pool: list[str]) -> str:
    roll = rng.random()
    if roll < 0.2:
        return "*"
    op = rng.choice(["=", "!=", ">=", ">", "<=", "<"])
    version = rng.choice(pool)
    if roll < 0.75:
        return f"{op}{version}"
    op2 = rng.choice(["=", "!=", ">=", ">", "<=", "<"])
    version2 = rng.choice(pool)
    if roll < 0.88:
        return f"{op}{version}, {op2}{version2}"
    return f"{op}{version} | {op2}{version2}"


def random_instance(rng: random.Random, cap: int) -> tuple[Repository, SelectionRequest]:
    count = rng.randint(1, 8)
    names = [chr(ord("a") + i) for i in range(count)]
    packages: dict = {}
    space = 1
    for name in names:
        n_versions = rng.randint(1, 4)
        while space * (n_versions + 1) > cap and n_versions > 1:
            n_versions -= 1
        space *= n_versions + 1
        for text in sorted(rng.sample(VERSION_POOL, n_versions)):
            depends, conflicts = [], []
            for other in names:
                if other == name:
                    continue
                roll = rng.random()
                if roll < 0.3:
                    depends.append((other, random_constraint(rng, VERSION_POOL)))
                elif roll < 0.42:
                    conflicts.append((other, random_constraint(rng, VERSION_POOL)))
            dev = rng.random() < 0.15
            manifest = PackageManifest(
                name=name,
                version=parse_version(text),
                toolchain=parse_constraint(random_constraint(rng, TOOL_POOL)),
                depends=tuple((d, parse_constraint(c)) for d, c in depends),
                conflicts=tuple((x, parse_constraint(c)) for x, c in conflicts),
                dev=dev,
                source_ref="ref0" if dev else None,
            )
            packages.setdefault(name, {})[manifest.version] = manifest
    repo = Repository(
        toolchains=tuple(parse_version(t) for t in TOOL_POOL), packages=packages
    )
    toolchain = parse_version(rng.choice(TOOL_POOL))
    mandatory = frozenset(rng.sample(names, rng.randint(0, min(3, count))))
    optional = frozenset(n for n in names if n not in mandatory and rng.random() < 0.7)
    overrides = {}
    if rng.random() < 0.25 and (mandatory | optional):
        name = rng.choice(sorted(mandatory | optional))
        valid = [
            v
            for v, manifest in repo.packages[name].items()
            if satisfies(toolchain, manifest.toolchain)
        ]
        if valid:
            overrides[name] = rng.choice(sorted(valid))
    request = SelectionRequest(
        toolchain=toolchain,
        mandatory=mandatory,
        optional=optional,
        overrides=overrides,
        include_dev=rng.random() < 0.3,
    )
    return repo, request


def percentile(values: list[float], q: float) -> float:
    ordered = sorted(values)
    return ordered[min(len(ordered) - 1, int(q * len(ordered)))]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=300)
    parser.add_argument("--seed", type=int, default=20220100)
    parser.add_argument("--space-cap", type=int, default=30_000)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    resolve_times, oracle_times = [], []
    unsat = mismatches = 0
    for _ in range(args.instances):
        repo, request = random_instance(rng, args.space_cap)
        t0 = time.perf_counter()
        got = resolve_pick(repo, request)
        t1 = time.perf_counter()
        want = enumerate_best(repo, request)
        t2 = time.perf_counter()
        resolve_times.append(t1 - t0)
        oracle_times.append(t2 - t1)
        if got != want:
            mismatches += 1
        if not hasattr(got, "selected"):
            unsat += 1

    def line(label: str, values: list[float]) -> str:
        return (
            f"{label:>10}: mean {statistics.mean(values) * 1e3:7.2f} ms   "
            f"p50 {percentile(values, 0.50) * 1e3:7.2f} ms   "
            f"p95 {percentile(values, 0.95) * 1e3:7.2f} ms   "
            f"max {max(values) * 1e3:7.2f} ms"
        )

    print(f"{args.instances} instances (seed {args.seed}), "
          f"{unsat} unsatisfiable, {mismatches} mismatches")
    print(line("resolve", resolve_times))
    print(line("reference", oracle_times))
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
