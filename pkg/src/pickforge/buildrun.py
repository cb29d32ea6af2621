"""Install plans, the smoke-test runner, and standalone install scripts.

A plan orders a pick's packages so that dependencies build first; ties
among ready packages break by name.  Running a plan executes each step's
build command and then its smoke command inside a sandbox directory with
PKG_NAME, PKG_VERSION, and TOOLCHAIN set.  A build failure skips every
transitive dependent; a smoke failure does not, since the package itself
installed and dependents can still build against it.  Report contents
are independent of the parallelism level for deterministic commands.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
import threading
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path

from .errors import PickforgeError
from .index import Repository
from .solver import Pick, verify_pick
from .versioning import Version

BUILD_FAILED = "BuildFailed"
SMOKE_FAILED = "SmokeFailed"
PASSED = "Passed"
SKIPPED = "Skipped"

SPAWN_FAILURE_EXIT = -1


class CycleError(PickforgeError):
    """The selected packages depend on each other in a cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__(f"dependency cycle: {' -> '.join(cycle + cycle[:1])}")


class SandboxError(PickforgeError):
    """The sandbox directory is unusable."""


@dataclass(frozen=True)
class InstallStep:
    name: str
    version: Version
    build_cmd: str
    smoke_cmd: str


@dataclass
class InstallPlan:
    """Topologically ordered build steps plus the dependency edges among them."""

    toolchain: Version
    steps: list[InstallStep]
    dependencies: dict[str, tuple[str, ...]]
    plan_digest: str = ""

    def __post_init__(self) -> None:
        if not self.plan_digest:
            self.plan_digest = _digest(self)


def _digest(plan: InstallPlan) -> str:
    canonical = json.dumps(
        {
            "toolchain": str(plan.toolchain),
            "steps": [
                [step.name, str(step.version), step.build_cmd, step.smoke_cmd]
                for step in plan.steps
            ],
            "dependencies": {
                name: list(deps) for name, deps in sorted(plan.dependencies.items())
            },
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def install_plan(repo: Repository, pick: Pick) -> InstallPlan:
    """Order the pick's packages dependencies-first.

    Precondition: verify_pick(repo, pick) is empty.
    """
    violations = verify_pick(repo, pick)
    if violations:
        raise PickforgeError(f"pick is not valid against the repository: {violations[0]}")
    selected = dict(pick.selected)
    edges = {
        name: tuple(
            sorted(
                dep
                for dep, _ in repo.packages[name][selected[name]].depends
                if dep in selected
            )
        )
        for name in selected
    }
    order = []
    placed: set[str] = set()
    remaining = set(selected)
    while remaining:
        ready = sorted(
            name for name in remaining if all(dep in placed for dep in edges[name])
        )
        if not ready:
            raise CycleError(_find_cycle(edges, remaining))
        for name in ready:
            order.append(name)
            placed.add(name)
            remaining.discard(name)
    steps = [
        InstallStep(
            name=name,
            version=selected[name],
            build_cmd=repo.packages[name][selected[name]].build_cmd,
            smoke_cmd=repo.packages[name][selected[name]].smoke_cmd,
        )
        for name in order
    ]
    return InstallPlan(toolchain=pick.toolchain, steps=steps, dependencies=edges)


def _find_cycle(edges: dict[str, tuple[str, ...]], remaining: set[str]) -> list[str]:
    """Walk unplaced dependency edges from the smallest name until a repeat."""
    start = min(remaining)
    path = [start]
    seen = {start: 0}
    current = start
    while True:
        current = min(dep for dep in edges[current] if dep in remaining)
        if current in seen:
            cycle = path[seen[current]:]
            pivot = cycle.index(min(cycle))
            return cycle[pivot:] + cycle[:pivot]
        seen[current] = len(path)
        path.append(current)


@dataclass(frozen=True)
class StepResult:
    name: str
    version: Version
    status: str
    build_exit: int | None
    smoke_exit: int | None
    log_path: str


@dataclass
class SmokeReport:
    """Per-step outcomes of one plan run; passes only when every step passed."""

    toolchain: Version
    results: list[StepResult]

    @property
    def passed(self) -> bool:
        return all(result.status == PASSED for result in self.results)

    def to_json_dict(self) -> dict:
        return {
            "toolchain": str(self.toolchain),
            "passed": self.passed,
            "steps": [
                {
                    "name": result.name,
                    "version": str(result.version),
                    "status": result.status,
                    "build_exit": result.build_exit,
                    "smoke_exit": result.smoke_exit,
                    "log": result.log_path,
                }
                for result in self.results
            ],
        }

    def to_text(self) -> str:
        lines = [f"smoke run for toolchain {self.toolchain}"]
        for result in self.results:
            lines.append(f"  [{result.status:>11}] {result.name} {result.version}")
        lines.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


def run_plan(plan: InstallPlan, sandbox: str | Path, max_parallel: int = 1) -> SmokeReport:
    """Execute the plan's commands in the sandbox, up to max_parallel at once.

    Steps become runnable once every dependency has built; dependents of a
    failed build are skipped.  Command output is captured under
    ``<sandbox>/logs`` (log contents are not part of the determinism
    contract, report statuses and exit codes are).
    """
    if max_parallel < 1:
        raise SandboxError("max_parallel must be at least 1")
    sandbox = Path(sandbox)
    try:
        sandbox.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SandboxError(f"cannot create sandbox {sandbox}: {exc}") from exc
    if any(sandbox.iterdir()):
        raise SandboxError(f"sandbox {sandbox} is not empty")
    if not os.access(sandbox, os.W_OK):
        raise SandboxError(f"sandbox {sandbox} is not writable")
    logs = sandbox / "logs"
    logs.mkdir()

    steps = {step.name: step for step in plan.steps}
    outcomes: dict[str, StepResult] = {}
    lock = threading.Lock()

    def runnable(name: str) -> bool:
        return all(
            dep in outcomes and outcomes[dep].status in (PASSED, SMOKE_FAILED)
            for dep in plan.dependencies[name]
        )

    def doomed(name: str) -> bool:
        return any(
            dep in outcomes and outcomes[dep].status in (BUILD_FAILED, SKIPPED)
            for dep in plan.dependencies[name]
        )

    def execute(step: InstallStep) -> StepResult:
        log_path = logs / f"{step.name}-{step.version}.log"
        env = dict(os.environ)
        env.update(
            PKG_NAME=step.name,
            PKG_VERSION=str(step.version),
            TOOLCHAIN=str(plan.toolchain),
        )
        build_exit = _run_command(step.build_cmd, sandbox, env, log_path, "build")
        if build_exit != 0:
            return StepResult(
                step.name, step.version, BUILD_FAILED, build_exit, None,
                f"logs/{log_path.name}",
            )
        smoke_exit = _run_command(step.smoke_cmd, sandbox, env, log_path, "smoke")
        status = PASSED if smoke_exit == 0 else SMOKE_FAILED
        return StepResult(
            step.name, step.version, status, build_exit, smoke_exit,
            f"logs/{log_path.name}",
        )

    pending = {step.name for step in plan.steps}
    with ThreadPoolExecutor(max_workers=max_parallel) as pool:
        futures = {}
        while pending or futures:
            progressed = False
            with lock:
                for name in sorted(pending):
                    if doomed(name):
                        pending.discard(name)
                        outcomes[name] = StepResult(
                            name, steps[name].version, SKIPPED, None, None,
                            f"logs/{name}-{steps[name].version}.log",
                        )
                        progressed = True
                    elif name not in futures and runnable(name):
                        futures[name] = pool.submit(execute, steps[name])
                        progressed = True
            if not futures:
                if not progressed:  # only possible for a malformed, cyclic plan
                    raise PickforgeError(
                        f"plan steps deadlocked: {', '.join(sorted(pending))}"
                    )
                continue
            done, _ = wait(set(futures.values()), return_when=FIRST_COMPLETED)
            with lock:
                for name in [n for n, f in futures.items() if f in done]:
                    outcomes[name] = futures.pop(name).result()
                    pending.discard(name)

    results = [outcomes[step.name] for step in plan.steps]
    return SmokeReport(toolchain=plan.toolchain, results=results)


def _run_command(command: str, cwd: Path, env: dict, log_path: Path, phase: str) -> int:
    with open(log_path, "a", encoding="utf-8") as log:
        log.write(f"$ [{phase}] {command}\n")
        log.flush()
        try:
            proc = subprocess.run(
                command, shell=True, cwd=cwd, env=env,
                stdout=log, stderr=subprocess.STDOUT,
            )
        except OSError as exc:
            log.write(f"[{phase}] spawn failure: {exc}\n")
            return SPAWN_FAILURE_EXIT
        return proc.returncode


def emit_install_script(plan: InstallPlan) -> str:
    """A POSIX shell script running the plan's steps in order, stopping on failure."""
    total = len(plan.steps)
    lines = [
        "#!/bin/sh",
        f"# install script for toolchain {plan.toolchain} ({total} steps)",
        f"# plan digest: {plan.plan_digest}",
        "set -eu",
        "",
    ]
    toolchain_q = shlex.quote(str(plan.toolchain))
    for i, step in enumerate(plan.steps, start=1):
        banner = shlex.quote(f"=== [{i}/{total}] {step.name} {step.version} ===")
        prefix = (
            f"PKG_NAME={shlex.quote(step.name)} "
            f"PKG_VERSION={shlex.quote(str(step.version))} "
            f"TOOLCHAIN={toolchain_q}"
        )
        lines.append(f"printf '%s\\n' {banner}")
        lines.append(f"{prefix} sh -c {shlex.quote(step.build_cmd)}")
        lines.append(f"{prefix} sh -c {shlex.quote(step.smoke_cmd)}")
        lines.append("")
    return "\n".join(lines)
