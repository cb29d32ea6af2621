"""Resolution of package picks: one version per included package.

A feasible selection maps package names to versions such that every
selected manifest admits the requested toolchain, every dependency is
selected at a satisfying version, no two selected packages are mutually
exclusive, and every selected package is justified: reachable from the
mandatory set or an included optional through dependency edges.  Dev
snapshots are candidates only when the request opts in; overrides pin a
package to one version before search and take precedence over the dev
filter.

Among feasible selections the result is the unique optimum under a
lexicographic objective:

1. every mandatory package is selected, otherwise resolution fails with
   an UnsatReport whose culprit set is a minimal unsatisfiable subset;
2. the number of included optional packages is maximal;
3. ties prefer including lexicographically earlier optional names;
4. remaining ties compare selected versions package by package in
   ascending name order, preferring presence over absence and newer
   versions over older ones.

``resolve_pick`` finds the optimum by staged greedy descent backed by a
complete backtracking search; ``enumerate_best`` recomputes it by
exhaustive enumeration and serves as the reference implementation for
testing.  Both are pure and deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import PickforgeError
from .index import Repository, UnknownPackageError
from .versioning import Constraint, Version, compare_versions, satisfies

# verify_pick violation kinds
SELECTION_OVERLAP = "SelectionOverlap"
UNKNOWN_VERSION = "UnknownVersion"
TOOLCHAIN_VIOLATION = "ToolchainViolation"
DEPENDENCY_MISSING = "DependencyMissing"
DEPENDENCY_VIOLATION = "DependencyViolation"
MUTUAL_EXCLUSION = "MutualExclusion"


class OverrideError(PickforgeError):
    """An override pins a version that cannot be used."""


class EnumerationLimitError(PickforgeError):
    """The assignment space exceeds the caller-supplied enumeration limit."""


@dataclass
class SelectionRequest:
    """What to resolve: a toolchain plus mandatory and optional package sets."""

    toolchain: Version
    mandatory: frozenset[str] = frozenset()
    optional: frozenset[str] = frozenset()
    overrides: dict[str, Version] = field(default_factory=dict)
    include_dev: bool = False

    def __post_init__(self) -> None:
        self.mandatory = frozenset(self.mandatory)
        self.optional = frozenset(self.optional)
        self.overrides = dict(self.overrides)
        overlap = self.mandatory & self.optional
        if overlap:
            raise ValueError(
                f"packages cannot be both mandatory and optional: {', '.join(sorted(overlap))}"
            )
        stray = set(self.overrides) - (self.mandatory | self.optional)
        if stray:
            raise ValueError(
                f"override targets outside the request: {', '.join(sorted(stray))}"
            )


@dataclass
class Pick:
    """A resolved selection for one toolchain, with reasons for exclusions."""

    toolchain: Version
    selected: dict[str, Version] = field(default_factory=dict)
    excluded: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class UnsatReport:
    """Why no pick exists: a minimal conflicting subset of the mandatory set."""

    culprits: tuple[str, ...]
    narrative: tuple[str, ...]


@dataclass(frozen=True)
class PickViolation:
    kind: str
    package: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def verify_pick(repo: Repository, pick: Pick) -> list[PickViolation]:
    """Check every pick invariant directly against the repository.

    Independent of the solver; an empty list means the pick is valid.
    """
    violations = []
    for name in sorted(set(pick.selected) & set(pick.excluded)):
        violations.append(
            PickViolation(SELECTION_OVERLAP, name, f"{name} is both selected and excluded")
        )
    for name in sorted(pick.selected):
        version = pick.selected[name]
        manifest = repo.packages.get(name, {}).get(version)
        if manifest is None:
            violations.append(
                PickViolation(UNKNOWN_VERSION, name, f"{name} {version} is not in the repository")
            )
            continue
        if not satisfies(pick.toolchain, manifest.toolchain):
            violations.append(
                PickViolation(
                    TOOLCHAIN_VIOLATION,
                    name,
                    f"{name} {version} needs toolchain {manifest.toolchain}, "
                    f"pick targets {pick.toolchain}",
                )
            )
        for dep, constraint in manifest.depends:
            if dep not in pick.selected:
                violations.append(
                    PickViolation(
                        DEPENDENCY_MISSING,
                        name,
                        f"{name} {version} requires {dep} {constraint}, which is not selected",
                    )
                )
            elif not satisfies(pick.selected[dep], constraint):
                violations.append(
                    PickViolation(
                        DEPENDENCY_VIOLATION,
                        name,
                        f"{name} {version} requires {dep} {constraint}, "
                        f"but {dep}={pick.selected[dep]} is selected",
                    )
                )
        for other, constraint in manifest.conflicts:
            if other in pick.selected and satisfies(pick.selected[other], constraint):
                violations.append(
                    PickViolation(
                        MUTUAL_EXCLUSION,
                        name,
                        f"{name} {version} conflicts with {other}={pick.selected[other]}",
                    )
                )
    return violations


# --- shared request plumbing --------------------------------------------------


def _validate_request(repo: Repository, req: SelectionRequest) -> None:
    for name in sorted(req.mandatory | req.optional | set(req.overrides)):
        if name not in repo.packages:
            raise UnknownPackageError(name)
    for name in sorted(req.overrides):
        version = req.overrides[name]
        if version not in repo.packages[name]:
            raise OverrideError(f"override {name}={version} names an unknown version")
        manifest = repo.packages[name][version]
        if not satisfies(req.toolchain, manifest.toolchain):
            raise OverrideError(
                f"override {name}={version} violates its toolchain constraint "
                f"({manifest.toolchain}) at {req.toolchain}"
            )


def _candidate_versions(
    repo: Repository,
    toolchain: Version,
    include_dev: bool,
    overrides: dict[str, Version],
    name: str,
) -> tuple[Version, ...]:
    """Selectable versions of a package, newest first.  Overrides pin exactly
    one version and bypass the dev filter."""
    if name in overrides:
        return (overrides[name],)
    return tuple(
        v
        for v in sorted(repo.packages[name], reverse=True)
        if satisfies(toolchain, repo.packages[name][v].toolchain)
        and (include_dev or not repo.packages[name][v].dev)
    )


def _version_ranks(repo: Repository) -> dict[str, dict[Version, int]]:
    return {
        name: {
            version: rank
            for rank, version in enumerate(sorted(repo.packages[name], reverse=True))
        }
        for name in repo.packages
    }


def _solution_key(
    repo: Repository,
    req: SelectionRequest,
    assignment: dict[str, Version],
    ranks: dict[str, dict[Version, int]] | None = None,
):
    """The lexicographic objective; smaller keys are better selections."""
    if ranks is None:
        ranks = _version_ranks(repo)
    optional_sorted = sorted(req.optional)
    count = sum(1 for o in optional_sorted if o in assignment)
    inclusion = tuple(0 if o in assignment else 1 for o in optional_sorted)
    vector = tuple(
        (0, ranks[name][assignment[name]]) if name in assignment else (1,)
        for name in sorted(repo.packages)
    )
    return (-count, inclusion, vector)


def _build_pick(
    repo: Repository, req: SelectionRequest, assignment: dict[str, Version]
) -> Pick:
    selected = {name: assignment[name] for name in sorted(assignment)}
    excluded = {}
    for name in sorted(req.optional):
        if name not in assignment:
            excluded[name] = _exclusion_reason(repo, req, selected, name)
    return Pick(toolchain=req.toolchain, selected=selected, excluded=excluded)


def _exclusion_reason(
    repo: Repository, req: SelectionRequest, selected: dict[str, Version], name: str
) -> str:
    """Deterministic explanation of why an optional package is not selected."""
    candidates = _candidate_versions(repo, req.toolchain, req.include_dev, req.overrides, name)
    if not candidates:
        if any(
            satisfies(req.toolchain, manifest.toolchain)
            for manifest in repo.packages[name].values()
        ):
            return f"only development snapshots support toolchain {req.toolchain}"
        return f"no version supports toolchain {req.toolchain}"
    newest = candidates[0]
    manifest = repo.packages[name][newest]
    for other, constraint in manifest.conflicts:
        if other in selected and satisfies(selected[other], constraint):
            return f"conflict with {other}={selected[other]}"
    for other in sorted(selected):
        other_manifest = repo.packages[other][selected[other]]
        for target, constraint in other_manifest.conflicts:
            if target == name and satisfies(newest, constraint):
                return f"conflict with {other}={selected[other]}"
    for dep, constraint in manifest.depends:
        if dep in selected and not satisfies(selected[dep], constraint):
            return f"requires {dep} {constraint} but {dep}={selected[dep]} is selected"
    for dep, constraint in manifest.depends:
        if dep not in selected and not _candidate_versions(
            repo, req.toolchain, req.include_dev, req.overrides, dep
        ):
            return f"requires {dep}, which has no version for toolchain {req.toolchain}"
    return "cannot be added without breaking the current selection"


def _unsat_report(repo: Repository, req: SelectionRequest, sat) -> UnsatReport:
    """Deletion-minimal unsatisfiable subset of the mandatory set.

    ``sat`` answers whether a given set of names is jointly installable
    under the request's toolchain, overrides, and dev filter.
    """
    core = sorted(req.mandatory)
    for name in sorted(req.mandatory):
        if name not in core:
            continue
        trial = [c for c in core if c != name]
        if not sat(frozenset(trial)):
            core = trial
    culprits = tuple(core)
    if len(culprits) == 1:
        narrative = [
            f"mandatory package {culprits[0]} cannot be installed at toolchain {req.toolchain}"
        ]
    else:
        narrative = [
            f"mandatory packages {', '.join(culprits)} cannot be jointly satisfied "
            f"at toolchain {req.toolchain}"
        ]
        for name in culprits:
            if sat(frozenset([name])):
                narrative.append(f"{name}: installable alone but incompatible with the other culprits")
            else:
                narrative.append(
                    f"{name}: cannot be installed at toolchain {req.toolchain} even alone"
                )
    return UnsatReport(culprits=culprits, narrative=tuple(narrative))


# --- backtracking resolver ----------------------------------------------------


class _SearchSpace:
    """Precomputed candidate domains and adjacency for one request."""

    def __init__(self, repo: Repository, req: SelectionRequest):
        self.repo = repo
        self.domains: dict[str, tuple[Version, ...]] = {}
        self.dep_map: dict[tuple[str, Version], dict[str, Constraint]] = {}
        self.conflict_map: dict[tuple[str, Version], dict[str, Constraint]] = {}
        for name in repo.packages:
            domain = _candidate_versions(
                repo, req.toolchain, req.include_dev, req.overrides, name
            )
            self.domains[name] = domain
            for version in domain:
                manifest = repo.packages[name][version]
                self.dep_map[(name, version)] = dict(manifest.depends)
                self.conflict_map[(name, version)] = dict(manifest.conflicts)
        self._prune_unmeetable()
        # optionals that can never be selected are dropped from branching;
        # they contribute nothing to any selection's optional count
        self.live_optionals = tuple(o for o in sorted(req.optional) if self.domains[o])

    def _prune_unmeetable(self) -> None:
        """Arc consistency over dependency edges: drop versions with a
        dependency no remaining version of the target can satisfy.  Pruned
        versions cannot appear in any feasible selection, so this only
        shrinks the search, never its solution set."""
        changed = True
        while changed:
            changed = False
            for name in sorted(self.domains):
                kept = tuple(
                    version
                    for version in self.domains[name]
                    if all(
                        any(satisfies(w, constraint) for w in self.domains[dep])
                        for dep, constraint in self.dep_map[(name, version)].items()
                    )
                )
                if len(kept) != len(self.domains[name]):
                    self.domains[name] = kept
                    changed = True


def _search(
    space: _SearchSpace,
    roots: frozenset[str],
    pins: dict[str, Version],
    absent: frozenset[str],
    forced_present: frozenset[str],
    optionals: tuple[str, ...],
    min_count: int,
) -> dict[str, Version] | None:
    """Find any feasible selection honouring the given commitments, or None.

    roots must be selected and justify themselves; names in ``absent`` must
    not appear; names in ``pins`` may only take the pinned version; names in
    ``forced_present`` must end up selected (pulled in as dependencies);
    undecided ``optionals`` are branched over, and the selection must include
    at least ``min_count`` optionals overall.  The search is exhaustive, so
    a None result proves infeasibility.
    """
    def domain(name: str) -> tuple[Version, ...]:
        pin = pins.get(name)
        if pin is not None:
            return (pin,)
        return space.domains[name]

    if any(name in absent or not domain(name) for name in roots):
        return None
    assigned: dict[str, Version] = {}
    excluded = set(absent)
    pending = set(roots)
    optional_set = frozenset(optionals)
    count = 0

    def consistent(name: str, version: Version) -> bool:
        for dep, constraint in space.dep_map[(name, version)].items():
            if dep in excluded or not domain(dep):
                return False
            dep_version = assigned.get(dep)
            if dep_version is not None and not satisfies(dep_version, constraint):
                return False
        for other, constraint in space.conflict_map[(name, version)].items():
            other_version = assigned.get(other)
            if other_version is not None and satisfies(other_version, constraint):
                return False
        for other, other_version in assigned.items():
            constraint = space.dep_map[(other, other_version)].get(name)
            if constraint is not None and not satisfies(version, constraint):
                return False
            constraint = space.conflict_map[(other, other_version)].get(name)
            if constraint is not None and satisfies(version, constraint):
                return False
        return True

    def recurse() -> bool:
        nonlocal count
        if pending:
            name = min(pending)
            pending.discard(name)
            for version in domain(name):
                if not consistent(name, version):
                    continue
                assigned[name] = version
                if name in optional_set:
                    count += 1
                pulled = []
                for dep in space.dep_map[(name, version)]:
                    if dep not in assigned and dep not in pending:
                        pulled.append(dep)
                        pending.add(dep)
                if recurse():
                    return True
                for dep in pulled:
                    pending.discard(dep)
                del assigned[name]
                if name in optional_set:
                    count -= 1
            pending.add(name)
            return False
        undecided = [o for o in optionals if o not in assigned and o not in excluded]
        if count + len(undecided) < min_count:
            return False
        if not undecided:
            if count < min_count:
                return False
            return all(name in assigned for name in forced_present)
        choice = undecided[0]
        pending.add(choice)
        if recurse():
            return True
        pending.discard(choice)
        excluded.add(choice)
        if recurse():
            return True
        excluded.discard(choice)
        return False

    if recurse():
        return dict(assigned)
    return None


def _reachable_universe(space: _SearchSpace, roots: frozenset[str]) -> set[str]:
    """Every name a selection rooted at ``roots`` could possibly contain."""
    seen = set(roots)
    stack = list(roots)
    while stack:
        name = stack.pop()
        for version in space.domains[name]:
            for dep in space.dep_map[(name, version)]:
                if dep not in seen:
                    seen.add(dep)
                    stack.append(dep)
    return seen


def resolve_pick(repo: Repository, req: SelectionRequest) -> Pick | UnsatReport:
    """Resolve the optimal pick for a request, or explain why none exists.

    Precondition: validate_repository(repo) is empty.
    """
    _validate_request(repo, req)
    space = _SearchSpace(repo, req)
    mandatory = frozenset(req.mandatory)
    no_commitments: dict[str, Version] = {}

    def sat(subset: frozenset[str]) -> bool:
        return (
            _search(space, subset, no_commitments, frozenset(), frozenset(), (), 0)
            is not None
        )

    witness = _search(space, mandatory, no_commitments, frozenset(), frozenset(), (), 0)
    if witness is None:
        return _unsat_report(repo, req, sat)

    optionals = space.live_optionals
    base_count = sum(1 for o in optionals if o in witness)
    best_count = base_count
    for target in range(len(optionals), base_count, -1):
        found = _search(
            space, mandatory, no_commitments, frozenset(), frozenset(), optionals, target
        )
        if found is not None:
            witness, best_count = found, target
            break

    # fix the optional inclusion set, preferring earlier names
    committed_in: list[str] = []
    committed_out: set[str] = set()
    for name in sorted(req.optional):
        if not space.domains[name]:
            committed_out.add(name)
            continue
        if name in witness:
            committed_in.append(name)
            continue
        found = _search(
            space,
            mandatory | frozenset(committed_in) | {name},
            no_commitments,
            frozenset(committed_out),
            frozenset(),
            optionals,
            best_count,
        )
        if found is not None:
            witness = found
            committed_in.append(name)
        else:
            committed_out.add(name)

    # fix versions name by name, preferring presence, then newest
    roots = mandatory | frozenset(committed_in)
    pins: dict[str, Version] = {}
    forced_present: set[str] = set()
    implicit_absent: set[str] = set(committed_out)
    for name in sorted(_reachable_universe(space, roots)):
        if name in committed_out:
            continue
        is_root = name in roots
        chosen = False
        for version in space.domains[name]:
            if witness.get(name) == version:
                pins[name] = version
                if not is_root:
                    forced_present.add(name)
                chosen = True
                break
            found = _search(
                space,
                roots,
                {**pins, name: version},
                frozenset(implicit_absent),
                frozenset(forced_present) | (frozenset() if is_root else {name}),
                optionals,
                best_count,
            )
            if found is not None:
                witness = found
                pins[name] = version
                if not is_root:
                    forced_present.add(name)
                chosen = True
                break
        if not chosen:
            if is_root or name in witness:
                raise AssertionError(f"no feasible value found for {name}")
            implicit_absent.add(name)

    return _build_pick(repo, req, pins)


# --- exhaustive reference implementation ---------------------------------------


def enumerate_best(
    repo: Repository, req: SelectionRequest, limit: int = 1_000_000
) -> Pick | UnsatReport:
    """Exhaustively enumerate every assignment and apply the same objective.

    Deliberately brute force: the reference against which resolve_pick is
    tested.  Refuses (never approximates) when the assignment space exceeds
    ``limit``.
    """
    _validate_request(repo, req)
    space_size = 1
    for name in repo.packages:
        space_size *= len(repo.packages[name]) + 1
        if space_size > limit:
            raise EnumerationLimitError(
                f"assignment space exceeds limit of {limit} assignments"
            )
    names = sorted(repo.packages)
    choices = [[None] + sorted(repo.packages[name], reverse=True) for name in names]
    ranks = _version_ranks(repo)
    best: dict[str, Version] | None = None
    best_key = None
    for combo in itertools.product(*choices):
        assignment = {
            name: version for name, version in zip(names, combo) if version is not None
        }
        if not _enum_feasible(
            repo,
            req.toolchain,
            req.mandatory,
            req.optional,
            req.overrides,
            req.include_dev,
            assignment,
        ):
            continue
        key = _solution_key(repo, req, assignment, ranks)
        if best_key is None or key < best_key:
            best, best_key = assignment, key
    if best is None:

        def sat(subset: frozenset[str]) -> bool:
            return any(
                _enum_feasible(
                    repo,
                    req.toolchain,
                    subset,
                    frozenset(),
                    req.overrides,
                    req.include_dev,
                    {
                        name: version
                        for name, version in zip(names, combo)
                        if version is not None
                    },
                )
                for combo in itertools.product(*choices)
            )

        return _unsat_report(repo, req, sat)
    return _build_pick(repo, req, best)


def _enum_feasible(
    repo: Repository,
    toolchain: Version,
    mandatory: frozenset[str],
    optional: frozenset[str],
    overrides: dict[str, Version],
    include_dev: bool,
    assignment: dict[str, Version],
) -> bool:
    for name in mandatory:
        if name not in assignment:
            return False
    for name, version in assignment.items():
        manifest = repo.packages[name][version]
        if not satisfies(toolchain, manifest.toolchain):
            return False
        if name in overrides:
            if compare_versions(version, overrides[name]) != 0:
                return False
        elif manifest.dev and not include_dev:
            return False
        for dep, constraint in manifest.depends:
            if dep not in assignment or not satisfies(assignment[dep], constraint):
                return False
        for other, constraint in manifest.conflicts:
            if other in assignment and satisfies(assignment[other], constraint):
                return False
    reachable = {name for name in assignment if name in mandatory or name in optional}
    stack = list(reachable)
    while stack:
        name = stack.pop()
        for dep, _ in repo.packages[name][assignment[name]].depends:
            if dep not in reachable:
                reachable.add(dep)
                stack.append(dep)
    return len(reachable) == len(assignment)
