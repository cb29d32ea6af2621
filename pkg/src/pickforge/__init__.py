"""pickforge: curated, reproducible package picks per toolchain version."""

from .buildrun import InstallPlan, SmokeReport, emit_install_script, install_plan, run_plan
from .errors import PickforgeError
from .index import (
    PackageManifest,
    Repository,
    compatible_versions,
    load_repository,
    validate_repository,
)
from .policy import (
    CoordinationReport,
    SuccessionReport,
    check_removals,
    check_succession,
    coordinate,
)
from .release import (
    PickDiff,
    Release,
    UpgradeReport,
    assemble_release,
    diff_picks,
    read_lockfile,
    upgrade_path,
    write_lockfile,
)
from .solver import Pick, SelectionRequest, UnsatReport, enumerate_best, resolve_pick, verify_pick
from .versioning import (
    CalendarVersion,
    Constraint,
    Version,
    compare_versions,
    parse_calendar_version,
    parse_constraint,
    parse_version,
    satisfies,
)

__version__ = "0.1.0"

__all__ = [
    "CalendarVersion",
    "Constraint",
    "CoordinationReport",
    "InstallPlan",
    "PackageManifest",
    "Pick",
    "PickDiff",
    "PickforgeError",
    "Release",
    "Repository",
    "SelectionRequest",
    "SmokeReport",
    "SuccessionReport",
    "UnsatReport",
    "UpgradeReport",
    "Version",
    "assemble_release",
    "check_removals",
    "check_succession",
    "compare_versions",
    "compatible_versions",
    "coordinate",
    "diff_picks",
    "emit_install_script",
    "enumerate_best",
    "install_plan",
    "load_repository",
    "parse_calendar_version",
    "parse_constraint",
    "parse_version",
    "read_lockfile",
    "resolve_pick",
    "run_plan",
    "satisfies",
    "upgrade_path",
    "validate_repository",
    "verify_pick",
    "write_lockfile",
]
