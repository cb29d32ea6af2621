#!/usr/bin/env python3
"""Regenerate the bundled fixture indexes under fixtures/.

Deterministic: a fixed seed drives every random choice and all output is
canonical JSON, so reruns reproduce the checked-in files byte for byte.

The platform fixture has four toolchains and fifty packages, including
deliberately planted cases the test suite asserts on:

* strictweld, tautline, thornlatch: every released version targets exactly
  one toolchain, so no version bridges two consecutive toolchains
  (succession-policy violators);
* nightjar, quillfeather: newest release stops before 8.15 but a dev
  snapshot supports it (coordination status DevCompatible);
* oldstone, reedmace: nothing supports 8.15 at all (NoneKnown);
* veilstone declares a conflict with vervain that no shipped vervain
  version matches, so it never fires.

The smoke fixture is a small dependency diamond whose `brokenbuild`
package fails its build with exit code 7.
"""

from __future__ import annotations

import json
import random
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
SEED = 20220100

TOOLCHAINS = ["8.12", "8.13", "8.14", "8.15"]

NAMES = [
    "aldergrove", "basaltine", "briskmarsh", "cindervale", "copperline",
    "dovetail-core", "driftware", "elmsworth", "emberwick", "fernhollow",
    "flintlock-io", "galeharbor", "gristmill", "harrowgate", "hazelcroft",
    "ironvein", "juniperline", "kestrelwing", "kilnstone", "larchfield",
    "limewash", "maplewright", "mistgrove", "nettlebrook", "nightjar",
    "oakmantle", "oldstone", "pinemarten", "quartzline", "quillfeather",
    "ravenmoor", "reedmace", "saltmarsh", "silverbirch", "slateford",
    "strictweld", "tautline", "thornlatch", "tidewrack", "umberfield",
    "veilstone", "vervain", "wickliff", "willowbark", "wintermoss",
    "woolgather", "wrenfall", "yarrowdale", "yewbranch", "zephyrline",
]

SUCCESSION_VIOLATORS = ["strictweld", "tautline", "thornlatch"]
DEV_ONLY_AT_RC = {"nightjar": "4f2c9aa", "quillfeather": "b81d0ce"}
NONE_AT_RC = ["oldstone", "reedmace"]
DEPRECATED = ["gristmill", "woolgather"]

MAINTAINERS = [
    "asha@fernworks.dev", "beryl@tidelab.io", "cato@stonebridge.org",
    "dara@quillforge.net", "edris@mosslight.dev", "freya@larkspur.io",
    "gil@emberline.org", "hana@willowpath.net",
]

VERSION_LADDERS = [
    ["1.0"], ["1.0", "1.1"], ["1.0", "2.0"], ["0.9", "1.0", "1.1"],
    ["1.0", "1.1", "2.0"], ["1.2"], ["2.0", "2.1"], ["0.5", "1.0"],
]


def manifest(name, version, toolchain, depends=(), conflicts=(), dev=False,
             source_ref=None, deprecated=False, maintainer=""):
    return {
        "name": name,
        "version": version,
        "toolchain": toolchain,
        "depends": [list(d) for d in depends],
        "conflicts": [list(c) for c in conflicts],
        "dev": dev,
        "source_ref": source_ref,
        "deprecated": deprecated,
        "maintainer": maintainer,
        "build_cmd": "true",
        "smoke_cmd": "true",
    }


def platform_fixture() -> dict[str, list[dict]]:
    """Map package name -> list of version manifests."""
    rng = random.Random(SEED)
    maintainer_of = {name: rng.choice(MAINTAINERS) for name in NAMES}
    intro_of: dict[str, str] = {}
    packages: dict[str, list[dict]] = {}

    special = set(SUCCESSION_VIOLATORS) | set(DEV_ONLY_AT_RC) | set(NONE_AT_RC)
    special |= {"veilstone", "vervain"}

    for name in NAMES:
        if name in special:
            continue
        intro = rng.choices(TOOLCHAINS[:3], weights=[6, 2, 2])[0]
        base = "*" if rng.random() < 0.08 else f">={intro}"
        if base == "*":
            intro = TOOLCHAINS[0]
        intro_of[name] = intro
        ladder = rng.choice(VERSION_LADDERS)
        manifests = []
        for i, version in enumerate(ladder):
            toolchain = base
            # newest version sometimes raises the toolchain floor
            if i == len(ladder) - 1 and len(ladder) > 1 and rng.random() < 0.35:
                floor_idx = TOOLCHAINS.index(intro)
                if floor_idx < len(TOOLCHAINS) - 1:
                    toolchain = f">={TOOLCHAINS[floor_idx + 1]}"
            manifests.append(
                manifest(name, version, toolchain,
                         deprecated=name in DEPRECATED,
                         maintainer=maintainer_of[name])
            )
        packages[name] = manifests

    # dependency edges point at alphabetically earlier, at-least-as-available targets
    regular = sorted(packages)
    for i, name in enumerate(regular):
        candidates = [
            t for t in regular[:i]
            if TOOLCHAINS.index(intro_of[t]) <= TOOLCHAINS.index(intro_of[name])
        ]
        rng.shuffle(candidates)
        for target in candidates[: rng.choice([0, 0, 1, 1, 2, 3])]:
            lowest = packages[target][0]["version"]
            constraint = "*" if rng.random() < 0.3 else f">={lowest}"
            for mf in packages[name]:
                mf["depends"].append([target, constraint])
        for mf in packages[name]:
            mf["depends"].sort()

    ladder_by_toolchain = {"strictweld": ["0.9", "1.4", "2.0", "3.1"],
                           "tautline": ["1.0", "1.1", "1.2", "1.3"],
                           "thornlatch": ["2.0", "2.1", "3.0", "3.2"]}
    for name in SUCCESSION_VIOLATORS:
        packages[name] = [
            manifest(name, version, f"={toolchain}", maintainer=maintainer_of[name])
            for toolchain, version in zip(TOOLCHAINS, ladder_by_toolchain[name])
        ]

    for name, ref in DEV_ONLY_AT_RC.items():
        packages[name] = [
            manifest(name, "1.0", ">=8.12, <8.15", maintainer=maintainer_of[name]),
            manifest(name, "2.0", ">=8.13, <8.15", maintainer=maintainer_of[name]),
            manifest(name, "2.1-dev", ">=8.13", dev=True, source_ref=ref,
                     maintainer=maintainer_of[name]),
        ]
    for name in NONE_AT_RC:
        packages[name] = [
            manifest(name, "1.0", ">=8.12, <8.15", maintainer=maintainer_of[name]),
            manifest(name, "1.2", ">=8.12, <8.15", maintainer=maintainer_of[name]),
        ]

    packages["veilstone"] = [
        manifest("veilstone", "2.0", ">=8.12", conflicts=[("vervain", "<2.0")],
                 maintainer=maintainer_of["veilstone"]),
    ]
    packages["vervain"] = [
        manifest("vervain", "2.0", ">=8.12", maintainer=maintainer_of["vervain"]),
        manifest("vervain", "2.2", ">=8.12", maintainer=maintainer_of["vervain"]),
    ]
    return packages


def smoke_fixture() -> dict[str, list[dict]]:
    def step(name, build, smoke, depends=()):
        mf = manifest(name, "1.0", "*", depends=depends, maintainer="rig@sandbox.test")
        mf["build_cmd"] = build
        mf["smoke_cmd"] = smoke
        return [mf]

    build_ok = 'echo "building $PKG_NAME $PKG_VERSION for $TOOLCHAIN"'
    smoke_ok = 'echo "smoke $PKG_NAME ok"'
    return {
        "anchor": step("anchor", build_ok, smoke_ok),
        "brokenbuild": step("brokenbuild", "echo boom; exit 7", smoke_ok),
        "cargohold": step("cargohold", build_ok, smoke_ok, [("brokenbuild", "*")]),
        "derrick": step("derrick", build_ok, smoke_ok, [("cargohold", "*")]),
        "earthworks": step("earthworks", build_ok, smoke_ok, [("anchor", "*")]),
        "gantry": step("gantry", build_ok, smoke_ok,
                       [("anchor", "*"), ("earthworks", "*")]),
    }


def write_index(out: Path, toolchains: list[str], packages: dict[str, list[dict]]) -> None:
    if out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True)
    _dump(out / "index.json", {"toolchains": toolchains, "packages": sorted(packages)})
    for name in sorted(packages):
        pkg_dir = out / "packages" / name
        pkg_dir.mkdir(parents=True)
        versions = [mf["version"] for mf in packages[name]]
        _dump(pkg_dir / "versions.json", versions)
        for mf in packages[name]:
            _dump(pkg_dir / f"{mf['version']}.json", mf)


def _dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def main() -> None:
    write_index(ROOT / "fixtures" / "platform", TOOLCHAINS, platform_fixture())
    write_index(ROOT / "fixtures" / "smoke", ["1.0"], smoke_fixture())
    print(f"fixtures written under {ROOT / 'fixtures'}")


if __name__ == "__main__":
    main()
