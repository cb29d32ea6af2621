from __future__ import annotations

import json

import pytest
from hypothesis import given

from conftest import make_repo, mf
from pickforge.release import (
    MONOTONICITY_WARNING,
    LockfileError,
    Release,
    ReleaseError,
    assemble_release,
    diff_picks,
    read_lockfile,
    upgrade_path,
    write_lockfile,
)
from pickforge.solver import Pick
from pickforge.versioning import parse_calendar_version, parse_version

from strategies import picks as pick_strategy
from strategies import releases as release_strategy

V = parse_version
CV = parse_calendar_version


def pick(toolchain: str, **selected: str) -> Pick:
    return Pick(
        toolchain=V(toolchain),
        selected={name: V(text) for name, text in selected.items()},
    )


class TestAssembleRelease:
    def test_four_picks(self):
        release, warnings = assemble_release(
            CV("2022.01.0"),
            [pick(t, core="1.0") for t in ("8.12", "8.13", "8.14", "8.15")],
        )
        assert [str(t) for t in release.toolchains()] == ["8.12", "8.13", "8.14", "8.15"]
        assert warnings == []
        assert release.predecessor is None

    def test_sorts_picks_by_toolchain(self):
        release, _ = assemble_release(CV("2022.01.0"), [pick("8.15"), pick("8.12")])
        assert [str(t) for t in release.toolchains()] == ["8.12", "8.15"]

    def test_duplicate_toolchain_rejected(self):
        with pytest.raises(ReleaseError, match="duplicate"):
            assemble_release(CV("2022.01.0"), [pick("8.15"), pick("8.15")])

    def test_version_must_advance(self):
        previous, _ = assemble_release(CV("2022.01.0"), [pick("8.15")])
        with pytest.raises(ReleaseError, match="greater"):
            assemble_release(CV("2022.01.0"), [pick("8.15")], previous=previous)

    def test_empty_rejected(self):
        with pytest.raises(ReleaseError):
            assemble_release(CV("2022.01.0"), [])

    def test_dropping_package_warns(self):
        previous, _ = assemble_release(
            CV("2022.01.0"), [pick("8.14", core="1.0", extra="1.0")]
        )
        _, warnings = assemble_release(
            CV("2022.06.0"), [pick("8.15", core="1.0")], previous=previous
        )
        assert [w.kind for w in warnings] == [MONOTONICITY_WARNING]
        assert warnings[0].package == "extra"

    def test_deprecated_drop_is_silent(self):
        repo = make_repo(
            ["8.14", "8.15"], [mf("core", "1.0"), mf("extra", "1.0", deprecated=True)]
        )
        previous, _ = assemble_release(
            CV("2022.01.0"), [pick("8.14", core="1.0", extra="1.0")]
        )
        _, warnings = assemble_release(
            CV("2022.06.0"), [pick("8.15", core="1.0")], previous=previous, repo=repo
        )
        assert warnings == []

    def test_package_present_in_any_pick_does_not_warn(self):
        previous, _ = assemble_release(
            CV("2022.01.0"), [pick("8.14", core="1.0", extra="1.0")]
        )
        _, warnings = assemble_release(
            CV("2022.06.0"),
            [pick("8.14", core="1.0"), pick("8.15", extra="1.1")],
            previous=previous,
        )
        assert warnings == []


class TestDiffPicks:
    def test_identity(self):
        p = pick("8.15", a="1.0", b="2.0")
        diff = diff_picks(p, p)
        assert diff.unchanged == {"a", "b"}
        assert not diff.added and not diff.removed
        assert not diff.upgraded and not diff.downgraded

    def test_add_and_upgrade(self):
        diff = diff_picks(pick("8.14", r="1.0"), pick("8.15", r="1.1", q="1.0"))
        assert diff.added == {"q"}
        assert diff.upgraded == {"r": (V("1.0"), V("1.1"))}

    def test_drop(self):
        diff = diff_picks(pick("8.14", s="1.0"), pick("8.15"))
        assert diff.removed == {"s"}

    def test_downgrade(self):
        diff = diff_picks(pick("8.14", s="2.0"), pick("8.15", s="1.0"))
        assert diff.downgraded == {"s": (V("2.0"), V("1.0"))}

    @given(pick_strategy(), pick_strategy())
    def test_partition_and_antisymmetry(self, a, b):
        diff = diff_picks(a, b)
        universe = set(a.selected) | set(b.selected)
        parts = [
            diff.added,
            diff.removed,
            set(diff.upgraded),
            set(diff.downgraded),
            diff.unchanged,
        ]
        assert set().union(*parts) == universe
        assert sum(len(p) for p in parts) == len(universe)
        for name, (old, new) in diff.upgraded.items():
            assert old < new
        for name, (old, new) in diff.downgraded.items():
            assert old > new
        back = diff_picks(b, a)
        assert diff.added == back.removed
        assert diff.removed == back.added
        assert set(diff.upgraded) == set(back.downgraded)
        assert diff.unchanged == back.unchanged


class TestUpgradePath:
    def release(self):
        release, _ = assemble_release(
            CV("2022.01.0"),
            [
                pick("8.12", core="1.0"),
                pick("8.13", core="1.0", lib="1.0"),
                pick("8.14", core="1.1", lib="1.0"),
                pick("8.15", core="1.1", lib="1.0", tool="0.9"),
            ],
        )
        return release

    def test_steps_cover_consecutive_toolchains(self):
        report = upgrade_path(self.release(), V("8.13"), V("8.15"))
        hops = [(str(s.from_toolchain), str(s.to_toolchain)) for s in report.steps]
        assert hops == [("8.13", "8.14"), ("8.14", "8.15")]
        assert report.monotone

    def test_same_endpoints_rejected(self):
        with pytest.raises(ReleaseError, match="increasing"):
            upgrade_path(self.release(), V("8.14"), V("8.14"))

    def test_reversed_endpoints_rejected(self):
        with pytest.raises(ReleaseError, match="increasing"):
            upgrade_path(self.release(), V("8.15"), V("8.13"))

    def test_missing_endpoint(self):
        with pytest.raises(ReleaseError, match="cover"):
            upgrade_path(self.release(), V("8.13"), V("9.0"))

    def test_removal_breaks_monotonicity(self):
        release, _ = assemble_release(
            CV("2022.01.0"),
            [pick("8.14", core="1.0", lib="1.0"), pick("8.15", core="1.0")],
        )
        report = upgrade_path(release, V("8.14"), V("8.15"))
        assert not report.monotone
        assert report.steps[0].diff.removed == {"lib"}

    def test_steps_compose(self):
        release = self.release()
        report = upgrade_path(release, V("8.12"), V("8.15"))
        state = dict(release.pick_for(V("8.12")).selected)
        for step in report.steps:
            for name in step.diff.removed:
                del state[name]
            for name in step.diff.added:
                state[name] = release.pick_for(step.to_toolchain).selected[name]
            for name, (_, new) in step.diff.upgraded.items():
                state[name] = new
            for name, (_, new) in step.diff.downgraded.items():
                state[name] = new
        assert state == release.pick_for(V("8.15")).selected


class TestLockfile:
    def release(self):
        release, _ = assemble_release(
            CV("2022.01.0"),
            [
                pick("8.14", core="1.0"),
                Pick(
                    toolchain=V("8.15"),
                    selected={"core": V("1.1")},
                    excluded={"legacy": "no version supports toolchain 8.15"},
                ),
            ],
        )
        return release

    def test_write_is_deterministic(self):
        release = self.release()
        assert write_lockfile(release) == write_lockfile(release)

    def test_round_trip(self):
        release = self.release()
        assert read_lockfile(write_lockfile(release)) == release

    def test_write_read_write_idempotent(self):
        data = write_lockfile(self.release())
        assert write_lockfile(read_lockfile(data)) == data

    def test_newline_terminated_sorted_keys(self):
        data = write_lockfile(self.release())
        assert data.endswith(b"\n")
        payload = json.loads(data)
        assert list(payload) == sorted(payload)
        assert list(payload["picks"][0]) == sorted(payload["picks"][0])

    def test_unknown_field_rejected(self):
        payload = json.loads(write_lockfile(self.release()))
        payload["surprise"] = 1
        with pytest.raises(LockfileError, match="surprise"):
            read_lockfile(json.dumps(payload).encode())

    def test_missing_field_rejected(self):
        payload = json.loads(write_lockfile(self.release()))
        del payload["predecessor"]
        with pytest.raises(LockfileError, match="predecessor"):
            read_lockfile(json.dumps(payload).encode())

    def test_unknown_pick_field_names_path(self):
        payload = json.loads(write_lockfile(self.release()))
        payload["picks"][1]["note"] = "hi"
        with pytest.raises(LockfileError, match=r"picks\[1\].*note"):
            read_lockfile(json.dumps(payload).encode())

    def test_bad_version_text(self):
        payload = json.loads(write_lockfile(self.release()))
        payload["picks"][0]["selected"]["core"] = "not-a-version"
        with pytest.raises(LockfileError, match="core"):
            read_lockfile(json.dumps(payload).encode())

    def test_overlapping_selected_excluded(self):
        payload = json.loads(write_lockfile(self.release()))
        payload["picks"][0]["excluded"]["core"] = "also excluded"
        with pytest.raises(LockfileError, match="core"):
            read_lockfile(json.dumps(payload).encode())

    def test_duplicate_toolchains_rejected(self):
        payload = json.loads(write_lockfile(self.release()))
        payload["picks"][1]["toolchain"] = payload["picks"][0]["toolchain"]
        with pytest.raises(LockfileError, match="duplicate"):
            read_lockfile(json.dumps(payload).encode())

    def test_not_json(self):
        with pytest.raises(LockfileError, match="JSON"):
            read_lockfile(b"{nope")

    @given(release_strategy())
    def test_round_trip_random_releases(self, release):
        data = write_lockfile(release)
        recovered = read_lockfile(data)
        assert recovered == release
        assert write_lockfile(recovered) == data
