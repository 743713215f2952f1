import pytest
from hypothesis import given, strategies as st

from gridops.errors import ValidationError
from gridops.fabric import InfoRecord, InfoSnapshot, ResourceKind
from gridops.probes import Alarm, ProbeCheck
from gridops.storage_ops import DataQuality, FillingEntry, FillingRateReport
from gridops.topology import (
    DowntimeWindow,
    Presence,
    RegistryEntry,
    WhitelistPolicy,
    active_downtimes,
    compute_whitelist,
    diff_topology,
    merge_topology,
)

from helpers import small_fabric, registry_for


def snap(*ids, at=0, kind=ResourceKind.SE):
    return InfoSnapshot(taken_at=at, records=[InfoRecord(rid, kind, heartbeat=at) for rid in ids])


def reg(*ids, kind=ResourceKind.SE, in_production=True):
    return [RegistryEntry(resource_id=rid, kind=kind, in_production=in_production) for rid in ids]


def test_merge_both_sides_present():
    vo = merge_topology(reg("SE-1"), snap("SE-1"), at=0)
    assert vo.member_for("SE-1").presence is Presence.REGISTERED_AND_PUBLISHED


def test_merge_registered_only():
    vo = merge_topology(reg("SE-1"), snap(), at=0)
    assert vo.member_for("SE-1").presence is Presence.REGISTERED_ONLY


def test_merge_published_only():
    vo = merge_topology([], snap("CE-9", kind=ResourceKind.CE), at=0)
    member = vo.member_for("CE-9")
    assert member.presence is Presence.PUBLISHED_ONLY
    assert member.kind is ResourceKind.CE


def test_non_production_entries_excluded_even_when_published():
    vo = merge_topology(reg("SE-1", in_production=False), snap("SE-1"), at=0)
    assert vo.members == []


def test_merge_totality_no_loss_no_duplication():
    registry = reg("SE-1", "SE-2", "SE-3")
    snapshot = snap("SE-2", "SE-3", "SE-4")
    vo = merge_topology(registry, snapshot, at=5)
    assert sorted(vo.ids()) == ["SE-1", "SE-2", "SE-3", "SE-4"]
    assert len(vo.members) == len(vo.ids())


def test_merge_idempotent_up_to_timestamp():
    registry = reg("SE-1", "SE-2")
    snapshot = snap("SE-1")
    a = merge_topology(registry, snapshot, at=10)
    b = merge_topology(registry, snapshot, at=99)
    assert [m.resource_id for m in a.members] == [m.resource_id for m in b.members]
    assert [m.presence for m in a.members] == [m.presence for m in b.members]
    assert (a.computed_at, b.computed_at) == (10, 99)


def test_downtime_window_half_open():
    windows = [DowntimeWindow(resource_id="SE-1", start=10, end=20)]
    assert active_downtimes(windows, 15) == {"SE-1"}
    assert active_downtimes(windows, 10) == {"SE-1"}
    assert active_downtimes(windows, 20) == set()


def test_overlapping_windows_yield_one_id():
    windows = [
        DowntimeWindow(resource_id="SE-1", start=0, end=30),
        DowntimeWindow(resource_id="SE-1", start=20, end=40),
    ]
    assert active_downtimes(windows, 25) == {"SE-1"}


def test_downtime_window_rejects_inverted_bounds():
    with pytest.raises(ValidationError):
        DowntimeWindow(resource_id="SE-1", start=20, end=20)


def filling_report(rates: dict, at=0):
    entries = [
        FillingEntry(
            storage_id=sid,
            published_used=int(rate * 100),
            published_free=int((1 - rate) * 100),
            rate=rate,
            data_quality=DataQuality.OK,
        )
        for sid, rate in rates.items()
    ]
    return FillingRateReport(taken_at=at, entries=entries)


def vo_set_of(*ids_kinds, at=0):
    fabric = small_fabric(n_se=0)
    registry = [RegistryEntry(resource_id=rid, kind=kind) for rid, kind in ids_kinds]
    records = [InfoRecord(rid, kind, heartbeat=at) for rid, kind in ids_kinds]
    return merge_topology(registry, InfoSnapshot(taken_at=at, records=records), at=at)


def test_clean_se_whitelisted():
    vo = vo_set_of(("SE-1", ResourceKind.SE))
    wl = compute_whitelist(vo, set(), [filling_report({"SE-1": 0.50})], [])
    assert wl.members == {"SE-1"}


def test_active_downtime_excludes():
    vo = vo_set_of(("SE-1", ResourceKind.SE))
    wl = compute_whitelist(vo, {"SE-1"}, [filling_report({"SE-1": 0.50})], [])
    assert wl.members == set()


def test_filling_above_policy_excludes():
    vo = vo_set_of(("SE-1", ResourceKind.SE), ("SE-2", ResourceKind.SE))
    wl = compute_whitelist(
        vo, set(), [filling_report({"SE-1": 0.95, "SE-2": 0.80})], [], WhitelistPolicy(max_filling=0.80)
    )
    # 0.80 is at the limit, not over it
    assert wl.members == {"SE-2"}


def test_recent_alarm_excludes_until_lookback_expires():
    vo = vo_set_of(("CE-1", ResourceKind.CE), at=2000)
    recent = Alarm("a1", "CE-1", ProbeCheck.CE_SUBMIT, raised_at=100, cleared_at=1900)
    stale = Alarm("a2", "CE-1", ProbeCheck.CE_SUBMIT, raised_at=100, cleared_at=200)
    policy = WhitelistPolicy(alarm_lookback=500)
    assert compute_whitelist(vo, set(), [], [recent], policy).members == set()
    assert compute_whitelist(vo, set(), [], [stale], policy).members == {"CE-1"}


def test_open_alarm_always_excludes():
    vo = vo_set_of(("SE-1", ResourceKind.SE), at=5000)
    open_alarm = Alarm("a1", "SE-1", ProbeCheck.SE_READ_WRITE, raised_at=10)
    assert compute_whitelist(vo, set(), [], [open_alarm]).members == set()


def test_suspect_filling_entry_excludes():
    vo = vo_set_of(("SE-1", ResourceKind.SE))
    report = FillingRateReport(
        taken_at=0,
        entries=[FillingEntry("SE-1", 0, 0, None, DataQuality.SUSPECT)],
    )
    assert compute_whitelist(vo, set(), [report], []).members == set()


def test_published_only_never_whitelisted():
    vo = merge_topology([], snap("SE-1"), at=0)
    assert compute_whitelist(vo, set(), [], []).members == set()


def test_whitelist_uses_latest_filling_report():
    vo = vo_set_of(("SE-1", ResourceKind.SE), at=60)
    old = filling_report({"SE-1": 0.95}, at=0)
    new = filling_report({"SE-1": 0.50}, at=60)
    assert compute_whitelist(vo, set(), [old, new], []).members == {"SE-1"}
    assert compute_whitelist(vo, set(), [new, old], []).members == {"SE-1"}


@given(
    rates=st.dictionaries(
        st.sampled_from([f"SE-{i}" for i in range(8)]),
        st.floats(min_value=0.0, max_value=1.0),
        min_size=1,
    ),
    max_filling=st.floats(min_value=0.0, max_value=1.0),
    extra_downtime=st.sets(st.sampled_from([f"SE-{i}" for i in range(8)])),
)
def test_whitelist_monotone_in_downtimes_and_policy(rates, max_filling, extra_downtime):
    ids = sorted(rates)
    vo = vo_set_of(*[(rid, ResourceKind.SE) for rid in ids])
    filling = [filling_report(rates)]
    base = compute_whitelist(vo, set(), filling, [], WhitelistPolicy(max_filling=max_filling))
    with_downtime = compute_whitelist(
        vo, extra_downtime, filling, [], WhitelistPolicy(max_filling=max_filling)
    )
    assert with_downtime.members <= base.members
    tighter = compute_whitelist(
        vo, set(), filling, [], WhitelistPolicy(max_filling=max_filling / 2)
    )
    assert tighter.members <= base.members


def test_diff_identity_is_empty():
    vo = vo_set_of(("SE-1", ResourceKind.SE))
    assert diff_topology(vo, vo) == ([], [], [])


def test_diff_detects_addition():
    old = vo_set_of(("SE-1", ResourceKind.SE))
    new = vo_set_of(("SE-1", ResourceKind.SE), ("CE-2", ResourceKind.CE))
    added, removed, changed = diff_topology(old, new)
    assert added == ["CE-2"]
    assert removed == []
    assert changed == []


def test_diff_detects_presence_change():
    old = merge_topology(reg("SE-1"), snap(), at=0)
    new = merge_topology(reg("SE-1"), snap("SE-1"), at=1)
    added, removed, changed = diff_topology(old, new)
    assert (added, removed) == ([], [])
    assert changed == ["SE-1"]


def test_vo_feed_export_has_stable_shape():
    fabric = small_fabric()
    vo = merge_topology(registry_for(fabric), fabric.publish_info(), at=0)
    doc = vo.to_doc()
    assert list(doc) == ["computed_at", "members"]
    assert [m["resource"] for m in doc["members"]] == sorted(m["resource"] for m in doc["members"])
