import pytest
from hypothesis import given, strategies as st

from gridops.errors import UnknownResourceError, ValidationError
from gridops.fabric import NodeState, ResourceKind
from gridops.probes import (
    AlarmPolicy,
    Outcome,
    ProbeCheck,
    ProbeResult,
    ProbeSpec,
    availability_report,
    evaluate_alarms,
    probe_cycle,
    run_probe,
)
from gridops.topology import DowntimeWindow, VOResourceSet, merge_topology

from helpers import GB, small_fabric, registry_for


def current_vo_set(fabric):
    return merge_topology(registry_for(fabric), fabric.publish_info(), at=fabric.clock.now)


def test_up_se_probes_ok():
    fabric = small_fabric()
    result = run_probe(fabric, "SE-1", ProbeCheck.SE_READ_WRITE)
    assert result.outcome is Outcome.OK


def test_down_se_fails_unavailable():
    fabric = small_fabric()
    fabric.storage["SE-1"].state = NodeState.DOWN
    result = run_probe(fabric, "SE-1", ProbeCheck.SE_READ_WRITE)
    assert result.outcome is Outcome.FAIL
    assert result.detail == "unavailable"


def test_full_se_fails_write_refused():
    fabric = small_fabric(capacity=GB)
    fabric.write_file("SE-1", "u1", "lfn:/fill", GB)
    result = run_probe(fabric, "SE-1", ProbeCheck.SE_READ_WRITE)
    assert result.outcome is Outcome.FAIL
    assert result.detail == "write refused: StorageFull"


def test_unknown_resource_is_rejection_not_fail():
    fabric = small_fabric()
    with pytest.raises(UnknownResourceError):
        run_probe(fabric, "SE-404", ProbeCheck.SE_READ_WRITE)


def test_mismatched_check_rejected():
    fabric = small_fabric()
    with pytest.raises(ValidationError):
        run_probe(fabric, "CE-1", ProbeCheck.SE_READ_WRITE)


def test_probe_ignores_published_figures():
    # publication faults are invisible to probes: they test ground truth
    from gridops.fabric import FaultKind, FaultSpec

    fabric = small_fabric(capacity=GB)
    fabric.write_file("SE-1", "u1", "lfn:/fill", GB)
    fabric.inject_fault("SE-1", FaultSpec(kind=FaultKind.FULL_REPORTS_FREE, magnitude=GB))
    assert run_probe(fabric, "SE-1", ProbeCheck.SE_READ_WRITE).outcome is Outcome.FAIL


def test_catalogue_and_voms_pings():
    fabric = small_fabric()
    assert run_probe(fabric, "LFC", ProbeCheck.CATALOGUE_LOOKUP).outcome is Outcome.OK
    fabric.services["VOMS"].state = NodeState.DOWN
    assert run_probe(fabric, "VOMS", ProbeCheck.VOMS_PING).outcome is Outcome.FAIL


def test_probe_cycle_empty_vo_set():
    fabric = small_fabric()
    specs = [ProbeSpec(kind=ResourceKind.SE, check=ProbeCheck.SE_READ_WRITE, interval=30)]
    assert probe_cycle(fabric, specs, VOResourceSet(computed_at=0)) == []


def test_probe_cycle_runs_at_interval_multiples():
    fabric = small_fabric(n_se=3)
    specs = [ProbeSpec(kind=ResourceKind.SE, check=ProbeCheck.SE_READ_WRITE, interval=30)]
    fabric.advance_clock(60)
    results = probe_cycle(fabric, specs, current_vo_set(fabric))
    assert len(results) == 3
    assert [r.resource_id for r in results] == ["SE-1", "SE-2", "SE-3"]


def test_probe_cycle_misses_off_cadence_tick():
    fabric = small_fabric(n_se=3)
    specs = [ProbeSpec(kind=ResourceKind.SE, check=ProbeCheck.SE_READ_WRITE, interval=30)]
    fabric.advance_clock(45)
    assert probe_cycle(fabric, specs, current_vo_set(fabric)) == []


def test_probe_cycle_unknown_member_fails_instead_of_vanishing():
    from gridops.topology import RegistryEntry
    from gridops.fabric import InfoSnapshot

    fabric = small_fabric()
    registry = registry_for(fabric) + [RegistryEntry(resource_id="SE-gone", kind=ResourceKind.SE)]
    vo = merge_topology(registry, fabric.publish_info(), at=0)
    specs = [ProbeSpec(kind=ResourceKind.SE, check=ProbeCheck.SE_READ_WRITE, interval=30)]
    results = probe_cycle(fabric, specs, vo)
    gone = [r for r in results if r.resource_id == "SE-gone"]
    assert len(gone) == 1
    assert gone[0].outcome is Outcome.FAIL
    assert gone[0].detail == "unknown resource"


def fails(rid, *ats, check=ProbeCheck.SE_READ_WRITE):
    return [ProbeResult(rid, check, at, Outcome.FAIL, "x") for at in ats]


def oks(rid, *ats, check=ProbeCheck.SE_READ_WRITE):
    return [ProbeResult(rid, check, at, Outcome.OK) for at in ats]


def test_alarm_raised_on_first_fail_with_k1():
    alarms = evaluate_alarms(fails("SE-1", 30), policy=AlarmPolicy(raise_after=1))
    assert len(alarms) == 1
    assert alarms[0].raised_at == 30
    assert alarms[0].cleared_at is None


def test_no_alarm_without_three_consecutive_fails():
    # Fail, Ok, Fail, Fail: longest run is 2
    history = fails("SE-1", 0) + oks("SE-1", 30) + fails("SE-1", 60, 90)
    assert evaluate_alarms(history, policy=AlarmPolicy(raise_after=3)) == []


def test_alarm_raised_on_kth_fail_and_cleared_on_mth_ok():
    history = fails("SE-1", 0, 30, 60) + oks("SE-1", 90, 120)
    alarms = evaluate_alarms(history, policy=AlarmPolicy(raise_after=3, clear_after=2))
    assert len(alarms) == 1
    assert alarms[0].raised_at == 60
    assert alarms[0].cleared_at == 120
    assert alarms[0].consecutive_failures == 3


def test_single_ok_does_not_clear_with_m2():
    history = fails("SE-1", 0, 30, 60) + oks("SE-1", 90)
    alarms = evaluate_alarms(history, policy=AlarmPolicy(raise_after=3, clear_after=2))
    assert alarms[0].cleared_at is None


def test_at_most_one_open_alarm_per_resource_check():
    history = fails("SE-1", 0, 30, 60, 90, 120, 150)
    alarms = evaluate_alarms(history, policy=AlarmPolicy(raise_after=3))
    assert len(alarms) == 1
    assert alarms[0].consecutive_failures == 6


def test_new_alarm_after_clear_is_a_fresh_alarm():
    history = (
        fails("SE-1", 0, 30, 60) + oks("SE-1", 90, 120) + fails("SE-1", 150, 180, 210)
    )
    alarms = evaluate_alarms(history, policy=AlarmPolicy(raise_after=3, clear_after=2))
    assert len(alarms) == 2
    assert alarms[0].cleared_at == 120
    assert alarms[1].raised_at == 210
    assert alarms[1].open


def test_ticket_links_survive_reevaluation():
    history = fails("SE-1", 0, 30, 60)
    alarms = evaluate_alarms(history, policy=AlarmPolicy(raise_after=3))
    alarms[0].linked_ticket = "T-1"
    again = evaluate_alarms(history + oks("SE-1", 90), alarms, AlarmPolicy(raise_after=3))
    assert again[0].linked_ticket == "T-1"


def test_availability_basic():
    history = oks("SE-1", *range(0, 270, 30)) + fails("SE-1", 270)
    report = availability_report(history, {"SE-1"}, (0, 300))
    fig = report.per_resource["SE-1"]
    assert fig.total == 10
    assert fig.availability == 0.9
    assert fig.reliability == 0.9


def test_fail_inside_downtime_lifts_reliability_only():
    history = oks("SE-1", *range(0, 270, 30)) + fails("SE-1", 270)
    downtimes = [DowntimeWindow(resource_id="SE-1", start=260, end=300)]
    report = availability_report(history, {"SE-1"}, (0, 300), downtimes)
    fig = report.per_resource["SE-1"]
    assert fig.availability == 0.9
    assert fig.reliability == 1.0  # 9 Ok over (10 - 1) counted results


def test_out_of_scope_results_change_nothing():
    history = oks("SE-1", 0, 30) + fails("SE-1", 60)
    base = availability_report(history, {"SE-1"}, (0, 90))
    noisy = history + fails("SE-99", 0, 30, 60) + oks("CE-7", 0)
    again = availability_report(noisy, {"SE-1"}, (0, 90))
    assert base.to_doc() == again.to_doc()


def test_zero_result_resource_reported_unknown_and_out_of_aggregate():
    history = oks("SE-1", 0, 30)
    report = availability_report(history, {"SE-1", "SE-2"}, (0, 60))
    assert report.per_resource["SE-2"].availability is None
    assert report.availability == 1.0


def test_empty_scope_rejected():
    with pytest.raises(ValidationError):
        availability_report([], set(), (0, 60))


@given(
    outcomes=st.lists(st.booleans(), min_size=1, max_size=40),
    downtime_span=st.tuples(st.integers(0, 39), st.integers(1, 40)),
)
def test_reliability_never_below_availability(outcomes, downtime_span):
    history = [
        ProbeResult("SE-1", ProbeCheck.SE_READ_WRITE, i * 30, Outcome.OK if ok else Outcome.FAIL)
        for i, ok in enumerate(outcomes)
    ]
    start, length = downtime_span
    downtimes = [DowntimeWindow(resource_id="SE-1", start=start * 30, end=(start + length) * 30)]
    report = availability_report(history, {"SE-1"}, (0, len(outcomes) * 30), downtimes)
    fig = report.per_resource["SE-1"]
    if fig.reliability is not None:
        assert fig.reliability >= fig.availability - 1e-12
        assert fig.reliability <= 1.0


def test_availability_csv_columns():
    history = oks("SE-1", 0)
    report = availability_report(history, {"SE-1"}, (0, 30))
    lines = report.to_csv().splitlines()
    assert lines[0] == "resource-id,window-start,window-end,availability,reliability"
    assert lines[1] == "SE-1,0,30,1.0,1.0"
