import json

import pytest

from gridops.accounting import UsageRecord
from gridops.errors import ValidationError
from gridops.fabric import FaultKind, FaultSpec
from gridops.incidents import TicketStatus
from gridops.service.config import ScenarioConfig
from gridops.service.scenario import rebuild_fabric, run_scenario
from gridops.service.store import StateStore

from helpers import GB, scenario_doc


def run_in(tmp_path, doc, name="s", interrupt_after=None):
    store = StateStore(tmp_path / name)
    config = ScenarioConfig.from_dict(doc)
    fabric, summary = run_scenario(config, store, interrupt_after=interrupt_after)
    return store, config, fabric, summary


def test_zero_duration_runs_zero_cycles(tmp_path):
    store, _, _, summary = run_in(tmp_path, scenario_doc(duration=0))
    assert summary.cycles == 0
    assert store.cycles == []


def test_two_cycles_for_sixty_minutes_at_thirty(tmp_path):
    store, _, _, summary = run_in(tmp_path, scenario_doc(duration=60, interval=30))
    assert summary.cycles == 2
    assert [c["clock"] for c in store.cycles] == [30, 60]
    assert store.cycles[0]["counts"]["probe_results"] > 0


def test_config_validation_rejects_before_mutation(tmp_path):
    with pytest.raises(ValidationError):
        ScenarioConfig.from_dict(scenario_doc(duration=-5))
    with pytest.raises(ValidationError):
        ScenarioConfig.from_dict(scenario_doc() | {"scan_interval": 0})
    with pytest.raises(ValidationError):
        ScenarioConfig.from_dict(scenario_doc() | {"heavy_user_threshold": 1.5})


def test_clean_fabric_whitelists_everything(tmp_path):
    store, _, _, _ = run_in(tmp_path, scenario_doc(n_se=3, n_ce=2, duration=30))
    whitelist = store.cycles[-1]["whitelist"]["members"]
    assert whitelist == sorted(["SE-1", "SE-2", "SE-3", "CE-1", "CE-2", "WMS-1", "LFC", "VOMS"])


def test_downtime_excluded_from_whitelist_while_active(tmp_path):
    doc = scenario_doc(duration=60)
    doc["downtimes"] = [{"resource": "SE-2", "start": 0, "end": 45, "reason": "cooling"}]
    store, _, _, _ = run_in(tmp_path, doc)
    assert "SE-2" not in store.cycles[0]["whitelist"]["members"]
    assert "SE-2" in store.cycles[1]["whitelist"]["members"]


def test_fault_onset_produces_findings_each_cycle(tmp_path):
    doc = scenario_doc(duration=90)
    doc["fabric"]["events"] = [
        {
            "at": 31,
            "action": "inject_fault",
            "resource": "SE-1",
            "fault": {"kind": "OverstateFreeSpace", "magnitude": 0.5},
        }
    ]
    store, _, _, summary = run_in(tmp_path, doc)
    assert summary.findings_per_cycle == [0, 1, 1]


def test_store_replay_reconstructs_identical_state(tmp_path):
    store, config, _, _ = run_in(tmp_path, scenario_doc(duration=90))
    store.append_usage([UsageRecord(user="u1", site="s", t0=0, t1=60, cpu_hours=5.0, jobs=2)])
    reopened = StateStore(store.data_dir)
    assert reopened.cycles == store.cycles
    assert [r.to_doc() for r in reopened.probe_results] == [
        r.to_doc() for r in store.probe_results
    ]
    assert reopened.config_doc == store.config_doc
    assert [r.to_doc() for r in reopened.usage.records] == [
        r.to_doc() for r in store.usage.records
    ]


def test_interrupted_run_resumes_to_identical_cycles(tmp_path):
    doc = scenario_doc(duration=120)
    doc["fabric"]["events"] = [
        {"at": 45, "action": "set_state", "resource": "SE-2", "state": "Down"},
        {
            "at": 75,
            "action": "inject_fault",
            "resource": "SE-3",
            "fault": {"kind": "UnderreportUsed", "magnitude": 0.4},
        },
    ]
    full_store, _, _, _ = run_in(tmp_path, doc, name="full")

    for boundary in range(0, 4):
        part_store = StateStore(tmp_path / f"part-{boundary}")
        config = ScenarioConfig.from_dict(doc)
        run_scenario(config, part_store, interrupt_after=boundary)
        assert len(part_store.cycles) == boundary
        resumed = StateStore(part_store.data_dir)  # fresh process: replay from disk
        run_scenario(ScenarioConfig.from_dict(doc), resumed)
        assert resumed.cycles == full_store.cycles
        assert [r.to_doc() for r in resumed.probe_results] == [
            r.to_doc() for r in full_store.probe_results
        ]


def test_rebuild_fabric_replays_api_mutations(tmp_path):
    doc = scenario_doc(duration=60)
    store, config, fabric, _ = run_in(tmp_path, doc)
    store.record_mutation(
        {
            "at_clock": fabric.clock.now,
            "op": "inject_fault",
            "resource": "SE-1",
            "fault": {"kind": "FullReportsFree", "magnitude": 123.0},
        }
    )
    fabric.inject_fault(
        "SE-1",
        FaultSpec(kind=FaultKind.FULL_REPORTS_FREE, magnitude=123.0, since=fabric.clock.now),
    )
    rebuilt = rebuild_fabric(config, StateStore(store.data_dir))
    assert rebuilt.clock.now == fabric.clock.now
    assert rebuilt.storage["SE-1"].publication_fault is not None
    assert rebuilt.publish_info().to_doc() == fabric.publish_info().to_doc()


def test_ticket_log_replay(tmp_path):
    from gridops.incidents import TicketKind, TicketStep, StepAction, add_step, open_ticket, transition

    store = StateStore(tmp_path / "t")
    ticket = open_ticket(TicketKind.SE, "SE-1", opened_at=0, author="a", ticket_id=store.next_ticket_id())
    store.record_ticket_open(ticket, "")
    step = TicketStep(at=5, author="b", action=StepAction.COMMENT, payload="note")
    add_step(ticket, step)
    store.record_ticket_step(ticket.ticket_id, step)
    transition(ticket, TicketStatus.SOLVED, at=9, author="a")
    store.record_ticket_transition(ticket.ticket_id, TicketStatus.SOLVED, 9, "a")

    reopened = StateStore(store.data_dir)
    replayed = reopened.tickets[ticket.ticket_id]
    assert replayed.to_doc() == ticket.to_doc()
    assert reopened.next_ticket_id() == "T-0002"


def test_queue_samples_flow_into_store(tmp_path):
    store, _, _, _ = run_in(tmp_path, scenario_doc(duration=30))
    samples = store.queue_samples()
    assert {s.compute_id for s in samples} == {"CE-1", "CE-2"}
    assert all(s.waiting == 4 and s.running == 2 for s in samples)


def test_alarm_derivation_with_ticket_links(tmp_path):
    doc = scenario_doc(duration=150, alarm_policy={"raise_after": 3, "clear_after": 2})
    doc["fabric"]["events"] = [{"at": 1, "action": "set_state", "resource": "SE-1", "state": "Down"}]
    store, config, _, _ = run_in(tmp_path, doc)
    alarms = store.alarms(config.alarm_policy)
    se1 = [a for a in alarms if a.resource_id == "SE-1"]
    assert len(se1) == 1
    assert se1[0].raised_at == 90  # third consecutive failed cycle
    assert se1[0].open

    from gridops.incidents import TicketKind, open_ticket, link_alarm

    ticket = open_ticket(TicketKind.SE, "SE-1", opened_at=store.clock, author="ops",
                         ticket_id=store.next_ticket_id())
    store.record_ticket_open(ticket, "")
    link_alarm(ticket, se1[0].alarm_id, at=store.clock, author="ops")
    store.record_ticket_step(ticket.ticket_id, ticket.steps[-1])
    again = store.alarms(config.alarm_policy)
    assert [a for a in again if a.resource_id == "SE-1"][0].linked_ticket == ticket.ticket_id


def test_scenario_config_json_file_with_fabric_reference(tmp_path):
    fabric_doc = scenario_doc()["fabric"]
    (tmp_path / "fabric.json").write_text(json.dumps(fabric_doc))
    scenario = {"fabric_file": "fabric.json", "duration": 30, "scan_interval": 30}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    config = ScenarioConfig.from_json(path)
    assert config.cycles == 1
    assert len(config.fabric_spec.storage) == 3
