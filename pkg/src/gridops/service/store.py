"""File-backed state store.

Everything that happened is an append-only JSON-lines log: cycle outputs,
probe results, ticket events, usage records, decommission plans, and fabric
mutations issued through the API. Opening a store replays the logs, so a
restart reconstructs exactly the state an uninterrupted run would have had.
Alarms are never stored: they are recomputed from the probe log, with ticket
links derived from LinkAlarm steps.
"""

import json
from pathlib import Path
from typing import Optional

from ..accounting import QueueSample, UsageLog, UsageRecord
from ..errors import UnknownResourceError
from ..fabric import Minutes
from ..incidents import (
    StepAction,
    Ticket,
    TicketKind,
    TicketStatus,
    TicketStep,
    add_step,
    open_ticket,
    transition,
)
from ..probes import Alarm, AlarmPolicy, Outcome, ProbeCheck, ProbeResult, evaluate_alarms

CONFIG_FILE = "config.json"
LOGS = {
    "cycles": "cycles.jsonl",
    "probes": "probes.jsonl",
    "tickets": "tickets.jsonl",
    "usage": "usage.jsonl",
    "plans": "plans.jsonl",
    "mutations": "mutations.jsonl",
}


class StateStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.config_doc: Optional[dict] = None
        self.cycles: list[dict] = []
        self.probe_results: list[ProbeResult] = []
        self.tickets: dict[str, Ticket] = {}
        self.usage = UsageLog()
        self.plans: dict[str, dict] = {}
        self.plan_drafts: dict[str, dict] = {}
        self.mutations: list[dict] = []
        self._ticket_seq = 0
        self._load()

    # -- replay -------------------------------------------------------------

    def _load(self):
        config_path = self.data_dir / CONFIG_FILE
        if config_path.exists():
            self.config_doc = json.loads(config_path.read_text(encoding="utf-8"))
        for line in self._lines("cycles"):
            self.cycles.append(line)
        for line in self._lines("probes"):
            self.probe_results.append(
                ProbeResult(
                    resource_id=line["resource"],
                    check=ProbeCheck(line["check"]),
                    at=line["at"],
                    outcome=Outcome(line["outcome"]),
                    detail=line.get("detail", ""),
                )
            )
        for line in self._lines("tickets"):
            self._apply_ticket_event(line)
        for line in self._lines("usage"):
            self.usage.ingest([UsageRecord(**line)])
        for line in self._lines("plans"):
            if line["event"] == "planned":
                self.plans[line["plan"]["plan_id"]] = line["plan"]
                self.plan_drafts[line["plan"]["plan_id"]] = line["plan"]
            else:
                self.plans[line["plan_id"]] = line["result"]
        for line in self._lines("mutations"):
            self.mutations.append(line)

    def _lines(self, log: str):
        path = self.data_dir / LOGS[log]
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if raw:
                    yield json.loads(raw)

    def _append(self, log: str, doc: dict):
        with open(self.data_dir / LOGS[log], "a", encoding="utf-8") as fh:
            fh.write(json.dumps(doc) + "\n")

    def _apply_ticket_event(self, ev: dict):
        if ev["event"] == "open":
            ticket = open_ticket(
                kind=TicketKind(ev["kind"]),
                resource_id=ev.get("resource"),
                opened_at=ev["at"],
                author=ev["author"],
                payload=ev.get("payload", ""),
                ticket_id=ev["ticket_id"],
            )
            self.tickets[ticket.ticket_id] = ticket
            self._ticket_seq = max(self._ticket_seq, _seq_of(ticket.ticket_id))
        elif ev["event"] == "step":
            add_step(
                self.tickets[ev["ticket_id"]],
                TicketStep(
                    at=ev["at"],
                    author=ev["author"],
                    action=StepAction(ev.get("action", "Comment")),
                    payload=ev.get("payload", ""),
                ),
            )
        elif ev["event"] == "transition":
            transition(
                self.tickets[ev["ticket_id"]],
                TicketStatus(ev["to"]),
                at=ev["at"],
                author=ev["author"],
            )

    # -- appends (validate first, then log, then apply) ------------------------

    def write_config(self, doc: dict):
        self.config_doc = doc
        (self.data_dir / CONFIG_FILE).write_text(json.dumps(doc, indent=2), encoding="utf-8")

    def append_cycle(self, doc: dict):
        self._append("cycles", doc)
        self.cycles.append(doc)

    def append_probe_results(self, results: list[ProbeResult]):
        for result in results:
            self._append("probes", result.to_doc())
        self.probe_results.extend(results)

    def next_ticket_id(self) -> str:
        self._ticket_seq += 1
        return f"T-{self._ticket_seq:04d}"

    def record_ticket_open(self, ticket: Ticket, payload: str):
        self.tickets[ticket.ticket_id] = ticket
        self._append(
            "tickets",
            {
                "event": "open",
                "ticket_id": ticket.ticket_id,
                "kind": ticket.kind.value,
                "resource": ticket.resource_id,
                "at": ticket.opened_at,
                "author": ticket.steps[0].author,
                "payload": payload,
            },
        )

    def record_ticket_step(self, ticket_id: str, step: TicketStep):
        self._append(
            "tickets",
            {
                "event": "step",
                "ticket_id": ticket_id,
                "at": step.at,
                "author": step.author,
                "action": step.action.value,
                "payload": step.payload,
            },
        )

    def record_ticket_transition(self, ticket_id: str, to: TicketStatus, at: Minutes, author: str):
        self._append(
            "tickets",
            {"event": "transition", "ticket_id": ticket_id, "to": to.value, "at": at, "author": author},
        )

    def append_usage(self, records: list[UsageRecord]):
        accepted, rejected = self.usage.ingest(records)
        for rec in self.usage.records[len(self.usage.records) - accepted :]:
            self._append("usage", rec.to_doc())
        return accepted, rejected

    def next_plan_id(self) -> str:
        return f"plan-{len(self.plan_drafts) + 1}"

    def record_plan(self, doc: dict):
        self._append("plans", {"event": "planned", "plan": doc})
        self.plans[doc["plan_id"]] = doc
        self.plan_drafts[doc["plan_id"]] = doc

    def record_plan_result(self, plan_id: str, result: dict):
        self._append("plans", {"event": "executed", "plan_id": plan_id, "result": result})
        self.plans[plan_id] = result

    def record_mutation(self, doc: dict):
        self._append("mutations", doc)
        self.mutations.append(doc)

    # -- derived views ------------------------------------------------------------

    @property
    def clock(self) -> Minutes:
        return self.cycles[-1]["clock"] if self.cycles else 0

    def alarms(self, policy: Optional[AlarmPolicy] = None) -> list[Alarm]:
        alarms = evaluate_alarms(self.probe_results, [], policy or AlarmPolicy())
        links = {}
        for ticket in self.tickets.values():
            for step in ticket.steps:
                if step.action is StepAction.LINK_ALARM:
                    links[step.payload] = ticket.ticket_id
        for alarm in alarms:
            alarm.linked_ticket = links.get(alarm.alarm_id)
        return alarms

    def tickets_sorted(self) -> list[Ticket]:
        return sorted(self.tickets.values(), key=lambda t: (t.opened_at, t.ticket_id))

    def require_ticket(self, ticket_id: str) -> Ticket:
        if ticket_id not in self.tickets:
            raise UnknownResourceError(ticket_id)
        return self.tickets[ticket_id]

    def queue_samples(self) -> list[QueueSample]:
        samples = []
        for cycle in self.cycles:
            for doc in cycle.get("queue_samples", []):
                samples.append(
                    QueueSample(
                        at=doc["at"],
                        compute_id=doc["compute"],
                        waiting=doc["waiting"],
                        running=doc["running"],
                    )
                )
        return samples


def _seq_of(ticket_id: str) -> int:
    if ticket_id.startswith("T-"):
        try:
            return int(ticket_id[2:])
        except ValueError:
            return 0
    return 0
