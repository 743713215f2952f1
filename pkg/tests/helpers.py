"""Shared fixture builders for the test suite."""

from gridops.fabric import (
    ComputeNode,
    FabricSpec,
    ServiceNode,
    StorageNode,
    WorkloadNode,
    init_fabric,
    ResourceKind,
)
from gridops.incidents import (
    StepAction,
    Ticket,
    TicketKind,
    TicketStep,
    TicketStatus,
    open_ticket,
    add_step,
    transition,
)
from gridops.topology import RegistryEntry

GB = 10**9
DAY = 1440


def small_fabric(n_se=2, n_ce=1, n_wms=1, capacity=100 * GB, seed=0):
    spec = FabricSpec(seed=seed)
    for i in range(1, n_se + 1):
        spec.storage.append(StorageNode(id=f"SE-{i}", site=f"site-{i}", capacity=capacity))
    for i in range(1, n_ce + 1):
        spec.compute.append(ComputeNode(id=f"CE-{i}", site=f"site-{i}", waiting=0, running=0))
    for i in range(1, n_wms + 1):
        spec.workload.append(WorkloadNode(id=f"WMS-{i}"))
    spec.services.append(ServiceNode(id="LFC", kind=ResourceKind.CATALOGUE))
    spec.services.append(ServiceNode(id="VOMS", kind=ResourceKind.VOMS))
    return init_fabric(spec)


def registry_for(fabric, in_production=None):
    """Registry mirroring the fabric; in_production overrides per id."""
    overrides = in_production or {}
    entries = []
    for rid in fabric.all_resource_ids():
        entries.append(
            RegistryEntry(
                resource_id=rid,
                kind=fabric.kind_of(rid),
                site=getattr(fabric.find(rid), "site", ""),
                in_production=overrides.get(rid, True),
            )
        )
    return entries


def engineered_ticket(ticket_id, opened_at, solve_days, total_steps, people) -> Ticket:
    """Ticket with an exact step count, participant count and solve time.

    Layout: creation step + comments + one final Solved transition. Step
    authors cycle over the participant pool, so total_steps >= people must
    hold for every participant to appear.
    """
    assert total_steps >= max(people, 2)
    authors = [f"person-{i}" for i in range(people)]
    ticket = open_ticket(
        TicketKind.OTHER,
        opened_at=opened_at,
        author=authors[0],
        payload="engineered incident",
        ticket_id=ticket_id,
    )
    for i in range(1, total_steps - 1):
        add_step(
            ticket,
            TicketStep(
                at=opened_at + i,
                author=authors[i % people],
                action=StepAction.COMMENT,
                payload=f"note {i}",
            ),
        )
    closer = authors[(total_steps - 1) % people]
    transition(ticket, TicketStatus.SOLVED, at=opened_at + solve_days * DAY, author=closer)
    return ticket


def scenario_doc(n_se=3, n_ce=2, capacity=100 * GB, duration=60, interval=30, **extra):
    """Scenario config document for a small clean fabric with preloaded files."""
    doc = {
        "fabric": {
            "seed": 1,
            "storage": [
                {"id": f"SE-{i}", "site": f"site-{i}", "capacity": capacity}
                for i in range(1, n_se + 1)
            ],
            "compute": [
                {"id": f"CE-{i}", "site": f"site-{i}", "waiting": 4, "running": 2}
                for i in range(1, n_ce + 1)
            ],
            "workload": [{"id": "WMS-1"}],
            "services": [
                {"id": "LFC", "kind": "Catalogue"},
                {"id": "VOMS", "kind": "VOMS"},
            ],
            "files": [
                {"lfn": "lfn:/data/a", "owner": "u1", "storage": "SE-1", "size": 10 * GB},
                {"lfn": "lfn:/data/b", "owner": "u2", "storage": "SE-1", "size": 5 * GB},
            ],
            "events": [],
        },
        "scan_interval": interval,
        "duration": duration,
        "shifts": {"teams": ["team-a", "team-b"], "shift_length": 7, "epoch": 0},
    }
    doc.update(extra)
    return doc


def ticket_corpus(base=0):
    """Corpus whose solved-ticket means are exactly 14 days, 10 steps and
    3.5 people (3,3,4,4 participants; 13,15,14,14 days)."""
    return [
        engineered_ticket("fix-1", base + 0, 13, 10, 3),
        engineered_ticket("fix-2", base + 10, 15, 10, 3),
        engineered_ticket("fix-3", base + 20, 14, 10, 4),
        engineered_ticket("fix-4", base + 30, 14, 10, 4),
    ]
