"""Storage auditing and cleanup machinery.

Filling-rate scans and heavy-user reports work on *published* figures (that
is all the real tooling ever had); detect_publication_errors is the separate
truth-checking path that compares published figures against audited ground
truth. Reconciliation, decommission planning and departed-user cleanup
operate on the catalogue/storage pair.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import GridOpsError, ValidationError
from .fabric import (
    Bytes,
    CatalogueEntry,
    Fabric,
    InfoSnapshot,
    Minutes,
    NodeState,
    ResourceKind,
)
from .serialize import to_csv
from .topology import Presence, VOResourceSet

DEFAULT_HEAVY_THRESHOLD = 0.80
DEFAULT_RELATIVE_TOLERANCE = 0.05
DEFAULT_STALENESS_BOUND = 120  # minutes
DEFAULT_FREE_TOLERANCE_BYTES = 0

HEAVY_USER_NOTIFICATION_HEADER = (
    "Subject: [VO storage] action needed on {se}\n"
    "\n"
    "Storage element {se} has reached a filling rate of {rate}.\n"
    "Please clean up or migrate data you no longer need. Largest holdings:\n"
)
HEAVY_USER_NOTIFICATION_LINE = "  - {owner}: {bytes} bytes\n"


class DataQuality(str, Enum):
    OK = "Ok"
    SUSPECT = "Suspect"


@dataclass
class FillingEntry:
    storage_id: str
    published_used: Optional[Bytes]
    published_free: Optional[Bytes]
    rate: Optional[float]
    data_quality: DataQuality

    def to_doc(self) -> dict:
        return {
            "storage": self.storage_id,
            "published_used": self.published_used,
            "published_free": self.published_free,
            "rate": self.rate,
            "data_quality": self.data_quality.value,
        }


@dataclass
class FillingRateReport:
    taken_at: Minutes
    entries: list[FillingEntry] = field(default_factory=list)

    def sorted_entries(self, by: str = "id", descending: bool = False) -> list[FillingEntry]:
        """Sorting modes: id, rate or free. Suspect entries sort last."""
        if by == "id":
            key = lambda e: (0, e.storage_id)
        elif by == "rate":
            key = lambda e: ((0, e.rate) if e.rate is not None else (1, 0.0), e.storage_id)
        elif by == "free":
            key = lambda e: (
                (0, e.published_free) if e.published_free is not None else (1, 0),
                e.storage_id,
            )
        else:
            raise ValidationError(f"unknown sort mode: {by}")
        entries = sorted(self.entries, key=key, reverse=descending)
        if descending:
            # keep Suspect entries at the bottom regardless of direction
            entries = [e for e in entries if e.data_quality is DataQuality.OK] + [
                e for e in entries if e.data_quality is DataQuality.SUSPECT
            ]
        return entries

    def rate_for(self, storage_id: str) -> Optional[float]:
        for entry in self.entries:
            if entry.storage_id == storage_id:
                return entry.rate
        return None

    def to_doc(self, sort: str = "id", descending: bool = False) -> dict:
        return {
            "taken_at": self.taken_at,
            "entries": [e.to_doc() for e in self.sorted_entries(sort, descending)],
        }

    def to_csv(self, sort: str = "id", descending: bool = False) -> str:
        rows = [e.to_doc() for e in self.sorted_entries(sort, descending)]
        return to_csv(rows, ["storage", "published_used", "published_free", "rate", "data_quality"])


def compute_filling_rates(snapshot: InfoSnapshot) -> FillingRateReport:
    """Filling rate used/(used+free) per published SE record.

    Degenerate figures (missing fields, negatives, zero total) are marked
    Suspect with the rate omitted instead of poisoning downstream reports.
    """
    report = FillingRateReport(taken_at=snapshot.taken_at)
    for rec in snapshot.records:
        if rec.kind is not ResourceKind.SE:
            continue
        used, free = rec.used, rec.free
        suspect = (
            used is None or free is None or used < 0 or free < 0 or (used + free) == 0
        )
        rate = None if suspect else used / (used + free)
        report.entries.append(
            FillingEntry(
                storage_id=rec.resource_id,
                published_used=used,
                published_free=free,
                rate=rate,
                data_quality=DataQuality.SUSPECT if suspect else DataQuality.OK,
            )
        )
    report.entries.sort(key=lambda e: e.storage_id)
    return report


# -- publication-error detection -----------------------------------------------


@dataclass
class AuditSample:
    """Ground-truth-derived observation for one resource: what an independent
    audit (probe write attempts, catalogue-known sizes) says the figures are."""

    resource_id: str
    kind: ResourceKind
    used: Optional[Bytes] = None
    free: Optional[Bytes] = None
    waiting: Optional[int] = None
    running: Optional[int] = None
    write_refused: bool = False


@dataclass
class Finding:
    resource_id: str
    kind: str
    detail: str = ""

    def to_doc(self) -> dict:
        return {"resource": self.resource_id, "finding": self.kind, "detail": self.detail}


@dataclass
class DetectionTolerances:
    relative: float = DEFAULT_RELATIVE_TOLERANCE
    free_bytes: Bytes = DEFAULT_FREE_TOLERANCE_BYTES
    staleness_bound: Minutes = DEFAULT_STALENESS_BOUND


def audit_from_fabric(fabric: Fabric) -> list[AuditSample]:
    """Audit samples straight from simulator ground truth."""
    samples = []
    for sid in sorted(fabric.storage):
        node = fabric.storage[sid]
        samples.append(
            AuditSample(
                resource_id=sid,
                kind=ResourceKind.SE,
                used=node.used,
                free=node.free,
                write_refused=node.state is NodeState.UP and node.free < 1,
            )
        )
    for cid in sorted(fabric.compute):
        node = fabric.compute[cid]
        samples.append(
            AuditSample(
                resource_id=cid,
                kind=ResourceKind.CE,
                waiting=node.waiting,
                running=node.running,
            )
        )
    for wid in sorted(fabric.workload):
        samples.append(AuditSample(resource_id=wid, kind=ResourceKind.WMS))
    for svc_id in sorted(fabric.services):
        samples.append(AuditSample(resource_id=svc_id, kind=fabric.services[svc_id].kind))
    return samples


def _diverges(published: Optional[int], audited: Optional[int], tol: DetectionTolerances) -> bool:
    if published is None or audited is None or published < 0:
        return False
    if audited == 0:
        return published > tol.free_bytes
    return abs(published - audited) / audited > tol.relative


def detect_publication_errors(
    snapshot: InfoSnapshot,
    audit: Iterable[AuditSample],
    tolerances: Optional[DetectionTolerances] = None,
) -> list[Finding]:
    """Flag resources whose published record contradicts the audit.

    Finding kinds: FullButReportsFree, FreeSpaceMismatch, UsedSpaceMismatch,
    InvalidJobCounts, NegativeOrMissingFields, StaleHeartbeat,
    UnpublishedResource (audited but absent from the snapshot).
    """
    tol = tolerances or DetectionTolerances()
    audited = {s.resource_id: s for s in audit}
    findings: list[Finding] = []

    for rec in snapshot.records:
        rid = rec.resource_id
        if rec.kind is ResourceKind.SE:
            if rec.used is None or rec.free is None or rec.used < 0 or rec.free < 0:
                findings.append(
                    Finding(rid, "NegativeOrMissingFields", f"used={rec.used} free={rec.free}")
                )
        elif rec.kind is ResourceKind.CE:
            if rec.waiting is None or rec.running is None or rec.waiting < 0 or rec.running < 0:
                findings.append(
                    Finding(rid, "NegativeOrMissingFields", f"waiting={rec.waiting} running={rec.running}")
                )
        if snapshot.taken_at - rec.heartbeat > tol.staleness_bound:
            findings.append(
                Finding(rid, "StaleHeartbeat", f"record is {snapshot.taken_at - rec.heartbeat} minutes old")
            )
        sample = audited.get(rid)
        if sample is None:
            continue
        if rec.kind is ResourceKind.SE:
            if sample.write_refused and rec.free is not None and rec.free > tol.free_bytes:
                findings.append(
                    Finding(rid, "FullButReportsFree", f"write refused but published free={rec.free}")
                )
            if _diverges(rec.free, sample.free, tol):
                findings.append(
                    Finding(rid, "FreeSpaceMismatch", f"published free={rec.free} audited={sample.free}")
                )
            if _diverges(rec.used, sample.used, tol):
                findings.append(
                    Finding(rid, "UsedSpaceMismatch", f"published used={rec.used} audited={sample.used}")
                )
        elif rec.kind is ResourceKind.CE:
            if _diverges(rec.waiting, sample.waiting, tol) or _diverges(rec.running, sample.running, tol):
                findings.append(
                    Finding(
                        rid,
                        "InvalidJobCounts",
                        f"published {rec.waiting}/{rec.running} audited {sample.waiting}/{sample.running}",
                    )
                )

    published_ids = {rec.resource_id for rec in snapshot.records}
    for sample in audited.values():
        if sample.resource_id not in published_ids:
            findings.append(Finding(sample.resource_id, "UnpublishedResource", "absent from snapshot"))

    findings.sort(key=lambda f: (f.resource_id, f.kind))
    return findings


# -- heavy users ----------------------------------------------------------------


@dataclass
class HeavyUserEntry:
    storage_id: str
    owner: str
    bytes_owned: Bytes
    rank: int

    def to_doc(self) -> dict:
        return {
            "storage": self.storage_id,
            "owner": self.owner,
            "bytes_owned": self.bytes_owned,
            "rank": self.rank,
        }


@dataclass
class HeavyUserReport:
    storage_id: str
    rate: float
    entries: list[HeavyUserEntry]
    notification: str

    def to_doc(self) -> dict:
        return {
            "storage": self.storage_id,
            "rate": self.rate,
            "users": [e.to_doc() for e in self.entries],
            "notification": self.notification,
        }


def render_notification(storage_id: str, rate: float, entries: list[HeavyUserEntry]) -> str:
    text = HEAVY_USER_NOTIFICATION_HEADER.format(se=storage_id, rate=f"{rate * 100:.1f}%")
    for entry in entries:
        text += HEAVY_USER_NOTIFICATION_LINE.format(owner=entry.owner, bytes=entry.bytes_owned)
    return text


def scan_heavy_users(
    snapshot: InfoSnapshot,
    catalogue: Iterable[CatalogueEntry],
    threshold: float = DEFAULT_HEAVY_THRESHOLD,
    top_n: int = 10,
) -> list[HeavyUserReport]:
    """Per-owner byte totals on every SE filled strictly above the threshold,
    with a rendered notification template per SE. An SE sitting exactly at
    the threshold is not reported."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must be in [0,1], got {threshold}")
    if top_n < 1:
        raise ValidationError(f"top_n must be >= 1, got {top_n}")
    filling = compute_filling_rates(snapshot)
    catalogue = list(catalogue)
    reports = []
    for fe in filling.entries:
        if fe.data_quality is not DataQuality.OK or fe.rate is None or fe.rate <= threshold:
            continue
        owner_bytes: dict[str, int] = {}
        for entry in catalogue:
            replicas_here = sum(1 for sid, _ in entry.replicas if sid == fe.storage_id)
            if replicas_here:
                owner_bytes[entry.owner] = owner_bytes.get(entry.owner, 0) + entry.size * replicas_here
        ranked = sorted(owner_bytes.items(), key=lambda kv: (-kv[1], kv[0]))
        entries = [
            HeavyUserEntry(storage_id=fe.storage_id, owner=owner, bytes_owned=total, rank=i + 1)
            for i, (owner, total) in enumerate(ranked[:top_n])
        ]
        reports.append(
            HeavyUserReport(
                storage_id=fe.storage_id,
                rate=fe.rate,
                entries=entries,
                notification=render_notification(fe.storage_id, fe.rate, entries),
            )
        )
    return reports


# -- reconciliation ---------------------------------------------------------------


@dataclass
class ZombieFile:
    storage_id: str
    pfn: str
    size: Bytes
    owner: str

    def to_doc(self) -> dict:
        return {"storage": self.storage_id, "pfn": self.pfn, "size": self.size, "owner": self.owner}


@dataclass
class GhostReplica:
    lfn: str
    storage_id: str
    pfn: str

    def to_doc(self) -> dict:
        return {"lfn": self.lfn, "storage": self.storage_id, "pfn": self.pfn}


@dataclass
class ReconciliationReport:
    scanned_at: Minutes
    zombies: list[ZombieFile] = field(default_factory=list)
    ghosts: list[GhostReplica] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.zombies and not self.ghosts

    def to_doc(self) -> dict:
        return {
            "scanned_at": self.scanned_at,
            "zombies": [z.to_doc() for z in self.zombies],
            "ghosts": [g.to_doc() for g in self.ghosts],
        }


def reconcile(
    catalogue: Iterable[CatalogueEntry],
    inventories: dict[str, set[tuple[str, int, str]]],
    scanned_at: Minutes = 0,
) -> ReconciliationReport:
    """Set difference between the catalogue's replica view and the physical
    listing: zombies are stored but unregistered, ghosts registered but gone."""
    registered: set[tuple[str, str]] = set()
    ghosts: list[GhostReplica] = []
    for entry in catalogue:
        for sid, pfn in entry.replicas:
            registered.add((sid, pfn))
            present = any(inv_pfn == pfn for inv_pfn, _, _ in inventories.get(sid, ()))
            if not present:
                ghosts.append(GhostReplica(lfn=entry.lfn, storage_id=sid, pfn=pfn))
    zombies = [
        ZombieFile(storage_id=sid, pfn=pfn, size=size, owner=owner)
        for sid, files in inventories.items()
        for pfn, size, owner in files
        if (sid, pfn) not in registered
    ]
    zombies.sort(key=lambda z: (z.storage_id, z.pfn))
    ghosts.sort(key=lambda g: (g.lfn, g.storage_id))
    return ReconciliationReport(scanned_at=scanned_at, zombies=zombies, ghosts=ghosts)


# -- decommissioning ---------------------------------------------------------------


class PlanStatus(str, Enum):
    DRAFT = "Draft"
    RUNNING = "Running"
    DONE = "Done"
    ABORTED = "Aborted"


class Placement(str, Enum):
    MOST_FREE_FIRST = "MostFreeFirst"
    ROUND_ROBIN = "RoundRobin"


@dataclass
class MigrationStep:
    lfn: str
    source: str
    target: str
    size: Bytes

    def to_doc(self) -> dict:
        return {"lfn": self.lfn, "from": self.source, "to": self.target, "size": self.size}


@dataclass
class DecommissionPlan:
    source: str
    steps: list[MigrationStep] = field(default_factory=list)
    unplaceable: list[str] = field(default_factory=list)
    zombies: list[ZombieFile] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    status: PlanStatus = PlanStatus.DRAFT
    plan_id: str = ""
    completed_steps: int = 0
    error: str = ""

    def to_doc(self) -> dict:
        return {
            "plan_id": self.plan_id,
            "source": self.source,
            "status": self.status.value,
            "steps": [s.to_doc() for s in self.steps],
            "unplaceable": self.unplaceable,
            "zombies": [z.to_doc() for z in self.zombies],
            "skipped": self.skipped,
            "completed_steps": self.completed_steps,
            "error": self.error,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "DecommissionPlan":
        return cls(
            source=doc["source"],
            steps=[
                MigrationStep(lfn=s["lfn"], source=s["from"], target=s["to"], size=s["size"])
                for s in doc["steps"]
            ],
            unplaceable=list(doc.get("unplaceable", [])),
            zombies=[
                ZombieFile(z["storage"], z["pfn"], z["size"], z["owner"])
                for z in doc.get("zombies", [])
            ],
            skipped=list(doc.get("skipped", [])),
            status=PlanStatus(doc["status"]),
            plan_id=doc.get("plan_id", ""),
            completed_steps=int(doc.get("completed_steps", 0)),
            error=doc.get("error", ""),
        )


def plan_decommission(
    source: str,
    vo_set: VOResourceSet,
    snapshot: InfoSnapshot,
    catalogue: Iterable[CatalogueEntry],
    placement: Placement = Placement.MOST_FREE_FIRST,
    eligible: Optional[set[str]] = None,
    source_inventory: Optional[set[tuple[str, int, str]]] = None,
    only_sole_replicas: bool = False,
) -> DecommissionPlan:
    """Assign every registered replica on `source` to a target SE with enough
    projected free space (projections use published figures and account for
    earlier steps of the same plan). Zombies on the source have no catalogue
    identity to re-register, so they are surfaced in the preamble and never
    migrated. With only_sole_replicas, files that survive elsewhere are
    listed as skipped instead of planned."""
    member = vo_set.member_for(source)
    if member is None or member.kind is not ResourceKind.SE:
        raise ValidationError(f"{source} is not an SE in the VO resource set")

    targets = []
    for m in vo_set.members:
        if m.kind is not ResourceKind.SE or m.resource_id == source:
            continue
        if m.presence is not Presence.REGISTERED_AND_PUBLISHED:
            continue
        if eligible is not None and m.resource_id not in eligible:
            continue
        rec = snapshot.record_for(m.resource_id)
        if rec is None or rec.free is None or rec.free < 0:
            continue
        targets.append(m.resource_id)
    targets.sort()
    projected = {t: snapshot.record_for(t).free for t in targets}

    catalogue = list(catalogue)
    replicas_elsewhere: dict[str, set[str]] = {}
    to_move: list[tuple[str, int]] = []
    for entry in catalogue:
        on_source = any(sid == source for sid, _ in entry.replicas)
        if not on_source:
            continue
        others = {sid for sid, _ in entry.replicas if sid != source}
        replicas_elsewhere[entry.lfn] = others
        to_move.append((entry.lfn, entry.size))
    to_move.sort()

    plan = DecommissionPlan(source=source)
    rr_pointer = 0
    for lfn, size in to_move:
        if only_sole_replicas and replicas_elsewhere[lfn]:
            plan.skipped.append(lfn)
            continue
        candidates = [t for t in targets if t not in replicas_elsewhere[lfn]]
        chosen = None
        if placement is Placement.MOST_FREE_FIRST:
            fitting = [t for t in candidates if projected[t] >= size]
            if fitting:
                chosen = max(fitting, key=lambda t: (projected[t], t))
        elif placement is Placement.ROUND_ROBIN:
            for offset in range(len(targets)):
                t = targets[(rr_pointer + offset) % len(targets)] if targets else None
                if t in candidates and projected[t] >= size:
                    chosen = t
                    rr_pointer = (rr_pointer + offset + 1) % len(targets)
                    break
        else:
            raise ValidationError(f"unknown placement policy: {placement}")
        if chosen is None:
            plan.unplaceable.append(lfn)
        else:
            projected[chosen] -= size
            plan.steps.append(MigrationStep(lfn=lfn, source=source, target=chosen, size=size))

    if source_inventory is not None:
        registered_pfns = {
            pfn for entry in catalogue for sid, pfn in entry.replicas if sid == source
        }
        plan.zombies = sorted(
            (
                ZombieFile(storage_id=source, pfn=pfn, size=size, owner=owner)
                for pfn, size, owner in source_inventory
                if pfn not in registered_pfns
            ),
            key=lambda z: z.pfn,
        )
    return plan


def execute_migration(fabric: Fabric, plan: DecommissionPlan) -> DecommissionPlan:
    """Run the plan's steps in order. Each step copies the replica to the
    target, registers it, then deregisters and removes the source replica;
    both halves are atomic fabric operations, so any failure leaves the
    catalogue consistent and the plan Aborted with completed steps intact."""
    if plan.status is not PlanStatus.DRAFT:
        raise ValidationError(f"plan is {plan.status.value}, expected Draft")
    plan.status = PlanStatus.RUNNING
    for step in plan.steps:
        try:
            fabric.add_replica(step.lfn, step.target)
            fabric.remove_replica(step.lfn, step.source)
        except GridOpsError as exc:
            plan.status = PlanStatus.ABORTED
            plan.error = f"{step.lfn} -> {step.target}: {exc}"
            return plan
        plan.completed_steps += 1
    plan.status = PlanStatus.DONE
    return plan


def cleanup_departed(
    catalogue: Iterable[CatalogueEntry], members: set[str]
) -> tuple[list[CatalogueEntry], Bytes]:
    """Report-only scan for files whose owner left the VO. Reclaimable bytes
    count every replica; execution goes through the same atomic delete path
    as migration steps."""
    doomed = sorted(
        (entry for entry in catalogue if entry.owner not in members),
        key=lambda e: e.lfn,
    )
    reclaimable = sum(entry.size * len(entry.replicas) for entry in doomed)
    return doomed, reclaimable
