"""Simulated grid fabric.

Storage/compute/workload nodes, a file catalogue and an information system
with injectable publication faults. Ground truth (what is actually stored,
queued, up or down) is kept strictly separate from what each resource
*publishes*: faults corrupt the published view only. Time is logical, in
integer minutes, driven by advance_clock().
"""

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .errors import (
    DuplicateIdError,
    StorageFullError,
    UnavailableError,
    UnknownResourceError,
    ValidationError,
)

Minutes = int
Bytes = int


class NodeState(str, Enum):
    UP = "Up"
    DOWN = "Down"
    DEGRADED = "Degraded"


class ResourceKind(str, Enum):
    SE = "SE"
    CE = "CE"
    WMS = "WMS"
    CATALOGUE = "Catalogue"
    VOMS = "VOMS"


class FaultKind(str, Enum):
    FULL_REPORTS_FREE = "FullReportsFree"
    OVERSTATE_FREE_SPACE = "OverstateFreeSpace"
    UNDERREPORT_USED = "UnderreportUsed"
    INVALID_JOB_COUNTS = "InvalidJobCounts"
    STALE_RECORD = "StaleRecord"
    UNPUBLISHED = "Unpublished"


@dataclass
class SimClock:
    now: Minutes = 0


@dataclass
class FaultSpec:
    """One publication fault. magnitude is a fraction for the relative kinds
    and absolute bytes for FullReportsFree; unused for StaleRecord/Unpublished."""

    kind: FaultKind
    magnitude: float = 0.0
    since: Minutes = 0
    # record captured at onset, used by StaleRecord only
    frozen: Optional["InfoRecord"] = None

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValidationError(f"fault magnitude must be >= 0, got {self.magnitude}")


@dataclass
class StoredFile:
    size: Bytes
    owner: str
    created: Minutes


@dataclass
class StorageNode:
    id: str
    site: str
    capacity: Bytes
    files: dict[str, StoredFile] = field(default_factory=dict)
    state: NodeState = NodeState.UP
    publication_fault: Optional[FaultSpec] = None

    @property
    def used(self) -> Bytes:
        return sum(f.size for f in self.files.values())

    @property
    def free(self) -> Bytes:
        return self.capacity - self.used


@dataclass
class ComputeNode:
    id: str
    site: str
    waiting: int = 0
    running: int = 0
    state: NodeState = NodeState.UP
    publication_fault: Optional[FaultSpec] = None


@dataclass
class WorkloadNode:
    id: str
    state: NodeState = NodeState.UP
    publication_fault: Optional[FaultSpec] = None


@dataclass
class ServiceNode:
    """Single-point-of-failure service: file catalogue or VO membership server."""

    id: str
    kind: ResourceKind
    state: NodeState = NodeState.UP
    publication_fault: Optional[FaultSpec] = None


@dataclass
class CatalogueEntry:
    """Logical file: one owner, one size, replicas as (storage-id, physical name).

    Size lives on the entry (the catalogue knows file sizes), so auditing
    tools can sum per-owner bytes without touching the storage nodes.
    """

    lfn: str
    owner: str
    size: Bytes
    replicas: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class InfoRecord:
    resource_id: str
    kind: ResourceKind
    used: Optional[Bytes] = None
    free: Optional[Bytes] = None
    waiting: Optional[int] = None
    running: Optional[int] = None
    heartbeat: Minutes = 0

    def to_doc(self) -> dict:
        return {
            "resource": self.resource_id,
            "kind": self.kind.value,
            "used": self.used,
            "free": self.free,
            "waiting": self.waiting,
            "running": self.running,
            "heartbeat": self.heartbeat,
        }


@dataclass
class InfoSnapshot:
    taken_at: Minutes
    records: list[InfoRecord]

    def record_for(self, resource_id: str) -> Optional[InfoRecord]:
        for rec in self.records:
            if rec.resource_id == resource_id:
                return rec
        return None

    def to_doc(self) -> dict:
        return {"taken_at": self.taken_at, "records": [r.to_doc() for r in self.records]}


@dataclass
class ScenarioEvent:
    at: Minutes
    action: str  # set_state | inject_fault | clear_fault
    resource: str
    state: Optional[NodeState] = None
    fault: Optional[FaultSpec] = None


@dataclass
class FileSpec:
    lfn: str
    owner: str
    storage: str
    size: Bytes


@dataclass
class FabricSpec:
    storage: list[StorageNode] = field(default_factory=list)
    compute: list[ComputeNode] = field(default_factory=list)
    workload: list[WorkloadNode] = field(default_factory=list)
    services: list[ServiceNode] = field(default_factory=list)
    files: list[FileSpec] = field(default_factory=list)
    events: list[ScenarioEvent] = field(default_factory=list)
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "FabricSpec":
        spec = cls(seed=int(doc.get("seed", 0)))
        for node in doc.get("storage", []):
            spec.storage.append(
                StorageNode(id=node["id"], site=node.get("site", ""), capacity=int(node["capacity"]))
            )
        for node in doc.get("compute", []):
            spec.compute.append(
                ComputeNode(
                    id=node["id"],
                    site=node.get("site", ""),
                    waiting=int(node.get("waiting", 0)),
                    running=int(node.get("running", 0)),
                )
            )
        for node in doc.get("workload", []):
            spec.workload.append(WorkloadNode(id=node["id"]))
        for node in doc.get("services", []):
            spec.services.append(ServiceNode(id=node["id"], kind=ResourceKind(node["kind"])))
        for f in doc.get("files", []):
            spec.files.append(
                FileSpec(lfn=f["lfn"], owner=f["owner"], storage=f["storage"], size=int(f["size"]))
            )
        for ev in doc.get("events", []):
            spec.events.append(
                ScenarioEvent(
                    at=int(ev["at"]),
                    action=ev["action"],
                    resource=ev["resource"],
                    state=NodeState(ev["state"]) if "state" in ev else None,
                    fault=_fault_from_doc(ev["fault"], since=int(ev["at"])) if "fault" in ev else None,
                )
            )
        return spec

    @classmethod
    def from_json(cls, path: str | Path) -> "FabricSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _fault_from_doc(doc: dict, since: Minutes = 0) -> FaultSpec:
    return FaultSpec(
        kind=FaultKind(doc["kind"]),
        magnitude=float(doc.get("magnitude", 0.0)),
        since=int(doc.get("since", since)),
    )


def physical_name(lfn: str, storage_id: str) -> str:
    """Deterministic physical file name for a replica of lfn on a node."""
    digest = hashlib.sha1(f"{lfn}@{storage_id}".encode()).hexdigest()
    return f"pf-{digest[:20]}"


class Fabric:
    """Single logical owner of all simulated state.

    Mutations go through the methods below; snapshots handed out are fresh
    objects, safe for concurrent readers.
    """

    def __init__(self, seed: int = 0):
        self.clock = SimClock(0)
        self.storage: dict[str, StorageNode] = {}
        self.compute: dict[str, ComputeNode] = {}
        self.workload: dict[str, WorkloadNode] = {}
        self.services: dict[str, ServiceNode] = {}
        self.catalogue: dict[str, CatalogueEntry] = {}
        self.rng = random.Random(seed)
        self._pending_events: list[tuple[int, ScenarioEvent]] = []
        self._synth_counter = 0

    # -- lookup ------------------------------------------------------------

    def find(self, resource_id: str):
        for pool in (self.storage, self.compute, self.workload, self.services):
            if resource_id in pool:
                return pool[resource_id]
        return None

    def require(self, resource_id: str):
        node = self.find(resource_id)
        if node is None:
            raise UnknownResourceError(resource_id)
        return node

    def kind_of(self, resource_id: str) -> ResourceKind:
        if resource_id in self.storage:
            return ResourceKind.SE
        if resource_id in self.compute:
            return ResourceKind.CE
        if resource_id in self.workload:
            return ResourceKind.WMS
        if resource_id in self.services:
            return self.services[resource_id].kind
        raise UnknownResourceError(resource_id)

    def all_resource_ids(self) -> list[str]:
        ids: list[str] = []
        for pool in (self.storage, self.compute, self.workload, self.services):
            ids.extend(pool.keys())
        return sorted(ids)

    # -- clock and events ----------------------------------------------------

    def advance_clock(self, minutes: Minutes) -> Minutes:
        if minutes < 0:
            raise ValidationError(f"cannot advance clock by {minutes} minutes")
        self.clock.now += minutes
        self._fire_due_events()
        return self.clock.now

    def _fire_due_events(self):
        due = [(ev.at, seq, ev) for seq, ev in self._pending_events if ev.at <= self.clock.now]
        due.sort(key=lambda item: (item[0], item[1]))
        fired = {seq for _, seq, _ in due}
        self._pending_events = [(seq, ev) for seq, ev in self._pending_events if seq not in fired]
        for _, _, ev in due:
            self._apply_event(ev)

    def _apply_event(self, ev: ScenarioEvent):
        node = self.require(ev.resource)
        if ev.action == "set_state":
            node.state = ev.state
        elif ev.action == "inject_fault":
            fault = FaultSpec(kind=ev.fault.kind, magnitude=ev.fault.magnitude, since=ev.at)
            self.inject_fault(ev.resource, fault)
        elif ev.action == "clear_fault":
            node.publication_fault = None
        else:
            raise ValidationError(f"unknown scenario event action: {ev.action}")

    # -- faults --------------------------------------------------------------

    def inject_fault(self, resource_id: str, fault: FaultSpec):
        node = self.require(resource_id)
        if fault.kind is FaultKind.STALE_RECORD and fault.frozen is None:
            fault.frozen = self._truth_record(resource_id, heartbeat=fault.since)
        node.publication_fault = fault

    def clear_fault(self, resource_id: str):
        self.require(resource_id).publication_fault = None

    # -- files and catalogue ---------------------------------------------------

    def write_file(self, storage_id: str, owner: str, lfn: str, size: Bytes):
        """Store a physical file and register the replica, atomically."""
        if storage_id not in self.storage:
            raise UnknownResourceError(storage_id)
        node = self.storage[storage_id]
        if node.state is not NodeState.UP:
            raise UnavailableError(f"{storage_id} is {node.state.value}")
        if size < 0:
            raise ValidationError("file size must be >= 0")
        if node.free < size:
            raise StorageFullError(f"{storage_id}: {size} bytes requested, {node.free} free")
        entry = self.catalogue.get(lfn)
        if entry is not None:
            if entry.size != size:
                raise ValidationError(f"{lfn} already registered with size {entry.size}")
            if entry.owner != owner:
                raise ValidationError(f"{lfn} already registered to {entry.owner}")
            if any(sid == storage_id for sid, _ in entry.replicas):
                raise ValidationError(f"{lfn} already has a replica on {storage_id}")
        pfn = physical_name(lfn, storage_id)
        node.files[pfn] = StoredFile(size=size, owner=owner, created=self.clock.now)
        if entry is None:
            entry = CatalogueEntry(lfn=lfn, owner=owner, size=size)
            self.catalogue[lfn] = entry
        entry.replicas.append((storage_id, pfn))
        return entry, pfn

    def add_replica(self, lfn: str, target_id: str):
        """Copy a registered file onto another node (migration step, first half)."""
        entry = self.catalogue.get(lfn)
        if entry is None:
            raise UnknownResourceError(lfn)
        if target_id not in self.storage:
            raise UnknownResourceError(target_id)
        node = self.storage[target_id]
        if node.state is not NodeState.UP:
            raise UnavailableError(f"{target_id} is {node.state.value}")
        if any(sid == target_id for sid, _ in entry.replicas):
            raise ValidationError(f"{lfn} already has a replica on {target_id}")
        if node.free < entry.size:
            raise StorageFullError(f"{target_id}: {entry.size} bytes requested, {node.free} free")
        pfn = physical_name(lfn, target_id)
        node.files[pfn] = StoredFile(size=entry.size, owner=entry.owner, created=self.clock.now)
        entry.replicas.append((target_id, pfn))
        return pfn

    def remove_replica(self, lfn: str, storage_id: str):
        """Deregister and physically remove one replica. Dropping the last
        replica removes the catalogue entry too (no transiently empty entries)."""
        entry = self.catalogue.get(lfn)
        if entry is None:
            raise UnknownResourceError(lfn)
        match = [(sid, pfn) for sid, pfn in entry.replicas if sid == storage_id]
        if not match:
            raise ValidationError(f"{lfn} has no replica on {storage_id}")
        node = self.storage.get(storage_id)
        if node is None:
            raise UnknownResourceError(storage_id)
        if node.state is not NodeState.UP:
            raise UnavailableError(f"{storage_id} is {node.state.value}")
        sid, pfn = match[0]
        node.files.pop(pfn, None)
        entry.replicas.remove((sid, pfn))
        if not entry.replicas:
            del self.catalogue[lfn]

    def delete_entry(self, lfn: str):
        """Catalogue-driven delete: all registered replicas go away with the entry."""
        entry = self.catalogue.get(lfn)
        if entry is None:
            raise UnknownResourceError(lfn)
        for sid, _ in entry.replicas:
            node = self.storage.get(sid)
            if node is not None and node.state is not NodeState.UP:
                raise UnavailableError(f"{sid} is {node.state.value}")
        for sid, pfn in entry.replicas:
            node = self.storage.get(sid)
            if node is not None:
                node.files.pop(pfn, None)
        del self.catalogue[lfn]

    def corrupt_consistency(
        self,
        mode: str,
        lfn: Optional[str] = None,
        storage_id: Optional[str] = None,
        owner: Optional[str] = None,
        size: Bytes = 0,
    ):
        """Break catalogue/storage consistency on purpose.

        With an (lfn, storage_id) pair: MakeZombie drops the registration and
        keeps the bytes; MakeGhost drops the bytes and keeps the registration.
        Without an lfn, a fresh inconsistency is synthesised on storage_id.
        """
        if mode not in ("MakeZombie", "MakeGhost"):
            raise ValidationError(f"unknown corruption mode: {mode}")
        if storage_id is None or storage_id not in self.storage:
            raise UnknownResourceError(str(storage_id))
        node = self.storage[storage_id]

        if lfn is None:
            return self._synthesize_inconsistency(mode, node, owner or "unknown", size)

        entry = self.catalogue.get(lfn)
        pfn = physical_name(lfn, storage_id)
        registered = entry is not None and (storage_id, pfn) in entry.replicas
        physical = pfn in node.files
        if not registered and not physical:
            raise ValidationError(f"no such pair: ({lfn}, {storage_id})")
        if registered != physical:
            raise ValidationError(f"pair ({lfn}, {storage_id}) already inconsistent")

        if mode == "MakeZombie":
            entry.replicas.remove((storage_id, pfn))
            if not entry.replicas:
                del self.catalogue[lfn]
        else:
            del node.files[pfn]
        return pfn

    def _synthesize_inconsistency(self, mode: str, node: StorageNode, owner: str, size: Bytes):
        self._synth_counter += 1
        if mode == "MakeZombie":
            pfn = physical_name(f"synth-{self._synth_counter}", node.id)
            if node.free < size:
                raise StorageFullError(f"{node.id}: cannot synthesize {size}-byte zombie")
            node.files[pfn] = StoredFile(size=size, owner=owner, created=self.clock.now)
            return pfn
        lfn = f"lfn:/synthetic/ghost-{self._synth_counter}"
        pfn = physical_name(lfn, node.id)
        self.catalogue[lfn] = CatalogueEntry(
            lfn=lfn, owner=owner, size=size, replicas=[(node.id, pfn)]
        )
        return pfn

    # -- information system ------------------------------------------------------

    def publish_info(self) -> InfoSnapshot:
        """BDII-style snapshot: ground truth filtered through publication faults."""
        records = []
        for rid in self.all_resource_ids():
            rec = self._published_record(rid)
            if rec is not None:
                records.append(rec)
        return InfoSnapshot(taken_at=self.clock.now, records=records)

    def _truth_record(self, resource_id: str, heartbeat: Optional[Minutes] = None) -> InfoRecord:
        node = self.require(resource_id)
        hb = self.clock.now if heartbeat is None else heartbeat
        kind = self.kind_of(resource_id)
        if kind is ResourceKind.SE:
            return InfoRecord(resource_id, kind, used=node.used, free=node.free, heartbeat=hb)
        if kind is ResourceKind.CE:
            return InfoRecord(resource_id, kind, waiting=node.waiting, running=node.running, heartbeat=hb)
        return InfoRecord(resource_id, kind, heartbeat=hb)

    def _published_record(self, resource_id: str) -> Optional[InfoRecord]:
        node = self.require(resource_id)
        fault = node.publication_fault
        truth = self._truth_record(resource_id)
        if fault is None:
            return truth
        kind = fault.kind
        if kind is FaultKind.UNPUBLISHED:
            return None
        if kind is FaultKind.STALE_RECORD:
            f = fault.frozen
            return InfoRecord(f.resource_id, f.kind, f.used, f.free, f.waiting, f.running, f.heartbeat)
        if kind is FaultKind.FULL_REPORTS_FREE and truth.free is not None:
            truth.free = max(int(fault.magnitude), 1)
        elif kind is FaultKind.OVERSTATE_FREE_SPACE and truth.free is not None:
            truth.free = int(round(truth.free * (1 + fault.magnitude)))
        elif kind is FaultKind.UNDERREPORT_USED and truth.used is not None:
            truth.used = int(round(truth.used * (1 - fault.magnitude)))
        elif kind is FaultKind.INVALID_JOB_COUNTS and truth.waiting is not None:
            truth.waiting = int(truth.waiting * (1 + fault.magnitude))
            truth.running = int(truth.running * (1 + fault.magnitude))
        return truth

    # -- derived views ---------------------------------------------------------

    def inventories(self) -> dict[str, set[tuple[str, int, str]]]:
        """Physical listing per SE: {storage-id: {(pfn, size, owner)}}."""
        return {
            sid: {(pfn, f.size, f.owner) for pfn, f in node.files.items()}
            for sid, node in self.storage.items()
        }

    def entries(self) -> list[CatalogueEntry]:
        """Catalogue contents as an immutable-by-convention copy."""
        return [
            CatalogueEntry(e.lfn, e.owner, e.size, list(e.replicas))
            for e in self.catalogue.values()
        ]


def init_fabric(spec: FabricSpec) -> Fabric:
    """Build a fabric from a spec: all nodes Up, preloaded files consistently
    registered, events with due-time 0 already applied."""
    fabric = Fabric(seed=spec.seed)
    seen: set[str] = set()
    for node in spec.storage + spec.compute + spec.workload + spec.services:
        if node.id in seen:
            raise DuplicateIdError(node.id)
        seen.add(node.id)
    for node in spec.storage:
        fabric.storage[node.id] = StorageNode(id=node.id, site=node.site, capacity=node.capacity)
    for node in spec.compute:
        if node.waiting < 0 or node.running < 0:
            raise ValidationError(f"{node.id}: queue counts must be >= 0")
        fabric.compute[node.id] = ComputeNode(
            id=node.id, site=node.site, waiting=node.waiting, running=node.running
        )
    for node in spec.workload:
        fabric.workload[node.id] = WorkloadNode(id=node.id)
    for node in spec.services:
        fabric.services[node.id] = ServiceNode(id=node.id, kind=node.kind)
    for f in spec.files:
        fabric.write_file(f.storage, f.owner, f.lfn, f.size)
    fabric._pending_events = list(enumerate(spec.events))
    fabric._fire_due_events()
    return fabric
