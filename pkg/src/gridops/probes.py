"""Probe execution, alarm hysteresis and per-VO availability reporting.

Probes exercise the fabric's ground-truth behaviour (can I reach the node,
can I round-trip one byte) and never look at published figures, which is why
publication faults are invisible here and are handled by the storage audit
instead.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import UnknownResourceError, ValidationError
from .fabric import Fabric, Minutes, NodeState, ResourceKind
from .serialize import to_csv
from .topology import DowntimeWindow, VOResourceSet

DEFAULT_RAISE_AFTER = 3
DEFAULT_CLEAR_AFTER = 2


class ProbeCheck(str, Enum):
    SE_READ_WRITE = "SEReadWrite"
    CE_SUBMIT = "CESubmit"
    WMS_PING = "WMSPing"
    CATALOGUE_LOOKUP = "CatalogueLookup"
    VOMS_PING = "VOMSPing"


CHECK_KIND = {
    ProbeCheck.SE_READ_WRITE: ResourceKind.SE,
    ProbeCheck.CE_SUBMIT: ResourceKind.CE,
    ProbeCheck.WMS_PING: ResourceKind.WMS,
    ProbeCheck.CATALOGUE_LOOKUP: ResourceKind.CATALOGUE,
    ProbeCheck.VOMS_PING: ResourceKind.VOMS,
}


class Outcome(str, Enum):
    OK = "Ok"
    FAIL = "Fail"


@dataclass
class ProbeSpec:
    kind: ResourceKind
    check: ProbeCheck
    interval: Minutes = 30

    def __post_init__(self):
        if self.interval <= 0:
            raise ValidationError(f"probe interval must be > 0, got {self.interval}")


@dataclass
class ProbeResult:
    resource_id: str
    check: ProbeCheck
    at: Minutes
    outcome: Outcome
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.OK

    def to_doc(self) -> dict:
        return {
            "resource": self.resource_id,
            "check": self.check.value,
            "at": self.at,
            "outcome": self.outcome.value,
            "detail": self.detail,
        }


@dataclass
class Alarm:
    alarm_id: str
    resource_id: str
    check: ProbeCheck
    raised_at: Minutes
    cleared_at: Optional[Minutes] = None
    consecutive_failures: int = 0
    linked_ticket: Optional[str] = None

    @property
    def open(self) -> bool:
        return self.cleared_at is None

    def to_doc(self) -> dict:
        return {
            "alarm_id": self.alarm_id,
            "resource": self.resource_id,
            "check": self.check.value,
            "raised_at": self.raised_at,
            "cleared_at": self.cleared_at,
            "consecutive_failures": self.consecutive_failures,
            "linked_ticket": self.linked_ticket,
        }


@dataclass
class AlarmPolicy:
    raise_after: int = DEFAULT_RAISE_AFTER
    clear_after: int = DEFAULT_CLEAR_AFTER

    def __post_init__(self):
        if self.raise_after < 1 or self.clear_after < 1:
            raise ValidationError("alarm policy thresholds must be >= 1")


def run_probe(fabric: Fabric, resource_id: str, check: ProbeCheck) -> ProbeResult:
    """Execute one check against ground truth. Unknown resources are a
    rejection, not a Fail: the caller asked about something that isn't there."""
    node = fabric.find(resource_id)
    if node is None:
        raise UnknownResourceError(resource_id)
    expected = CHECK_KIND[check]
    if fabric.kind_of(resource_id) is not expected:
        raise ValidationError(f"check {check.value} does not apply to {resource_id}")
    at = fabric.clock.now

    if node.state is not NodeState.UP:
        return ProbeResult(resource_id, check, at, Outcome.FAIL, "unavailable")
    if check is ProbeCheck.SE_READ_WRITE and node.free < 1:
        # 1-byte write+read+delete round trip refused for lack of space
        return ProbeResult(resource_id, check, at, Outcome.FAIL, "write refused: StorageFull")
    return ProbeResult(resource_id, check, at, Outcome.OK)


def probe_cycle(
    fabric: Fabric, specs: Iterable[ProbeSpec], vo_set: VOResourceSet
) -> list[ProbeResult]:
    """One scheduling tick: every VO member whose kind matches a spec due at
    the current clock offset gets exactly one result. Members the fabric does
    not know (stale registry entries) fail rather than vanish."""
    now = fabric.clock.now
    results = []
    for spec in specs:
        if now % spec.interval != 0:
            continue
        for member in vo_set.members:
            if member.kind is not spec.kind:
                continue
            try:
                results.append(run_probe(fabric, member.resource_id, spec.check))
            except UnknownResourceError:
                results.append(
                    ProbeResult(member.resource_id, spec.check, now, Outcome.FAIL, "unknown resource")
                )
    results.sort(key=lambda r: (r.resource_id, r.check.value))
    return results


def evaluate_alarms(
    history: Iterable[ProbeResult],
    open_alarms: Iterable[Alarm] = (),
    policy: Optional[AlarmPolicy] = None,
) -> list[Alarm]:
    """Recompute the alarm list from the full probe history.

    An alarm is raised on the k-th consecutive Fail of a (resource, check)
    stream and cleared on the m-th consecutive Ok. Recomputing from history
    keeps the function deterministic; ticket links on previously known
    alarms are carried over by alarm id.
    """
    policy = policy or AlarmPolicy()
    links = {a.alarm_id: a.linked_ticket for a in open_alarms if a.linked_ticket}

    streams: dict[tuple[str, ProbeCheck], list[ProbeResult]] = {}
    for result in history:
        streams.setdefault((result.resource_id, result.check), []).append(result)

    alarms: list[Alarm] = []
    for (rid, check), results in streams.items():
        results.sort(key=lambda r: r.at)
        consec_fail = 0
        consec_ok = 0
        current: Optional[Alarm] = None
        run_unbroken = False
        for result in results:
            if result.outcome is Outcome.FAIL:
                consec_fail += 1
                consec_ok = 0
                if current is None and consec_fail == policy.raise_after:
                    current = Alarm(
                        alarm_id=f"{rid}|{check.value}|{result.at}",
                        resource_id=rid,
                        check=check,
                        raised_at=result.at,
                        consecutive_failures=consec_fail,
                    )
                    alarms.append(current)
                    run_unbroken = True
                elif current is not None and run_unbroken:
                    current.consecutive_failures = consec_fail
            else:
                consec_ok += 1
                consec_fail = 0
                run_unbroken = False
                if current is not None and consec_ok == policy.clear_after:
                    current.cleared_at = result.at
                    current = None

    for alarm in alarms:
        if alarm.alarm_id in links:
            alarm.linked_ticket = links[alarm.alarm_id]
    alarms.sort(key=lambda a: (a.raised_at, a.resource_id, a.check.value))
    return alarms


@dataclass
class ResourceFigures:
    availability: Optional[float]
    reliability: Optional[float]
    total: int
    ok: int
    in_downtime: int


@dataclass
class AvailabilityReport:
    window: tuple[Minutes, Minutes]
    per_resource: dict[str, ResourceFigures]
    availability: Optional[float]
    reliability: Optional[float]

    def to_doc(self) -> dict:
        return {
            "window": {"start": self.window[0], "end": self.window[1]},
            "resources": {
                rid: {
                    "availability": fig.availability,
                    "reliability": fig.reliability,
                    "total": fig.total,
                    "ok": fig.ok,
                    "in_downtime": fig.in_downtime,
                }
                for rid, fig in sorted(self.per_resource.items())
            },
            "aggregate": {"availability": self.availability, "reliability": self.reliability},
        }

    def to_csv(self) -> str:
        rows = [
            {
                "resource-id": rid,
                "window-start": self.window[0],
                "window-end": self.window[1],
                "availability": fig.availability,
                "reliability": fig.reliability,
            }
            for rid, fig in sorted(self.per_resource.items())
        ]
        return to_csv(rows, ["resource-id", "window-start", "window-end", "availability", "reliability"])


def availability_report(
    results: Iterable[ProbeResult],
    scope: set[str],
    window: tuple[Minutes, Minutes],
    downtimes: Iterable[DowntimeWindow] = (),
) -> AvailabilityReport:
    """Availability and downtime-excluded reliability, scoped to a VO.

    availability = Ok / total in window. reliability drops results that fell
    inside a declared downtime from the denominator only, so it can never be
    lower than availability; it is capped at 1.0. Resources with no results
    report unknown figures and stay out of the aggregate, which is an
    unweighted mean over the scope.
    """
    t0, t1 = window
    if t0 >= t1:
        raise ValidationError(f"window must have start < end, got [{t0}, {t1})")
    if not scope:
        raise ValidationError("scope must name at least one resource")
    results = list(results)

    windows_by_resource: dict[str, list[DowntimeWindow]] = {}
    for w in downtimes:
        windows_by_resource.setdefault(w.resource_id, []).append(w)

    def in_downtime(rid: str, at: Minutes) -> bool:
        return any(w.start <= at < w.end for w in windows_by_resource.get(rid, ()))

    per_resource: dict[str, ResourceFigures] = {}
    for rid in sorted(scope):
        total = ok = excluded = 0
        for result in results:
            if result.resource_id != rid or not t0 <= result.at < t1:
                continue
            total += 1
            if result.ok:
                ok += 1
            if in_downtime(rid, result.at):
                excluded += 1
        availability = ok / total if total else None
        denom = total - excluded
        reliability = min(1.0, ok / denom) if denom > 0 else None
        per_resource[rid] = ResourceFigures(availability, reliability, total, ok, excluded)

    avail_known = [f.availability for f in per_resource.values() if f.availability is not None]
    rel_known = [f.reliability for f in per_resource.values() if f.reliability is not None]
    return AvailabilityReport(
        window=window,
        per_resource=per_resource,
        availability=sum(avail_known) / len(avail_known) if avail_known else None,
        reliability=sum(rel_known) / len(rel_known) if rel_known else None,
    )
