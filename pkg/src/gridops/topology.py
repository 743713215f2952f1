"""VO resource topology.

Merges the static registry view with the dynamic information-system view,
tracks scheduled downtimes, and refines the merged set into a whitelist of
resources certified reliable for the VO. All functions here are pure.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import ValidationError
from .fabric import InfoSnapshot, Minutes, ResourceKind

DEFAULT_MAX_FILLING = 0.80
DEFAULT_ALARM_LOOKBACK = 1440  # minutes


class Presence(str, Enum):
    REGISTERED_AND_PUBLISHED = "RegisteredAndPublished"
    REGISTERED_ONLY = "RegisteredOnly"
    PUBLISHED_ONLY = "PublishedOnly"


@dataclass
class RegistryEntry:
    resource_id: str
    kind: ResourceKind
    site: str = ""
    in_production: bool = True


@dataclass
class DowntimeWindow:
    resource_id: str
    start: Minutes
    end: Minutes
    reason: str = ""

    def __post_init__(self):
        if self.start >= self.end:
            raise ValidationError(f"downtime window must have start < end, got [{self.start}, {self.end})")


@dataclass
class Member:
    resource_id: str
    kind: ResourceKind
    presence: Presence


@dataclass
class VOResourceSet:
    computed_at: Minutes
    members: list[Member] = field(default_factory=list)

    def ids(self) -> set[str]:
        return {m.resource_id for m in self.members}

    def member_for(self, resource_id: str) -> Optional[Member]:
        for m in self.members:
            if m.resource_id == resource_id:
                return m
        return None

    def to_doc(self) -> dict:
        return {
            "computed_at": self.computed_at,
            "members": [
                {"resource": m.resource_id, "kind": m.kind.value, "presence": m.presence.value}
                for m in self.members
            ],
        }


@dataclass
class WhitelistPolicy:
    max_filling: float = DEFAULT_MAX_FILLING
    alarm_lookback: Minutes = DEFAULT_ALARM_LOOKBACK

    def __post_init__(self):
        if not 0.0 <= self.max_filling <= 1.0:
            raise ValidationError(f"max_filling must be in [0,1], got {self.max_filling}")
        if self.alarm_lookback < 0:
            raise ValidationError("alarm_lookback must be >= 0")


@dataclass
class WhiteList:
    computed_at: Minutes
    members: set[str]
    criteria: dict

    def to_doc(self) -> dict:
        return {
            "computed_at": self.computed_at,
            "members": sorted(self.members),
            "criteria": self.criteria,
        }


def merge_topology(
    registry: Iterable[RegistryEntry], snapshot: InfoSnapshot, at: Minutes
) -> VOResourceSet:
    """Classify every known resource by where it appears.

    Resources whose registry entry is out of production are excluded
    entirely, even when the information system still publishes them.
    """
    by_id = {entry.resource_id: entry for entry in registry}
    published = {rec.resource_id: rec for rec in snapshot.records}
    members = []
    for rid in sorted(set(by_id) | set(published)):
        entry = by_id.get(rid)
        if entry is not None and not entry.in_production:
            continue
        if entry is not None and rid in published:
            presence = Presence.REGISTERED_AND_PUBLISHED
            kind = entry.kind
        elif entry is not None:
            presence = Presence.REGISTERED_ONLY
            kind = entry.kind
        else:
            presence = Presence.PUBLISHED_ONLY
            kind = published[rid].kind
        members.append(Member(resource_id=rid, kind=kind, presence=presence))
    return VOResourceSet(computed_at=at, members=members)


def active_downtimes(windows: Iterable[DowntimeWindow], at: Minutes) -> set[str]:
    """Resources inside a declared window at instant `at` (end exclusive)."""
    return {w.resource_id for w in windows if w.start <= at < w.end}


def compute_whitelist(
    vo_set: VOResourceSet,
    downtimes_active: set[str],
    filling,  # list of storage_ops.FillingRateReport
    alarms_recent,  # list of probes.Alarm
    policy: Optional[WhitelistPolicy] = None,
) -> WhiteList:
    """Refine the VO resource set into the certified-reliable members.

    A member qualifies when it is both registered and published, not in an
    active downtime, quiet on the alarm front for the policy lookback, and
    (for SEs) filling at most policy.max_filling on the latest trustworthy
    figure. SEs whose latest filling entry is marked Suspect are excluded:
    a resource publishing garbage cannot be certified.
    """
    policy = policy or WhitelistPolicy()
    at = vo_set.computed_at
    latest_rate: dict[str, tuple[Minutes, Optional[float], str]] = {}
    for report in filling:
        for entry in report.entries:
            prev = latest_rate.get(entry.storage_id)
            if prev is None or report.taken_at >= prev[0]:
                latest_rate[entry.storage_id] = (report.taken_at, entry.rate, entry.data_quality.value)

    alarmed: set[str] = set()
    for alarm in alarms_recent:
        if alarm.raised_at > at:
            continue
        open_recently = alarm.cleared_at is None or alarm.cleared_at > at - policy.alarm_lookback
        if open_recently:
            alarmed.add(alarm.resource_id)

    members: set[str] = set()
    for m in vo_set.members:
        if m.presence is not Presence.REGISTERED_AND_PUBLISHED:
            continue
        if m.resource_id in downtimes_active:
            continue
        if m.resource_id in alarmed:
            continue
        if m.kind is ResourceKind.SE and m.resource_id in latest_rate:
            _, rate, quality = latest_rate[m.resource_id]
            if quality != "Ok" or rate is None or rate > policy.max_filling:
                continue
        members.add(m.resource_id)
    return WhiteList(
        computed_at=at,
        members=members,
        criteria={"max_filling": policy.max_filling, "alarm_lookback": policy.alarm_lookback},
    )


def diff_topology(old: VOResourceSet, new: VOResourceSet):
    """Three disjoint id lists: added, removed, presence changed."""
    old_by_id = {m.resource_id: m for m in old.members}
    new_by_id = {m.resource_id: m for m in new.members}
    added = sorted(set(new_by_id) - set(old_by_id))
    removed = sorted(set(old_by_id) - set(new_by_id))
    changed = sorted(
        rid
        for rid in set(old_by_id) & set(new_by_id)
        if old_by_id[rid].presence is not new_by_id[rid].presence
    )
    return added, removed, changed
