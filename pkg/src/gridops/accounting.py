"""Usage accounting: CPU-hour aggregation, queue ratios, storage trends.

Records may arrive without a user identity (some sites withhold it); those
are never dropped, they aggregate under "(unattributed)" and show up in the
completeness fraction instead.
"""

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import ValidationError
from .fabric import Bytes, InfoSnapshot, Minutes, ResourceKind
from .serialize import to_csv
from .topology import VOResourceSet

UNATTRIBUTED = "(unattributed)"
NO_SUBGROUP = "(none)"
WHOLE_VO = "VO"

USAGE_CSV_COLUMNS = ["user", "site", "subgroup", "t0", "t1", "cpu_hours", "jobs"]


class GroupBy(str, Enum):
    USER = "User"
    SITE = "Site"
    SUBGROUP = "Subgroup"
    WHOLE_VO = "WholeVO"


@dataclass
class UsageRecord:
    site: str
    t0: Minutes
    t1: Minutes
    cpu_hours: float
    jobs: int
    user: Optional[str] = None
    subgroup: Optional[str] = None

    def to_doc(self) -> dict:
        return {
            "user": self.user,
            "site": self.site,
            "subgroup": self.subgroup,
            "t0": self.t0,
            "t1": self.t1,
            "cpu_hours": self.cpu_hours,
            "jobs": self.jobs,
        }


@dataclass
class QueueSample:
    at: Minutes
    compute_id: str
    waiting: int
    running: int


@dataclass
class Rejection:
    record: UsageRecord
    reason: str


@dataclass
class UsageLog:
    """Append-only usage store with attribution counters."""

    records: list[UsageRecord] = field(default_factory=list)
    accepted: int = 0
    attributed: int = 0

    def ingest(self, records: Iterable[UsageRecord]) -> tuple[int, list[Rejection]]:
        """Validate and append. Rejections are data, not failures."""
        count = 0
        rejected = []
        for rec in records:
            reason = _invalid_reason(rec)
            if reason:
                rejected.append(Rejection(record=rec, reason=reason))
                continue
            self.records.append(rec)
            self.accepted += 1
            if rec.user is not None:
                self.attributed += 1
            count += 1
        return count, rejected


def _invalid_reason(rec: UsageRecord) -> Optional[str]:
    if rec.cpu_hours < 0:
        return "negative cpu"
    if rec.jobs < 0:
        return "negative jobs"
    if rec.t0 >= rec.t1:
        return "empty or inverted period"
    return None


def parse_usage_csv(text: str) -> list[UsageRecord]:
    """CSV columns: user,site,subgroup,t0,t1,cpu_hours,jobs. Empty user or
    subgroup means unattributed / no subgroup."""
    records = []
    for row in csv.DictReader(io.StringIO(text)):
        records.append(
            UsageRecord(
                user=row["user"] or None,
                site=row["site"],
                subgroup=row["subgroup"] or None,
                t0=int(row["t0"]),
                t1=int(row["t1"]),
                cpu_hours=float(row["cpu_hours"]),
                jobs=int(row["jobs"]),
            )
        )
    return records


@dataclass
class AccountingRow:
    key: str
    cpu_hours: float
    jobs: float

    def to_doc(self) -> dict:
        return {"group": self.key, "cpu_hours": self.cpu_hours, "jobs": self.jobs}


@dataclass
class AccountingReport:
    window: tuple[Minutes, Minutes]
    group_by: GroupBy
    rows: list[AccountingRow]
    completeness: Optional[float]

    def total_cpu_hours(self) -> float:
        return sum(row.cpu_hours for row in self.rows)

    def to_doc(self) -> dict:
        return {
            "window": {"start": self.window[0], "end": self.window[1]},
            "group_by": self.group_by.value,
            "rows": [row.to_doc() for row in self.rows],
            "completeness": self.completeness,
        }

    def to_csv(self) -> str:
        return to_csv([row.to_doc() for row in self.rows], ["group", "cpu_hours", "jobs"])


def aggregate(
    records: Iterable[UsageRecord],
    window: tuple[Minutes, Minutes],
    group_by: GroupBy = GroupBy.WHOLE_VO,
) -> AccountingReport:
    """Sum usage over the window, pro-rata for records straddling an edge:
    a record contributes its overlap fraction of both cpu_hours and jobs."""
    t0, t1 = window
    if t0 >= t1:
        raise ValidationError(f"window must have start < end, got [{t0}, {t1})")
    cpu: dict[str, float] = {}
    jobs: dict[str, float] = {}
    contributing = attributed = 0
    for rec in records:
        overlap = min(rec.t1, t1) - max(rec.t0, t0)
        if overlap <= 0:
            continue
        fraction = overlap / (rec.t1 - rec.t0)
        key = _group_key(rec, group_by)
        cpu[key] = cpu.get(key, 0.0) + rec.cpu_hours * fraction
        jobs[key] = jobs.get(key, 0.0) + rec.jobs * fraction
        contributing += 1
        if rec.user is not None:
            attributed += 1
    rows = [AccountingRow(key=k, cpu_hours=cpu[k], jobs=jobs[k]) for k in cpu]
    rows.sort(key=lambda r: (-r.cpu_hours, r.key))
    completeness = attributed / contributing if contributing else None
    return AccountingReport(window=window, group_by=group_by, rows=rows, completeness=completeness)


def _group_key(rec: UsageRecord, group_by: GroupBy) -> str:
    if group_by is GroupBy.USER:
        return rec.user if rec.user is not None else UNATTRIBUTED
    if group_by is GroupBy.SITE:
        return rec.site
    if group_by is GroupBy.SUBGROUP:
        return rec.subgroup if rec.subgroup is not None else NO_SUBGROUP
    return WHOLE_VO


def waiting_running_ratio(
    samples: Iterable[QueueSample],
    window: tuple[Minutes, Minutes],
    per_sample_mean: bool = False,
) -> Optional[float]:
    """Ratio of waiting to running jobs over the window.

    Default is the ratio of the sums; per_sample_mean switches to the mean of
    per-sample ratios. A zero running total (or any zero-running sample in
    mean mode) makes the ratio undefined, reported as None, never a number.
    """
    t0, t1 = window
    in_window = [s for s in samples if t0 <= s.at < t1]
    if not in_window:
        return None
    if per_sample_mean:
        if any(s.running == 0 for s in in_window):
            return None
        return sum(s.waiting / s.running for s in in_window) / len(in_window)
    total_running = sum(s.running for s in in_window)
    if total_running == 0:
        return None
    return sum(s.waiting for s in in_window) / total_running


@dataclass
class TrendPoint:
    at: Minutes
    total_used: Bytes
    total_capacity: Bytes
    suspect_count: int

    def to_doc(self) -> dict:
        return {
            "at": self.at,
            "total_used": self.total_used,
            "total_capacity": self.total_capacity,
            "suspect_count": self.suspect_count,
        }


def storage_trend(
    snapshots: Iterable[InfoSnapshot],
    window: Optional[tuple[Minutes, Minutes]] = None,
    vo_sets: Iterable[VOResourceSet] = (),
) -> list[TrendPoint]:
    """Total used/capacity per snapshot, restricted to SEs in the VO resource
    set current at that snapshot's time. Suspect figures (missing fields,
    negatives, zero totals) are excluded from the sums and counted apart."""
    sets = sorted(vo_sets, key=lambda s: s.computed_at)
    points = []
    for snap in sorted(snapshots, key=lambda s: s.taken_at):
        if window is not None and not window[0] <= snap.taken_at < window[1]:
            continue
        scope = None
        for vo_set in sets:
            if vo_set.computed_at <= snap.taken_at:
                scope = vo_set.ids()
        used = capacity = suspects = 0
        for rec in snap.records:
            if rec.kind is not ResourceKind.SE:
                continue
            if scope is not None and rec.resource_id not in scope:
                continue
            bad = (
                rec.used is None
                or rec.free is None
                or rec.used < 0
                or rec.free < 0
                or (rec.used + rec.free) == 0
            )
            if bad:
                suspects += 1
                continue
            used += rec.used
            capacity += rec.used + rec.free
        points.append(
            TrendPoint(at=snap.taken_at, total_used=used, total_capacity=capacity, suspect_count=suspects)
        )
    return points
