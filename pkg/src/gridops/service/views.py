"""Report documents served over HTTP and printed by the CLI.

Both callers go through these builders and serialize.to_json, which is what
makes `gridops report X --format json` byte-identical to the corresponding
GET endpoint.
"""

from typing import Optional

from ..accounting import GroupBy, aggregate, waiting_running_ratio
from ..incidents import compute_support_metrics, on_duty, takeover_report
from ..probes import AlarmPolicy
from ..serialize import to_csv
from ..storage_ops import DataQuality, FillingEntry, FillingRateReport
from .config import ScenarioConfig
from .store import StateStore

DAY_MINUTES = 1440


def _alarm_policy(config: Optional[ScenarioConfig]) -> AlarmPolicy:
    return config.alarm_policy if config else AlarmPolicy()


def default_window(store: StateStore) -> tuple[int, int]:
    """Whole recorded history; half-open, so the last clock value is inside."""
    return (0, store.clock + 1)


def topology_doc(store: StateStore) -> dict:
    if store.cycles:
        return store.cycles[-1]["topology"]
    return {"computed_at": 0, "members": []}


def whitelist_doc(store: StateStore) -> dict:
    if store.cycles:
        return store.cycles[-1]["whitelist"]
    return {"computed_at": 0, "members": [], "criteria": {}}


def _filling_report(store: StateStore) -> FillingRateReport:
    if not store.cycles:
        return FillingRateReport(taken_at=0)
    doc = store.cycles[-1]["filling"]
    return FillingRateReport(
        taken_at=doc["taken_at"],
        entries=[
            FillingEntry(
                storage_id=e["storage"],
                published_used=e["published_used"],
                published_free=e["published_free"],
                rate=e["rate"],
                data_quality=DataQuality(e["data_quality"]),
            )
            for e in doc["entries"]
        ],
    )


def filling_doc(store: StateStore, sort: str = "id", descending: bool = False) -> dict:
    report = _filling_report(store)
    doc = report.to_doc(sort, descending)
    doc["heavy_users"] = store.cycles[-1]["heavy_users"] if store.cycles else []
    return doc


def filling_csv(store: StateStore, sort: str = "id", descending: bool = False) -> str:
    return _filling_report(store).to_csv(sort, descending)


def alarms_doc(store: StateStore, config: Optional[ScenarioConfig] = None) -> dict:
    return {"alarms": [a.to_doc() for a in store.alarms(_alarm_policy(config))]}


def alarms_csv(store: StateStore, config: Optional[ScenarioConfig] = None) -> str:
    rows = [a.to_doc() for a in store.alarms(_alarm_policy(config))]
    return to_csv(
        rows,
        ["alarm_id", "resource", "check", "raised_at", "cleared_at", "consecutive_failures", "linked_ticket"],
    )


def tickets_doc(store: StateStore) -> dict:
    return {"tickets": [t.to_doc() for t in store.tickets_sorted()]}


def tickets_csv(store: StateStore) -> str:
    rows = []
    for t in store.tickets_sorted():
        doc = t.to_doc()
        doc["steps"] = len(t.steps)
        doc["participants"] = len(t.participants)
        rows.append(doc)
    return to_csv(
        rows, ["ticket_id", "kind", "resource", "opened_at", "closed_at", "status", "steps", "participants"]
    )


def support_metrics_doc(store: StateStore, window: Optional[tuple[int, int]] = None) -> dict:
    window = window or default_window(store)
    return compute_support_metrics(store.tickets.values(), window).to_doc()


def support_metrics_csv(
    store: StateStore, window: Optional[tuple[int, int]] = None, histogram: bool = False
) -> str:
    window = window or default_window(store)
    metrics = compute_support_metrics(store.tickets.values(), window)
    return metrics.histogram_csv() if histogram else metrics.to_csv()


def accounting_doc(
    store: StateStore,
    group_by: GroupBy = GroupBy.WHOLE_VO,
    window: Optional[tuple[int, int]] = None,
) -> dict:
    window = window or default_window(store)
    report = aggregate(store.usage.records, window, group_by)
    return {
        "report": report.to_doc(),
        "waiting_running_ratio": waiting_running_ratio(store.queue_samples(), window),
        "storage_trend": [c["storage_totals"] for c in store.cycles],
    }


def accounting_csv(
    store: StateStore,
    group_by: GroupBy = GroupBy.WHOLE_VO,
    window: Optional[tuple[int, int]] = None,
) -> str:
    window = window or default_window(store)
    return aggregate(store.usage.records, window, group_by).to_csv()


def reconciliation_doc(store: StateStore) -> dict:
    if store.cycles:
        return store.cycles[-1]["reconciliation"]
    return {"scanned_at": 0, "zombies": [], "ghosts": []}


def reconciliation_csv(store: StateStore) -> str:
    doc = reconciliation_doc(store)
    rows = [
        {"kind": "zombie", "storage": z["storage"], "pfn": z["pfn"], "lfn": "", "size": z["size"], "owner": z["owner"]}
        for z in doc["zombies"]
    ] + [
        {"kind": "ghost", "storage": g["storage"], "pfn": g["pfn"], "lfn": g["lfn"], "size": "", "owner": ""}
        for g in doc["ghosts"]
    ]
    return to_csv(rows, ["kind", "storage", "pfn", "lfn", "size", "owner"])


def whitelist_csv(store: StateStore) -> str:
    doc = whitelist_doc(store)
    return to_csv([{"resource": rid} for rid in doc["members"]], ["resource"])


def topology_csv(store: StateStore) -> str:
    doc = topology_doc(store)
    return to_csv(doc["members"], ["resource", "kind", "presence"])


def handover_doc(store: StateStore, config: Optional[ScenarioConfig] = None) -> dict:
    report = takeover_report(store.tickets.values(), store.alarms(_alarm_policy(config)), at=store.clock)
    doc = {"report": report.to_doc(), "day": store.clock // DAY_MINUTES}
    schedule = config.shifts if config else None
    if schedule is not None and store.clock // DAY_MINUTES >= schedule.epoch:
        day = store.clock // DAY_MINUTES
        doc["on_duty"] = on_duty(schedule, day)
        shift_index = (day - schedule.epoch) // schedule.shift_length
        next_day = schedule.epoch + (shift_index + 1) * schedule.shift_length
        doc["next_team"] = on_duty(schedule, next_day)
        doc["next_handover_day"] = next_day
    else:
        doc["on_duty"] = None
        doc["next_team"] = None
        doc["next_handover_day"] = None
    return doc


def plans_doc(store: StateStore) -> dict:
    return {"plans": [store.plans[pid] for pid in sorted(store.plans, key=_plan_sort_key)]}


def _plan_sort_key(plan_id: str):
    try:
        return int(plan_id.rsplit("-", 1)[1])
    except (IndexError, ValueError):
        return 0
