"""Scenario runner: binds every monitoring stage to the fabric on a fixed
cadence and logs each cycle's outputs to the store.

Per cycle: advance clock -> publish -> merge topology -> probe -> evaluate
alarms -> filling rates -> publication-error detection -> heavy-user scan ->
whitelist, plus a reconciliation pass so the report endpoint is always
current. Resuming is a fast-forward: the fabric is deterministic, so replaying
clock advances and logged API mutations reproduces its state, while completed
cycles' outputs come from the log untouched.
"""

from dataclasses import dataclass

from ..accounting import storage_trend
from ..fabric import Fabric, FaultKind, FaultSpec, ResourceKind, init_fabric
from ..probes import probe_cycle
from ..storage_ops import (
    DecommissionPlan,
    audit_from_fabric,
    compute_filling_rates,
    detect_publication_errors,
    execute_migration,
    reconcile,
    scan_heavy_users,
)
from ..topology import active_downtimes, compute_whitelist, merge_topology
from .config import ScenarioConfig
from .store import StateStore


@dataclass
class ScenarioSummary:
    cycles: int
    clock: int
    findings_per_cycle: list[int]
    whitelist_size_per_cycle: list[int]
    alarms_open: int
    probe_results: int

    def to_doc(self) -> dict:
        return {
            "cycles": self.cycles,
            "clock": self.clock,
            "findings_per_cycle": self.findings_per_cycle,
            "whitelist_size_per_cycle": self.whitelist_size_per_cycle,
            "alarms_open": self.alarms_open,
            "probe_results": self.probe_results,
        }


def apply_mutation(fabric: Fabric, store: StateStore, mutation: dict):
    if mutation["op"] == "inject_fault":
        fault_doc = mutation["fault"]
        fabric.inject_fault(
            mutation["resource"],
            FaultSpec(
                kind=FaultKind(fault_doc["kind"]),
                magnitude=float(fault_doc.get("magnitude", 0.0)),
                since=mutation["at_clock"],
            ),
        )
    elif mutation["op"] == "execute_plan":
        draft = DecommissionPlan.from_doc(store.plan_drafts[mutation["plan_id"]])
        result = execute_migration(fabric, draft)
        store.plans[mutation["plan_id"]] = result.to_doc()


def rebuild_fabric(config: ScenarioConfig, store: StateStore) -> Fabric:
    """Reconstruct fabric state for the cycles already in the log by replaying
    clock advances interleaved with recorded API mutations."""
    fabric = init_fabric(config.fabric_spec)
    mutations = list(store.mutations)
    mi = 0
    for _ in store.cycles:
        while mi < len(mutations) and mutations[mi]["at_clock"] <= fabric.clock.now:
            apply_mutation(fabric, store, mutations[mi])
            mi += 1
        fabric.advance_clock(config.scan_interval)
    while mi < len(mutations) and mutations[mi]["at_clock"] <= fabric.clock.now:
        apply_mutation(fabric, store, mutations[mi])
        mi += 1
    return fabric


def run_cycle(config: ScenarioConfig, registry, fabric: Fabric, store: StateStore):
    """One monitoring cycle; appends the cycle document and probe results."""
    fabric.advance_clock(config.scan_interval)
    now = fabric.clock.now
    snapshot = fabric.publish_info()
    vo = merge_topology(registry, snapshot, at=now)
    results = probe_cycle(fabric, config.probe_specs, vo)
    store.append_probe_results(results)
    alarms = store.alarms(config.alarm_policy)
    filling = compute_filling_rates(snapshot)
    findings = detect_publication_errors(snapshot, audit_from_fabric(fabric), config.tolerances)
    heavy = scan_heavy_users(
        snapshot, fabric.entries(), config.heavy_user_threshold, config.heavy_user_top_n
    )
    whitelist = compute_whitelist(
        vo,
        active_downtimes(config.downtimes, now),
        [filling],
        alarms,
        config.whitelist_policy,
    )
    recon = reconcile(fabric.entries(), fabric.inventories(), scanned_at=now)
    queue_samples = [
        {"at": now, "compute": rec.resource_id, "waiting": rec.waiting, "running": rec.running}
        for rec in snapshot.records
        if rec.kind is ResourceKind.CE
        and rec.waiting is not None
        and rec.running is not None
        and rec.waiting >= 0
        and rec.running >= 0
    ]
    [trend_point] = storage_trend([snapshot], vo_sets=[vo])
    store.append_cycle(
        {
            "cycle": len(store.cycles),
            "clock": now,
            "topology": vo.to_doc(),
            "whitelist": whitelist.to_doc(),
            "filling": filling.to_doc(),
            "heavy_users": [h.to_doc() for h in heavy],
            "findings": [f.to_doc() for f in findings],
            "reconciliation": recon.to_doc(),
            "queue_samples": queue_samples,
            "storage_totals": trend_point.to_doc(),
            "counts": {
                "probe_results": len(results),
                "alarms_open": sum(1 for a in alarms if a.open),
                "findings": len({f.resource_id for f in findings}),
                "whitelist": len(whitelist.members),
            },
        }
    )


def run_scenario(config: ScenarioConfig, store: StateStore, interrupt_after=None):
    """Run (or resume) the configured scenario. interrupt_after stops after
    that many total cycles, simulating a crash at a cycle boundary."""
    if store.config_doc is None:
        store.write_config(config.raw)
    registry = config.build_registry()
    fabric = rebuild_fabric(config, store)

    total = config.cycles
    end = total if interrupt_after is None else min(total, interrupt_after)
    for _ in range(len(store.cycles), end):
        run_cycle(config, registry, fabric, store)

    summary = ScenarioSummary(
        cycles=len(store.cycles),
        clock=fabric.clock.now,
        findings_per_cycle=[c["counts"]["findings"] for c in store.cycles],
        whitelist_size_per_cycle=[c["counts"]["whitelist"] for c in store.cycles],
        alarms_open=sum(1 for a in store.alarms(config.alarm_policy) if a.open),
        probe_results=len(store.probe_results),
    )
    return fabric, summary
