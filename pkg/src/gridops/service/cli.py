"""Command-line entry point.

Subcommands: run a scenario, serve the API, print reports (json output is
byte-identical to the HTTP endpoints), manage tickets, plan and execute SE
decommissioning, ingest usage CSVs.
"""

import argparse
import os
import sys
from pathlib import Path

from ..accounting import GroupBy, parse_usage_csv
from ..errors import GridOpsError, ValidationError
from ..incidents import TicketKind, TicketStatus, TicketStep, StepAction, add_step, open_ticket, transition
from ..serialize import to_json
from ..storage_ops import DecommissionPlan, Placement, execute_migration, plan_decommission
from ..topology import merge_topology
from .config import ScenarioConfig
from .scenario import rebuild_fabric, run_scenario
from .store import StateStore
from . import views

DEFAULT_DATA_DIR = os.environ.get("GRIDOPS_DATA_DIR", "gridops-data")

REPORTS = ["filling", "reconcile", "metrics", "accounting", "whitelist", "topology", "alarms", "tickets"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridops", description="VO grid operations toolkit")
    parser.add_argument("--data-dir", default=DEFAULT_DATA_DIR, help="state directory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario to completion (resumes if interrupted)")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--interrupt-after", type=int, default=None, help="stop after N cycles")

    serve = sub.add_parser("serve", help="serve the HTTP API over the stored state")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8400)
    serve.add_argument(
        "--tick-seconds",
        type=float,
        default=0.0,
        help="advance one monitoring cycle every N wall-clock seconds (0 = off)",
    )

    report = sub.add_parser("report", help="print a report")
    report.add_argument("which", choices=REPORTS)
    report.add_argument("--format", choices=["csv", "json"], default="csv")
    report.add_argument("--sort", choices=["id", "rate", "free"], default="id", help="filling only")
    report.add_argument("--ascending", action="store_true", help="force ascending sort")
    report.add_argument("--group-by", default="WholeVO", choices=[g.value for g in GroupBy])
    report.add_argument("--start", type=int, default=None)
    report.add_argument("--end", type=int, default=None)
    report.add_argument(
        "--histogram", action="store_true", help="metrics only: month-by-kind ticket counts"
    )

    ticket = sub.add_parser("ticket", help="open, annotate or close a ticket")
    ticket_sub = ticket.add_subparsers(dest="ticket_command", required=True)
    t_open = ticket_sub.add_parser("open")
    t_open.add_argument("--kind", required=True, choices=[k.value for k in TicketKind])
    t_open.add_argument("--resource", default=None)
    t_open.add_argument("--author", required=True)
    t_open.add_argument("--payload", default="")
    t_step = ticket_sub.add_parser("step")
    t_step.add_argument("--id", required=True)
    t_step.add_argument("--author", required=True)
    t_step.add_argument("--payload", default="")
    t_close = ticket_sub.add_parser("close")
    t_close.add_argument("--id", required=True)
    t_close.add_argument("--author", required=True)

    dec = sub.add_parser("decommission", help="plan or execute an SE decommissioning")
    dec_sub = dec.add_subparsers(dest="dec_command", required=True)
    d_plan = dec_sub.add_parser("plan")
    d_plan.add_argument("--source", required=True)
    d_plan.add_argument("--placement", default="MostFreeFirst", choices=[p.value for p in Placement])
    d_plan.add_argument("--only-sole-replicas", action="store_true")
    d_exec = dec_sub.add_parser("execute")
    d_exec.add_argument("--id", required=True)

    ingest = sub.add_parser("ingest", help="ingest usage records from CSV")
    ingest.add_argument("csv", help="usage CSV file")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return dispatch(args)
    except GridOpsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def dispatch(args) -> int:
    if args.command == "run":
        return cmd_run(args)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "report":
        return cmd_report(args)
    if args.command == "ticket":
        return cmd_ticket(args)
    if args.command == "decommission":
        return cmd_decommission(args)
    if args.command == "ingest":
        return cmd_ingest(args)
    return 2


def _store(args) -> StateStore:
    return StateStore(args.data_dir)


def _config(store: StateStore) -> ScenarioConfig:
    if store.config_doc is None:
        raise ValidationError("no scenario config in this data directory; run a scenario first")
    return ScenarioConfig.from_dict(store.config_doc)


def cmd_run(args) -> int:
    path = Path(args.scenario)
    if not path.exists():
        print(f"error: file not found: {path}", file=sys.stderr)
        return 1
    config = ScenarioConfig.from_json(path)
    store = _store(args)
    _, summary = run_scenario(config, store, interrupt_after=args.interrupt_after)
    sys.stdout.write(to_json(summary.to_doc()))
    return 0


def cmd_serve(args) -> int:
    import threading
    import time

    import uvicorn

    from ..fabric import Fabric
    from .api import AppState, build_app
    from .scenario import run_cycle

    store = _store(args)
    if store.config_doc is not None:
        config = ScenarioConfig.from_dict(store.config_doc)
        fabric, _ = run_scenario(config, store)
    else:
        config, fabric = None, Fabric()
    state = AppState(store, fabric, config)
    app = build_app(state)

    if args.tick_seconds > 0 and config is not None:
        registry = config.build_registry()

        def ticker():
            while True:
                time.sleep(args.tick_seconds)
                with state.lock:
                    run_cycle(config, registry, fabric, store)

        threading.Thread(target=ticker, daemon=True).start()

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    store = _store(args)
    config = ScenarioConfig.from_dict(store.config_doc) if store.config_doc else None
    window = None
    if args.start is not None or args.end is not None:
        default = views.default_window(store)
        window = (
            args.start if args.start is not None else default[0],
            args.end if args.end is not None else default[1],
        )
    descending = args.sort in ("rate", "free") and not args.ascending
    group = GroupBy(args.group_by)

    if args.format == "json":
        doc = {
            "filling": lambda: views.filling_doc(store, args.sort, descending),
            "reconcile": lambda: views.reconciliation_doc(store),
            "metrics": lambda: views.support_metrics_doc(store, window),
            "accounting": lambda: views.accounting_doc(store, group, window),
            "whitelist": lambda: views.whitelist_doc(store),
            "topology": lambda: views.topology_doc(store),
            "alarms": lambda: views.alarms_doc(store, config),
            "tickets": lambda: views.tickets_doc(store),
        }[args.which]()
        sys.stdout.write(to_json(doc))
    else:
        text = {
            "filling": lambda: views.filling_csv(store, args.sort, descending),
            "reconcile": lambda: views.reconciliation_csv(store),
            "metrics": lambda: views.support_metrics_csv(store, window, histogram=args.histogram),
            "accounting": lambda: views.accounting_csv(store, group, window),
            "whitelist": lambda: views.whitelist_csv(store),
            "topology": lambda: views.topology_csv(store),
            "alarms": lambda: views.alarms_csv(store, config),
            "tickets": lambda: views.tickets_csv(store),
        }[args.which]()
        sys.stdout.write(text)
    return 0


def cmd_ticket(args) -> int:
    store = _store(args)
    now = store.clock
    if args.ticket_command == "open":
        ticket = open_ticket(
            TicketKind(args.kind),
            resource_id=args.resource,
            opened_at=now,
            author=args.author,
            payload=args.payload,
            ticket_id=store.next_ticket_id(),
        )
        store.record_ticket_open(ticket, args.payload)
        sys.stdout.write(to_json(ticket.to_doc()))
        return 0
    ticket = store.require_ticket(args.id)
    if args.ticket_command == "step":
        step = TicketStep(
            at=max(now, ticket.last_touched()),
            author=args.author,
            action=StepAction.COMMENT,
            payload=args.payload,
        )
        add_step(ticket, step)
        store.record_ticket_step(args.id, step)
    elif args.ticket_command == "close":
        at = max(now, ticket.last_touched())
        path = {
            TicketStatus.OPEN: [TicketStatus.SOLVED, TicketStatus.CLOSED],
            TicketStatus.IN_PROGRESS: [TicketStatus.SOLVED, TicketStatus.CLOSED],
            TicketStatus.ON_HOLD: [TicketStatus.IN_PROGRESS, TicketStatus.SOLVED, TicketStatus.CLOSED],
            TicketStatus.SOLVED: [TicketStatus.CLOSED],
            TicketStatus.CLOSED: [],
        }[ticket.status]
        if not path:
            raise ValidationError(f"ticket {args.id} is already Closed")
        for status in path:
            transition(ticket, status, at=at, author=args.author)
            store.record_ticket_transition(args.id, status, at, args.author)
    sys.stdout.write(to_json(ticket.to_doc()))
    return 0


def cmd_decommission(args) -> int:
    store = _store(args)
    config = _config(store)
    fabric = rebuild_fabric(config, store)
    if args.dec_command == "plan":
        vo = merge_topology(config.build_registry(), fabric.publish_info(), at=fabric.clock.now)
        eligible = set(store.cycles[-1]["whitelist"]["members"]) if store.cycles else None
        plan = plan_decommission(
            args.source,
            vo,
            fabric.publish_info(),
            fabric.entries(),
            placement=Placement(args.placement),
            eligible=eligible,
            source_inventory=fabric.inventories().get(args.source),
            only_sole_replicas=args.only_sole_replicas,
        )
        plan.plan_id = store.next_plan_id()
        store.record_plan(plan.to_doc())
        sys.stdout.write(to_json(plan.to_doc()))
        return 0
    if args.id not in store.plan_drafts:
        print(f"error: unknown plan: {args.id}", file=sys.stderr)
        return 1
    if store.plans[args.id]["status"] != "Draft":
        print(f"error: plan {args.id} already {store.plans[args.id]['status']}", file=sys.stderr)
        return 1
    store.record_mutation({"at_clock": fabric.clock.now, "op": "execute_plan", "plan_id": args.id})
    result = execute_migration(fabric, DecommissionPlan.from_doc(store.plan_drafts[args.id]))
    store.record_plan_result(args.id, result.to_doc())
    sys.stdout.write(to_json(result.to_doc()))
    return 0


def cmd_ingest(args) -> int:
    path = Path(args.csv)
    if not path.exists():
        print(f"error: file not found: {path}", file=sys.stderr)
        return 1
    store = _store(args)
    accepted, rejected = store.append_usage(parse_usage_csv(path.read_text(encoding="utf-8")))
    sys.stdout.write(
        to_json({"accepted": accepted, "rejected": [{"reason": r.reason} for r in rejected]})
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
