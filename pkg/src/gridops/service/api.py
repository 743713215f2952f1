"""HTTP/JSON API over the state store and live fabric.

Reads serve canonical JSON built by the views module; writes are serialized
through one lock and validated before anything is logged. Errors always come
back as {"error": {"code", "message"}}. An optional shared token guards the
API when GRIDOPS_API_TOKEN is set (header X-Api-Token).
"""

import os
import threading
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..accounting import GroupBy
from ..errors import (
    ConflictError,
    DuplicateIdError,
    GridOpsError,
    IllegalTransitionError,
    StorageFullError,
    UnavailableError,
    UnknownResourceError,
    ValidationError,
)
from ..fabric import Fabric, FaultKind, FaultSpec
from ..incidents import (
    StepAction,
    TicketKind,
    TicketStatus,
    TicketStep,
    add_step,
    link_alarm,
    open_ticket,
    transition,
)
from ..serialize import to_json
from ..storage_ops import DecommissionPlan, Placement, execute_migration, plan_decommission
from ..topology import merge_topology
from .config import ScenarioConfig
from .store import StateStore
from . import views

STATUS_FOR = {
    ValidationError: 400,
    UnknownResourceError: 404,
    ConflictError: 409,
    IllegalTransitionError: 409,
    DuplicateIdError: 409,
    StorageFullError: 409,
    UnavailableError: 409,
}


class AppState:
    def __init__(self, store: StateStore, fabric: Fabric, config: Optional[ScenarioConfig] = None):
        self.store = store
        self.fabric = fabric
        self.config = config
        self.lock = threading.Lock()

    def current_vo_set(self):
        registry = self.config.build_registry() if self.config else []
        return merge_topology(registry, self.fabric.publish_info(), at=self.fabric.clock.now)


class TicketBody(BaseModel):
    kind: str
    resource: Optional[str] = None
    author: str
    payload: str = ""
    alarm_id: Optional[str] = None


class StepBody(BaseModel):
    author: str
    payload: str = ""
    action: str = "Comment"
    expected_steps: Optional[int] = None


class TransitionBody(BaseModel):
    to: str
    author: str


class PlanBody(BaseModel):
    source: str
    placement: str = "MostFreeFirst"
    only_sole_replicas: bool = False


class FaultBody(BaseModel):
    resource: str
    kind: str
    magnitude: float = 0.0


def json_response(doc, status_code: int = 200) -> Response:
    return Response(content=to_json(doc), media_type="application/json", status_code=status_code)


def error_response(code: str, message: str, status_code: int) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status_code)


def build_app(state: AppState, token: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="gridops", version="0.1.0")
    app.state.ops = state
    required_token = token if token is not None else os.environ.get("GRIDOPS_API_TOKEN")

    # the operator console is served as static files from another origin
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if required_token and request.headers.get("X-Api-Token") != required_token:
            return error_response("unauthorized", "missing or wrong X-Api-Token header", 401)
        return await call_next(request)

    @app.exception_handler(GridOpsError)
    async def grid_error(request: Request, exc: GridOpsError):
        return error_response(exc.code, str(exc), STATUS_FOR.get(type(exc), 400))

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        return error_response("validation", str(exc.errors()), 400)

    def _enum(cls, value, what: str):
        try:
            return cls(value)
        except ValueError:
            raise ValidationError(f"unknown {what}: {value}")

    # -- reads -------------------------------------------------------------

    @app.get("/")
    def index():
        return json_response(
            {
                "service": "gridops",
                "endpoints": [
                    "/topology", "/whitelist", "/filling", "/alarms", "/tickets",
                    "/metrics/support", "/metrics/accounting", "/reports/reconciliation",
                    "/handover", "/decommission",
                ],
            }
        )

    @app.get("/topology")
    def topology():
        with state.lock:
            return json_response(views.topology_doc(state.store))

    @app.get("/whitelist")
    def whitelist():
        with state.lock:
            return json_response(views.whitelist_doc(state.store))

    @app.get("/filling")
    def filling(sort: str = "id", descending: bool = False):
        with state.lock:
            return json_response(views.filling_doc(state.store, sort, descending))

    @app.get("/alarms")
    def alarms():
        with state.lock:
            return json_response(views.alarms_doc(state.store, state.config))

    @app.get("/tickets")
    def tickets():
        with state.lock:
            return json_response(views.tickets_doc(state.store))

    @app.get("/tickets/{ticket_id}")
    def ticket(ticket_id: str):
        with state.lock:
            return json_response(state.store.require_ticket(ticket_id).to_doc())

    @app.get("/metrics/support")
    def metrics_support(start: Optional[int] = None, end: Optional[int] = None):
        with state.lock:
            window = _window(state.store, start, end)
            return json_response(views.support_metrics_doc(state.store, window))

    @app.get("/metrics/accounting")
    def metrics_accounting(
        group_by: str = "WholeVO", start: Optional[int] = None, end: Optional[int] = None
    ):
        group = _enum(GroupBy, group_by, "group_by")
        with state.lock:
            window = _window(state.store, start, end)
            return json_response(views.accounting_doc(state.store, group, window))

    @app.get("/reports/reconciliation")
    def reconciliation():
        with state.lock:
            return json_response(views.reconciliation_doc(state.store))

    @app.get("/handover")
    def handover():
        with state.lock:
            return json_response(views.handover_doc(state.store, state.config))

    @app.get("/decommission")
    def decommission_plans():
        with state.lock:
            return json_response(views.plans_doc(state.store))

    @app.get("/decommission/{plan_id}")
    def decommission_plan_view(plan_id: str):
        with state.lock:
            if plan_id not in state.store.plans:
                raise UnknownResourceError(plan_id)
            return json_response(state.store.plans[plan_id])

    # -- writes ------------------------------------------------------------

    @app.post("/tickets")
    def create_ticket(body: TicketBody):
        kind = _enum(TicketKind, body.kind, "ticket kind")
        with state.lock:
            store = state.store
            now = store.clock
            ticket = open_ticket(
                kind,
                resource_id=body.resource,
                opened_at=now,
                author=body.author,
                payload=body.payload,
                ticket_id=store.next_ticket_id(),
            )
            store.record_ticket_open(ticket, body.payload)
            if body.alarm_id:
                link_alarm(ticket, body.alarm_id, at=now, author=body.author)
                store.record_ticket_step(ticket.ticket_id, ticket.steps[-1])
            return json_response(ticket.to_doc(), status_code=201)

    @app.post("/tickets/{ticket_id}/steps")
    def create_step(ticket_id: str, body: StepBody):
        action = _enum(StepAction, body.action, "step action")
        with state.lock:
            store = state.store
            ticket = store.require_ticket(ticket_id)
            if body.expected_steps is not None and body.expected_steps != len(ticket.steps):
                raise ConflictError(
                    f"ticket has {len(ticket.steps)} steps, caller expected {body.expected_steps}"
                )
            step = TicketStep(
                at=max(store.clock, ticket.last_touched()),
                author=body.author,
                action=action,
                payload=body.payload,
            )
            add_step(ticket, step)
            store.record_ticket_step(ticket_id, step)
            return json_response(ticket.to_doc())

    @app.post("/tickets/{ticket_id}/transition")
    def transition_ticket(ticket_id: str, body: TransitionBody):
        to = _enum(TicketStatus, body.to, "ticket status")
        with state.lock:
            store = state.store
            ticket = store.require_ticket(ticket_id)
            at = max(store.clock, ticket.last_touched())
            transition(ticket, to, at=at, author=body.author)
            store.record_ticket_transition(ticket_id, to, at, body.author)
            return json_response(ticket.to_doc())

    @app.post("/decommission/plan")
    def create_plan(body: PlanBody):
        placement = _enum(Placement, body.placement, "placement policy")
        with state.lock:
            store = state.store
            vo = state.current_vo_set()
            snapshot = state.fabric.publish_info()
            eligible = None
            if store.cycles:
                eligible = set(store.cycles[-1]["whitelist"]["members"])
            plan = plan_decommission(
                body.source,
                vo,
                snapshot,
                state.fabric.entries(),
                placement=placement,
                eligible=eligible,
                source_inventory=state.fabric.inventories().get(body.source),
                only_sole_replicas=body.only_sole_replicas,
            )
            plan.plan_id = store.next_plan_id()
            store.record_plan(plan.to_doc())
            return json_response(plan.to_doc(), status_code=201)

    @app.post("/decommission/{plan_id}/execute")
    def execute_plan(plan_id: str):
        with state.lock:
            store = state.store
            if plan_id not in store.plan_drafts:
                raise UnknownResourceError(plan_id)
            if store.plans[plan_id]["status"] != "Draft":
                raise ConflictError(f"plan {plan_id} already {store.plans[plan_id]['status']}")
            store.record_mutation(
                {"at_clock": state.fabric.clock.now, "op": "execute_plan", "plan_id": plan_id}
            )
            plan = DecommissionPlan.from_doc(store.plan_drafts[plan_id])
            result = execute_migration(state.fabric, plan)
            store.record_plan_result(plan_id, result.to_doc())
            return json_response(result.to_doc())

    @app.post("/cycle")
    def advance_cycle():
        # simulation control: run one monitoring cycle on demand
        from .scenario import run_cycle

        if state.config is None:
            raise ValidationError("no scenario config loaded; cycles need a scenario")
        with state.lock:
            run_cycle(state.config, state.config.build_registry(), state.fabric, state.store)
            return json_response({"cycle": len(state.store.cycles) - 1, "clock": state.store.clock})

    @app.post("/faults")
    def inject_fault(body: FaultBody):
        kind = _enum(FaultKind, body.kind, "fault kind")
        with state.lock:
            state.fabric.require(body.resource)  # validate before logging
            fault = FaultSpec(kind=kind, magnitude=body.magnitude, since=state.fabric.clock.now)
            state.store.record_mutation(
                {
                    "at_clock": state.fabric.clock.now,
                    "op": "inject_fault",
                    "resource": body.resource,
                    "fault": {"kind": kind.value, "magnitude": body.magnitude},
                }
            )
            state.fabric.inject_fault(body.resource, fault)
            return json_response({"injected": body.resource, "kind": kind.value})

    return app


def _window(store: StateStore, start: Optional[int], end: Optional[int]):
    if start is None and end is None:
        return None
    default = views.default_window(store)
    return (start if start is not None else default[0], end if end is not None else default[1])
