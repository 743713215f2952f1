"""Incident tickets, duty-shift rotation and support-impact metrics.

The ticket state machine is a reconstruction of common helpdesk practice:
Open -> InProgress/OnHold/Solved, InProgress <-> OnHold, Solved -> Closed,
with Solved -> InProgress as the reopen path. Solving stamps closed_at;
closing freezes the ticket.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import IllegalTransitionError, ValidationError
from .fabric import Minutes
from .serialize import to_csv

DAY_MINUTES = 1440
WEEK_MINUTES = 7 * DAY_MINUTES
MONTH_MINUTES = 30 * DAY_MINUTES
STALLED_AFTER = 7 * DAY_MINUTES


class TicketKind(str, Enum):
    SE = "SE"
    CE = "CE"
    WMS = "WMS"
    USER = "User"
    OTHER = "Other"


class TicketStatus(str, Enum):
    OPEN = "Open"
    IN_PROGRESS = "InProgress"
    ON_HOLD = "OnHold"
    SOLVED = "Solved"
    CLOSED = "Closed"


class StepAction(str, Enum):
    COMMENT = "Comment"
    ASSIGN = "Assign"
    STATUS_CHANGE = "StatusChange"
    LINK_ALARM = "LinkAlarm"


LEGAL_TRANSITIONS = {
    TicketStatus.OPEN: {TicketStatus.IN_PROGRESS, TicketStatus.ON_HOLD, TicketStatus.SOLVED},
    TicketStatus.IN_PROGRESS: {TicketStatus.ON_HOLD, TicketStatus.SOLVED},
    TicketStatus.ON_HOLD: {TicketStatus.IN_PROGRESS},
    TicketStatus.SOLVED: {TicketStatus.CLOSED, TicketStatus.IN_PROGRESS},
    TicketStatus.CLOSED: set(),
}

RESOURCE_KINDS = {TicketKind.SE, TicketKind.CE, TicketKind.WMS}


@dataclass
class TicketStep:
    at: Minutes
    author: str
    action: StepAction
    payload: str = ""

    def to_doc(self) -> dict:
        return {"at": self.at, "author": self.author, "action": self.action.value, "payload": self.payload}


@dataclass
class Ticket:
    ticket_id: str
    kind: TicketKind
    opened_at: Minutes
    resource_id: Optional[str] = None
    closed_at: Optional[Minutes] = None
    status: TicketStatus = TicketStatus.OPEN
    steps: list[TicketStep] = field(default_factory=list)

    @property
    def participants(self) -> set[str]:
        return {step.author for step in self.steps}

    @property
    def is_open(self) -> bool:
        return self.status in (TicketStatus.OPEN, TicketStatus.IN_PROGRESS, TicketStatus.ON_HOLD)

    def last_touched(self) -> Minutes:
        return self.steps[-1].at if self.steps else self.opened_at

    def to_doc(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "kind": self.kind.value,
            "resource": self.resource_id,
            "opened_at": self.opened_at,
            "closed_at": self.closed_at,
            "status": self.status.value,
            "steps": [s.to_doc() for s in self.steps],
            "participants": sorted(self.participants),
        }


def open_ticket(
    kind: TicketKind,
    resource_id: Optional[str] = None,
    opened_at: Minutes = 0,
    author: str = "",
    payload: str = "",
    ticket_id: Optional[str] = None,
) -> Ticket:
    """New Open ticket with its implicit creation step. Resource-kind tickets
    must name the resource; User tickets may instead name the user in the
    payload."""
    if kind in RESOURCE_KINDS and not resource_id:
        raise ValidationError(f"{kind.value} ticket requires a resource id")
    if kind is TicketKind.USER and not resource_id and not payload:
        raise ValidationError("User ticket without a resource must name the user in the payload")
    if ticket_id is None:
        ticket_id = f"T-{opened_at}-{kind.value}-{resource_id or 'general'}"
    ticket = Ticket(ticket_id=ticket_id, kind=kind, opened_at=opened_at, resource_id=resource_id)
    ticket.steps.append(TicketStep(at=opened_at, author=author, action=StepAction.COMMENT, payload=payload))
    return ticket


def add_step(ticket: Ticket, step: TicketStep) -> Ticket:
    if ticket.status is TicketStatus.CLOSED:
        raise ValidationError(f"ticket {ticket.ticket_id} is Closed")
    if ticket.steps and step.at < ticket.steps[-1].at:
        raise ValidationError(
            f"step at {step.at} is earlier than the last step at {ticket.steps[-1].at}"
        )
    ticket.steps.append(step)
    return ticket


def transition(ticket: Ticket, new_status: TicketStatus, at: Minutes, author: str) -> Ticket:
    if new_status not in LEGAL_TRANSITIONS[ticket.status]:
        raise IllegalTransitionError(ticket.status.value, new_status.value)
    add_step(
        ticket,
        TicketStep(
            at=at,
            author=author,
            action=StepAction.STATUS_CHANGE,
            payload=f"{ticket.status.value}->{new_status.value}",
        ),
    )
    old = ticket.status
    ticket.status = new_status
    if new_status is TicketStatus.SOLVED:
        ticket.closed_at = at
    elif old is TicketStatus.SOLVED and new_status is TicketStatus.IN_PROGRESS:
        ticket.closed_at = None
    return ticket


def link_alarm(ticket: Ticket, alarm_id: str, at: Minutes, author: str) -> Ticket:
    return add_step(ticket, TicketStep(at=at, author=author, action=StepAction.LINK_ALARM, payload=alarm_id))


# -- duty shifts -------------------------------------------------------------


@dataclass
class ShiftSchedule:
    teams: list[str]
    shift_length: int = 7  # days
    epoch: int = 0  # day number of the first shift's first day

    def __post_init__(self):
        if not self.teams:
            raise ValidationError("schedule needs at least one team")
        if self.shift_length < 1:
            raise ValidationError("shift_length must be >= 1 day")


def on_duty(schedule: ShiftSchedule, day: int) -> str:
    if day < schedule.epoch:
        raise ValidationError(f"day {day} precedes the schedule epoch {schedule.epoch}")
    index = (day - schedule.epoch) // schedule.shift_length % len(schedule.teams)
    return schedule.teams[index]


@dataclass
class TakeoverReport:
    at: Minutes
    open_tickets: list[str]
    unticketed_alarms: list[str]
    stalled: list[str]

    def to_doc(self) -> dict:
        return {
            "at": self.at,
            "open_tickets": self.open_tickets,
            "unticketed_alarms": self.unticketed_alarms,
            "stalled": self.stalled,
        }


def takeover_report(tickets: Iterable[Ticket], alarms, at: Minutes) -> TakeoverReport:
    """Handover digest: open tickets oldest first, open alarms nobody
    ticketed, and open tickets nobody touched for over seven days."""
    open_tickets = sorted(
        (t for t in tickets if t.is_open), key=lambda t: (t.opened_at, t.ticket_id)
    )
    stalled = [t.ticket_id for t in open_tickets if at - t.last_touched() > STALLED_AFTER]
    unticketed = sorted(
        a.alarm_id for a in alarms if a.cleared_at is None and a.linked_ticket is None
    )
    return TakeoverReport(
        at=at,
        open_tickets=[t.ticket_id for t in open_tickets],
        unticketed_alarms=unticketed,
        stalled=stalled,
    )


# -- support metrics ------------------------------------------------------------


@dataclass
class SupportMetrics:
    window: tuple[Minutes, Minutes]
    tickets_per_week: float
    mean_days_to_solve: Optional[float]
    mean_steps: Optional[float]
    mean_people: Optional[float]
    histogram: dict[tuple[int, TicketKind], int]

    def to_doc(self) -> dict:
        buckets: dict[str, dict[str, int]] = {}
        for (month, kind), count in sorted(
            self.histogram.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        ):
            buckets.setdefault(str(month), {})[kind.value] = count
        return {
            "window": {"start": self.window[0], "end": self.window[1]},
            "tickets_per_week": self.tickets_per_week,
            "mean_days_to_solve": self.mean_days_to_solve,
            "mean_steps": self.mean_steps,
            "mean_people": self.mean_people,
            "histogram": buckets,
        }

    def to_csv(self) -> str:
        rows = [
            {"metric": "tickets_per_week", "value": self.tickets_per_week},
            {"metric": "mean_days_to_solve", "value": self.mean_days_to_solve},
            {"metric": "mean_steps", "value": self.mean_steps},
            {"metric": "mean_people", "value": self.mean_people},
        ]
        return to_csv(rows, ["metric", "value"])

    def histogram_csv(self) -> str:
        """Histogram in the month-by-kind layout used on ticket volume charts."""
        kinds = [k.value for k in TicketKind]
        months = sorted({month for month, _ in self.histogram})
        rows = []
        for month in months:
            row = {"month": month}
            for kind in TicketKind:
                row[kind.value] = self.histogram.get((month, kind), 0)
            rows.append(row)
        return to_csv(rows, ["month"] + kinds)


def compute_support_metrics(tickets: Iterable[Ticket], window: tuple[Minutes, Minutes]) -> SupportMetrics:
    """Volume and effort figures. Means cover tickets solved in the window;
    with none solved they are undefined (None), never zero. The histogram
    buckets tickets opened in the window by 30-day month and kind."""
    t0, t1 = window
    if t0 >= t1:
        raise ValidationError(f"window must have start < end, got [{t0}, {t1})")
    tickets = list(tickets)
    opened = [t for t in tickets if t0 <= t.opened_at < t1]
    solved = [
        t
        for t in tickets
        if t.closed_at is not None
        and t0 <= t.closed_at < t1
        and t.status in (TicketStatus.SOLVED, TicketStatus.CLOSED)
    ]
    weeks = (t1 - t0) / WEEK_MINUTES
    histogram: dict[tuple[int, TicketKind], int] = {}
    for t in opened:
        key = (t.opened_at // MONTH_MINUTES, t.kind)
        histogram[key] = histogram.get(key, 0) + 1

    def mean(values: list[float]) -> Optional[float]:
        return sum(values) / len(values) if values else None

    return SupportMetrics(
        window=window,
        tickets_per_week=len(opened) / weeks,
        mean_days_to_solve=mean([(t.closed_at - t.opened_at) / DAY_MINUTES for t in solved]),
        mean_steps=mean([float(len(t.steps)) for t in solved]),
        mean_people=mean([float(len(t.participants)) for t in solved]),
        histogram=histogram,
    )
