// Mirrors of the API payloads. The console never derives numbers of its
// own: everything rendered comes verbatim from these documents.

export interface AlarmDoc {
  alarm_id: string;
  resource: string;
  check: string;
  raised_at: number;
  cleared_at: number | null;
  consecutive_failures: number;
  linked_ticket: string | null;
}

export interface AlarmsPayload {
  alarms: AlarmDoc[];
}

export interface FillingEntryDoc {
  storage: string;
  published_used: number | null;
  published_free: number | null;
  rate: number | null;
  data_quality: "Ok" | "Suspect";
}

export interface HeavyUserDoc {
  storage: string;
  owner: string;
  bytes_owned: number;
  rank: number;
}

export interface HeavyReportDoc {
  storage: string;
  rate: number;
  users: HeavyUserDoc[];
  notification: string;
}

export interface FillingPayload {
  taken_at: number;
  entries: FillingEntryDoc[];
  heavy_users: HeavyReportDoc[];
}

export interface TicketStepDoc {
  at: number;
  author: string;
  action: string;
  payload: string;
}

export interface TicketDoc {
  ticket_id: string;
  kind: string;
  resource: string | null;
  opened_at: number;
  closed_at: number | null;
  status: string;
  steps: TicketStepDoc[];
  participants: string[];
}

export interface TicketsPayload {
  tickets: TicketDoc[];
}

export interface TopologyMemberDoc {
  resource: string;
  kind: string;
  presence: string;
}

export interface TopologyPayload {
  computed_at: number;
  members: TopologyMemberDoc[];
}

export interface WhitelistPayload {
  computed_at: number;
  members: string[];
  criteria: Record<string, number>;
}

export interface ZombieDoc {
  storage: string;
  pfn: string;
  size: number;
  owner: string;
}

export interface PlanStepDoc {
  lfn: string;
  from: string;
  to: string;
  size: number;
}

export interface PlanDoc {
  plan_id: string;
  source: string;
  status: "Draft" | "Running" | "Done" | "Aborted";
  steps: PlanStepDoc[];
  unplaceable: string[];
  zombies: ZombieDoc[];
  skipped: string[];
  completed_steps: number;
  error: string;
}

export interface PlansPayload {
  plans: PlanDoc[];
}

export interface HandoverPayload {
  report: {
    at: number;
    open_tickets: string[];
    unticketed_alarms: string[];
    stalled: string[];
  };
  day: number;
  on_duty: string | null;
  next_team: string | null;
  next_handover_day: number | null;
}

export interface ReconciliationPayload {
  scanned_at: number;
  zombies: ZombieDoc[];
  ghosts: { lfn: string; storage: string; pfn: string }[];
}
