import type {
  AlarmsPayload,
  FillingPayload,
  HandoverPayload,
  PlanDoc,
  PlansPayload,
  ReconciliationPayload,
  TicketDoc,
  TicketsPayload,
  TopologyPayload,
  WhitelistPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

export interface OpenTicketBody {
  kind: string;
  resource?: string | null;
  author: string;
  payload?: string;
  alarm_id?: string;
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    public token?: string,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["X-Api-Token"] = this.token;
    const response = await fetch(this.baseUrl + path, { ...init, headers });
    const text = await response.text();
    if (!response.ok) {
      let code = "http_error";
      let message = text || `HTTP ${response.status}`;
      try {
        const body = JSON.parse(text);
        if (body.error) {
          code = body.error.code;
          message = body.error.message;
        }
      } catch {
        // non-JSON error body: keep raw text
      }
      throw new ApiError(code, message, response.status);
    }
    return JSON.parse(text) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, { method: "POST", body: JSON.stringify(body ?? {}) });
  }

  getAlarms(): Promise<AlarmsPayload> {
    return this.request("/alarms");
  }

  getFilling(sort = "id", descending = false): Promise<FillingPayload> {
    return this.request(`/filling?sort=${sort}&descending=${descending}`);
  }

  getTickets(): Promise<TicketsPayload> {
    return this.request("/tickets");
  }

  getTopology(): Promise<TopologyPayload> {
    return this.request("/topology");
  }

  getWhitelist(): Promise<WhitelistPayload> {
    return this.request("/whitelist");
  }

  getHandover(): Promise<HandoverPayload> {
    return this.request("/handover");
  }

  getReconciliation(): Promise<ReconciliationPayload> {
    return this.request("/reports/reconciliation");
  }

  getPlans(): Promise<PlansPayload> {
    return this.request("/decommission");
  }

  getPlan(planId: string): Promise<PlanDoc> {
    return this.request(`/decommission/${planId}`);
  }

  openTicket(body: OpenTicketBody): Promise<TicketDoc> {
    return this.post("/tickets", body);
  }

  addStep(ticketId: string, author: string, payload: string): Promise<TicketDoc> {
    return this.post(`/tickets/${ticketId}/steps`, { author, payload });
  }

  transition(ticketId: string, to: string, author: string): Promise<TicketDoc> {
    return this.post(`/tickets/${ticketId}/transition`, { to, author });
  }

  planDecommission(source: string, placement = "MostFreeFirst"): Promise<PlanDoc> {
    return this.post("/decommission/plan", { source, placement });
  }

  executePlan(planId: string): Promise<PlanDoc> {
    return this.post(`/decommission/${planId}/execute`);
  }

  injectFault(resource: string, kind: string, magnitude: number): Promise<unknown> {
    return this.post("/faults", { resource, kind, magnitude });
  }

  advanceCycle(): Promise<unknown> {
    return this.post("/cycle");
  }
}
