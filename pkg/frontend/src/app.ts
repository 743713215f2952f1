import { ApiClient } from "./api.js";
import type {
  AlarmsPayload,
  FillingPayload,
  HandoverPayload,
  TicketsPayload,
  TopologyPayload,
  WhitelistPayload,
} from "./types.js";
import { renderAlarmTriage } from "./render/alarms.js";
import { renderFillingHeat } from "./render/filling.js";
import { renderHandover } from "./render/handover.js";
import { renderTicketBoard } from "./render/tickets.js";
import { renderTopology } from "./render/topology.js";
import { renderWizard, WizardState } from "./render/wizard.js";
import { esc } from "./render/util.js";

export const ROUTES = ["alarms", "filling", "tickets", "wizard", "topology", "handover"] as const;
export type Route = (typeof ROUTES)[number];

// Server-derived data is replaced wholesale on refresh, never merged.
interface Model {
  alarms: AlarmsPayload | null;
  filling: FillingPayload | null;
  tickets: TicketsPayload | null;
  topology: TopologyPayload | null;
  whitelist: WhitelistPayload | null;
  handover: HandoverPayload | null;
}

export class App {
  model: Model = {
    alarms: null,
    filling: null,
    tickets: null,
    topology: null,
    whitelist: null,
    handover: null,
  };
  route: Route = "alarms";
  offline = false;
  fillingSort = "id";
  fillingDescending = false;
  selectedSe: string | null = null;
  wizard: WizardState = { source: null, plan: null, executing: false };
  simulation = false;
  private busy = new Set<string>();
  private timer: number | undefined;

  constructor(
    public api: ApiClient,
    private root: HTMLElement,
    public pollMs = 30_000,
  ) {}

  start() {
    window.addEventListener("hashchange", () => {
      this.route = routeFromHash(window.location.hash);
      void this.refresh();
    });
    this.root.addEventListener("click", (event) => void this.onClick(event));
    this.route = routeFromHash(window.location.hash);
    this.schedule();
    void this.refresh();
  }

  private schedule() {
    if (this.timer !== undefined) window.clearInterval(this.timer);
    this.timer = window.setInterval(() => void this.refresh(), this.pollMs);
  }

  setPollMs(ms: number) {
    this.pollMs = ms;
    this.schedule();
  }

  async refresh() {
    try {
      const [alarms, filling, tickets, topology, whitelist, handover] = await Promise.all([
        this.api.getAlarms(),
        this.api.getFilling(this.fillingSort, this.fillingDescending),
        this.api.getTickets(),
        this.api.getTopology(),
        this.api.getWhitelist(),
        this.api.getHandover(),
      ]);
      this.model = { alarms, filling, tickets, topology, whitelist, handover };
      this.offline = false;
    } catch {
      // keep the last rendered data; writes are blocked while offline
      this.offline = true;
    }
    this.render();
  }

  render() {
    this.root.innerHTML = this.banner() + this.nav() + `<main>${this.view()}</main>`;
  }

  private banner(): string {
    if (!this.offline) return "";
    return (
      `<div class="banner error">API unreachable at ${esc(this.api.baseUrl)} — showing last known state, ` +
      `writes disabled. <button data-action="retry">retry</button></div>`
    );
  }

  private nav(): string {
    const links = ROUTES.map(
      (r) => `<a href="#/${r}" class="${r === this.route ? "active" : ""}">${r}</a>`,
    ).join("");
    const sim =
      `<label class="sim"><input type="checkbox" data-action="toggle-simulation"` +
      `${this.simulation ? " checked" : ""}/> simulation</label>` +
      (this.simulation
        ? `<button data-action="advance-cycle">run cycle</button>`
        : "");
    return `<nav>${links}${sim}</nav>`;
  }

  private view(): string {
    const m = this.model;
    switch (this.route) {
      case "alarms":
        return m.alarms ? renderAlarmTriage(m.alarms.alarms) : loading();
      case "filling":
        return m.filling
          ? renderFillingHeat(m.filling, {
              sort: this.fillingSort,
              descending: this.fillingDescending,
              selected: this.selectedSe,
            })
          : loading();
      case "tickets":
        return m.tickets ? renderTicketBoard(m.tickets) : loading();
      case "wizard":
        return renderWizard(this.wizard, m.filling);
      case "topology":
        return m.topology && m.whitelist ? renderTopology(m.topology, m.whitelist) : loading();
      case "handover":
        return m.handover ? renderHandover(m.handover, m.tickets) : loading();
    }
  }

  private async onClick(event: Event) {
    const target = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
    if (!target) return;
    const action = target.dataset.action!;
    if (action === "retry") {
      void this.refresh();
      return;
    }
    if (action === "toggle-simulation") {
      this.simulation = (target as HTMLInputElement).checked;
      this.render();
      return;
    }
    if (action === "sort-filling") {
      event.preventDefault();
      const key = target.dataset.sort!;
      this.fillingDescending = this.fillingSort === key ? !this.fillingDescending : key !== "id";
      this.fillingSort = key;
      void this.refresh();
      return;
    }
    if (action === "select-se") {
      const storage = target.dataset.storage!;
      this.selectedSe = this.selectedSe === storage ? null : storage;
      this.render();
      return;
    }
    if (action === "copy-notification") {
      const report = this.model.filling?.heavy_users.find(
        (h) => h.storage === target.dataset.storage,
      );
      if (report) void navigator.clipboard?.writeText(report.notification);
      return;
    }
    if (this.offline) return; // no stale-data writes
    await this.writeAction(action, target);
  }

  private async writeAction(action: string, target: HTMLElement) {
    const entity = target.dataset.ticket ?? target.dataset.plan ?? target.dataset.storage ?? action;
    if (this.busy.has(entity)) return; // one in-flight write per entity
    this.busy.add(entity);
    try {
      if (action === "open-ticket") {
        await this.api.openTicket({
          kind: target.dataset.kind!,
          resource: target.dataset.resource,
          author: operator(),
          payload: `probe failures on ${target.dataset.resource}`,
          alarm_id: target.dataset.alarm,
        });
      } else if (action === "ticket-step") {
        const payload = window.prompt("step note:") ?? "";
        if (payload) await this.api.addStep(target.dataset.ticket!, operator(), payload);
      } else if (action === "ticket-transition") {
        await this.api.transition(target.dataset.ticket!, target.dataset.to!, operator());
      } else if (action === "wizard-plan") {
        this.wizard = { source: target.dataset.storage!, plan: null, executing: false };
        this.render();
        this.wizard.plan = await this.api.planDecommission(target.dataset.storage!);
      } else if (action === "wizard-execute") {
        this.wizard.executing = true;
        this.render();
        await this.api.executePlan(target.dataset.plan!);
        // poll the plan until it settles, then show the outcome
        this.wizard.plan = await this.api.getPlan(target.dataset.plan!);
        this.wizard.executing = false;
      } else if (action === "advance-cycle") {
        await this.api.advanceCycle();
      }
      await this.refresh();
    } catch (error) {
      window.alert(`request failed: ${(error as Error).message}`);
      this.wizard.executing = false;
      this.render();
    } finally {
      this.busy.delete(entity);
    }
  }
}

export function routeFromHash(hash: string): Route {
  const name = hash.replace(/^#\//, "");
  return (ROUTES as readonly string[]).includes(name) ? (name as Route) : "alarms";
}

function loading(): string {
  return `<p class="empty">loading…</p>`;
}

function operator(): string {
  return window.localStorage.getItem("gridops-operator") ?? "operator";
}
