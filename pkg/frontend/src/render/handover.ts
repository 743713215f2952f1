import type { HandoverPayload, TicketsPayload } from "../types.js";
import { esc, show } from "./util.js";

export function renderHandover(payload: HandoverPayload, tickets: TicketsPayload | null): string {
  const report = payload.report;
  const clean =
    report.open_tickets.length === 0 &&
    report.unticketed_alarms.length === 0 &&
    report.stalled.length === 0;
  const parts = [`<section class="handover printable">`];
  parts.push(
    `<p class="meta">day ${show(payload.day)}` +
      (payload.on_duty ? ` — on duty: <strong>${esc(payload.on_duty)}</strong>` : "") +
      (payload.next_team
        ? `, next: ${esc(payload.next_team)} (day ${show(payload.next_handover_day)})`
        : "") +
      `</p>`,
  );
  if (clean) {
    parts.push(`<p class="ok">Clean handover: no open tickets, no unticketed alarms, nothing stalled.</p>`);
    parts.push(`</section>`);
    return parts.join("");
  }
  const subject = (id: string) => {
    const ticket = tickets?.tickets.find((t) => t.ticket_id === id);
    return ticket ? ` — ${esc(ticket.kind)} ${esc(ticket.resource ?? "")} (${esc(ticket.status)})` : "";
  };
  parts.push(`<h3>open tickets (oldest first)</h3>`);
  parts.push(
    report.open_tickets.length
      ? `<ul>` + report.open_tickets.map((id) => `<li>${esc(id)}${subject(id)}</li>`).join("") + `</ul>`
      : `<p class="empty">none</p>`,
  );
  parts.push(`<h3>unticketed alarms: ${show(report.unticketed_alarms.length)}</h3>`);
  if (report.unticketed_alarms.length) {
    parts.push(`<ul>` + report.unticketed_alarms.map((id) => `<li>${esc(id)}</li>`).join("") + `</ul>`);
  }
  parts.push(`<h3>stalled (no step in 7 days)</h3>`);
  parts.push(
    report.stalled.length
      ? `<ul>` + report.stalled.map((id) => `<li>${esc(id)}${subject(id)}</li>`).join("") + `</ul>`
      : `<p class="empty">none</p>`,
  );
  parts.push(`</section>`);
  return parts.join("");
}
