import type { AlarmDoc } from "../types.js";
import { emptyState, esc, show } from "./util.js";

// Ticket kind to prefill when opening a ticket straight from an alarm row.
export function ticketKindFor(check: string): string {
  if (check === "SEReadWrite") return "SE";
  if (check === "CESubmit") return "CE";
  if (check === "WMSPing") return "WMS";
  return "Other";
}

export function renderAlarmTriage(alarms: AlarmDoc[]): string {
  if (alarms.length === 0) return emptyState("No alarms. Quiet shift.");
  const rows = [...alarms]
    .sort((a, b) => b.raised_at - a.raised_at || a.alarm_id.localeCompare(b.alarm_id))
    .map((alarm) => {
      const open = alarm.cleared_at === null;
      const unticketed = open && alarm.linked_ticket === null;
      const stateBadge = open
        ? `<span class="badge open">open</span>`
        : `<span class="badge cleared">cleared at ${show(alarm.cleared_at)}</span>`;
      const ticketCell = alarm.linked_ticket
        ? `<a href="#/tickets" class="ticket-link">${esc(alarm.linked_ticket)}</a>`
        : unticketed
          ? `<button data-action="open-ticket" data-alarm="${esc(alarm.alarm_id)}"` +
            ` data-resource="${esc(alarm.resource)}" data-kind="${ticketKindFor(alarm.check)}">` +
            `open ticket</button>`
          : "";
      return (
        `<tr class="${unticketed ? "unticketed" : ""}">` +
        `<td>${show(alarm.raised_at)}</td>` +
        `<td>${esc(alarm.resource)}</td>` +
        `<td>${esc(alarm.check)}</td>` +
        `<td>${show(alarm.consecutive_failures)}</td>` +
        `<td>${stateBadge}${unticketed ? ' <span class="badge flag">unticketed</span>' : ""}</td>` +
        `<td>${ticketCell}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table class="grid"><thead><tr>` +
    `<th>raised</th><th>resource</th><th>check</th><th>fails</th><th>state</th><th>ticket</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}
