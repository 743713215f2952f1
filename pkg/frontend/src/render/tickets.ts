import type { TicketDoc, TicketsPayload } from "../types.js";
import { emptyState, esc, show } from "./util.js";

const COLUMNS = ["Open", "InProgress", "OnHold", "Solved", "Closed"];

// UI affordance only; the engine re-validates every transition.
const NEXT: Record<string, string[]> = {
  Open: ["InProgress", "OnHold", "Solved"],
  InProgress: ["OnHold", "Solved"],
  OnHold: ["InProgress"],
  Solved: ["Closed", "InProgress"],
  Closed: [],
};

export function renderTicketBoard(payload: TicketsPayload): string {
  if (payload.tickets.length === 0) return emptyState("No tickets yet.");
  const columns = COLUMNS.map((status) => {
    const cards = payload.tickets.filter((t) => t.status === status).map(renderCard).join("");
    return (
      `<div class="column"><h3>${status} (${show(
        payload.tickets.filter((t) => t.status === status).length,
      )})</h3>${cards}</div>`
    );
  }).join("");
  return `<div class="board">${columns}</div>`;
}

function renderCard(ticket: TicketDoc): string {
  const actions = NEXT[ticket.status]
    .map(
      (to) =>
        `<button data-action="ticket-transition" data-ticket="${esc(ticket.ticket_id)}"` +
        ` data-to="${to}">${to}</button>`,
    )
    .join("");
  const addStep =
    ticket.status === "Closed"
      ? ""
      : `<button data-action="ticket-step" data-ticket="${esc(ticket.ticket_id)}">add step</button>`;
  return (
    `<article class="card" data-ticket="${esc(ticket.ticket_id)}">` +
    `<header><strong>${esc(ticket.ticket_id)}</strong> <span class="badge">${esc(ticket.kind)}</span>` +
    `${ticket.resource ? ` <span class="res">${esc(ticket.resource)}</span>` : ""}</header>` +
    `<p class="meta">opened ${show(ticket.opened_at)}` +
    `${ticket.closed_at !== null ? `, closed ${show(ticket.closed_at)}` : ""}` +
    ` — ${show(ticket.steps.length)} steps, ${show(ticket.participants.length)} people</p>` +
    `<p>${esc(ticket.steps[0]?.payload ?? "")}</p>` +
    `<footer>${addStep}${actions}</footer>` +
    `</article>`
  );
}
