import type { TopologyPayload, WhitelistPayload } from "../types.js";
import { emptyState, esc, show } from "./util.js";

export function renderTopology(
  topology: TopologyPayload,
  whitelist: WhitelistPayload,
): string {
  if (topology.members.length === 0) return emptyState("Topology not computed yet.");
  const certified = new Set(whitelist.members);
  const rows = topology.members
    .map(
      (member) =>
        `<tr class="${certified.has(member.resource) ? "certified" : ""}">` +
        `<td>${esc(member.resource)}</td>` +
        `<td>${esc(member.kind)}</td>` +
        `<td>${esc(member.presence)}</td>` +
        `<td>${certified.has(member.resource) ? '<span class="badge ok-badge">certified reliable</span>' : ""}</td>` +
        `</tr>`,
    )
    .join("");
  return (
    `<p class="meta">computed at ${show(topology.computed_at)} — whitelist ` +
    `${show(whitelist.members.length)} of ${show(topology.members.length)} resources ` +
    `(max filling ${show(whitelist.criteria["max_filling"] ?? null)})</p>` +
    `<table class="grid"><thead><tr><th>resource</th><th>kind</th><th>presence</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}
