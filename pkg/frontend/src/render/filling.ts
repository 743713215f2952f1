import type { FillingPayload } from "../types.js";
import { emptyState, esc, show } from "./util.js";

export interface FillingViewOptions {
  sort: string;
  descending: boolean;
  selected: string | null;
}

// A row is "hot" iff the server's heavy-user scan reported it: the threshold
// decision stays on the engine side, the console only displays it.
export function renderFillingHeat(payload: FillingPayload, opts: FillingViewOptions): string {
  if (payload.entries.length === 0) return emptyState("No storage elements published yet.");
  const hot = new Set(payload.heavy_users.map((h) => h.storage));
  const header = (label: string, key: string) =>
    `<th><a href="#" data-action="sort-filling" data-sort="${key}">${label}` +
    `${opts.sort === key ? (opts.descending ? " ↓" : " ↑") : ""}</a></th>`;
  const rows = payload.entries
    .map((entry) => {
      const suspect = entry.data_quality === "Suspect";
      const classes = [
        hot.has(entry.storage) ? "hot" : "",
        suspect ? "suspect" : "",
        opts.selected === entry.storage ? "selected" : "",
      ]
        .filter(Boolean)
        .join(" ");
      return (
        `<tr class="${classes}" data-action="select-se" data-storage="${esc(entry.storage)}">` +
        `<td>${esc(entry.storage)}</td>` +
        `<td class="num">${show(entry.published_used)}</td>` +
        `<td class="num">${show(entry.published_free)}</td>` +
        `<td class="num">${suspect ? "" : show(entry.rate)}</td>` +
        `<td>${suspect ? '<span class="badge suspect-badge">suspect data</span>' : ""}` +
        `${hot.has(entry.storage) ? '<span class="badge flag">over threshold</span>' : ""}</td>` +
        `</tr>`
      );
    })
    .join("");
  const table =
    `<table class="grid"><thead><tr>` +
    header("storage", "id") +
    `<th>used</th>` +
    header("free", "free") +
    header("rate", "rate") +
    `<th></th></tr></thead><tbody>${rows}</tbody></table>`;
  return `<p class="meta">snapshot at ${show(payload.taken_at)}</p>` + table + renderDrilldown(payload, opts.selected);
}

function renderDrilldown(payload: FillingPayload, selected: string | null): string {
  if (!selected) return "";
  const report = payload.heavy_users.find((h) => h.storage === selected);
  if (!report) {
    return `<section class="drilldown"><h3>${esc(selected)}</h3>` +
      emptyState("Not above the heavy-user threshold.") + `</section>`;
  }
  const rows = report.users
    .map(
      (user) =>
        `<tr><td>${show(user.rank)}</td><td>${esc(user.owner)}</td>` +
        `<td class="num">${show(user.bytes_owned)}</td></tr>`,
    )
    .join("");
  return (
    `<section class="drilldown"><h3>${esc(report.storage)} — rate ${show(report.rate)}</h3>` +
    `<table class="grid"><thead><tr><th>#</th><th>owner</th><th>bytes</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<h4>notification template</h4>` +
    `<pre class="notification">${esc(report.notification)}</pre>` +
    `<button data-action="copy-notification" data-storage="${esc(report.storage)}">copy</button>` +
    `</section>`
  );
}
