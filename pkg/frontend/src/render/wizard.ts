import type { FillingPayload, PlanDoc } from "../types.js";
import { emptyState, esc, show } from "./util.js";

export interface WizardState {
  source: string | null;
  plan: PlanDoc | null;
  executing: boolean;
}

export function renderWizard(state: WizardState, filling: FillingPayload | null): string {
  const parts = [`<section class="wizard">`];
  parts.push(`<h3>1. pick a storage element</h3>`);
  if (!filling || filling.entries.length === 0) {
    parts.push(emptyState("No storage elements known."));
  } else {
    parts.push(
      `<ul class="se-pick">` +
        filling.entries
          .map(
            (entry) =>
              `<li><button data-action="wizard-plan" data-storage="${esc(entry.storage)}"` +
              `${state.source === entry.storage ? ' class="selected"' : ""}>` +
              `${esc(entry.storage)}</button></li>`,
          )
          .join("") +
        `</ul>`,
    );
  }
  if (state.plan) {
    parts.push(renderPlan(state.plan, state.executing));
  } else if (state.source) {
    parts.push(`<p class="meta">planning ${esc(state.source)}…</p>`);
  }
  parts.push(`</section>`);
  return parts.join("");
}

function renderPlan(plan: PlanDoc, executing: boolean): string {
  const parts = [`<h3>2. review plan ${esc(plan.plan_id)} for ${esc(plan.source)}</h3>`];
  if (plan.zombies.length > 0) {
    parts.push(
      `<div class="preamble"><strong>zombies on ${esc(plan.source)}</strong> ` +
        `(no catalogue identity, manual action needed):` +
        `<ul>` +
        plan.zombies
          .map((z) => `<li>${esc(z.pfn)} — ${show(z.size)} bytes, owner ${esc(z.owner)}</li>`)
          .join("") +
        `</ul></div>`,
    );
  }
  if (plan.steps.length === 0) {
    parts.push(emptyState("Nothing migratable."));
  } else {
    parts.push(
      `<table class="grid"><thead><tr><th>file</th><th>to</th><th>bytes</th></tr></thead><tbody>` +
        plan.steps
          .map(
            (step) =>
              `<tr><td>${esc(step.lfn)}</td><td>${esc(step.to)}</td>` +
              `<td class="num">${show(step.size)}</td></tr>`,
          )
          .join("") +
        `</tbody></table>`,
    );
  }
  if (plan.unplaceable.length > 0) {
    parts.push(
      `<div class="warn"><strong>unplaceable</strong> (no target with room):<ul>` +
        plan.unplaceable.map((lfn) => `<li>${esc(lfn)}</li>`).join("") +
        `</ul></div>`,
    );
  }
  if (plan.skipped.length > 0) {
    parts.push(`<p class="meta">skipped (replicas survive elsewhere): ${plan.skipped.map(esc).join(", ")}</p>`);
  }

  if (plan.status === "Draft") {
    const executable = plan.steps.length > 0 && !executing;
    parts.push(`<h3>3. confirm</h3>`);
    if (plan.steps.length === 0) {
      parts.push(`<p class="warn">Nothing to execute: every file is unplaceable or skipped.</p>`);
    }
    parts.push(
      `<button class="danger" data-action="wizard-execute" data-plan="${esc(plan.plan_id)}"` +
        `${executable ? "" : " disabled"}>` +
        `${executing ? "executing…" : `execute ${show(plan.steps.length)} steps`}</button>`,
    );
  } else {
    parts.push(renderOutcome(plan));
  }
  return parts.join("");
}

function renderOutcome(plan: PlanDoc): string {
  if (plan.status === "Done") {
    return (
      `<p class="ok">Done: ${show(plan.completed_steps)} of ${show(plan.steps.length)} steps` +
      ` completed. ${esc(plan.source)} holds no registered replicas.</p>`
    );
  }
  if (plan.status === "Aborted") {
    const remaining = plan.steps.length - plan.completed_steps;
    return (
      `<p class="warn">Aborted after ${show(plan.completed_steps)} completed steps` +
      ` (${show(remaining)} remaining): ${esc(plan.error)}. Catalogue stays consistent;` +
      ` re-plan to continue.</p>`
    );
  }
  return `<p class="meta">status: ${esc(plan.status)}…</p>`;
}
