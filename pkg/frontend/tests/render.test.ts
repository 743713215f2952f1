import { describe, expect, it } from "vitest";

import { renderAlarmTriage, ticketKindFor } from "../src/render/alarms.js";
import { renderFillingHeat } from "../src/render/filling.js";
import { renderHandover } from "../src/render/handover.js";
import { renderTicketBoard } from "../src/render/tickets.js";
import { renderTopology } from "../src/render/topology.js";
import { renderWizard } from "../src/render/wizard.js";
import { show } from "../src/render/util.js";
import type { AlarmDoc, FillingPayload, HandoverPayload, PlanDoc } from "../src/types.js";

const alarm = (over: Partial<AlarmDoc> = {}): AlarmDoc => ({
  alarm_id: "SE-1|SEReadWrite|90",
  resource: "SE-1",
  check: "SEReadWrite",
  raised_at: 90,
  cleared_at: null,
  consecutive_failures: 3,
  linked_ticket: null,
  ...over,
});

describe("show", () => {
  it("reproduces JSON number bytes exactly", () => {
    expect(show(0.86)).toBe("0.86");
    expect(show(3.9)).toBe("3.9");
    expect(show(43000000000)).toBe("43000000000");
    expect(show(1 / 3)).toBe(JSON.stringify(1 / 3));
    expect(show(null)).toBe("");
  });
});

describe("alarm triage", () => {
  it("shows empty state without alarms", () => {
    expect(renderAlarmTriage([])).toContain("No alarms");
  });

  it("flags unticketed open alarms with an open-ticket action", () => {
    const html = renderAlarmTriage([alarm()]);
    expect(html).toContain("unticketed");
    expect(html).toContain('data-action="open-ticket"');
    expect(html).toContain('data-resource="SE-1"');
    expect(html).toContain('data-kind="SE"');
    expect(html).toContain('data-alarm="SE-1|SEReadWrite|90"');
  });

  it("shows the ticket link instead of the action once linked", () => {
    const html = renderAlarmTriage([alarm({ linked_ticket: "T-0001" })]);
    expect(html).toContain("T-0001");
    expect(html).not.toContain('data-action="open-ticket"');
    expect(html).not.toContain("unticketed");
  });

  it("sorts newest first", () => {
    const html = renderAlarmTriage([
      alarm({ alarm_id: "a-old", raised_at: 30, resource: "SE-old" }),
      alarm({ alarm_id: "a-new", raised_at: 120, resource: "SE-new" }),
    ]);
    expect(html.indexOf("SE-new")).toBeLessThan(html.indexOf("SE-old"));
  });

  it("maps probe checks to ticket kinds", () => {
    expect(ticketKindFor("SEReadWrite")).toBe("SE");
    expect(ticketKindFor("CESubmit")).toBe("CE");
    expect(ticketKindFor("WMSPing")).toBe("WMS");
    expect(ticketKindFor("CatalogueLookup")).toBe("Other");
  });
});

const filling = (): FillingPayload => ({
  taken_at: 360,
  entries: [
    { storage: "SE-cool", published_used: 10, published_free: 90, rate: 0.1, data_quality: "Ok" },
    { storage: "SE-hot", published_used: 86, published_free: 14, rate: 0.86, data_quality: "Ok" },
    { storage: "SE-weird", published_used: 0, published_free: 0, rate: null, data_quality: "Suspect" },
  ],
  heavy_users: [
    {
      storage: "SE-hot",
      rate: 0.86,
      users: [{ storage: "SE-hot", owner: "alice", bytes_owned: 43000000000, rank: 1 }],
      notification: "Subject: [VO storage] action needed on SE-hot\n",
    },
  ],
});

describe("filling heat view", () => {
  it("highlights only server-flagged rows and badges suspect data", () => {
    const html = renderFillingHeat(filling(), { sort: "id", descending: false, selected: null });
    expect(html).toContain('class="hot"');
    expect(html.match(/class="hot"/g)).toHaveLength(1);
    expect(html).toContain("suspect data");
    // suspect entries show no rate
    expect(html).not.toContain("<td class=\"num\">null</td>");
  });

  it("renders displayed numbers byte-for-byte from the payload", () => {
    const html = renderFillingHeat(filling(), { sort: "id", descending: false, selected: null });
    expect(html).toContain(">0.86<");
    expect(html).toContain(">0.1<");
    expect(html).toContain("snapshot at 360");
  });

  it("drill-down shows heavy users and the notification with a copy action", () => {
    const html = renderFillingHeat(filling(), { sort: "id", descending: false, selected: "SE-hot" });
    expect(html).toContain("alice");
    expect(html).toContain(">43000000000<");
    expect(html).toContain("action needed on SE-hot");
    expect(html).toContain('data-action="copy-notification"');
  });
});

const plan = (over: Partial<PlanDoc> = {}): PlanDoc => ({
  plan_id: "plan-1",
  source: "SE-old",
  status: "Draft",
  steps: [
    { lfn: "lfn:/a", from: "SE-old", to: "SE-new", size: 10 },
    { lfn: "lfn:/b", from: "SE-old", to: "SE-new", size: 20 },
  ],
  unplaceable: [],
  zombies: [],
  skipped: [],
  completed_steps: 0,
  error: "",
  ...over,
});

describe("decommission wizard", () => {
  it("enables execute only for plannable drafts", () => {
    const html = renderWizard({ source: "SE-old", plan: plan(), executing: false }, filling());
    expect(html).toContain("execute 2 steps");
    expect(html).not.toContain("disabled");
  });

  it("disables execute when everything is unplaceable", () => {
    const p = plan({ steps: [], unplaceable: ["lfn:/a", "lfn:/b"] });
    const html = renderWizard({ source: "SE-old", plan: p, executing: false }, filling());
    expect(html).toContain("disabled");
    expect(html).toContain("unplaceable");
  });

  it("lists zombies in the preamble", () => {
    const p = plan({ zombies: [{ storage: "SE-old", pfn: "pf-x", size: 7, owner: "ghost" }] });
    const html = renderWizard({ source: "SE-old", plan: p, executing: false }, filling());
    expect(html).toContain("zombies on SE-old");
    expect(html).toContain("pf-x");
  });

  it("shows completed versus remaining on abort", () => {
    const p = plan({ status: "Aborted", completed_steps: 1, error: "SE-new is Down" });
    const html = renderWizard({ source: "SE-old", plan: p, executing: false }, filling());
    expect(html).toContain("Aborted after 1 completed steps");
    expect(html).toContain("(1 remaining)");
    expect(html).toContain("SE-new is Down");
  });
});

describe("handover view", () => {
  const payload = (over: Partial<HandoverPayload["report"]> = {}): HandoverPayload => ({
    report: { at: 360, open_tickets: [], unticketed_alarms: [], stalled: [], ...over },
    day: 0,
    on_duty: "team-a",
    next_team: "team-b",
    next_handover_day: 7,
  });

  it("renders the clean state", () => {
    const html = renderHandover(payload(), null);
    expect(html).toContain("Clean handover");
    expect(html).toContain("team-a");
    expect(html).toContain("team-b");
  });

  it("lists stalled tickets", () => {
    const html = renderHandover(payload({ stalled: ["T-0001"], open_tickets: ["T-0001"] }), null);
    expect(html).toContain("stalled");
    expect(html).toContain("T-0001");
  });
});

describe("ticket board and topology", () => {
  it("groups tickets by status and offers legal transitions only", () => {
    const html = renderTicketBoard({
      tickets: [
        {
          ticket_id: "T-0001",
          kind: "SE",
          resource: "SE-1",
          opened_at: 30,
          closed_at: null,
          status: "Open",
          steps: [{ at: 30, author: "ops", action: "Comment", payload: "created" }],
          participants: ["ops"],
        },
      ],
    });
    expect(html).toContain("Open (1)");
    expect(html).toContain('data-to="InProgress"');
    expect(html).not.toContain('data-to="Closed"');
  });

  it("marks whitelisted resources as certified", () => {
    const html = renderTopology(
      {
        computed_at: 30,
        members: [
          { resource: "SE-1", kind: "SE", presence: "RegisteredAndPublished" },
          { resource: "SE-2", kind: "SE", presence: "RegisteredOnly" },
        ],
      },
      { computed_at: 30, members: ["SE-1"], criteria: { max_filling: 0.8, alarm_lookback: 1440 } },
    );
    expect(html).toContain("certified reliable");
    expect(html).toContain("RegisteredOnly");
    expect(html).toContain("max filling 0.8");
  });
});
