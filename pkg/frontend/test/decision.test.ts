import { describe, expect, it } from "vitest";

import type { GroupedUpdates, UploadList } from "../src/api.js";
import { DecisionController } from "../src/controller.js";
import { FakeScreen, countOccurrences, loadFixture, serviceError } from "./helpers.js";

const pendingF1 = loadFixture<GroupedUpdates>("pending_f1");
const uploadsF1 = loadFixture<UploadList>("uploads_f1");
const noPending: GroupedUpdates = { groups: [] };

interface StubOptions {
  pendingPages: GroupedUpdates[];
  failDecisions?: boolean;
}

function stubApi(options: StubOptions) {
  const calls: { method: string; ids?: number[] }[] = [];
  let page = 0;
  return {
    calls,
    api: {
      pendingByWeek: async () => {
        calls.push({ method: "pendingByWeek" });
        const current = options.pendingPages[Math.min(page, options.pendingPages.length - 1)];
        page += 1;
        return current;
      },
      uploads: async () => {
        calls.push({ method: "uploads" });
        return uploadsF1;
      },
      accept: async (ids: number[]) => {
        calls.push({ method: "accept", ids });
        if (options.failDecisions) {
          throw serviceError("error_not_pending");
        }
        return { accepted: ids };
      },
      reject: async (ids: number[]) => {
        calls.push({ method: "reject", ids });
        if (options.failDecisions) {
          throw serviceError("error_not_pending");
        }
        return { rejected: ids };
      },
    },
  };
}

describe("review screen", () => {
  it("renders one group with one row per server proposal", async () => {
    const { api } = stubApi({ pendingPages: [pendingF1] });
    const screen = new FakeScreen();
    await new DecisionController(api, screen).refresh();

    expect(countOccurrences(screen.content, 'class="week-group"')).toBe(1);
    expect(screen.content).toContain("Week of 2020-04-20");
    expect(countOccurrences(screen.content, 'class="proposal-row"')).toBe(
      pendingF1.groups[0].proposals.length,
    );
  });

  it("shows each proposal's numbers exactly as the server sent them", async () => {
    const { api } = stubApi({ pendingPages: [pendingF1] });
    const screen = new FakeScreen();
    await new DecisionController(api, screen).refresh();

    for (const proposal of pendingF1.groups[0].proposals) {
      expect(screen.content).toContain(
        `${proposal.old_value} &rarr; ${proposal.new_value}`,
      );
      expect(screen.content).toContain(`${proposal.dimension}/${proposal.subcategory}`);
    }
  });

  it("shows the proposing upload's release date as the effective default", async () => {
    const { api } = stubApi({ pendingPages: [pendingF1] });
    const screen = new FakeScreen();
    await new DecisionController(api, screen).refresh();

    const releaseOfU2 = uploadsF1.uploads.find((u) => u.file_id === "U2")!.release_date;
    expect(countOccurrences(screen.content, `<td class="effective">${releaseOfU2}</td>`))
      .toBe(pendingF1.groups[0].proposals.length);
  });

  it("accept-all issues exactly one batch request, then re-fetches", async () => {
    const { api, calls } = stubApi({ pendingPages: [pendingF1, noPending] });
    const screen = new FakeScreen();
    const controller = new DecisionController(api, screen);
    await controller.refresh();

    const ids = pendingF1.groups[0].proposals.map((p) => p.id);
    await controller.decide("accept", ids);

    const decisions = calls.filter((c) => c.method === "accept" || c.method === "reject");
    expect(decisions).toEqual([{ method: "accept", ids }]);
    const lastFetch = calls.map((c) => c.method).lastIndexOf("pendingByWeek");
    const decisionIndex = calls.findIndex((c) => c.method === "accept");
    expect(lastFetch).toBeGreaterThan(decisionIndex);
  });

  it("never shows decided ids after the server-side refresh", async () => {
    const { api } = stubApi({ pendingPages: [pendingF1, noPending] });
    const screen = new FakeScreen();
    const controller = new DecisionController(api, screen);
    await controller.refresh();
    await controller.decide("accept", [1, 2, 3, 4]);

    expect(screen.content).toContain("No pending updates");
    expect(screen.content).not.toContain('data-id="1"');
  });

  it("a failed decision shows a banner and keeps the rows pending", async () => {
    const { api } = stubApi({ pendingPages: [pendingF1], failDecisions: true });
    const screen = new FakeScreen();
    const controller = new DecisionController(api, screen);
    await controller.refresh();
    await controller.decide("accept", [2]);

    expect(screen.banner).toContain("error-banner");
    expect(screen.banner).toContain("not_pending");
    expect(countOccurrences(screen.content, 'class="proposal-row"')).toBe(4);
  });

  it("ignores clicks while a decision is in flight", async () => {
    const { api, calls } = stubApi({ pendingPages: [pendingF1, noPending] });
    const screen = new FakeScreen();
    const controller = new DecisionController(api, screen);
    await controller.refresh();

    const first = controller.decide("accept", [1]);
    const second = controller.decide("reject", [2]);
    await Promise.all([first, second]);

    const decisions = calls.filter((c) => c.method === "accept" || c.method === "reject");
    expect(decisions).toEqual([{ method: "accept", ids: [1] }]);
  });
});
