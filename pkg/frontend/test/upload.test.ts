import { describe, expect, it } from "vitest";

import type { UploadResult } from "../src/api.js";
import { UploadController } from "../src/controller.js";
import { FakeScreen, loadFixture, serviceError } from "./helpers.js";

const uploadU1 = loadFixture<UploadResult>("upload_u1");
const uploadF2 = loadFixture<UploadResult>("upload_f2");

function stubApi(result: UploadResult | Error) {
  const calls: unknown[][] = [];
  return {
    calls,
    upload: async (...args: unknown[]) => {
      calls.push(args);
      if (result instanceof Error) {
        throw result;
      }
      return result;
    },
  };
}

describe("upload screen", () => {
  it("summarizes a clean upload from the response fields", async () => {
    const api = stubApi(uploadU1);
    const screen = new FakeScreen();
    await new UploadController(api, screen).submit("U1", "2020-04-29", "csv text");

    expect(api.calls).toEqual([["U1", "2020-04-29", "csv text"]]);
    expect(screen.content).toContain(
      `${uploadU1.new_cells.length} new cells, ${uploadU1.proposals.length} proposals.`,
    );
    expect(screen.content).not.toContain("Consistency");
  });

  it("surfaces a reported-total mismatch without hiding the ingest", async () => {
    const screen = new FakeScreen();
    await new UploadController(stubApi(uploadF2), screen).submit("F2", "2020-04-29", "csv");

    const violation = uploadF2.violations[0];
    expect(screen.content).toContain(
      `${violation.week} ${violation.dimension}: reported total ` +
        `${violation.reported_total} but subcategories sum to ${violation.computed_sum}`,
    );
    expect(screen.content).toContain(
      `${uploadF2.new_cells.length} new cells, ${uploadF2.proposals.length} proposals.`,
    );
  });

  it("a rejected duplicate becomes an error banner", async () => {
    const screen = new FakeScreen();
    const controller = new UploadController(stubApi(serviceError("error_duplicate_upload")), screen);
    await controller.submit("U1", "2020-05-06", "changed csv");

    expect(screen.banner).toContain("error-banner");
    expect(screen.banner).toContain("duplicate_upload");
    expect(controller.busy).toBe(false);
  });

  it("ignores a second submit while one is in flight", async () => {
    let release: (value: UploadResult) => void = () => {};
    const calls: unknown[][] = [];
    const api = {
      upload: (...args: unknown[]) => {
        calls.push(args);
        return new Promise<UploadResult>((resolve) => {
          release = resolve;
        });
      },
    };
    const screen = new FakeScreen();
    const controller = new UploadController(api, screen);

    const first = controller.submit("U1", "2020-04-29", "csv");
    const second = controller.submit("U1", "2020-04-29", "csv");
    release(uploadU1);
    await Promise.all([first, second]);

    expect(calls).toHaveLength(1);
  });
});
