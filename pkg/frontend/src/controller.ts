/** Screen controllers: fetch, render, and re-fetch after every mutation.
 * The server is the source of truth — no optimistic updates, and at most
 * one mutating request in flight at a time. */

import type { ApiClient, GroupedUpdates, UploadList } from "./api.js";
import { ServiceError } from "./api.js";
import {
  renderDecisionGroups,
  renderErrorBanner,
  renderHistory,
  renderNotFound,
  renderUploadResult,
} from "./render.js";

export interface Screen {
  setContent(html: string): void;
  setBanner(html: string): void;
}

function bannerFor(screen: Screen, error: unknown): void {
  if (error instanceof ServiceError) {
    screen.setBanner(renderErrorBanner(error.detail));
  } else {
    screen.setBanner(
      renderErrorBanner({
        http_status: 0,
        machine_code: "unreachable",
        message: String(error),
      }),
    );
  }
}

type DecisionApi = Pick<ApiClient, "pendingByWeek" | "accept" | "reject" | "uploads">;

export class DecisionController {
  private inFlight = false;

  constructor(
    private readonly api: DecisionApi,
    private readonly screen: Screen,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  async refresh(): Promise<void> {
    let pending: GroupedUpdates;
    let uploads: UploadList;
    try {
      [pending, uploads] = await Promise.all([this.api.pendingByWeek(), this.api.uploads()]);
    } catch (error) {
      bannerFor(this.screen, error);
      return;
    }
    const releaseDates = new Map(
      uploads.uploads.map((u) => [u.file_id, u.release_date]),
    );
    this.screen.setContent(renderDecisionGroups(pending.groups, releaseDates));
  }

  /** One batch request per click, then a refresh from the server —
   * also on failure, so the page always shows stored state. */
  async decide(action: "accept" | "reject", ids: number[]): Promise<void> {
    if (this.inFlight || ids.length === 0) {
      return;
    }
    this.inFlight = true;
    try {
      if (action === "accept") {
        await this.api.accept(ids);
      } else {
        await this.api.reject(ids);
      }
      this.screen.setBanner("");
    } catch (error) {
      bannerFor(this.screen, error);
    } finally {
      this.inFlight = false;
    }
    await this.refresh();
  }
}

type ProvenanceApi = Pick<ApiClient, "history" | "updatesByWeek">;

export class ProvenanceController {
  constructor(
    private readonly api: ProvenanceApi,
    private readonly screen: Screen,
  ) {}

  async show(week: string, dimension: string, subcategory: string): Promise<void> {
    try {
      const [history, updates] = await Promise.all([
        this.api.history(week, dimension, subcategory),
        this.api.updatesByWeek(),
      ]);
      const context =
        updates.groups.find((group) => group.week === history.week)?.proposals ?? [];
      this.screen.setBanner("");
      this.screen.setContent(renderHistory(history, context));
    } catch (error) {
      if (error instanceof ServiceError && error.detail.machine_code === "unknown_cell") {
        this.screen.setBanner("");
        this.screen.setContent(renderNotFound(`${week}/${dimension}/${subcategory}`));
        return;
      }
      bannerFor(this.screen, error);
    }
  }
}

type UploadApi = Pick<ApiClient, "upload">;

export class UploadController {
  private inFlight = false;

  constructor(
    private readonly api: UploadApi,
    private readonly screen: Screen,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  async submit(fileId: string, releaseDate: string, csv: string | Blob): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    try {
      const result = await this.api.upload(fileId, releaseDate, csv);
      this.screen.setBanner("");
      this.screen.setContent(renderUploadResult(result));
    } catch (error) {
      bannerFor(this.screen, error);
    } finally {
      this.inFlight = false;
    }
  }
}
