/** Typed client for the curation service. Every screen gets its data
 * through this module; nothing on a page is computed client-side. */

export interface ApiError {
  http_status: number;
  machine_code: string;
  message: string;
}

export class ServiceError extends Error {
  constructor(readonly detail: ApiError) {
    super(detail.message);
    this.name = "ServiceError";
  }
}

export interface Proposal {
  id: number;
  week: string;
  dimension: string;
  subcategory: string;
  old_value: number;
  new_value: number;
  old_file_id: string;
  new_file_id: string;
  status: "pending" | "accepted" | "rejected";
  decided_at: string | null;
}

export interface WeekGroup {
  week: string;
  proposals: Proposal[];
}

export interface GroupedUpdates {
  groups: WeekGroup[];
}

export interface Version {
  count: number;
  file_id: string;
  valid_from: string;
  valid_to: string;
}

export interface CellHistory {
  week: string;
  dimension: string;
  subcategory: string;
  versions: Version[];
}

export interface NewCell {
  week: string;
  dimension: string;
  subcategory: string;
  count: number;
}

export interface Violation {
  week: string;
  dimension: string;
  reported_total: number;
  computed_sum: number;
}

export interface UploadResult {
  file_id: string;
  release_date: string;
  new_cells: NewCell[];
  proposals: Proposal[];
  violations: Violation[];
}

export interface UploadEntry {
  file_id: string;
  release_date: string;
  row_count: number;
}

export interface UploadList {
  uploads: UploadEntry[];
}

// Subcategory names may contain slashes (e.g. Home/Non-institution);
// the history route treats them as part of the path, so encode around
// them rather than through them.
function encodeCellPath(part: string): string {
  return part.split("/").map(encodeURIComponent).join("/");
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ServiceError(body as ApiError);
    }
    return body as T;
  }

  pendingByWeek(): Promise<GroupedUpdates> {
    return this.request("/updates?status=pending&group=week");
  }

  updatesByWeek(): Promise<GroupedUpdates> {
    return this.request("/updates?group=week");
  }

  accept(ids: number[]): Promise<{ accepted: number[] }> {
    return this.request("/updates/accept", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ids }),
    });
  }

  reject(ids: number[]): Promise<{ rejected: number[] }> {
    return this.request("/updates/reject", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ids }),
    });
  }

  history(week: string, dimension: string, subcategory: string): Promise<CellHistory> {
    const cell = [week, dimension, subcategory].map(encodeCellPath).join("/");
    return this.request(`/cells/${cell}/history`);
  }

  upload(fileId: string, releaseDate: string, csv: string | Blob): Promise<UploadResult> {
    const params = new URLSearchParams({ file_id: fileId, release_date: releaseDate });
    return this.request(`/uploads?${params}`, {
      method: "POST",
      headers: { "content-type": "text/csv" },
      body: csv,
    });
  }

  uploads(): Promise<UploadList> {
    return this.request("/uploads");
  }
}
