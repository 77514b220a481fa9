/** HTML renderers. Pure functions from API payloads to markup strings:
 * every figure on screen comes straight out of a response field. */

import type {
  ApiError,
  CellHistory,
  Proposal,
  UploadResult,
  Violation,
  WeekGroup,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function cellLabel(item: { week: string; dimension: string; subcategory: string }): string {
  return `${escapeHtml(item.dimension)}/${escapeHtml(item.subcategory)}`;
}

function idList(proposals: Proposal[]): string {
  return proposals.map((p) => p.id).join(",");
}

function proposalRow(p: Proposal, effective: string | undefined): string {
  return `
    <tr class="proposal-row" data-id="${p.id}">
      <td>${p.id}</td>
      <td>${cellLabel(p)}</td>
      <td class="change">${p.old_value} &rarr; ${p.new_value}</td>
      <td>${escapeHtml(p.old_file_id)} &rarr; ${escapeHtml(p.new_file_id)}</td>
      <td class="effective">${effective ? escapeHtml(effective) : "release date"}</td>
      <td>
        <button data-action="accept" data-ids="${p.id}">Accept</button>
        <button data-action="reject" data-ids="${p.id}">Reject</button>
      </td>
    </tr>
  `;
}

/** Review screen: one section per week, batch buttons acting on the
 * whole group, read-only effective date (the server's default). */
export function renderDecisionGroups(
  groups: WeekGroup[],
  releaseDates: Map<string, string> = new Map(),
): string {
  if (groups.length === 0) {
    return `<p class="empty">No pending updates.</p>`;
  }
  return groups
    .map((group) => {
      const ids = idList(group.proposals);
      return `
        <section class="week-group" data-week="${escapeHtml(group.week)}">
          <header>
            <h3>Week of ${escapeHtml(group.week)}</h3>
            <button data-action="accept" data-ids="${ids}">Accept all</button>
            <button data-action="reject" data-ids="${ids}">Reject all</button>
          </header>
          <table>
            <thead>
              <tr><th>#</th><th>Cell</th><th>Change</th><th>Source</th>
                  <th>Effective</th><th></th></tr>
            </thead>
            <tbody>
              ${group.proposals
                .map((p) => proposalRow(p, releaseDates.get(p.new_file_id)))
                .join("")}
            </tbody>
          </table>
        </section>
      `;
    })
    .join("");
}

/** Provenance screen: the version table in server order, each version
 * linked to its source upload, plus the same-week context list. */
export function renderHistory(history: CellHistory, context: Proposal[]): string {
  const versions = history.versions
    .map(
      (v) => `
        <tr class="version-row">
          <td>${v.count}</td>
          <td><a href="#upload-${escapeHtml(v.file_id)}">${escapeHtml(v.file_id)}</a></td>
          <td>${escapeHtml(v.valid_from)}</td>
          <td>${v.valid_to === "9999-12-31" ? "current" : escapeHtml(v.valid_to)}</td>
        </tr>
      `,
    )
    .join("");
  const contextItems = context
    .filter((p) => p.subcategory !== history.subcategory || p.dimension !== history.dimension)
    .map(
      (p) => `
        <li class="context-item">${cellLabel(p)}: ${p.old_value} &rarr; ${p.new_value}
          (${escapeHtml(p.status)})</li>
      `,
    )
    .join("");
  return `
    <section class="cell-history">
      <h3>${escapeHtml(history.week)} ${cellLabel(history)}</h3>
      <table>
        <thead><tr><th>Count</th><th>Upload</th><th>From</th><th>To</th></tr></thead>
        <tbody>${versions}</tbody>
      </table>
      <h4>Same-week updates</h4>
      <ul class="week-context">${contextItems || "<li>none</li>"}</ul>
    </section>
  `;
}

export function renderNotFound(cellText: string): string {
  return `<p class="not-found">No versions recorded for ${escapeHtml(cellText)}.</p>`;
}

export function renderViolations(violations: Violation[]): string {
  if (violations.length === 0) {
    return "";
  }
  return `
    <div class="violations">
      <h4>Consistency check</h4>
      <ul>
        ${violations
          .map(
            (v) =>
              `<li>${escapeHtml(v.week)} ${escapeHtml(v.dimension)}: ` +
              `reported total ${v.reported_total} but subcategories sum to ${v.computed_sum}</li>`,
          )
          .join("")}
      </ul>
    </div>
  `;
}

/** Upload screen result: the server's counts, never recomputed locally. */
export function renderUploadResult(result: UploadResult): string {
  return `
    <div class="upload-result">
      <p>${escapeHtml(result.file_id)} (released ${escapeHtml(result.release_date)}):
        ${result.new_cells.length} new cells, ${result.proposals.length} proposals.</p>
      ${renderViolations(result.violations)}
    </div>
  `;
}

export function renderErrorBanner(error: ApiError): string {
  return `
    <div class="error-banner" role="alert">
      <strong>${escapeHtml(error.machine_code)}</strong>: ${escapeHtml(error.message)}
    </div>
  `;
}
