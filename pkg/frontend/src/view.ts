import { describeError } from "./errors.js";
import { diffSides } from "./sqldiff.js";
import type { DiffToken } from "./sqldiff.js";
import type {
  DatasetEntry,
  PipelineResponse,
  ResultPayload,
  TableProfile,
} from "./types.js";
import type { HistoryEntry } from "./state.js";

/** Chart renderer signature; the real one wraps vega-embed. */
export type EmbedFn = (el: HTMLElement, spec: Record<string, unknown>) => Promise<unknown>;

const RESULT_PREVIEW_ROWS = 50;

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  if (className) el.className = className;
  if (text !== undefined) el.textContent = text;
  return el;
}

function clear(el: HTMLElement): void {
  el.replaceChildren();
}

function cellText(value: unknown): string {
  if (value === null || value === undefined) return "";
  return String(value);
}

// --- dataset profile -------------------------------------------------------

export function renderProfile(el: HTMLElement, entry: DatasetEntry, profile: TableProfile, ddl: string): void {
  clear(el);
  el.appendChild(h("h2", "panel-title", entry.filename));
  const facts = h("p", "profile-facts");
  facts.textContent =
    `${profile.row_count} rows, ${profile.column_count} columns` +
    (profile.primary_key ? `, primary key ${profile.primary_key}` : ", no primary key detected");
  el.appendChild(facts);

  const table = h("table", "profile-table");
  const head = h("tr");
  for (const label of ["column", "type", "role", "nulls", "distinct"]) {
    head.appendChild(h("th", undefined, label));
  }
  table.appendChild(head);
  for (const col of profile.columns) {
    const row = h("tr");
    row.appendChild(h("td", "col-name", col.name));
    row.appendChild(h("td", undefined, col.inferred_type));
    row.appendChild(h("td", undefined, col.role));
    row.appendChild(h("td", "num", String(col.null_count)));
    row.appendChild(h("td", "num", String(col.distinct_count)));
    table.appendChild(row);
  }
  el.appendChild(table);

  const ddlBlock = h("details", "ddl-block");
  ddlBlock.appendChild(h("summary", undefined, "inferred DDL"));
  ddlBlock.appendChild(h("pre", undefined, ddl));
  el.appendChild(ddlBlock);
}

// --- answer panel ----------------------------------------------------------

export function renderBanner(el: HTMLElement, kind: "error" | "info" | "", headline: string, detail = ""): void {
  clear(el);
  el.className = kind ? `banner banner-${kind}` : "banner banner-hidden";
  if (!kind) return;
  el.appendChild(h("strong", undefined, headline));
  if (detail && detail !== headline) {
    el.appendChild(h("div", "banner-detail", detail));
  }
}

function renderSqlSide(title: string, tokens: DiffToken[], markClass: string): HTMLElement {
  const side = h("div", "sql-side");
  side.appendChild(h("h3", undefined, title));
  const code = h("pre", "sql-code");
  for (const token of tokens) {
    const span = h("span", token.changed ? markClass : undefined, token.text);
    code.appendChild(span);
  }
  side.appendChild(code);
  return side;
}

export function renderSqlPanel(el: HTMLElement, response: PipelineResponse): void {
  clear(el);
  if (!response.raw_sql || !response.sql) return;
  const diff = diffSides(response.raw_sql, response.sql, response.refinement);
  const pair = h("div", "sql-pair");
  pair.appendChild(renderSqlSide("generated", diff.raw, "sub-out"));
  pair.appendChild(renderSqlSide("refined", diff.refined, "sub-in"));
  el.appendChild(pair);
  if (diff.substitutions.length > 0) {
    const notes = h("ul", "sub-notes");
    for (const sub of diff.substitutions) {
      notes.appendChild(h("li", undefined, `${sub.original} → ${sub.replacement}`));
    }
    el.appendChild(notes);
  }
}

export function renderResultTable(el: HTMLElement, result: ResultPayload): void {
  clear(el);
  const table = h("table", "result-table");
  const head = h("tr");
  for (const col of result.columns) {
    head.appendChild(h("th", undefined, col.name));
  }
  table.appendChild(head);
  for (const row of result.rows.slice(0, RESULT_PREVIEW_ROWS)) {
    const tr = h("tr");
    for (const value of row) {
      tr.appendChild(h("td", undefined, cellText(value)));
    }
    table.appendChild(tr);
  }
  el.appendChild(table);
  if (result.rows.length > RESULT_PREVIEW_ROWS) {
    el.appendChild(h("p", "result-note", `showing ${RESULT_PREVIEW_ROWS} of ${result.rows.length} rows`));
  }
}

export function renderInsights(el: HTMLElement, bullets: string[]): void {
  clear(el);
  if (bullets.length === 0) return;
  const list = h("ul", "insight-list");
  for (const bullet of bullets) {
    list.appendChild(h("li", undefined, bullet));
  }
  el.appendChild(list);
}

export interface AnswerElements {
  banner: HTMLElement;
  chart: HTMLElement;
  sql: HTMLElement;
  result: HTMLElement;
  insights: HTMLElement;
}

const CHART_STATUS_NOTES: Record<string, string> = {
  "empty-dataset": "The query returned no rows, so there is nothing to chart.",
  "no-suitable-chart": "No chart fits this result shape; see the table below.",
};

/**
 * Render one pipeline reply.  The chart spec is handed to the embed
 * function exactly as the server sent it; the client adds nothing.
 */
export function renderAnswer(els: AnswerElements, response: PipelineResponse, embed: EmbedFn): void {
  clear(els.chart);
  clear(els.sql);
  clear(els.result);
  clear(els.insights);

  if (!response.ok) {
    const described = describeError(response.error);
    renderBanner(els.banner, "error", described.headline, described.detail);
    return;
  }
  renderBanner(els.banner, "", "");

  if (response.chart?.spec) {
    const mount = h("div", "chart-mount");
    els.chart.appendChild(mount);
    void embed(mount, response.chart.spec).catch((err) => {
      renderBanner(els.banner, "error", "The chart could not be rendered.", String(err));
    });
  } else if (response.chart) {
    const note = CHART_STATUS_NOTES[response.chart.status] ?? `no chart (${response.chart.status})`;
    els.chart.appendChild(h("p", "chart-note", note));
  }

  renderSqlPanel(els.sql, response);
  if (response.result) {
    renderResultTable(els.result, response.result);
  }
  if (response.insights) {
    renderInsights(els.insights, response.insights.bullets);
  }
}

// --- history ---------------------------------------------------------------

export function renderHistory(
  el: HTMLElement,
  history: readonly HistoryEntry[],
  onPick: (entry: HistoryEntry) => void,
  onReask: (entry: HistoryEntry) => void,
): void {
  clear(el);
  // newest first
  for (let i = history.length - 1; i >= 0; i--) {
    const entry = history[i];
    const item = h("li", "history-item");
    const status = entry.failure ? "failed" : entry.response?.ok ? "ok" : "error";
    item.appendChild(h("span", `history-dot history-${status}`));
    const label = h("button", "history-question");
    label.type = "button";
    label.textContent = entry.question;
    label.title = "load into the question box";
    label.addEventListener("click", () => onPick(entry));
    item.appendChild(label);
    const again = h("button", "history-reask");
    again.type = "button";
    again.textContent = "↻";
    again.title = "ask again";
    again.addEventListener("click", () => onReask(entry));
    item.appendChild(again);
    el.appendChild(item);
  }
}
