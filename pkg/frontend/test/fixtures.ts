import type {
  DatasetEntry,
  PipelineResponse,
  ProfileDocument,
  TableProfile,
} from "../src/types.js";

export function profileFixture(): TableProfile {
  return {
    table_name: "bowling",
    row_count: 79,
    column_count: 13,
    columns: [
      { name: "Player", inferred_type: "text", role: "categorical", null_count: 0, distinct_count: 79 },
      { name: "Wkts", inferred_type: "integer", role: "continuous", null_count: 0, distinct_count: 60 },
      { name: "Ave", inferred_type: "real", role: "continuous", null_count: 0, distinct_count: 75 },
    ],
    primary_key: "Player",
  };
}

export function entryFixture(): DatasetEntry {
  return {
    id: "d1",
    filename: "bowling.csv",
    table_name: "bowling",
    sha256: "feed",
    created_at: "2026-08-16T00:00:00Z",
    row_count: 79,
    column_count: 13,
  };
}

export function profileDocFixture(): ProfileDocument {
  return {
    id: "d1",
    profile: profileFixture(),
    ddl: 'CREATE TABLE "bowling" (...)',
  };
}

export function okResponse(overrides: Partial<PipelineResponse> = {}): PipelineResponse {
  return {
    ok: true,
    question: "top 10 players with the highest wickets",
    source: "offline",
    raw_sql: 'SELECT player, wickets FROM t ORDER BY wickets DESC LIMIT 10',
    sql: 'SELECT "Player", "Wkts" FROM "bowling" ORDER BY "Wkts" DESC LIMIT 10',
    refinement: {
      substitutions: [
        { original: "player", replacement: "Player", score: 1.0 },
        { original: "wickets", replacement: "Wkts", score: 0.62 },
      ],
      unresolved: [],
    },
    result: {
      columns: [
        { name: "Player", role: "categorical" },
        { name: "Wkts", role: "continuous" },
      ],
      rows: [
        ["M Muralitharan (Asia/ICC/SL)", 534],
        ["Wasim Akram (PAK)", 502],
      ],
    },
    shape: { n_rows: 2, n_columns: 2, n_categorical: 1, n_continuous: 1, n_temporal: 0, arity: "binary" },
    chart: {
      chart: "bar",
      status: "ok",
      source: "cascade",
      requested: null,
      spec: { $schema: "https://vega.github.io/schema/vega-lite/v5.json", mark: "bar" },
    },
    insights: {
      bullets: ["M Muralitharan (Asia/ICC/SL) leads with 534.00 Wkts."],
      source: "template",
      word_count: 8,
      truncated: false,
    },
    error: null,
    ...overrides,
  };
}

export function errorResponse(code: string, message: string): PipelineResponse {
  return {
    ok: false,
    question: "who is the president?",
    source: "offline",
    raw_sql: null,
    sql: null,
    refinement: null,
    result: null,
    shape: null,
    chart: null,
    insights: null,
    error: { code, message },
  };
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
