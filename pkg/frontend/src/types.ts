// Mirrors of the JSON payloads the HTTP service emits.

export interface ColumnProfile {
  name: string;
  inferred_type: string;
  role: string;
  null_count: number;
  distinct_count: number;
}

export interface TableProfile {
  table_name: string;
  row_count: number;
  column_count: number;
  columns: ColumnProfile[];
  primary_key: string | null;
}

export interface DatasetEntry {
  id: string;
  filename: string;
  table_name: string;
  sha256: string;
  created_at: string;
  row_count: number;
  column_count: number;
}

export interface ProfileDocument {
  id: string;
  profile: TableProfile;
  ddl: string;
}

export interface Substitution {
  original: string;
  replacement: string;
  score: number;
}

export interface Refinement {
  substitutions: Substitution[];
  unresolved: string[];
}

export interface ResultColumn {
  name: string;
  role: string;
}

export interface ResultPayload {
  columns: ResultColumn[];
  rows: unknown[][];
}

export interface ShapePayload {
  n_rows: number;
  n_columns: number;
  n_categorical: number;
  n_continuous: number;
  n_temporal: number;
  arity: string;
}

export interface ChartPayload {
  chart: string | null;
  status: string;
  source: string;
  requested: string | null;
  spec: Record<string, unknown> | null;
}

export interface InsightPayload {
  bullets: string[];
  source: string;
  word_count: number;
  truncated: boolean;
}

export interface ErrorPayload {
  code?: string | null;
  message: string;
  [extra: string]: unknown;
}

export interface PipelineResponse {
  ok: boolean;
  question: string;
  source: string | null;
  raw_sql: string | null;
  sql: string | null;
  refinement: Refinement | null;
  result: ResultPayload | null;
  shape: ShapePayload | null;
  chart: ChartPayload | null;
  insights: InsightPayload | null;
  error: ErrorPayload | null;
}
