import type { ErrorPayload } from "./types.js";

/**
 * One short, actionable headline per server error code.  The server message
 * is shown underneath as detail, so headlines focus on what to do next.
 */
const HEADLINES: Record<string, string> = {
  PARSE_ERROR: "The generated SQL did not parse. Try phrasing the question more plainly.",
  OFF_TOPIC: "That question does not look like it is about this dataset. Ask about its columns.",
  UNRESOLVED_IDENTIFIERS: "Some names matched no column. Use the column names shown in the profile.",
  LLM_ERROR: "The language model is unreachable. Retry in a moment or rely on offline translation.",
  INVALID_CHART_HINT: "That chart type is not recognised. Pick one from the chart menu.",
  EXECUTION_ERROR: "The query could not be run against the table. Simplify the question and retry.",
  UNKNOWN_COLUMN: "The query referenced a column this table does not have. Check the profile panel.",
  UNKNOWN_TABLE: "The query referenced a different table. Ask about the uploaded dataset only.",
  TYPE_MISMATCH: "The query mixed text and numbers. Compare like with like.",
  PROFILE_ERROR: "The file could not be profiled as a table. Check that it is a well-formed CSV.",
  EMPTY_FILE: "The file has no data rows. Upload a CSV with a header and at least one row.",
  RAGGED_ROW: "A row has the wrong number of cells. Fix the CSV and upload it again.",
  NOT_UTF8: "The file is not UTF-8 text. Re-export it with UTF-8 encoding and upload again.",
  DUPLICATE_COLUMN: "Two columns share the same name. Rename one and upload again.",
  UNKNOWN_DATASET: "The server no longer has this dataset. Upload the file again.",
  EVAL_ERROR: "The evaluation run failed. Check the pair file and retry.",
  EMPTY_INPUT: "The pair file contains no evaluation pairs. Add at least one line.",
  MALFORMED_PAIR_FILE: "The pair file is not valid JSON lines. Fix the formatting and retry.",
  CONFIG_ERROR: "The server configuration is invalid. Check the config file and environment.",
};

export const FALLBACK_HEADLINE = "The request failed. Retry, and check the server logs if it persists.";

export interface ErrorDescription {
  headline: string;
  detail: string;
}

export function describeError(payload: ErrorPayload | null | undefined): ErrorDescription {
  if (!payload) {
    return { headline: FALLBACK_HEADLINE, detail: "" };
  }
  const headline = (payload.code && HEADLINES[payload.code]) || FALLBACK_HEADLINE;
  return { headline, detail: payload.message };
}

export const ERROR_HEADLINES: ReadonlyMap<string, string> = new Map(Object.entries(HEADLINES));
