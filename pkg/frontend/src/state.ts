import type { PipelineResponse, TableProfile } from "./types.js";

/**
 * Session model.  History is append-only: every submitted question lands
 * here exactly once, whether it succeeded, failed server-side, or never
 * reached the server.  Replacing the dataset keeps the history.
 */

export interface HistoryEntry {
  question: string;
  chartHint: string | null;
  /** Server reply, for both ok and error outcomes.  Null if transport failed. */
  response: PipelineResponse | null;
  /** Transport-level failure message when no reply arrived. */
  failure: string | null;
}

export interface ActiveDataset {
  id: string;
  filename: string;
  profile: TableProfile;
}

export interface SessionState {
  dataset: ActiveDataset | null;
  history: readonly HistoryEntry[];
  current: HistoryEntry | null;
  pending: boolean;
}

export function initialState(): SessionState {
  return { dataset: null, history: [], current: null, pending: false };
}

export function canSubmit(state: SessionState, question: string): boolean {
  return state.dataset !== null && question.trim().length > 0 && !state.pending;
}

export function withDataset(state: SessionState, dataset: ActiveDataset): SessionState {
  return { ...state, dataset };
}

export function beginQuery(state: SessionState): SessionState {
  if (state.pending) {
    throw new Error("a query is already in flight");
  }
  return { ...state, pending: true };
}

export function settleQuery(state: SessionState, entry: HistoryEntry): SessionState {
  return {
    ...state,
    history: [...state.history, entry],
    current: entry,
    pending: false,
  };
}
