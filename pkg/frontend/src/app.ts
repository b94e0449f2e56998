import { ApiError, fetchProfile, runQuery, uploadDataset } from "./api.js";
import {
  beginQuery,
  canSubmit,
  initialState,
  settleQuery,
  withDataset,
} from "./state.js";
import type { HistoryEntry, SessionState } from "./state.js";
import {
  renderAnswer,
  renderBanner,
  renderHistory,
  renderProfile,
} from "./view.js";
import type { AnswerElements, EmbedFn } from "./view.js";

export interface AppHandle {
  upload(): Promise<void>;
  ask(): Promise<void>;
  session(): SessionState;
}

function must<T extends HTMLElement>(doc: Document, id: string): T {
  const el = doc.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function initApp(doc: Document, embed: EmbedFn): AppHandle {
  const fileInput = must<HTMLInputElement>(doc, "file-input");
  const uploadButton = must<HTMLButtonElement>(doc, "upload-btn");
  const uploadBanner = must<HTMLElement>(doc, "upload-banner");
  const profilePanel = must<HTMLElement>(doc, "profile-panel");
  const questionInput = must<HTMLInputElement>(doc, "question-input");
  const chartSelect = must<HTMLSelectElement>(doc, "chart-hint");
  const submitButton = must<HTMLButtonElement>(doc, "submit-btn");
  const historyList = must<HTMLElement>(doc, "history-list");
  const answer: AnswerElements = {
    banner: must(doc, "answer-banner"),
    chart: must(doc, "chart-panel"),
    sql: must(doc, "sql-panel"),
    result: must(doc, "result-panel"),
    insights: must(doc, "insights-panel"),
  };

  let session = initialState();

  function refreshControls(): void {
    submitButton.disabled = !canSubmit(session, questionInput.value);
    submitButton.textContent = session.pending ? "asking…" : "ask";
    uploadButton.disabled = session.pending;
  }

  function refreshHistory(): void {
    renderHistory(historyList, session.history, pickEntry, reaskEntry);
  }

  async function upload(): Promise<void> {
    const file = fileInput.files?.[0];
    if (!file) {
      renderBanner(uploadBanner, "info", "Choose a CSV file first.");
      return;
    }
    renderBanner(uploadBanner, "info", `uploading ${file.name}…`);
    try {
      const entry = await uploadDataset(file);
      const doc = await fetchProfile(entry.id);
      session = withDataset(session, {
        id: entry.id,
        filename: entry.filename,
        profile: doc.profile,
      });
      renderBanner(uploadBanner, "", "");
      renderProfile(profilePanel, entry, doc.profile, doc.ddl);
    } catch (err) {
      if (err instanceof ApiError) {
        renderBanner(uploadBanner, "error", err.message);
      } else {
        renderBanner(uploadBanner, "error", "Upload failed: the server could not be reached.");
      }
    }
    refreshControls();
  }

  async function submit(question: string, chartHint: string | null): Promise<void> {
    const dataset = session.dataset;
    if (!dataset || !canSubmit(session, question)) return;
    session = beginQuery(session);
    refreshControls();
    let entry: HistoryEntry;
    try {
      const response = await runQuery(dataset.id, question, chartHint);
      entry = { question, chartHint, response, failure: null };
    } catch (err) {
      const message =
        err instanceof ApiError
          ? err.message
          : "The server could not be reached. Your question is still in the box; retry when it is back.";
      entry = { question, chartHint, response: null, failure: message };
    }
    session = settleQuery(session, entry);
    if (entry.response) {
      renderAnswer(answer, entry.response, embed);
    } else {
      renderBanner(answer.banner, "error", entry.failure ?? "request failed");
    }
    refreshHistory();
    refreshControls();
  }

  function ask(): Promise<void> {
    return submit(questionInput.value, chartSelect.value || null);
  }

  function pickEntry(entry: HistoryEntry): void {
    questionInput.value = entry.question;
    chartSelect.value = entry.chartHint ?? "";
    refreshControls();
    questionInput.focus();
  }

  function reaskEntry(entry: HistoryEntry): void {
    pickEntry(entry);
    void submit(entry.question, entry.chartHint);
  }

  uploadButton.addEventListener("click", () => void upload());
  submitButton.addEventListener("click", () => void ask());
  questionInput.addEventListener("input", refreshControls);
  questionInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void ask();
  });
  refreshControls();

  return { upload, ask, session: () => session };
}
