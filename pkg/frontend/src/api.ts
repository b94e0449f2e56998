import type { DatasetEntry, ErrorPayload, PipelineResponse, ProfileDocument } from "./types.js";

/** Raised for any reply that is not a success and not a pipeline error body. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly payload: ErrorPayload | null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function readJson(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    return null;
  }
}

function errorPayload(body: unknown): ErrorPayload | null {
  if (body && typeof body === "object" && "error" in body) {
    const error = (body as { error: unknown }).error;
    if (error && typeof error === "object" && typeof (error as ErrorPayload).message === "string") {
      return error as ErrorPayload;
    }
  }
  return null;
}

function fail(context: string, response: Response, body: unknown): never {
  const payload = errorPayload(body);
  const message = payload?.message ?? `${context} failed with status ${response.status}`;
  throw new ApiError(message, response.status, payload);
}

export async function uploadDataset(file: File): Promise<DatasetEntry> {
  const form = new FormData();
  form.append("file", file, file.name);
  const response = await fetch("/datasets", { method: "POST", body: form });
  const body = await readJson(response);
  if (response.status === 201) {
    return body as DatasetEntry;
  }
  fail("upload", response, body);
}

export async function fetchProfile(id: string): Promise<ProfileDocument> {
  const response = await fetch(`/datasets/${encodeURIComponent(id)}/profile`);
  const body = await readJson(response);
  if (response.ok) {
    return body as ProfileDocument;
  }
  fail("profile", response, body);
}

/**
 * Run one question.  The service answers 200 for ok replies and 422 for
 * pipeline errors, but both carry the same response document, so both
 * resolve; only transport problems and unexpected statuses throw.
 */
export async function runQuery(
  id: string,
  question: string,
  chartHint: string | null,
): Promise<PipelineResponse> {
  const request: Record<string, unknown> = { question };
  if (chartHint) {
    request.chart_hint = chartHint;
  }
  const response = await fetch(`/datasets/${encodeURIComponent(id)}/query`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(request),
  });
  const body = await readJson(response);
  if (
    (response.status === 200 || response.status === 422) &&
    body !== null &&
    typeof (body as PipelineResponse).ok === "boolean"
  ) {
    return body as PipelineResponse;
  }
  fail("query", response, body);
}
