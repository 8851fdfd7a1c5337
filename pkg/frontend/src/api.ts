/** Thin typed client over the grading service's HTTP API.
 *
 * This module is the only place URLs are built. Pixels are never produced
 * client-side: every image the UI shows is fetched from `previewUrl`.
 */

import {
  ExportKind,
  ServiceError,
  ServiceErrorBody,
  SessionDocument,
  TreeDocument,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export interface CreateSessionRequest {
  source: string;
  curve: string;
  gamut: string;
  directive?: string;
}

async function parseError(status: number, payload: unknown): Promise<never> {
  const body = payload as Partial<ServiceErrorBody> | null;
  if (body && body.error && typeof body.error.code === "string") {
    throw new ServiceError(status, body.error.code, body.error.message);
  }
  throw new ServiceError(status, "unknown_error", `service returned ${status}`);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private async request<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      return parseError(response.status, payload);
    }
    return payload as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  createSession(req: CreateSessionRequest): Promise<SessionDocument> {
    return this.post("/sessions", req);
  }

  grade(sessionId: string): Promise<SessionDocument> {
    return this.post(`/sessions/${sessionId}/grade`);
  }

  submitFeedback(sessionId: string, text: string): Promise<SessionDocument> {
    return this.post(`/sessions/${sessionId}/feedback`, { text });
  }

  state(sessionId: string): Promise<SessionDocument> {
    return this.request(`/sessions/${sessionId}/state`);
  }

  tree(sessionId: string): Promise<TreeDocument> {
    return this.request(`/sessions/${sessionId}/tree`);
  }

  /** URL of a server-rendered preview; the sole source of displayed pixels. */
  previewUrl(sessionId: string, iteration: number, size?: number): string {
    const query = size === undefined ? "" : `&size=${size}`;
    return `${this.baseUrl}/sessions/${sessionId}/preview?iteration=${iteration}${query}`;
  }

  /** Download URL; the service names files `grade_iter{N}.{ext}`. */
  exportUrl(sessionId: string, kind: ExportKind): string {
    return `${this.baseUrl}/sessions/${sessionId}/export/${kind}`;
  }
}
