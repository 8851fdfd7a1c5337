import { ApiClient, FetchLike } from "../src/api.js";
import { CdlParamsDoc, SessionDocument } from "../src/types.js";

export function identityParams(overrides: Partial<CdlParamsDoc> = {}): CdlParamsDoc {
  return {
    lift: [0, 0, 0],
    gamma: [1, 1, 1],
    gain: [1, 1, 1],
    saturation: 1,
    contrast: 1,
    pivot: 0.435,
    ...overrides,
  };
}

export function sessionDoc(overrides: Partial<SessionDocument> = {}): SessionDocument {
  const history = overrides.params_history ?? [identityParams()];
  return {
    id: "abc123def456",
    anchor_path: "clip/frame_0005.png",
    curve: "SLog3",
    gamut: "SGamut3Cine",
    directive: null,
    params_history: history,
    iteration: history.length - 1,
    max_iterations: 5,
    status: "active",
    degraded: false,
    failures: [],
    ...overrides,
  };
}

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

/** A scripted fetch: replies are consumed in order; requests are recorded. */
export function scriptedFetch(
  replies: Array<{ status?: number; payload: unknown }>,
): { fetch: FetchLike; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const queue = [...replies];
  const fetch: FetchLike = (url, init) => {
    requests.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body) : undefined,
    });
    const reply = queue.shift();
    if (!reply) {
      return Promise.reject(new Error(`unexpected request: ${url}`));
    }
    const status = reply.status ?? 200;
    return Promise.resolve({
      ok: status < 400,
      status,
      json: () => Promise.resolve(reply.payload),
    });
  };
  return { fetch, requests };
}

export function client(
  replies: Array<{ status?: number; payload: unknown }> = [],
): { api: ApiClient; requests: RecordedRequest[] } {
  const { fetch, requests } = scriptedFetch(replies);
  return { api: new ApiClient("http://svc", fetch), requests };
}
