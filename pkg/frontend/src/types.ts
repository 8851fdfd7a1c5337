/** Shared types mirroring the grading service's JSON documents. */

export type SessionStatus = "active" | "approved" | "exhausted" | "failed";

export interface CdlParamsDoc {
  lift: [number, number, number];
  gamma: [number, number, number];
  gain: [number, number, number];
  saturation: number;
  contrast: number;
  pivot: number;
}

export interface SessionDocument {
  id: string;
  anchor_path: string;
  curve: string;
  gamut: string;
  directive: string | null;
  params_history: CdlParamsDoc[];
  /** -1 before the automatic grade, then 0-based. */
  iteration: number;
  max_iterations: number;
  status: SessionStatus;
  degraded: boolean;
  failures: string[];
}

export interface TreeNodeDoc {
  id: number;
  parent: number | null;
  depth: number;
  score: number | null;
  critique?: string;
  params?: CdlParamsDoc;
}

export interface TreeDocument {
  nodes: TreeNodeDoc[];
  best_id: number | null;
}

export interface ServiceErrorBody {
  error: { code: string; message: string };
}

export type ExportKind = "cube" | "cdl" | "report";

/** Raised when the service returns a structured error body. */
export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}
