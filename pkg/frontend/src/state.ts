/** Client-side session store.
 *
 * All state is reconstructable from `GET /sessions/{id}/state`; the store
 * only adds presentation concerns (compare selection, in-flight flag, last
 * error). Feedback submissions are serialized: while one is in flight the
 * input is disabled and further submissions are rejected.
 */

import { ApiClient } from "./api.js";
import { ServiceError, SessionDocument } from "./types.js";

export interface CompareSelection {
  a: number;
  b: number;
}

export interface SessionViewState {
  doc: SessionDocument | null;
  compare: CompareSelection | null;
  submitting: boolean;
  lastError: string | null;
}

/** 0..iteration inclusive; empty before the first grade. */
export function iterationList(doc: SessionDocument | null): number[] {
  if (!doc || doc.iteration < 0) {
    return [];
  }
  return Array.from({ length: doc.iteration + 1 }, (_, i) => i);
}

export function inputDisabled(state: SessionViewState): boolean {
  if (state.submitting) {
    return true;
  }
  const doc = state.doc;
  return !doc || doc.status !== "active" || doc.iteration < 0;
}

/** Reason shown next to a disabled input, e.g. an "exhausted" badge. */
export function disabledReason(state: SessionViewState): string | null {
  const doc = state.doc;
  if (!doc) {
    return null;
  }
  if (doc.status === "exhausted") {
    return "exhausted";
  }
  if (doc.status === "approved") {
    return "approved";
  }
  if (doc.status === "failed") {
    return "failed";
  }
  return null;
}

export class SessionStore {
  private state: SessionViewState = {
    doc: null,
    compare: null,
    submitting: false,
    lastError: null,
  };
  private listeners: Array<(state: SessionViewState) => void> = [];

  constructor(private readonly api: ApiClient) {}

  getState(): SessionViewState {
    return this.state;
  }

  subscribe(listener: (state: SessionViewState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private setState(patch: Partial<SessionViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private defaultCompare(doc: SessionDocument): CompareSelection | null {
    const iterations = iterationList(doc);
    if (iterations.length === 0) {
      return null;
    }
    return { a: 0, b: iterations[iterations.length - 1] };
  }

  async refresh(sessionId: string): Promise<void> {
    const doc = await this.api.state(sessionId);
    this.setState({ doc, compare: this.defaultCompare(doc), lastError: null });
  }

  adopt(doc: SessionDocument): void {
    this.setState({ doc, compare: this.defaultCompare(doc), lastError: null });
  }

  selectCompare(a: number, b: number): void {
    const iterations = iterationList(this.state.doc);
    if (!iterations.includes(a) || !iterations.includes(b)) {
      this.setState({ lastError: `no such iteration to compare: ${a}/${b}` });
      return;
    }
    this.setState({ compare: { a, b }, lastError: null });
  }

  /** Posts a directive; on failure history is left untouched. */
  async submitFeedback(text: string): Promise<boolean> {
    const doc = this.state.doc;
    if (!doc || inputDisabled(this.state)) {
      return false;
    }
    this.setState({ submitting: true, lastError: null });
    try {
      const updated = await this.api.submitFeedback(doc.id, text);
      this.setState({
        doc: updated,
        compare: this.defaultCompare(updated),
        submitting: false,
      });
      return true;
    } catch (err) {
      const message =
        err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
      this.setState({ submitting: false, lastError: message });
      return false;
    }
  }
}
