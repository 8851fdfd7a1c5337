/** HTML renderers for the session view.
 *
 * Every renderer is a pure function of (state, api) returning markup, which
 * keeps the UI refresh-safe and testable without a browser. No renderer
 * touches pixels: images are `<img>` tags pointing at the preview endpoint;
 * this client deliberately has no drawing surface of any kind.
 */

import { ApiClient } from "./api.js";
import {
  disabledReason,
  inputDisabled,
  iterationList,
  SessionViewState,
} from "./state.js";
import { CdlParamsDoc, TreeDocument } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Before/after wipe over the two selected iterations' server previews. */
export function renderCompareView(state: SessionViewState, api: ApiClient): string {
  const doc = state.doc;
  if (!doc || !state.compare) {
    return `<section class="compare empty">No graded iterations yet.</section>`;
  }
  const { a, b } = state.compare;
  const left = api.previewUrl(doc.id, a);
  const right = api.previewUrl(doc.id, b);
  return [
    `<section class="compare">`,
    `<figure class="pane before"><img src="${left}" alt="iteration ${a}"><figcaption>iteration ${a}</figcaption></figure>`,
    `<figure class="pane after"><img src="${right}" alt="iteration ${b}"><figcaption>iteration ${b}</figcaption></figure>`,
    `<input class="wipe" type="range" min="0" max="100" value="50" aria-label="wipe position">`,
    `</section>`,
  ].join("\n");
}

/** Thumbnail strip of every iteration, requested at reduced size. */
export function renderIterationList(
  state: SessionViewState,
  api: ApiClient,
  thumbSize = 160,
): string {
  const doc = state.doc;
  const iterations = iterationList(doc);
  const items = iterations.map((i) => {
    const src = doc ? api.previewUrl(doc.id, i, thumbSize) : "";
    return `<li class="iteration" data-iteration="${i}"><img src="${src}" alt="iteration ${i} thumbnail"><span>${i}</span></li>`;
  });
  return `<ol class="iterations">${items.join("")}</ol>`;
}

export function renderFeedbackForm(state: SessionViewState): string {
  const disabled = inputDisabled(state);
  const reason = disabledReason(state);
  const badge = reason
    ? `<span class="badge status-${reason}">${escapeHtml(reason)}</span>`
    : "";
  const toast = state.lastError
    ? `<p class="toast error">${escapeHtml(state.lastError)}</p>`
    : "";
  const disabledAttr = disabled ? " disabled" : "";
  return [
    `<form class="feedback">`,
    `<input type="text" name="directive" placeholder="e.g. push the shadows toward teal"${disabledAttr}>`,
    `<button type="submit"${disabledAttr}>Send</button>`,
    badge,
    toast,
    `</form>`,
  ].join("");
}

/** Download links; hidden entirely until a graded iteration exists. */
export function renderExportControls(state: SessionViewState, api: ApiClient): string {
  const doc = state.doc;
  if (!doc || doc.iteration < 0) {
    return "";
  }
  const iter = doc.iteration;
  const links = (["cube", "cdl", "report"] as const).map(
    (kind) =>
      `<a class="export ${kind}" href="${api.exportUrl(doc.id, kind)}" download="grade_iter${iter}.${kind === "report" ? "json" : kind}">${kind}</a>`,
  );
  return `<nav class="exports">${links.join("")}</nav>`;
}

function describeParams(params: CdlParamsDoc): string {
  const triple = (v: [number, number, number]) => v.map((x) => x.toFixed(3)).join("/");
  return `gain ${triple(params.gain)} · lift ${triple(params.lift)} · sat ${params.saturation.toFixed(3)}`;
}

/** Read-only wheel values for the current iteration. */
export function renderParams(state: SessionViewState): string {
  const doc = state.doc;
  if (!doc || doc.params_history.length === 0) {
    return "";
  }
  const params = doc.params_history[doc.params_history.length - 1];
  return `<p class="params">${escapeHtml(describeParams(params))}</p>`;
}

export function renderTree(tree: TreeDocument): string {
  const rows = tree.nodes.map((node) => {
    const best = node.id === tree.best_id ? " best" : "";
    const score = node.score === null ? "—" : node.score.toFixed(1);
    return `<tr class="node depth-${node.depth}${best}"><td>${node.id}</td><td>${node.depth}</td><td>${score}</td></tr>`;
  });
  return `<table class="tree"><thead><tr><th>id</th><th>depth</th><th>score</th></tr></thead><tbody>${rows.join("")}</tbody></table>`;
}
