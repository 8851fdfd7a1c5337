/** Browser bootstrap: mounts the session view and wires form events.
 *
 * Pure rendering lives in ui.ts; this file only touches the DOM. The session
 * id is taken from the `?session=` query parameter.
 */

import { ApiClient } from "./api.js";
import { SessionStore } from "./state.js";
import {
  renderCompareView,
  renderExportControls,
  renderFeedbackForm,
  renderIterationList,
  renderParams,
} from "./ui.js";

function mount(root: HTMLElement, store: SessionStore, api: ApiClient): void {
  const render = () => {
    const state = store.getState();
    root.innerHTML = [
      renderCompareView(state, api),
      renderIterationList(state, api),
      renderParams(state),
      renderFeedbackForm(state),
      renderExportControls(state, api),
    ].join("\n");

    const form = root.querySelector<HTMLFormElement>("form.feedback");
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = form.querySelector<HTMLInputElement>("input[name=directive]");
      const text = input?.value.trim();
      if (text) {
        void store.submitFeedback(text);
      }
    });

    root.querySelectorAll<HTMLElement>("li.iteration").forEach((item) => {
      item.addEventListener("click", () => {
        const b = Number(item.dataset.iteration);
        const current = store.getState();
        store.selectCompare(current.compare?.a ?? 0, b);
      });
    });
  };

  store.subscribe(render);
  render();
}

export function start(): void {
  const sessionId = new URLSearchParams(window.location.search).get("session");
  const root = document.getElementById("app");
  if (!sessionId || !root) {
    return;
  }
  const api = new ApiClient("", (url, init) => fetch(url, init));
  const store = new SessionStore(api);
  mount(root, store, api);
  void store.refresh(sessionId);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
