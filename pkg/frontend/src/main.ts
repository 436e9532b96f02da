/** Browser entry point: wires state, renderers and the API client to the
 * DOM with a single delegated click handler. The service base URL comes
 * from ?api=... or defaults to the page origin. */

import { ApiClient, ApiError } from "./api.js";
import { JobPoller, POLL_INTERVAL_MS } from "./poll.js";
import {
  applyJobResult,
  buildSynthesisRequest,
  canSubmit,
  initialState,
  jobStarted,
  selectAll,
  selectNone,
  setExemplars,
  setTagFilter,
  toggleExemplar,
  toggleOverlay,
  togglePin,
} from "./state.js";
import { renderApp } from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "";
const api = new ApiClient(baseUrl);
const state = initialState();
const root = document.getElementById("app") as HTMLElement;

const poller = new JobPoller(
  api,
  (jobId, result) => {
    applyJobResult(state, jobId, result);
    redraw();
  },
  () => {
    state.jobId = null;
    state.jobError = "lost contact with the synthesis job";
    redraw();
  },
);

function redraw(): void {
  root.innerHTML = renderApp(state);
}

async function loadExemplars(): Promise<void> {
  try {
    setExemplars(state, await api.exemplars());
  } catch {
    state.serviceDown = true;
  }
  redraw();
}

async function synthesize(): Promise<void> {
  if (!canSubmit(state)) return;
  try {
    const jobId = await api.synthesize(buildSynthesisRequest(state));
    jobStarted(state, jobId);
    poller.track(jobId);
  } catch (err) {
    state.jobError = err instanceof ApiError ? err.message : "request failed";
  }
  redraw();
}

function onPickInput(input: HTMLInputElement): void {
  const file = input.files?.[0];
  if (!file) return;
  const reader = new FileReader();
  reader.onload = () => {
    const url = reader.result as string;
    state.inputPngBase64 = url.slice(url.indexOf(",") + 1);
    redraw();
  };
  reader.readAsDataURL(file);
}

root.addEventListener("click", (event) => {
  const el = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!el) return;
  const action = el.dataset.action;
  const key = el.dataset.key ?? "";
  switch (action) {
    case "toggle-exemplar":
      toggleExemplar(state, Number(el.dataset.id));
      break;
    case "select-all":
      selectAll(state);
      break;
    case "select-none":
      selectNone(state);
      break;
    case "filter":
      setTagFilter(state, el.dataset.tag ? el.dataset.tag : null);
      break;
    case "synthesize":
      void synthesize();
      return;
    case "overlay":
      toggleOverlay(state, key);
      break;
    case "pin":
      togglePin(state, key);
      break;
    case "enlarge":
      state.enlarged = state.enlarged === key ? null : key;
      break;
    case "retry":
      void loadExemplars();
      return;
    default:
      return;
  }
  redraw();
});

root.addEventListener("change", (event) => {
  const el = event.target as HTMLElement;
  if (el.dataset.action === "pick-input") {
    onPickInput(el as HTMLInputElement);
  } else if (el.dataset.action === "seed") {
    state.seed = Number((el as HTMLInputElement).value) || 0;
    redraw();
  }
});

window.setInterval(() => void poller.tick(), POLL_INTERVAL_MS);
void loadExemplars();
