/** UI state and its pure transitions.
 *
 * The selection starts with every exemplar enabled; synthesis POST bodies
 * always carry the explicit sorted id list so the payload is a complete,
 * deterministic statement of the pruned training set. Pinned tiles survive
 * re-runs so candidates from different prunings can be compared.
 */

import type { CandidateResult, ExemplarInfo, JobResult, SynthesisRequest } from "./types.js";

export const DEFAULT_KS = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
export const DEFAULT_TS = [1, 3, 5, 10, 96];

export interface CandidateTile extends CandidateResult {
  /** stable identity: jobId plus grid coordinates */
  key: string;
  jobId: string;
  pinned: boolean;
}

export interface AppState {
  exemplars: ExemplarInfo[];
  selected: Set<number>;
  tagFilter: string | null;
  serviceDown: boolean;
  inputPngBase64: string | null;
  stage1: "bicubic" | "external";
  ks: number[];
  ts: number[];
  seed: number;
  jobId: string | null;
  jobError: string | null;
  tiles: CandidateTile[];
  pinned: CandidateTile[];
  overlays: Set<string>;
  enlarged: string | null;
}

export function initialState(): AppState {
  return {
    exemplars: [],
    selected: new Set(),
    tagFilter: null,
    serviceDown: false,
    inputPngBase64: null,
    stage1: "bicubic",
    ks: [...DEFAULT_KS],
    ts: [...DEFAULT_TS],
    seed: 0,
    jobId: null,
    jobError: null,
    tiles: [],
    pinned: [],
    overlays: new Set(),
    enlarged: null,
  };
}

export function setExemplars(state: AppState, exemplars: ExemplarInfo[]): void {
  state.exemplars = exemplars;
  state.selected = new Set(exemplars.map((e) => e.id));
  state.serviceDown = false;
}

export function toggleExemplar(state: AppState, id: number): void {
  if (state.selected.has(id)) {
    state.selected.delete(id);
  } else {
    state.selected.add(id);
  }
}

export function selectAll(state: AppState): void {
  state.selected = new Set(state.exemplars.map((e) => e.id));
}

export function selectNone(state: AppState): void {
  state.selected = new Set();
}

export function setTagFilter(state: AppState, tag: string | null): void {
  state.tagFilter = tag;
}

/** Exemplars shown in the browser grid under the active tag filter. */
export function visibleExemplars(state: AppState): ExemplarInfo[] {
  if (state.tagFilter === null) return state.exemplars;
  return state.exemplars.filter((e) => e.tags.includes(state.tagFilter as string));
}

export function allTags(state: AppState): string[] {
  const tags = new Set<string>();
  for (const e of state.exemplars) for (const t of e.tags) tags.add(t);
  return [...tags].sort();
}

/** Submission needs an input image and a non-empty exemplar selection. */
export function canSubmit(state: AppState): boolean {
  return state.inputPngBase64 !== null && state.selected.size > 0 && state.jobId === null;
}

export function submitBlockers(state: AppState): string[] {
  const blockers: string[] = [];
  if (state.inputPngBase64 === null) blockers.push("choose an input image");
  if (state.selected.size === 0) blockers.push("select at least one exemplar");
  if (state.jobId !== null) blockers.push("a synthesis job is already running");
  return blockers;
}

/** The exact POST /api/synthesize body for the current state. */
export function buildSynthesisRequest(state: AppState): SynthesisRequest {
  if (state.inputPngBase64 === null) {
    throw new Error("no input image chosen");
  }
  if (state.selected.size === 0) {
    throw new Error("empty exemplar selection");
  }
  return {
    input_png_base64: state.inputPngBase64,
    stage1: state.stage1,
    ids: [...state.selected].sort((a, b) => a - b),
    ks: [...state.ks],
    ts: [...state.ts],
    seed: state.seed,
  };
}

export function jobStarted(state: AppState, jobId: string): void {
  state.jobId = jobId;
  state.jobError = null;
}

/** Fold a poll response into the state; tiles sort by (K, T). */
export function applyJobResult(state: AppState, jobId: string, result: JobResult): void {
  if (jobId !== state.jobId) return; // superseded job, discard
  if (result.status === "running") return;
  state.jobId = null;
  if (result.status === "error") {
    state.jobError = result.error;
    return;
  }
  state.tiles = result.candidates
    .map((c) => ({
      ...c,
      key: `${jobId}:K${c.k}T${c.t}`,
      jobId,
      pinned: false,
    }))
    .sort((a, b) => a.k - b.k || a.t - b.t);
}

export function togglePin(state: AppState, key: string): void {
  const pinnedIdx = state.pinned.findIndex((t) => t.key === key);
  if (pinnedIdx >= 0) {
    state.pinned.splice(pinnedIdx, 1);
    const live = state.tiles.find((t) => t.key === key);
    if (live) live.pinned = false;
    return;
  }
  const tile = state.tiles.find((t) => t.key === key);
  if (tile) {
    tile.pinned = true;
    state.pinned.push({ ...tile, pinned: true });
  }
}

/** Pinned tiles (from any run) followed by the current run's unpinned tiles. */
export function galleryTiles(state: AppState): CandidateTile[] {
  const currentKeys = new Set(state.pinned.map((t) => t.key));
  return [...state.pinned, ...state.tiles.filter((t) => !currentKeys.has(t.key))];
}

export function toggleOverlay(state: AppState, key: string): void {
  if (state.overlays.has(key)) {
    state.overlays.delete(key);
  } else {
    state.overlays.add(key);
  }
}
