/** HTML string renderers. Pure functions of the state, so the grid and
 * gallery contracts are testable without a DOM. Interactive elements carry
 * data-action attributes that main.ts wires via event delegation. */

import type { AppState, CandidateTile } from "./state.js";
import {
  allTags,
  canSubmit,
  galleryTiles,
  submitBlockers,
  visibleExemplars,
} from "./state.js";

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(state: AppState): string {
  if (!state.serviceDown) return "";
  return (
    `<div class="banner error" data-testid="service-banner">` +
    `service unreachable — check that the engine is running` +
    `<button data-action="retry">retry</button></div>`
  );
}

function renderTagChips(tags: string[]): string {
  return tags.map((t) => `<span class="chip">${escapeHtml(t)}</span>`).join("");
}

export function renderExemplarBrowser(state: AppState): string {
  const filter = allTags(state)
    .map((t) => {
      const active = state.tagFilter === t ? " active" : "";
      return `<button class="chip filter${active}" data-action="filter" data-tag="${escapeHtml(t)}">${escapeHtml(t)}</button>`;
    })
    .join("");
  const cards = visibleExemplars(state)
    .map((e) => {
      const on = state.selected.has(e.id) ? " selected" : "";
      return (
        `<div class="exemplar${on}" data-action="toggle-exemplar" data-id="${e.id}" data-testid="exemplar-${e.id}">` +
        `<img src="data:image/png;base64,${e.thumbnail_png_base64}" alt="${escapeHtml(e.name)}">` +
        `<div class="label">#${e.id} ${escapeHtml(e.name)}</div>` +
        `<div class="tags">${renderTagChips(e.tags)}</div>` +
        `</div>`
      );
    })
    .join("");
  return (
    `<section class="browser">` +
    `<header><h2>exemplars (${state.selected.size}/${state.exemplars.length} selected)</h2>` +
    `<button data-action="select-all">all</button>` +
    `<button data-action="select-none">none</button>` +
    `<span class="filters">${filter}` +
    (state.tagFilter ? `<button class="chip filter" data-action="filter" data-tag="">clear</button>` : "") +
    `</span></header>` +
    `<div class="grid" data-testid="exemplar-grid">${cards}</div>` +
    `</section>`
  );
}

export function renderSubmit(state: AppState): string {
  const ok = canSubmit(state);
  const blockers = submitBlockers(state);
  const note = ok
    ? ""
    : `<span class="blockers" data-testid="submit-blockers">${escapeHtml(blockers.join("; "))}</span>`;
  const running = state.jobId !== null ? `<span class="spinner">synthesizing…</span>` : "";
  const error = state.jobError
    ? `<span class="error" data-testid="job-error">${escapeHtml(state.jobError)}</span>`
    : "";
  return (
    `<section class="submit">` +
    `<input type="file" accept="image/png" data-action="pick-input">` +
    `<label>seed <input type="number" value="${state.seed}" data-action="seed"></label>` +
    `<button data-action="synthesize" data-testid="submit"${ok ? "" : " disabled"}>synthesize</button>` +
    note + running + error +
    `</section>`
  );
}

function renderLegend(state: AppState, tile: CandidateTile): string {
  const rows = Object.entries(tile.palette)
    .map(([id, color]) => {
      const ex = state.exemplars.find((e) => e.id === Number(id));
      const thumb = ex
        ? `<img class="mini" src="data:image/png;base64,${ex.thumbnail_png_base64}" alt="#${id}">`
        : "";
      return (
        `<span class="legend-row"><span class="swatch" style="background:${escapeHtml(color)}"></span>` +
        `${thumb}#${escapeHtml(id)}</span>`
      );
    })
    .join("");
  return `<div class="legend">${rows}</div>`;
}

export function renderCandidateTile(state: AppState, tile: CandidateTile): string {
  const overlay = state.overlays.has(tile.key);
  const shown = overlay ? tile.id_map_png_base64 : tile.image_png_base64;
  const classes = ["tile", tile.pinned ? "pinned" : "", state.enlarged === tile.key ? "enlarged" : ""]
    .filter(Boolean)
    .join(" ");
  return (
    `<figure class="${classes}" data-testid="tile" data-key="${escapeHtml(tile.key)}">` +
    `<img src="data:image/png;base64,${shown}" data-action="enlarge" data-key="${escapeHtml(tile.key)}" alt="K=${tile.k} T=${tile.t}">` +
    `<figcaption data-testid="tile-label">K=${tile.k} T=${tile.t}</figcaption>` +
    `<div class="tile-actions">` +
    `<button data-action="overlay" data-key="${escapeHtml(tile.key)}">${overlay ? "image" : "sources"}</button>` +
    `<button data-action="pin" data-key="${escapeHtml(tile.key)}">${tile.pinned ? "unpin" : "pin"}</button>` +
    `</div>` +
    (overlay ? renderLegend(state, tile) : "") +
    `</figure>`
  );
}

export function renderCandidateGallery(state: AppState): string {
  const tiles = galleryTiles(state);
  if (tiles.length === 0) {
    return `<section class="gallery empty">no candidates yet</section>`;
  }
  return (
    `<section class="gallery"><h2>candidates (${tiles.length})</h2>` +
    `<div class="grid" data-testid="gallery-grid">` +
    tiles.map((t) => renderCandidateTile(state, t)).join("") +
    `</div></section>`
  );
}

export function renderApp(state: AppState): string {
  return renderBanner(state) + renderExemplarBrowser(state) + renderSubmit(state) + renderCandidateGallery(state);
}
