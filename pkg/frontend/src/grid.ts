// Results grid and filmstrip view models. The UI never computes a score:
// every number shown here is copied verbatim from a backend response field.

import type { FilmstripResponse, Hit } from "./api.js";

export interface GridCell {
  id: string;
  label: string;
  video: string;
  frameIndex: number;
  timestamp: number;
  thumbnailUrl: string | null;
  placeholder: boolean;
  score: number | null;
  final: number | null;
  metaRelevance: number | null;
}

export function buildGrid(hits: Hit[]): GridCell[] {
  return hits.map((hit) => ({
    id: hit.id,
    label: hit.id,
    video: hit.video,
    frameIndex: hit.frame_index,
    timestamp: hit.t,
    thumbnailUrl: hit.thumbnail.placeholder ? null : hit.thumbnail.url,
    placeholder: hit.thumbnail.placeholder,
    score: hit.score ?? null,
    final: hit.final ?? null,
    metaRelevance: hit.meta_relevance ?? null,
  }));
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const PLACEHOLDER_SVG =
  "data:image/svg+xml," +
  encodeURIComponent(
    '<svg xmlns="http://www.w3.org/2000/svg" width="160" height="90">' +
      '<rect width="100%" height="100%" fill="#d8dee9"/>' +
      '<text x="50%" y="52%" text-anchor="middle" font-size="12" fill="#4c566a">no thumbnail</text>' +
      "</svg>",
  );

export function renderCellHtml(cell: GridCell): string {
  const src = cell.thumbnailUrl ?? PLACEHOLDER_SVG;
  const scoreBits: string[] = [];
  if (cell.score !== null) scoreBits.push(`sim ${cell.score.toFixed(3)}`);
  if (cell.metaRelevance !== null) scoreBits.push(`meta ${cell.metaRelevance.toFixed(2)}`);
  if (cell.final !== null) scoreBits.push(`final ${cell.final.toFixed(3)}`);
  return (
    `<figure class="cell" data-id="${escapeHtml(cell.id)}">` +
    `<img src="${escapeHtml(src)}" alt="${escapeHtml(cell.label)}" loading="lazy">` +
    `<figcaption>${escapeHtml(cell.label)}</figcaption>` +
    `<div class="scores">${escapeHtml(scoreBits.join(" · "))}</div>` +
    `<div class="actions">` +
    `<button data-action="select" data-id="${escapeHtml(cell.id)}">select</button>` +
    `<button data-action="exclude" data-id="${escapeHtml(cell.id)}">exclude</button>` +
    `<button data-action="similar" data-id="${escapeHtml(cell.id)}">similar</button>` +
    `<button data-action="filmstrip" data-id="${escapeHtml(cell.id)}">film</button>` +
    `</div>` +
    `</figure>`
  );
}

export function renderGridHtml(cells: GridCell[]): string {
  if (cells.length === 0) return '<p class="empty">no results</p>';
  return `<div class="grid">${cells.map(renderCellHtml).join("")}</div>`;
}

export interface FilmstripModel {
  video: string;
  center: string;
  frames: { id: string; timestamp: number; thumbnailUrl: string | null }[];
}

export function buildFilmstrip(resp: FilmstripResponse): FilmstripModel {
  return {
    video: resp.video,
    center: resp.center,
    frames: resp.frames.map((f) => ({
      id: f.id,
      timestamp: f.t,
      thumbnailUrl: f.thumbnail.placeholder ? null : f.thumbnail.url,
    })),
  };
}

export function renderFilmstripHtml(model: FilmstripModel, highlight?: Set<string>): string {
  const frames = model.frames
    .map((frame) => {
      const classes = ["strip-frame"];
      if (frame.id === model.center) classes.push("center");
      if (highlight?.has(frame.id)) classes.push("match");
      const src = frame.thumbnailUrl ?? PLACEHOLDER_SVG;
      return (
        `<div class="${classes.join(" ")}" data-id="${escapeHtml(frame.id)}">` +
        `<img src="${escapeHtml(src)}" alt="${escapeHtml(frame.id)}">` +
        `<span>${escapeHtml(frame.id)} @ ${frame.timestamp.toFixed(1)}s</span>` +
        `</div>`
      );
    })
    .join("");
  return `<div class="filmstrip" data-video="${escapeHtml(model.video)}">${frames}</div>`;
}
