// Multi-event query builder and segment result rendering. Segments are
// grouped by video; each segment's best-path keyframes are highlighted and
// its backend-reported score breakdown is shown as-is.

import type { Segment, TrakeRequest, TrakeResponse } from "./api.js";

export interface EventRow {
  text: string;
  ocrFilter: string;
  captionFilter: string;
}

export interface TrakeFormState {
  context: string;
  events: EventRow[];
  tauS: number | null;
  alpha: number | null;
}

export function emptyTrakeForm(): TrakeFormState {
  return { context: "", events: [emptyEventRow()], tauS: null, alpha: null };
}

export function emptyEventRow(): EventRow {
  return { text: "", ocrFilter: "", captionFilter: "" };
}

export function canSubmit(form: TrakeFormState): boolean {
  return form.events.some((row) => row.text.trim() !== "");
}

export function toTrakeRequest(form: TrakeFormState): TrakeRequest {
  const events = form.events.map((row) => row.text.trim()).filter((t) => t !== "");
  if (events.length === 0) throw new Error("define at least one event");
  const req: TrakeRequest = { context: form.context.trim(), events };
  if (form.tauS !== null) req.tau_s = form.tauS;
  if (form.alpha !== null) req.alpha = form.alpha;
  return req;
}

export interface SegmentView {
  video: string;
  start: string;
  end: string;
  startS: number;
  endS: number;
  /** Exactly the response's best_path ids; drives frame highlighting. */
  highlight: Set<string>;
  pathIds: string[];
  infeasible: boolean;
  scores: {
    boundary: number;
    context: number | null;
    contextUnscored: boolean;
    eventRaw: number | null;
    eventNorm: number | null;
    final: number | null;
  };
}

export function buildSegmentViews(resp: TrakeResponse): SegmentView[] {
  return resp.segments.map((seg: Segment) => ({
    video: seg.video,
    start: seg.start,
    end: seg.end,
    startS: seg.start_s,
    endS: seg.end_s,
    highlight: new Set(seg.best_path),
    pathIds: [...seg.best_path],
    infeasible: seg.infeasible,
    scores: {
      boundary: seg.boundary_score,
      context: seg.context_score,
      contextUnscored: seg.context_unscored,
      eventRaw: seg.event_score_raw,
      eventNorm: seg.event_score_norm,
      final: seg.final_score,
    },
  }));
}

export function groupByVideo(views: SegmentView[]): Map<string, SegmentView[]> {
  const groups = new Map<string, SegmentView[]>();
  for (const view of views) {
    const bucket = groups.get(view.video);
    if (bucket) bucket.push(view);
    else groups.set(view.video, [view]);
  }
  return groups;
}

function fmt(value: number | null, digits = 3): string {
  return value === null ? "–" : value.toFixed(digits);
}

export function renderSegmentHtml(view: SegmentView): string {
  const path = view.pathIds
    .map((id) => `<span class="path-frame match" data-id="${id}">${id}</span>`)
    .join(" → ");
  const context = view.scores.contextUnscored
    ? `${fmt(view.scores.context, 2)} (unscored)`
    : fmt(view.scores.context, 2);
  const status = view.infeasible ? '<span class="badge">no feasible path</span>' : "";
  return (
    `<article class="segment${view.infeasible ? " infeasible" : ""}" ` +
    `data-start="${view.start}" data-end="${view.end}">` +
    `<header>${view.video} · ${view.startS.toFixed(1)}s – ${view.endS.toFixed(1)}s ${status}</header>` +
    `<div class="path">${path}</div>` +
    `<dl class="breakdown">` +
    `<dt>final</dt><dd>${fmt(view.scores.final)}</dd>` +
    `<dt>event</dt><dd>${fmt(view.scores.eventRaw)} (norm ${fmt(view.scores.eventNorm)})</dd>` +
    `<dt>context</dt><dd>${context}</dd>` +
    `<dt>boundary</dt><dd>${fmt(view.scores.boundary)}</dd>` +
    `</dl>` +
    `</article>`
  );
}

export function renderTrakeResultsHtml(resp: TrakeResponse): string {
  const views = buildSegmentViews(resp);
  if (resp.degenerate) {
    return '<p class="empty">single-event query ran as plain keyframe search</p>';
  }
  if (views.length === 0) {
    return '<p class="empty">no feasible segments</p>';
  }
  const sections: string[] = [];
  for (const [video, group] of groupByVideo(views)) {
    sections.push(
      `<section class="video-group"><h3>${video}</h3>` +
        group.map(renderSegmentHtml).join("") +
        `</section>`,
    );
  }
  return sections.join("");
}
