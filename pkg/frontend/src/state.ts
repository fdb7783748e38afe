// Client-side query state. Mirrors the /search request validity rules so a
// bad combination never leaves the browser.

import type { FilterRequest, SearchRequest } from "./api.js";

export interface UiQueryState {
  text: string;
  imageKey: string | null;
  filters: FilterRequest;
  filterStrict: boolean;
  includeIds: string[];
  excludeIds: string[];
  k: number;
  trakeMode: boolean;
}

export function emptyQueryState(): UiQueryState {
  return {
    text: "",
    imageKey: null,
    filters: {},
    filterStrict: true,
    includeIds: [],
    excludeIds: [],
    k: 20,
    trakeMode: false,
  };
}

function hasFilterClauses(filters: FilterRequest): boolean {
  return Object.values(filters).some((clause) => clause !== undefined && clause.length > 0);
}

export function validateQuery(state: UiQueryState): string | null {
  if (state.imageKey === null && state.text.trim() === "") {
    return "enter a text query or pick a reference image";
  }
  if (state.k < 1) return "k must be at least 1";
  return null;
}

/** Build the /search body; throws on states validateQuery would reject. */
export function toSearchRequest(state: UiQueryState): SearchRequest {
  const problem = validateQuery(state);
  if (problem !== null) throw new Error(problem);
  const req: SearchRequest = state.imageKey !== null
    ? { mode: "image_ref", image_key: state.imageKey, k: state.k }
    : { mode: "text", text: state.text.trim(), k: state.k };
  if (hasFilterClauses(state.filters)) {
    req.filter = state.filters;
    req.filter_strict = state.filterStrict;
  }
  if (state.includeIds.length > 0) req.include_ids = [...state.includeIds];
  if (state.excludeIds.length > 0) req.exclude_ids = [...state.excludeIds];
  return req;
}

export function withImageKey(state: UiQueryState, imageKey: string | null): UiQueryState {
  return { ...state, imageKey };
}

export function withText(state: UiQueryState, text: string): UiQueryState {
  return { ...state, text };
}

export function addExcludeId(state: UiQueryState, id: string): UiQueryState {
  if (state.excludeIds.includes(id)) return state;
  return { ...state, excludeIds: [...state.excludeIds, id] };
}

export function clearRefinements(state: UiQueryState): UiQueryState {
  return { ...state, includeIds: [], excludeIds: [], imageKey: null };
}
