// Typed client for the retrieval service. Every backend interaction in the
// UI goes through this module; nothing else talks to the network.

export interface Thumbnail {
  url: string | null;
  placeholder: boolean;
}

export interface Hit {
  id: string;
  video: string;
  frame_index: number;
  t: number;
  thumbnail: Thumbnail;
  score?: number;
  meta_relevance?: number;
  final?: number;
}

export interface SearchResponse {
  hits: Hit[];
  k: number;
}

export interface FilterRequest {
  ocr_contains?: string[];
  caption_contains?: string[];
  objects_any?: string[];
  asr_contains?: string[];
  videos?: string[];
}

export interface SearchRequest {
  mode: "text" | "image_ref";
  text?: string;
  image_key?: string;
  filter?: FilterRequest;
  filter_strict?: boolean;
  k: number;
  include_ids?: string[];
  exclude_ids?: string[];
  w_sim?: number;
}

export interface ImageCandidate {
  index: number;
  url: string;
  image_b64: string;
}

export interface ImageSearchResponse {
  choice_id: string;
  candidates: ImageCandidate[];
}

export interface Segment {
  video: string;
  start: string;
  end: string;
  start_s: number;
  end_s: number;
  boundary_score: number;
  start_score: number;
  end_score: number;
  context_score: number | null;
  context_unscored: boolean;
  event_score_raw: number | null;
  event_score_norm: number | null;
  final_score: number | null;
  infeasible: boolean;
  best_path: string[];
  per_event_scores: number[];
}

export interface TrakeRequest {
  query?: string;
  context?: string;
  events?: string[];
  tau_s?: number;
  alpha?: number;
  top_m?: number;
  beam_width?: number;
  knn_k?: number;
}

export interface TrakeResponse {
  degenerate: boolean;
  n_events: number;
  segments: Segment[];
  keyframe_hits: Hit[];
}

export interface FilmstripResponse {
  video: string;
  center: string;
  frames: Hit[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** 410 from /image-select: the choice set expired and must be re-fetched. */
export class ExpiredChoiceError extends ApiError {
  constructor(message: string) {
    super(410, message);
    this.name = "ExpiredChoiceError";
  }
}

async function parseError(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
  } catch {
    return resp.statusText || `HTTP ${resp.status}`;
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      const message = await parseError(resp);
      if (resp.status === 410) throw new ExpiredChoiceError(message);
      throw new ApiError(resp.status, message);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string; corpus_size: number }> {
    return this.request("/health");
  }

  search(req: SearchRequest): Promise<SearchResponse> {
    return this.post("/search", req);
  }

  imageSearch(query: string, k: number): Promise<ImageSearchResponse> {
    return this.post("/image-search", { query, k });
  }

  imageSelect(choiceId: string, choiceIndex: number): Promise<{ image_key: string }> {
    return this.post("/image-select", { choice_id: choiceId, choice_index: choiceIndex });
  }

  trake(req: TrakeRequest): Promise<TrakeResponse> {
    return this.post("/trake", req);
  }

  filmstrip(video: string, around: number, span: number): Promise<FilmstripResponse> {
    const params = new URLSearchParams({ around: String(around), span: String(span) });
    return this.request(`/videos/${encodeURIComponent(video)}/filmstrip?${params}`);
  }

  selectionAdd(session: string, id: string): Promise<{ items: string[] }> {
    return this.post("/selection/add", { session, id });
  }

  selectionRemove(session: string, id: string): Promise<{ items: string[] }> {
    return this.post("/selection/remove", { session, id });
  }

  selectionClear(session: string): Promise<{ items: string[] }> {
    return this.post("/selection/clear", { session });
  }

  async selectionExport(session: string): Promise<string> {
    const resp = await this.fetchImpl(this.baseUrl + "/selection/export", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session }),
    });
    if (!resp.ok) throw new ApiError(resp.status, await parseError(resp));
    return resp.text();
  }
}
