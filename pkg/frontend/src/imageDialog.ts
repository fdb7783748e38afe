// Image-selection dialog flow: search the web (or fixture) for candidate
// images, let the operator pick one, and hand the resulting image_key back
// to the query state. An expired choice set (410) transparently re-fetches.

import { ApiClient, ExpiredChoiceError, ImageCandidate } from "./api.js";

export type DialogPhase =
  | { kind: "closed" }
  | { kind: "loading"; query: string }
  | { kind: "choosing"; query: string; choiceId: string; candidates: ImageCandidate[] }
  | { kind: "error"; query: string; message: string };

export type PickResult =
  | { kind: "selected"; imageKey: string }
  | { kind: "refetched" };

export class ImageDialog {
  state: DialogPhase = { kind: "closed" };

  constructor(private api: ApiClient, private k: number = 6) {}

  async open(query: string): Promise<DialogPhase> {
    this.state = { kind: "loading", query };
    try {
      const resp = await this.api.imageSearch(query, this.k);
      this.state = {
        kind: "choosing",
        query,
        choiceId: resp.choice_id,
        candidates: resp.candidates,
      };
    } catch (err) {
      this.state = { kind: "error", query, message: String((err as Error).message) };
    }
    return this.state;
  }

  /**
   * Select a candidate by index. On a 410 the stale choice set is replaced
   * with freshly fetched candidates and the caller is told to re-render.
   */
  async pick(index: number): Promise<PickResult> {
    if (this.state.kind !== "choosing") {
      throw new Error(`cannot pick in phase ${this.state.kind}`);
    }
    const { query, choiceId } = this.state;
    try {
      const resp = await this.api.imageSelect(choiceId, index);
      this.state = { kind: "closed" };
      return { kind: "selected", imageKey: resp.image_key };
    } catch (err) {
      if (err instanceof ExpiredChoiceError) {
        await this.open(query);
        return { kind: "refetched" };
      }
      throw err;
    }
  }

  cancel(): void {
    this.state = { kind: "closed" };
  }
}

export function renderDialogHtml(state: DialogPhase): string {
  switch (state.kind) {
    case "closed":
      return "";
    case "loading":
      return `<div class="dialog"><p>searching images for “${state.query}”…</p></div>`;
    case "error":
      return (
        `<div class="dialog error"><p>${state.message}</p>` +
        `<button data-action="retry">retry</button>` +
        `<button data-action="cancel">cancel</button></div>`
      );
    case "choosing": {
      const cards = state.candidates
        .map(
          (c) =>
            `<button class="candidate" data-action="pick" data-index="${c.index}">` +
            `<img src="data:image/*;base64,${c.image_b64}" alt="candidate ${c.index}">` +
            `<span>${c.url}</span></button>`,
        )
        .join("");
      return (
        `<div class="dialog"><p>pick the image that matches your intent</p>` +
        `<div class="candidates">${cards}</div>` +
        `<button data-action="cancel">cancel</button></div>`
      );
    }
  }
}
