// Operator console wiring: query panel, results grid, image dialog, and the
// multi-event builder. Pure view-model logic lives in the sibling modules;
// this file only binds it to the DOM.

import { ApiClient } from "./api.js";
import { buildFilmstrip, buildGrid, renderFilmstripHtml, renderGridHtml } from "./grid.js";
import { ImageDialog, renderDialogHtml } from "./imageDialog.js";
import {
  addExcludeId,
  emptyQueryState,
  toSearchRequest,
  UiQueryState,
  validateQuery,
  withImageKey,
  withText,
} from "./state.js";
import {
  canSubmit,
  emptyEventRow,
  emptyTrakeForm,
  renderTrakeResultsHtml,
  toTrakeRequest,
  TrakeFormState,
} from "./trakePanel.js";

const api = new ApiClient("");
const dialog = new ImageDialog(api);
const session = `ui-${Math.random().toString(36).slice(2, 10)}`;

let query: UiQueryState = emptyQueryState();
let trakeForm: TrakeFormState = emptyTrakeForm();
let querySerial = 0; // latest-wins: stale responses are dropped

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string): void {
  el("status").textContent = text;
}

function renderImageChip(): void {
  const chip = el("image-chip");
  if (query.imageKey) {
    chip.innerHTML = `image: ${query.imageKey} <button id="chip-clear">×</button>`;
    el("chip-clear").onclick = () => {
      query = withImageKey(query, null);
      renderImageChip();
    };
  } else {
    chip.textContent = "";
  }
}

async function runSearch(): Promise<void> {
  const problem = validateQuery(query);
  if (problem) {
    setStatus(problem);
    return;
  }
  const serial = ++querySerial;
  setStatus("searching…");
  try {
    const resp = await api.search(toSearchRequest(query));
    if (serial !== querySerial) return;
    el("results").innerHTML = renderGridHtml(buildGrid(resp.hits));
    setStatus(`${resp.hits.length} hits`);
  } catch (err) {
    if (serial === querySerial) setStatus(String((err as Error).message));
  }
}

async function onGridClick(event: Event): Promise<void> {
  const target = event.target as HTMLElement;
  const action = target.dataset.action;
  const id = target.dataset.id;
  if (!action || !id) return;
  if (action === "exclude") {
    query = addExcludeId(query, id);
    await runSearch();
  } else if (action === "select") {
    const box = await api.selectionAdd(session, id);
    setStatus(`selection: ${box.items.length} frames`);
  } else if (action === "similar") {
    setStatus("similar-search needs a stored image embedding for this frame");
  } else if (action === "filmstrip") {
    const [video, frame] = id.split("/");
    const resp = await api.filmstrip(video, parseInt(frame, 10), 3);
    el("viewer").innerHTML = renderFilmstripHtml(buildFilmstrip(resp));
  }
}

function renderDialog(): void {
  el("dialog-root").innerHTML = renderDialogHtml(dialog.state);
}

async function onDialogClick(event: Event): Promise<void> {
  const target = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
  if (!target) return;
  const action = target.dataset.action;
  if (action === "cancel") {
    dialog.cancel();
    renderDialog();
  } else if (action === "retry") {
    await dialog.open((el<HTMLInputElement>("query-text")).value);
    renderDialog();
  } else if (action === "pick") {
    const result = await dialog.pick(parseInt(target.dataset.index ?? "0", 10));
    if (result.kind === "selected") {
      query = withImageKey(query, result.imageKey);
      renderImageChip();
      await runSearch();
    }
    renderDialog(); // refetched candidates or closed state
  }
}

function renderEventRows(): void {
  const rows = trakeForm.events
    .map(
      (row, i) =>
        `<div class="event-row"><span>E${i + 1}</span>` +
        `<input data-row="${i}" class="event-text" value="${row.text.replace(/"/g, "&quot;")}" ` +
        `placeholder="event description"></div>`,
    )
    .join("");
  el("event-rows").innerHTML = rows;
  document.querySelectorAll<HTMLInputElement>(".event-text").forEach((input) => {
    input.oninput = () => {
      trakeForm.events[parseInt(input.dataset.row ?? "0", 10)].text = input.value;
      el<HTMLButtonElement>("trake-run").disabled = !canSubmit(trakeForm);
    };
  });
}

async function runTrake(): Promise<void> {
  if (!canSubmit(trakeForm)) {
    setStatus("define at least one event");
    return;
  }
  const alphaRaw = el<HTMLInputElement>("alpha").value;
  trakeForm.alpha = alphaRaw === "" ? null : parseFloat(alphaRaw);
  const tauRaw = el<HTMLInputElement>("tau").value;
  trakeForm.tauS = tauRaw === "" ? null : parseFloat(tauRaw);
  trakeForm.context = el<HTMLInputElement>("trake-context").value;
  setStatus("running temporal search…");
  try {
    const resp = await api.trake(toTrakeRequest(trakeForm));
    el("results").innerHTML = renderTrakeResultsHtml(resp);
    setStatus(`${resp.segments.length} segments`);
  } catch (err) {
    setStatus(String((err as Error).message));
  }
}

export function boot(): void {
  el<HTMLInputElement>("query-text").oninput = (e) => {
    query = withText(query, (e.target as HTMLInputElement).value);
  };
  el("search-btn").onclick = () => void runSearch();
  el("image-search-btn").onclick = async () => {
    await dialog.open(el<HTMLInputElement>("query-text").value);
    renderDialog();
  };
  el("results").addEventListener("click", (e) => void onGridClick(e));
  el("dialog-root").addEventListener("click", (e) => void onDialogClick(e));
  el("trake-add-event").onclick = () => {
    trakeForm.events.push(emptyEventRow());
    renderEventRows();
  };
  el("trake-run").onclick = () => void runTrake();
  el("export-btn").onclick = async () => {
    const csv = await api.selectionExport(session);
    const blob = new Blob([csv], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "selection.csv";
    link.click();
  };
  renderEventRows();
  void api.health().then((h) => setStatus(`corpus: ${h.corpus_size} keyframes`));
}

if (typeof document !== "undefined" && document.getElementById("query-text")) {
  boot();
}
