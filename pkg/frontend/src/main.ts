/** DOM wiring: inputs with debounced autocomplete and keyboard selection,
 * the ranked result list, and the histogram panel for a selected result. */

import { ApiClient, FetchLike } from "./api.js";
import { buildHistogramSvg } from "./chart.js";
import { aspectMenuHtml, entityMenuHtml, escapeHtml, resultListHtml } from "./render.js";
import { ConsoleStore, debounce } from "./state.js";

const DEBOUNCE_MS = 150;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function defaultBaseUrl(): string {
  return localStorage.getItem("cdv-base-url") ?? "http://127.0.0.1:8080";
}

const api = new ApiClient(defaultBaseUrl(), fetch.bind(globalThis) as FetchLike);
const store = new ConsoleStore(api);

let entityActive = -1;
let aspectActive = -1;

function render(): void {
  const s = store.snapshot();
  el<HTMLUListElement>("entity-menu").innerHTML = entityMenuHtml(s.entitySuggestions, entityActive);
  el<HTMLUListElement>("aspect-menu").innerHTML = aspectMenuHtml(s.aspectSuggestions, aspectActive);
  el<HTMLButtonElement>("submit").disabled = !store.submittable() || s.pending;
  el<HTMLSpanElement>("pending").style.display = s.pending ? "inline" : "none";

  const banner = el<HTMLDivElement>("banner");
  banner.textContent = s.banner ?? "";
  banner.style.display = s.banner ? "block" : "none";

  const latency = el<HTMLSpanElement>("latency");
  latency.textContent = s.latencyMs === null ? "" : `${s.latencyMs.toFixed(1)} ms`;

  el<HTMLDivElement>("results").innerHTML = s.queried
    ? resultListHtml(s.results, s.selectedPassageId)
    : "";

  const panel = el<HTMLDivElement>("histogram-panel");
  if (s.histogramError) {
    panel.innerHTML = `<p class="error">histogram failed to load ` +
      `<button id="retry-histogram">retry</button></p>`;
    el<HTMLButtonElement>("retry-histogram").onclick = () => void store.retryHistogram();
  } else if (s.histogram) {
    const legend =
      `<div class="legend"><span class="key combined">combined</span>` +
      `<span class="key entity">entity</span><span class="key aspect">aspect</span></div>`;
    panel.innerHTML =
      `<h3>${escapeHtml(s.histogram.doc_id)}</h3>` + legend + buildHistogramSvg(s.histogram) +
      `<p id="hover-sentence" class="hover-sentence"></p>`;
    for (const hit of panel.querySelectorAll<SVGRectElement>("rect.hit")) {
      hit.addEventListener("mouseenter", () => {
        const idx = Number(hit.dataset.idx);
        const text = s.histogram?.sentences[idx] ?? "";
        const combined = s.histogram?.combined[idx];
        el<HTMLParagraphElement>("hover-sentence").textContent =
          combined === undefined ? text : `[${idx}] ${text} (combined ${combined.toFixed(4)})`;
      });
    }
  } else {
    panel.innerHTML = s.queried && s.results.length > 0
      ? `<p class="empty">select a result to see its per-sentence scores</p>`
      : "";
  }
}

function wireAutocomplete(): void {
  const entityInput = el<HTMLInputElement>("entity-input");
  const aspectInput = el<HTMLInputElement>("aspect-input");
  const debouncedEntities = debounce(() => void store.fetchEntitySuggestions(), DEBOUNCE_MS);
  const debouncedAspects = debounce(() => void store.fetchAspectSuggestions(), DEBOUNCE_MS);

  entityInput.addEventListener("input", () => {
    store.setEntityText(entityInput.value);
    entityActive = -1;
    debouncedEntities();
  });
  aspectInput.addEventListener("input", () => {
    store.setAspectText(aspectInput.value);
    aspectActive = -1;
    debouncedAspects();
  });

  entityInput.addEventListener("keydown", (ev) => {
    const n = store.snapshot().entitySuggestions.length;
    if (ev.key === "ArrowDown" && n > 0) {
      entityActive = (entityActive + 1) % n;
      ev.preventDefault();
      render();
    } else if (ev.key === "ArrowUp" && n > 0) {
      entityActive = (entityActive - 1 + n) % n;
      ev.preventDefault();
      render();
    } else if (ev.key === "Enter") {
      const pick = store.snapshot().entitySuggestions[entityActive];
      if (pick) {
        store.chooseEntity(pick);
        entityInput.value = pick.name;
      }
      ev.preventDefault();
    }
  });
  aspectInput.addEventListener("keydown", (ev) => {
    const n = store.snapshot().aspectSuggestions.length;
    if (ev.key === "ArrowDown" && n > 0) {
      aspectActive = (aspectActive + 1) % n;
      ev.preventDefault();
      render();
    } else if (ev.key === "ArrowUp" && n > 0) {
      aspectActive = (aspectActive - 1 + n) % n;
      ev.preventDefault();
      render();
    } else if (ev.key === "Enter") {
      const pick = store.snapshot().aspectSuggestions[aspectActive];
      if (pick) {
        store.chooseAspect(pick);
        aspectInput.value = pick;
      } else if (store.submittable()) {
        void store.submitQuery();
      }
      ev.preventDefault();
    }
  });

  el<HTMLUListElement>("entity-menu").addEventListener("click", (ev) => {
    const li = (ev.target as HTMLElement).closest("li.option") as HTMLElement | null;
    if (li?.dataset.id && li.dataset.name) {
      store.chooseEntity({ id: li.dataset.id, name: li.dataset.name });
      entityInput.value = li.dataset.name;
    }
  });
  el<HTMLUListElement>("aspect-menu").addEventListener("click", (ev) => {
    const li = (ev.target as HTMLElement).closest("li.option") as HTMLElement | null;
    if (li?.dataset.name) {
      store.chooseAspect(li.dataset.name);
      aspectInput.value = li.dataset.name;
    }
  });
}

function wireActions(): void {
  el<HTMLButtonElement>("submit").addEventListener("click", () => void store.submitQuery());
  el<HTMLDivElement>("results").addEventListener("click", (ev) => {
    const li = (ev.target as HTMLElement).closest("li.result") as HTMLElement | null;
    if (li?.dataset.passage) void store.selectResult(li.dataset.passage);
  });
  const baseInput = el<HTMLInputElement>("base-url");
  baseInput.value = api.baseUrl;
  baseInput.addEventListener("change", () => {
    api.baseUrl = baseInput.value.replace(/\/+$/, "");
    localStorage.setItem("cdv-base-url", api.baseUrl);
  });
}

store.subscribe(render);
wireAutocomplete();
wireActions();
render();
