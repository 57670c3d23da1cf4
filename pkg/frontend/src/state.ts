/** Console state machine, free of DOM concerns.
 *
 * Invariants: the result list mirrors the service response order exactly
 * (no reordering, filtering, or score rescaling); at most one query is in
 * flight; stale autocomplete responses are discarded by sequence number.
 */

import {
  ApiClient,
  ApiError,
  EntitySuggestion,
  HistogramResponse,
  PassageResult,
} from "./api.js";

export interface EntitySelection {
  id: string;
  name: string;
}

export interface ConsoleSnapshot {
  entityText: string;
  selectedEntity: EntitySelection | null;
  aspectText: string;
  entitySuggestions: EntitySuggestion[];
  aspectSuggestions: string[];
  results: PassageResult[];
  queried: boolean;
  histogram: HistogramResponse | null;
  histogramError: boolean;
  selectedPassageId: string | null;
  pending: boolean;
  banner: string | null;
  latencyMs: number | null;
}

export class ConsoleStore {
  entityText = "";
  selectedEntity: EntitySelection | null = null;
  aspectText = "";
  entitySuggestions: EntitySuggestion[] = [];
  aspectSuggestions: string[] = [];
  results: PassageResult[] = [];
  queried = false;
  histogram: HistogramResponse | null = null;
  histogramError = false;
  selectedPassageId: string | null = null;
  pending = false;
  banner: string | null = null;
  latencyMs: number | null = null;

  private entitySeq = 0;
  private aspectSeq = 0;
  private listeners: Array<() => void> = [];

  constructor(public api: ApiClient) {}

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  snapshot(): ConsoleSnapshot {
    return {
      entityText: this.entityText,
      selectedEntity: this.selectedEntity,
      aspectText: this.aspectText,
      entitySuggestions: this.entitySuggestions,
      aspectSuggestions: this.aspectSuggestions,
      results: this.results,
      queried: this.queried,
      histogram: this.histogram,
      histogramError: this.histogramError,
      selectedPassageId: this.selectedPassageId,
      pending: this.pending,
      banner: this.banner,
      latencyMs: this.latencyMs,
    };
  }

  /** Submittable iff an entity (id or nonempty mention) and an aspect are set. */
  submittable(): boolean {
    const entityOk = this.selectedEntity !== null || this.entityText.trim() !== "";
    return entityOk && this.aspectText.trim() !== "";
  }

  setEntityText(text: string): void {
    this.entityText = text;
    // editing the field drops a previous pick; free text become the mention
    this.selectedEntity = null;
    if (text.trim() === "") this.entitySuggestions = [];
    this.emit();
  }

  chooseEntity(suggestion: EntitySuggestion): void {
    this.selectedEntity = { id: suggestion.id, name: suggestion.name };
    this.entityText = suggestion.name;
    this.entitySuggestions = [];
    this.emit();
  }

  setAspectText(text: string): void {
    this.aspectText = text;
    if (text.trim() === "") this.aspectSuggestions = [];
    this.emit();
  }

  chooseAspect(aspect: string): void {
    this.aspectText = aspect;
    this.aspectSuggestions = [];
    this.emit();
  }

  async fetchEntitySuggestions(): Promise<void> {
    const seq = ++this.entitySeq;
    try {
      const results = await this.api.entities(this.entityText.trim());
      if (seq !== this.entitySeq) return; // superseded by newer keystrokes
      this.entitySuggestions = results;
      this.banner = null;
    } catch (err) {
      if (seq !== this.entitySeq) return;
      this.banner = describeError(err);
    }
    this.emit();
  }

  async fetchAspectSuggestions(): Promise<void> {
    const seq = ++this.aspectSeq;
    try {
      const results = await this.api.aspects(this.aspectText.trim());
      if (seq !== this.aspectSeq) return;
      this.aspectSuggestions = results;
      this.banner = null;
    } catch (err) {
      if (seq !== this.aspectSeq) return;
      this.banner = describeError(err);
    }
    this.emit();
  }

  entityRef(): { id?: string; mention?: string } {
    if (this.selectedEntity) {
      return { id: this.selectedEntity.id, mention: this.selectedEntity.name };
    }
    return { mention: this.entityText.trim() };
  }

  async submitQuery(topK = 10): Promise<void> {
    if (!this.submittable() || this.pending) return;
    this.pending = true;
    this.banner = null;
    this.emit();
    try {
      const resp = await this.api.query(this.entityRef(), this.aspectText.trim(), topK);
      // order is the service's, verbatim
      this.results = resp.results;
      this.queried = true;
      this.latencyMs = resp.latency_ms;
      this.histogram = null;
      this.selectedPassageId = null;
      this.histogramError = false;
    } catch (err) {
      this.banner = describeError(err);
    } finally {
      this.pending = false;
      this.emit();
    }
  }

  async selectResult(passageId: string): Promise<void> {
    const hit = this.results.find((r) => r.passage_id === passageId);
    if (!hit) return;
    this.selectedPassageId = passageId;
    this.histogramError = false;
    this.emit();
    try {
      const entity = this.selectedEntity?.id ?? this.entityText.trim();
      this.histogram = await this.api.histogram(hit.doc_id, entity, this.aspectText.trim());
    } catch {
      this.histogram = null;
      this.histogramError = true; // the view offers a retry
    }
    this.emit();
  }

  async retryHistogram(): Promise<void> {
    if (this.selectedPassageId) await this.selectResult(this.selectedPassageId);
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return `service unreachable: ${String(err)}`;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), waitMs);
  };
}
