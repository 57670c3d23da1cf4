/** Console contract against a fixture service: autocomplete surfaces
 * planted names, the planted passage renders at rank 1, histogram series
 * lengths match sentence counts, and the client never reorders service
 * ranks (50 randomized fixtures). */

import { describe, expect, it, vi } from "vitest";

import { ApiClient, FetchLike, HistogramResponse, PassageResult, QueryResponse } from "../src/api.js";
import { argmax, buildHistogramSvg } from "../src/chart.js";
import { resultListHtml } from "../src/render.js";
import { ConsoleStore, debounce } from "../src/state.js";

interface Fixture {
  entities: Array<{ id: string; name: string }>;
  aspects: string[];
  query: QueryResponse;
  histograms: Record<string, HistogramResponse>;
}

function passage(id: string, doc: string, score: number, nSentences = 3): PassageResult {
  const sentences = Array.from({ length: nSentences }, (_, i) => `sentence ${i} of ${id}`);
  const sentence_scores = Array.from({ length: nSentences }, (_, i) => score - i * 0.01);
  return {
    passage_id: id,
    doc_id: doc,
    score,
    heading: "treatment",
    text: sentences.join(" "),
    sentences,
    sentence_scores,
  };
}

function okResponse(body: unknown) {
  return { ok: true, status: 200, json: async () => body };
}

function fixtureFetch(fx: Fixture): FetchLike {
  return async (url: string, init?: { method?: string }) => {
    if (url.includes("/entities")) return okResponse({ results: fx.entities });
    if (url.includes("/aspects")) return okResponse({ results: fx.aspects });
    if (url.includes("/histogram")) {
      const doc = decodeURIComponent(url.split("/documents/")[1]!.split("/")[0]!);
      const hist = fx.histograms[doc];
      if (!hist) return { ok: false, status: 404, json: async () => ({ code: "unknown_document", message: doc }) };
      return okResponse(hist);
    }
    if (init?.method === "POST") return okResponse(fx.query);
    throw new Error(`unexpected url ${url}`);
  };
}

function makeStore(fx: Fixture): ConsoleStore {
  return new ConsoleStore(new ApiClient("http://fixture", fixtureFetch(fx)));
}

const baseFixture: Fixture = {
  entities: [
    { id: "Q1", name: "IgA nephropathy" },
    { id: "Q2", name: "Iga vasculitis" },
  ],
  aspects: ["treatment", "symptoms"],
  query: {
    results: [passage("docA:1", "docA", 0.91), passage("docB:0", "docB", 0.55)],
    latency_ms: 3.2,
  },
  histograms: {
    docA: {
      doc_id: "docA",
      sentences: ["s0", "s1", "s2", "s3"],
      combined: [0.1, 0.8, 0.4, 0.2],
      entity: [0.5, 0.6, 0.55, 0.5],
      aspect: [-0.2, 0.7, 0.1, 0.0],
    },
  },
};

describe("autocomplete", () => {
  it("surfaces planted entity names", async () => {
    const store = makeStore(baseFixture);
    store.setEntityText("IgA");
    await store.fetchEntitySuggestions();
    expect(store.entitySuggestions.map((s) => s.name)).toContain("IgA nephropathy");
  });

  it("selecting a suggestion fills id and name", async () => {
    const store = makeStore(baseFixture);
    store.setEntityText("IgA");
    await store.fetchEntitySuggestions();
    store.chooseEntity(store.entitySuggestions[0]!);
    expect(store.selectedEntity).toEqual({ id: "Q1", name: "IgA nephropathy" });
    expect(store.entityText).toBe("IgA nephropathy");
  });

  it("clearing the field resets the selection", async () => {
    const store = makeStore(baseFixture);
    store.chooseEntity({ id: "Q1", name: "IgA nephropathy" });
    store.setEntityText("");
    expect(store.selectedEntity).toBeNull();
    expect(store.entitySuggestions).toEqual([]);
  });

  it("discards stale responses by sequence number", async () => {
    let resolveFirst!: (v: unknown) => void;
    const first = new Promise((res) => (resolveFirst = res));
    let call = 0;
    const fetchFn: FetchLike = async (url: string) => {
      if (url.includes("/entities")) {
        call += 1;
        if (call === 1) {
          await first;
          return okResponse({ results: [{ id: "STALE", name: "stale" }] });
        }
        return okResponse({ results: [{ id: "FRESH", name: "fresh" }] });
      }
      throw new Error("unexpected");
    };
    const store = new ConsoleStore(new ApiClient("http://fixture", fetchFn));
    store.setEntityText("a");
    const p1 = store.fetchEntitySuggestions();
    store.setEntityText("ab");
    await store.fetchEntitySuggestions();
    resolveFirst(null);
    await p1;
    expect(store.entitySuggestions.map((s) => s.id)).toEqual(["FRESH"]);
  });

  it("shows a banner when the service is unreachable but stays editable", async () => {
    const failing: FetchLike = async () => {
      throw new Error("connection refused");
    };
    const store = new ConsoleStore(new ApiClient("http://fixture", failing));
    store.setEntityText("IgA");
    await store.fetchEntitySuggestions();
    expect(store.banner).toMatch(/unreachable/);
    store.setEntityText("IgA n"); // input remains usable
    expect(store.entityText).toBe("IgA n");
  });
});

describe("submit_query", () => {
  it("is submittable only with entity and aspect", () => {
    const store = makeStore(baseFixture);
    expect(store.submittable()).toBe(false);
    store.setAspectText("treatment");
    expect(store.submittable()).toBe(false);
    store.setEntityText("free text mention");
    expect(store.submittable()).toBe(true);
  });

  it("renders the planted passage at rank 1", async () => {
    const store = makeStore(baseFixture);
    store.chooseEntity({ id: "Q1", name: "IgA nephropathy" });
    store.setAspectText("treatment");
    await store.submitQuery();
    expect(store.results[0]!.passage_id).toBe("docA:1");
    const html = resultListHtml(store.results, null);
    expect(html.indexOf("docA:1")).toBeLessThan(html.indexOf("docB:0"));
    expect(html).toContain("#1");
  });

  it("shows an explicit empty state", async () => {
    const fx = { ...baseFixture, query: { results: [], latency_ms: 1.0 } };
    const store = makeStore(fx);
    store.setEntityText("x");
    store.setAspectText("treatment");
    await store.submitQuery();
    expect(store.queried).toBe(true);
    expect(resultListHtml(store.results, null)).toContain("no results");
  });

  it("re-submitting an unchanged query re-renders the identical list", async () => {
    const store = makeStore(baseFixture);
    store.setEntityText("mention");
    store.setAspectText("treatment");
    await store.submitQuery();
    const first = resultListHtml(store.results, null);
    await store.submitQuery();
    expect(resultListHtml(store.results, null)).toBe(first);
  });

  it("keeps a single query in flight", async () => {
    let calls = 0;
    let release!: (v: unknown) => void;
    const gate = new Promise((res) => (release = res));
    const fetchFn: FetchLike = async (_url: string, init?: { method?: string }) => {
      if (init?.method === "POST") {
        calls += 1;
        await gate;
        return okResponse(baseFixture.query);
      }
      return okResponse({ results: [] });
    };
    const store = new ConsoleStore(new ApiClient("http://fixture", fetchFn));
    store.setEntityText("m");
    store.setAspectText("a");
    const p1 = store.submitQuery();
    const p2 = store.submitQuery(); // ignored while pending
    release(null);
    await Promise.all([p1, p2]);
    expect(calls).toBe(1);
  });

  it("surfaces 4xx reasons in the banner", async () => {
    const fetchFn: FetchLike = async (_url: string, init?: { method?: string }) => {
      if (init?.method === "POST") {
        return {
          ok: false,
          status: 400,
          json: async () => ({ code: "unresolvable_query", message: "unknown entity" }),
        };
      }
      return okResponse({ results: [] });
    };
    const store = new ConsoleStore(new ApiClient("http://fixture", fetchFn));
    store.setEntityText("m");
    store.setAspectText("a");
    await store.submitQuery();
    expect(store.banner).toBe("unresolvable_query: unknown entity");
  });
});

describe("rank preservation", () => {
  it("never reorders service ranks across 50 randomized fixtures", async () => {
    let seed = 1234;
    const rand = () => {
      // deterministic LCG so failures reproduce
      seed = (seed * 1103515245 + 12345) % 2 ** 31;
      return seed / 2 ** 31;
    };
    for (let trial = 0; trial < 50; trial++) {
      const n = 2 + Math.floor(rand() * 10);
      const results = Array.from({ length: n }, (_, i) =>
        passage(`p${trial}:${i}`, `doc${i}`, rand() * 2 - 1, 1 + Math.floor(rand() * 4)),
      );
      // deliberately NOT sorted by score: the service order is authoritative
      const fx = { ...baseFixture, query: { results, latency_ms: 1 } };
      const store = makeStore(fx);
      store.setEntityText("m");
      store.setAspectText("a");
      await store.submitQuery();
      expect(store.results.map((r) => r.passage_id)).toEqual(results.map((r) => r.passage_id));
      const html = resultListHtml(store.results, null);
      const positions = results.map((r) => html.indexOf(`data-passage="${r.passage_id}"`));
      expect([...positions].sort((a, b) => a - b)).toEqual(positions);
      expect(positions.every((p) => p >= 0)).toBe(true);
    }
  });
});

describe("histogram view", () => {
  it("series lengths equal the sentence count", async () => {
    const store = makeStore(baseFixture);
    store.chooseEntity({ id: "Q1", name: "IgA nephropathy" });
    store.setAspectText("treatment");
    await store.submitQuery();
    await store.selectResult("docA:1");
    const h = store.histogram!;
    expect(h.combined).toHaveLength(h.sentences.length);
    expect(h.entity).toHaveLength(h.sentences.length);
    expect(h.aspect).toHaveLength(h.sentences.length);
  });

  it("keeps payload values unmodified in the store", async () => {
    const store = makeStore(baseFixture);
    store.chooseEntity({ id: "Q1", name: "IgA nephropathy" });
    store.setAspectText("treatment");
    await store.submitQuery();
    await store.selectResult("docA:1");
    expect(store.histogram!.combined).toEqual([0.1, 0.8, 0.4, 0.2]);
  });

  it("marks the arg-max region and emits one hit area per sentence", () => {
    const hist = baseFixture.histograms["docA"]!;
    const svg = buildHistogramSvg(hist);
    expect(svg).toContain('class="argmax"');
    expect(svg.match(/class="hit"/g)).toHaveLength(4);
    expect(argmax(hist.combined)).toBe(1);
    expect(svg.match(/<polyline/g)).toHaveLength(3);
  });

  it("a constant entity curve renders as a flat polyline", () => {
    const hist: HistogramResponse = {
      doc_id: "d",
      sentences: ["a", "b", "c"],
      combined: [0.1, 0.5, 0.3],
      entity: [0.4, 0.4, 0.4],
      aspect: [0.0, 0.2, 0.1],
    };
    const svg = buildHistogramSvg(hist);
    const entityLine = svg.split("<polyline")[2]!;
    const ys = [...entityLine.matchAll(/[\d.]+,([\d.]+)/g)].map((m) => m[1]);
    expect(new Set(ys).size).toBe(1);
  });

  it("offers a retry affordance on fetch failure", async () => {
    const fx = { ...baseFixture, histograms: {} };
    const store = makeStore(fx);
    store.setEntityText("m");
    store.setAspectText("a");
    await store.submitQuery();
    await store.selectResult("docA:1");
    expect(store.histogramError).toBe(true);
    expect(store.histogram).toBeNull();
  });
});

describe("debounce", () => {
  it("collapses rapid calls into the trailing one", () => {
    vi.useFakeTimers();
    const calls: string[] = [];
    const fn = debounce((v: string) => calls.push(v), 150);
    fn("a");
    fn("ab");
    vi.advanceTimersByTime(100);
    fn("abc");
    vi.advanceTimersByTime(149);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual(["abc"]);
    vi.useRealTimers();
  });
});
