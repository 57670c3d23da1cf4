/** HTML builders for the result list and suggestion menus.
 *
 * Results render in response order with their ranks; per-sentence scores
 * shade sentence backgrounds. Scores themselves are shown unmodified;
 * only the shading alpha is an affine display mapping.
 */

import { PassageResult } from "./api.js";
import { EntitySuggestion } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function shade(score: number, lo: number, hi: number): number {
  if (hi <= lo) return 0.25;
  return 0.08 + 0.6 * ((score - lo) / (hi - lo));
}

export function sentenceSpans(result: PassageResult): string {
  const lo = Math.min(...result.sentence_scores);
  const hi = Math.max(...result.sentence_scores);
  return result.sentences
    .map((text, i) => {
      const score = result.sentence_scores[i] ?? 0;
      const alpha = shade(score, lo, hi).toFixed(3);
      return (
        `<span class="sentence" style="background: rgba(37, 99, 235, ${alpha})" ` +
        `title="score ${score.toFixed(4)}">${escapeHtml(text)}</span>`
      );
    })
    .join(" ");
}

export function resultListHtml(results: PassageResult[], selectedPassageId: string | null): string {
  if (results.length === 0) {
    return `<p class="empty">no results</p>`;
  }
  const items = results.map((r, i) => {
    const selected = r.passage_id === selectedPassageId ? " selected" : "";
    return (
      `<li class="result${selected}" data-passage="${escapeHtml(r.passage_id)}">` +
      `<div class="result-head"><span class="rank">#${i + 1}</span>` +
      `<span class="badge">${r.score.toFixed(4)}</span>` +
      `<span class="heading">${escapeHtml(r.heading)}</span>` +
      `<span class="doc">${escapeHtml(r.doc_id)}</span></div>` +
      `<div class="passage-text">${sentenceSpans(r)}</div></li>`
    );
  });
  return `<ol class="results">${items.join("")}</ol>`;
}

export function entityMenuHtml(suggestions: EntitySuggestion[], active: number): string {
  return suggestions
    .map(
      (s, i) =>
        `<li class="option${i === active ? " active" : ""}" data-id="${escapeHtml(s.id)}" ` +
        `data-name="${escapeHtml(s.name)}">${escapeHtml(s.name)} ` +
        `<span class="option-id">${escapeHtml(s.id)}</span></li>`,
    )
    .join("");
}

export function aspectMenuHtml(suggestions: string[], active: number): string {
  return suggestions
    .map(
      (s, i) =>
        `<li class="option${i === active ? " active" : ""}" data-name="${escapeHtml(s)}">` +
        `${escapeHtml(s)}</li>`,
    )
    .join("");
}
