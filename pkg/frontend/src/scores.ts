import { CANONICAL_LABELS, ClassLabel, PredictionScores } from "./labels.js";

export interface ScoreRow {
  label: ClassLabel;
  fraction: number;
  /** percentage with 1 decimal, e.g. "97.3" */
  percent: string;
  top: boolean;
}

export type ScoreView =
  | { kind: "scores"; rows: ScoreRow[]; top: ClassLabel }
  | { kind: "schema-error"; message: string };

export class SchemaError extends Error {}

/** Validate an API response body into a six-key score record. */
export function parseScores(data: unknown): PredictionScores {
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new SchemaError("response is not a JSON object");
  }
  const record = data as Record<string, unknown>;
  const keys = Object.keys(record);
  const missing = CANONICAL_LABELS.filter((label) => !(label in record));
  if (missing.length > 0) {
    throw new SchemaError(`response is missing classes: ${missing.join(", ")}`);
  }
  const extra = keys.filter(
    (key) => !(CANONICAL_LABELS as readonly string[]).includes(key),
  );
  if (extra.length > 0) {
    throw new SchemaError(`response has unexpected keys: ${extra.join(", ")}`);
  }
  const scores = {} as PredictionScores;
  for (const label of CANONICAL_LABELS) {
    const value = record[label];
    if (typeof value !== "number" || !Number.isFinite(value) || value < 0 || value > 1) {
      throw new SchemaError(`score for "${label}" is not a probability: ${String(value)}`);
    }
    scores[label] = value;
  }
  return scores;
}

/** Highest-scoring class; exact ties go to the earliest canonical label. */
export function topLabel(scores: PredictionScores): ClassLabel {
  let best: ClassLabel = CANONICAL_LABELS[0];
  for (const label of CANONICAL_LABELS) {
    if (scores[label] > scores[best]) {
      best = label;
    }
  }
  return best;
}

/**
 * View model for the result page: rows sorted by score descending (stable,
 * so ties keep canonical order and the first row always agrees with
 * topLabel), percentages at 1 decimal. Malformed input yields the
 * schema-error view instead of throwing.
 */
export function buildScoreView(data: unknown): ScoreView {
  let scores: PredictionScores;
  try {
    scores = parseScores(data);
  } catch (error) {
    return {
      kind: "schema-error",
      message: error instanceof Error ? error.message : String(error),
    };
  }
  const rows: ScoreRow[] = CANONICAL_LABELS.map((label) => ({
    label,
    fraction: scores[label],
    percent: (scores[label] * 100).toFixed(1),
    top: false,
  })).sort((a, b) => b.fraction - a.fraction);
  rows[0].top = true;
  return { kind: "scores", rows, top: rows[0].label };
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Render the view model as HTML for the output page. */
export function renderScoreRows(view: ScoreView): string {
  if (view.kind === "schema-error") {
    return `<div class="schema-error" role="alert">Unexpected response from the service: ${escapeHtml(view.message)}</div>`;
  }
  return view.rows
    .map((row) => {
      const width = Math.round(row.fraction * 1000) / 10;
      const rowClass = row.top ? "score-row top" : "score-row";
      return `
      <div class="${rowClass}" data-label="${row.label}">
        <span class="score-label">${row.label}</span>
        <span class="score-bar"><span class="score-fill" style="width:${width}%"></span></span>
        <span class="score-percent">${row.percent}%</span>
      </div>`;
    })
    .join("");
}
