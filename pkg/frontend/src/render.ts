/** DOM builders for chat bubbles, SR slots, and evidence cards.
 *
 * Everything is built with createElement/textContent, never innerHTML, so
 * API strings render verbatim and cannot inject markup. Each builder shows
 * exactly the fields the service returned; the only strings of our own are
 * labels and control captions.
 */

import type { EntityView, EvidenceView, SrView, TurnView } from "./types.js";

/** Display names for the four evidence source tags. */
export const SOURCE_BADGES: Record<string, string> = {
  kb: "KB",
  text: "Text",
  table: "Table",
  infobox: "Infobox",
};

export function sourceBadge(source: string): string {
  return SOURCE_BADGES[source] ?? source;
}

export interface Segment {
  text: string;
  highlighted: boolean;
}

/** Split evidence text into plain and entity-mention segments.
 *
 * Spans are taken as given by the service; out-of-range ones are ignored
 * and when two mentions overlap the earlier-starting one wins. The
 * concatenated segment texts always equal the input text.
 */
export function highlightSegments(text: string,
                                  entities: EntityView[]): Segment[] {
  const spans: [number, number][] = [];
  for (const entity of entities) {
    for (const [start, end] of entity.spans) {
      if (start >= 0 && start < end && end <= text.length) {
        spans.push([start, end]);
      }
    }
  }
  spans.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of spans) {
    if (start < cursor) continue;
    if (start > cursor) {
      segments.push({ text: text.slice(cursor, start), highlighted: false });
    }
    segments.push({ text: text.slice(start, end), highlighted: true });
    cursor = end;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), highlighted: false });
  }
  return segments;
}

/** First `limit` characters of the segments, highlight boundaries kept. */
export function clipSegments(segments: Segment[], limit: number): Segment[] {
  const clipped: Segment[] = [];
  let used = 0;
  for (const segment of segments) {
    if (used >= limit) break;
    const room = limit - used;
    clipped.push(segment.text.length <= room
      ? segment
      : { text: segment.text.slice(0, room), highlighted: segment.highlighted });
    used += segment.text.length;
  }
  return clipped;
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function fillSegments(target: HTMLElement, segments: Segment[]): void {
  target.replaceChildren();
  for (const segment of segments) {
    if (segment.highlighted) {
      const mark = document.createElement("mark");
      mark.textContent = segment.text;
      target.append(mark);
    } else {
      target.append(segment.text);
    }
  }
}

/** One evidence card: source badge, score, text with mentions marked.
 *
 * Texts longer than `textLimit` start clipped with a control that swaps in
 * the full rendering.
 */
export function renderEvidenceCard(evidence: EvidenceView,
                                   textLimit = 160): HTMLElement {
  const card = el("article", `evidence-card source-${evidence.source}`);
  const header = el("header", "evidence-header");
  const badge = el("span", `badge badge-${evidence.source}`);
  badge.textContent = sourceBadge(evidence.source);
  const score = el("span", "evidence-score");
  score.textContent = evidence.score.toFixed(3);
  header.append(badge, score);
  const body = el("p", "evidence-text");
  const segments = highlightSegments(evidence.text, evidence.entities);
  card.append(header, body);
  if (evidence.text.length > textLimit) {
    fillSegments(body, clipSegments(segments, textLimit));
    body.append("…");
    const expand = document.createElement("button");
    expand.type = "button";
    expand.className = "expand";
    expand.textContent = "show all";
    expand.addEventListener("click", () => {
      fillSegments(body, segments);
      expand.remove();
    });
    card.append(expand);
  } else {
    fillSegments(body, segments);
  }
  return card;
}

const SR_SLOTS: [keyof SrView, string][] = [
  ["context", "context"],
  ["question", "question"],
  ["relation", "relation"],
  ["type", "answer type"],
];

/** The four-slot structured interpretation of the question. */
export function renderSr(sr: SrView): HTMLElement {
  const block = el("dl", "sr-slots");
  for (const [key, label] of SR_SLOTS) {
    const term = el("dt", "sr-label");
    term.textContent = label;
    const value = el("dd", `sr-value sr-${key}`);
    value.textContent = sr[key];
    block.append(term, value);
  }
  return block;
}

export function renderQuestionBubble(question: string): HTMLElement {
  const bubble = el("div", "bubble question");
  bubble.textContent = question;
  return bubble;
}

/** Answer bubble: label and score, then SR slots, then evidence cards.
 *
 * Existential turns carry no SR and no evidences, so they come out as a
 * bare yes/no bubble. Evidence order is the service's ranking order.
 */
export function renderAnswerBubble(turn: TurnView,
                                   textLimit = 160): HTMLElement {
  const bubble = el("div", "bubble answer");
  const line = el("p", "answer-line");
  const label = el("span", "answer-label");
  label.textContent = turn.answer ? turn.answer.label : "no answer found";
  line.append(label);
  if (turn.answer && turn.answer.score !== null) {
    const score = el("span", "answer-score");
    score.textContent = turn.answer.score.toFixed(3);
    line.append(" ", score);
  }
  bubble.append(line);
  if (turn.sr) {
    bubble.append(renderSr(turn.sr));
  }
  if (turn.evidences.length > 0) {
    const list = el("div", "evidence-list");
    for (const evidence of turn.evidences) {
      list.append(renderEvidenceCard(evidence, textLimit));
    }
    bubble.append(list);
  }
  if (turn.diagnostic) {
    const note = el("p", "diagnostic");
    note.textContent = turn.diagnostic;
    bubble.append(note);
  }
  return bubble;
}

export function renderPendingBubble(): HTMLElement {
  const bubble = el("div", "bubble pending");
  bubble.textContent = "…";
  return bubble;
}

/** Inline error with one action: retry, or start over on session loss. */
export function renderErrorBubble(message: string, actionLabel: string,
                                  onAction: () => void): HTMLElement {
  const bubble = el("div", "bubble error");
  const text = el("p", "error-message");
  text.textContent = message;
  const action = document.createElement("button");
  action.type = "button";
  action.className = "error-action";
  action.textContent = actionLabel;
  action.addEventListener("click", onAction);
  bubble.append(text, action);
  return bubble;
}

export function renderWelcome(): HTMLElement {
  const welcome = el("div", "welcome");
  welcome.textContent =
    "Ask a question about the snapshot; follow-ups can lean on earlier turns.";
  return welcome;
}
