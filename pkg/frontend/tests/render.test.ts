/** Rendering contract against recorded service responses: every displayed
 * string must come from an API field, in the API's order. */

import { describe, expect, it } from "vitest";

import {
  clipSegments, highlightSegments, renderAnswerBubble, renderEvidenceCard,
  renderQuestionBubble, sourceBadge,
} from "../src/render.js";
import type { EvidenceView, TurnView } from "../src/types.js";
import { exchange } from "./replay.js";

const turn1 = exchange("turn1").body as TurnView;
const turn2 = exchange("turn2").body as TurnView;
const existential = exchange("turn3_existential").body as TurnView;

function texts(root: HTMLElement, selector: string): string[] {
  return Array.from(root.querySelectorAll(selector),
                    (node) => node.textContent ?? "");
}

describe("question bubble", () => {
  it("shows the question verbatim", () => {
    const bubble = renderQuestionBubble(turn1.question);
    expect(bubble.textContent).toBe("Who wrote the book Angels and Demons?");
  });
});

describe("answer bubble", () => {
  it("shows the answer label and its score", () => {
    const bubble = renderAnswerBubble(turn1);
    expect(bubble.querySelector(".answer-label")?.textContent)
      .toBe("Dan Brown");
    expect(bubble.querySelector(".answer-score")?.textContent)
      .toBe(turn1.answer!.score!.toFixed(3));
  });

  it("renders the four SR slots with the service's values", () => {
    const bubble = renderAnswerBubble(turn1);
    const labels = texts(bubble, ".sr-label");
    const values = texts(bubble, ".sr-value");
    expect(labels).toEqual(["context", "question", "relation", "answer type"]);
    expect(values).toEqual([turn1.sr!.context, turn1.sr!.question,
                            turn1.sr!.relation, turn1.sr!.type]);
    expect(values[1]).toBe("Angels and Demons");
  });

  it("renders five evidence cards in service order", () => {
    const bubble = renderAnswerBubble(turn1);
    const cards = bubble.querySelectorAll(".evidence-card");
    expect(cards).toHaveLength(5);
    expect(texts(bubble, ".evidence-text"))
      .toEqual(turn1.evidences.map((evidence) => evidence.text));
    expect(texts(bubble, ".evidence-score"))
      .toEqual(turn1.evidences.map((evidence) => evidence.score.toFixed(3)));
  });

  it("badges every card with its source", () => {
    const bubble = renderAnswerBubble(turn1);
    expect(texts(bubble, ".badge"))
      .toEqual(turn1.evidences.map((evidence) => sourceBadge(evidence.source)));
  });

  it("covers all four badge kinds across the first two turns", () => {
    const badges = new Set([
      ...turn1.evidences.map((evidence) => sourceBadge(evidence.source)),
      ...turn2.evidences.map((evidence) => sourceBadge(evidence.source)),
    ]);
    expect(badges).toEqual(new Set(["KB", "Text", "Table", "Infobox"]));
  });

  it("marks exactly the mention spans inside each evidence", () => {
    const evidence = turn1.evidences[0]!;
    const card = renderEvidenceCard(evidence);
    const expected = evidence.entities
      .flatMap((entity) => entity.spans)
      .sort((a, b) => a[0] - b[0])
      .map(([start, end]) => evidence.text.slice(start, end));
    expect(texts(card, "mark")).toEqual(expected);
    expect(expected).toContain("Dan Brown");
  });

  it("answers existential turns with a bare yes bubble", () => {
    const bubble = renderAnswerBubble(existential);
    expect(bubble.querySelector(".answer-label")?.textContent).toBe("Yes");
    expect(bubble.querySelector(".answer-score")).toBeNull();
    expect(bubble.querySelector(".sr-slots")).toBeNull();
    expect(bubble.querySelectorAll(".evidence-card")).toHaveLength(0);
  });
});

describe("mention segmentation", () => {
  it("is lossless on every recorded evidence", () => {
    for (const turn of [turn1, turn2]) {
      for (const evidence of turn.evidences) {
        const joined = highlightSegments(evidence.text, evidence.entities)
          .map((segment) => segment.text).join("");
        expect(joined).toBe(evidence.text);
      }
    }
  });

  it("drops out-of-range spans and overlapping mentions", () => {
    const segments = highlightSegments("abcdef", [
      { id: "a", label: "", spans: [[0, 3], [2, 5], [4, 99]] },
    ]);
    expect(segments).toEqual([
      { text: "abc", highlighted: true },
      { text: "def", highlighted: false },
    ]);
  });

  it("clips at the character budget without joining segments", () => {
    const segments = highlightSegments("abcdef", [
      { id: "a", label: "", spans: [[2, 4]] },
    ]);
    expect(clipSegments(segments, 3)).toEqual([
      { text: "ab", highlighted: false },
      { text: "c", highlighted: true },
    ]);
  });
});

describe("long evidence text", () => {
  const longEvidence: EvidenceView = {
    text: "x".repeat(150) + " Dan Brown " + "y".repeat(150),
    source: "text",
    score: 0.5,
    entities: [{ id: "Q7343", label: "Dan Brown", spans: [[151, 160]] }],
  };

  it("starts clipped with an expand control", () => {
    const card = renderEvidenceCard(longEvidence, 120);
    const body = card.querySelector(".evidence-text")!;
    expect(body.textContent).toBe(longEvidence.text.slice(0, 120) + "…");
    expect(card.querySelector("button.expand")?.textContent).toBe("show all");
    expect(card.querySelectorAll("mark")).toHaveLength(0);
  });

  it("expands to the full text with its mention marks", () => {
    const card = renderEvidenceCard(longEvidence, 120);
    (card.querySelector("button.expand") as HTMLButtonElement).click();
    const body = card.querySelector(".evidence-text")!;
    expect(body.textContent).toBe(longEvidence.text);
    expect(texts(card as HTMLElement, "mark")).toEqual(["Dan Brown"]);
    expect(card.querySelector("button.expand")).toBeNull();
  });

  it("keeps short texts whole with no control", () => {
    const card = renderEvidenceCard(turn1.evidences[0]!, 160);
    expect(card.querySelector("button.expand")).toBeNull();
  });
});
