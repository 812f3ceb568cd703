/** Controller behavior against the recorded conversation: session
 * bootstrap and restore, one in-flight question, inline errors, and the
 * follow-up contract (the prior predicted answer lives in server history).
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ChatApp, SESSION_KEY } from "../src/app.js";
import type { TurnView } from "../src/types.js";
import {
  MemoryStorage, ReplayServer, SESSION_ID, exchange, flaky, flush, gated,
  withPath,
} from "./replay.js";

const QUESTION_1 = (exchange("turn1").request_body as { question: string })
  .question;
const QUESTION_2 = (exchange("turn2").request_body as { question: string })
  .question;

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app")!;
});

function texts(selector: string): string[] {
  return Array.from(document.querySelectorAll(selector),
                    (node) => node.textContent ?? "");
}

function input(): HTMLInputElement {
  return document.querySelector("form.ask input")!;
}

function sendButton(): HTMLButtonElement {
  return document.querySelector("form.ask button")!;
}

describe("session bootstrap", () => {
  it("creates a session and shows the welcome state", async () => {
    const server = new ReplayServer(["create_session"]);
    const storage = new MemoryStorage();
    const app = new ChatApp(root, { fetchImpl: server.fetch, storage });
    await app.start();
    expect(document.querySelector(".welcome")).not.toBeNull();
    expect(document.querySelectorAll(".bubble")).toHaveLength(0);
    expect(storage.getItem(SESSION_KEY)).toBe(SESSION_ID);
    expect(server.requests).toEqual([
      { method: "POST", path: "/api/sessions", body: undefined }]);
  });

  it("restores a stored session's turns in server order", async () => {
    const storage = new MemoryStorage();
    storage.setItem(SESSION_KEY, SESSION_ID);
    const server = new ReplayServer(["session_after_2"]);
    const app = new ChatApp(root, { fetchImpl: server.fetch, storage });
    await app.start();
    expect(texts(".bubble.question")).toEqual([QUESTION_1, QUESTION_2]);
    expect(texts(".answer-label")).toEqual(["Dan Brown", "Robert Langdon"]);
    expect(document.querySelector(".welcome")).toBeNull();
  });

  it("shows the welcome state for a restored empty session", async () => {
    const storage = new MemoryStorage();
    storage.setItem(SESSION_KEY, SESSION_ID);
    const server = new ReplayServer(["session_empty"]);
    const app = new ChatApp(root, { fetchImpl: server.fetch, storage });
    await app.start();
    expect(document.querySelector(".welcome")).not.toBeNull();
    expect(document.querySelectorAll(".bubble")).toHaveLength(0);
  });

  it("starts fresh when the stored session is gone", async () => {
    const storage = new MemoryStorage();
    storage.setItem(SESSION_KEY, "stale");
    const server = new ReplayServer([
      withPath(exchange("get_unknown_404"), "/api/sessions/stale"),
      "create_session",
    ]);
    const app = new ChatApp(root, { fetchImpl: server.fetch, storage });
    await app.start();
    expect(document.querySelector(".welcome")).not.toBeNull();
    expect(storage.getItem(SESSION_KEY)).toBe(SESSION_ID);
  });
});

describe("asking questions", () => {
  it("disables input while a question is in flight", async () => {
    const server = new ReplayServer(["create_session", "turn1"]);
    let impl = server.fetch;
    const app = new ChatApp(root, {
      fetchImpl: (request, init) => impl(request, init),
      storage: new MemoryStorage(),
    });
    await app.start();

    const gate = gated(server.fetch);
    impl = gate.fetch;
    const submitted = app.submit(QUESTION_1);
    await flush();
    expect(input().disabled).toBe(true);
    expect(sendButton().disabled).toBe(true);
    expect(document.querySelector(".bubble.pending")).not.toBeNull();

    gate.release();
    await submitted;
    expect(input().disabled).toBe(false);
    expect(sendButton().disabled).toBe(false);
    expect(document.querySelector(".bubble.pending")).toBeNull();
    expect(texts(".answer-label")).toEqual(["Dan Brown"]);
    expect(input().value).toBe("");
  });

  it("ignores blank input", async () => {
    const server = new ReplayServer(["create_session"]);
    const app = new ChatApp(root, {
      fetchImpl: server.fetch, storage: new MemoryStorage(),
    });
    await app.start();
    await app.submit("   ");
    expect(server.requests).toHaveLength(1);
    expect(document.querySelectorAll(".bubble")).toHaveLength(0);
  });

  it("keeps the follow-up's prior answer in server history", async () => {
    const server = new ReplayServer([
      "create_session", "turn1", "turn2", "session_after_2"]);
    const app = new ChatApp(root, {
      fetchImpl: server.fetch, storage: new MemoryStorage(),
    });
    await app.start();
    await app.submit(QUESTION_1);
    await app.submit(QUESTION_2);

    // both posts carried exactly the typed question
    expect(server.requests[1]!.body).toEqual({ question: QUESTION_1 });
    expect(server.requests[2]!.body).toEqual({ question: QUESTION_2 });

    // the follow-up was interpreted against the previous predicted answer:
    // its SR question slot is the turn-1 answer, not anything typed
    const srValues = texts(".sr-value.sr-question");
    expect(srValues[1]).toBe("Dan Brown");

    // and the server's history, fetched back, holds the predicted answers
    const session = await app.client.getSession(SESSION_ID);
    expect(session.turns.map((turn: TurnView) => turn.answer?.label))
      .toEqual(["Dan Brown", "Robert Langdon"]);
    expect(session.turns.map((turn: TurnView) => turn.question))
      .toEqual([QUESTION_1, QUESTION_2]);

    // screen order equals server order
    expect(texts(".bubble.question")).toEqual([QUESTION_1, QUESTION_2]);
    expect(texts(".answer-label")).toEqual(["Dan Brown", "Robert Langdon"]);
  });

  it("renders existential answers without SR or evidence", async () => {
    const question = (exchange("turn3_existential").request_body as
      { question: string }).question;
    const server = new ReplayServer(["create_session", "turn3_existential"]);
    const app = new ChatApp(root, {
      fetchImpl: server.fetch, storage: new MemoryStorage(),
    });
    await app.start();
    await app.submit(question);
    expect(texts(".answer-label")).toEqual(["Yes"]);
    expect(document.querySelector(".sr-slots")).toBeNull();
    expect(document.querySelectorAll(".evidence-card")).toHaveLength(0);
  });
});

describe("errors", () => {
  it("offers a retry on network failure and recovers", async () => {
    const server = new ReplayServer(["create_session", "turn1"]);
    let impl = server.fetch;
    const app = new ChatApp(root, {
      fetchImpl: (request, init) => impl(request, init),
      storage: new MemoryStorage(),
    });
    await app.start();

    impl = flaky(server.fetch, 1);
    await app.submit(QUESTION_1);
    const error = document.querySelector(".bubble.error");
    expect(error?.textContent).toContain("service unreachable");
    expect(input().disabled).toBe(false);

    (error!.querySelector("button.error-action") as HTMLButtonElement).click();
    await flush();
    expect(document.querySelector(".bubble.error")).toBeNull();
    expect(texts(".answer-label")).toEqual(["Dan Brown"]);
    // the retry reuses the already-displayed question bubble
    expect(texts(".bubble.question")).toEqual([QUESTION_1]);
  });

  it("offers a new session when the server lost this one", async () => {
    const server = new ReplayServer([
      "create_session",
      withPath(exchange("post_unknown_404"),
               `/api/sessions/${SESSION_ID}/questions`),
      "create_session",
    ]);
    const app = new ChatApp(root, {
      fetchImpl: server.fetch, storage: new MemoryStorage(),
    });
    await app.start();
    await app.submit("hello?");

    const error = document.querySelector(".bubble.error");
    expect(error?.textContent).toContain("session lost");
    const action = error!.querySelector("button.error-action")!;
    expect(action.textContent).toBe("start new session");

    (action as HTMLButtonElement).click();
    await flush();
    expect(document.querySelector(".bubble.error")).toBeNull();
    expect(document.querySelector(".welcome")).not.toBeNull();
    expect(document.querySelectorAll(".bubble")).toHaveLength(0);
    expect(server.done).toBe(true);
  });
});
