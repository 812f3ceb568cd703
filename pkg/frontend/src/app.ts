/** Chat controller: one session, one in-flight question, inline errors. */

import { ApiClient, ApiError } from "./api.js";
import {
  renderAnswerBubble, renderErrorBubble, renderPendingBubble,
  renderQuestionBubble, renderWelcome,
} from "./render.js";

export const SESSION_KEY = "graphqa.session";

type StorageLike = Pick<Storage, "getItem" | "setItem" | "removeItem">;

export interface AppOptions {
  baseUrl?: string;
  fetchImpl?: typeof fetch;
  storage?: StorageLike;
  /** Evidence texts longer than this start clipped with an expand control. */
  evidenceTextLimit?: number;
}

export class ChatApp {
  readonly client: ApiClient;
  private readonly storage: StorageLike | null;
  private readonly textLimit: number;
  private readonly transcript: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly send: HTMLButtonElement;
  private sessionId: string | null = null;
  private busy = false;

  constructor(root: HTMLElement, options: AppOptions = {}) {
    this.client = new ApiClient(options.baseUrl ?? "", options.fetchImpl);
    this.storage = options.storage ?? null;
    this.textLimit = options.evidenceTextLimit ?? 160;

    this.transcript = document.createElement("main");
    this.transcript.className = "transcript";
    const form = document.createElement("form");
    form.className = "ask";
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Ask a question";
    this.input.setAttribute("aria-label", "question");
    this.send = document.createElement("button");
    this.send.type = "submit";
    this.send.textContent = "Ask";
    form.append(this.input, this.send);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(this.input.value);
    });
    root.replaceChildren(this.transcript, form);
  }

  get currentSessionId(): string | null {
    return this.sessionId;
  }

  /** Resume the stored session when it still exists, else start fresh. */
  async start(): Promise<void> {
    const stored = this.storage?.getItem(SESSION_KEY) ?? null;
    if (stored !== null) {
      try {
        const session = await this.client.getSession(stored);
        this.sessionId = stored;
        if (session.turns.length === 0) {
          this.transcript.append(renderWelcome());
        } else {
          // server turn order is screen order
          for (const turn of session.turns) {
            this.transcript.append(renderQuestionBubble(turn.question));
            this.transcript.append(renderAnswerBubble(turn, this.textLimit));
          }
        }
        return;
      } catch {
        this.storage?.removeItem(SESSION_KEY);
      }
    }
    await this.newSession();
  }

  async newSession(): Promise<void> {
    this.sessionId = await this.client.createSession();
    this.storage?.setItem(SESSION_KEY, this.sessionId);
    this.transcript.replaceChildren(renderWelcome());
  }

  /** Send a question; no-op on blank input or while one is in flight. */
  async submit(raw: string): Promise<void> {
    const question = raw.trim();
    if (question === "" || this.busy || this.sessionId === null) return;
    this.transcript.querySelector(".welcome")?.remove();
    this.transcript.append(renderQuestionBubble(question));
    this.input.value = "";
    await this.attempt(question);
  }

  /** One POST for an already-displayed question; retries come back here. */
  private async attempt(question: string): Promise<void> {
    if (this.sessionId === null) return;
    this.setBusy(true);
    const pending = renderPendingBubble();
    this.transcript.append(pending);
    try {
      const turn = await this.client.ask(this.sessionId, question);
      pending.remove();
      this.transcript.append(renderAnswerBubble(turn, this.textLimit));
    } catch (error) {
      pending.remove();
      this.showError(error, question);
    } finally {
      this.setBusy(false);
      this.input.focus();
    }
  }

  private showError(error: unknown, question: string): void {
    const message = error instanceof Error ? error.message : String(error);
    if (error instanceof ApiError && error.status === 404) {
      // the server no longer knows this session; history is unrecoverable
      const bubble = renderErrorBubble(
        `session lost (${message})`, "start new session", () => {
          bubble.remove();
          void this.newSession();
        });
      this.transcript.append(bubble);
    } else {
      const bubble = renderErrorBubble(message, "retry", () => {
        bubble.remove();
        void this.attempt(question);
      });
      this.transcript.append(bubble);
    }
  }

  private setBusy(value: boolean): void {
    this.busy = value;
    this.input.disabled = value;
    this.send.disabled = value;
  }
}
