/** Thin fetch client for the graphqa service; no state beyond the base URL. */

import type { HealthView, SessionView, TurnView } from "./types.js";

export class ApiError extends Error {
  /** HTTP status; 0 when the request never reached the service. */
  readonly status: number;

  constructor(message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl = "", fetchImpl?: typeof fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    // wrap the global so it keeps its expected receiver
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  async health(): Promise<HealthView> {
    return this.request("GET", "/api/health");
  }

  async createSession(): Promise<string> {
    const created = await this.request<{ session_id: string }>(
      "POST", "/api/sessions");
    return created.session_id;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  async ask(sessionId: string, question: string): Promise<TurnView> {
    return this.request("POST", `/api/sessions/${sessionId}/questions`,
                        { question });
  }

  async deleteSession(sessionId: string): Promise<void> {
    await this.request("DELETE", `/api/sessions/${sessionId}`);
  }

  private async request<T>(method: string, path: string,
                           body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined
          ? undefined
          : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (error) {
      throw new ApiError(`service unreachable: ${String(error)}`, 0);
    }
    if (!response.ok) {
      throw new ApiError(await detailOf(response), response.status);
    }
    return response.json() as Promise<T>;
  }
}

async function detailOf(response: Response): Promise<string> {
  try {
    const parsed: unknown = await response.json();
    if (parsed && typeof parsed === "object" && "detail" in parsed
        && typeof (parsed as { detail: unknown }).detail === "string") {
      return (parsed as { detail: string }).detail;
    }
  } catch {
    // non-JSON error body, fall through to the status line
  }
  return `request failed with status ${response.status}`;
}
