/** Test doubles around the recorded API fixture.
 *
 * The fixture is a verbatim capture of the live service answering the demo
 * conversation (see scripts/record_fixtures.py). ReplayServer plays a
 * declared sequence of those exchanges back through the fetch interface and
 * fails loudly on any request the test did not declare.
 */

import fixture from "./fixtures/recorded.json";

export interface Exchange {
  name: string;
  method: string;
  path: string;
  request_body: unknown;
  status: number;
  body: unknown;
}

export const SESSION_ID: string = fixture.session_id;

export function exchange(name: string): Exchange {
  const found = (fixture.exchanges as Exchange[]).find((e) => e.name === name);
  if (found === undefined) throw new Error(`no recorded exchange ${name}`);
  return found;
}

/** The same exchange replayed at a different path (e.g. stale session ids). */
export function withPath(source: Exchange, path: string): Exchange {
  return { ...source, path };
}

export interface SeenRequest {
  method: string;
  path: string;
  body: unknown;
}

function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(JSON.stringify(body)) as unknown,
  } as unknown as Response;
}

export class ReplayServer {
  readonly requests: SeenRequest[] = [];
  private readonly script: Exchange[];

  constructor(script: (Exchange | string)[]) {
    this.script = script.map((step) =>
      typeof step === "string" ? exchange(step) : step);
  }

  get done(): boolean {
    return this.script.length === 0;
  }

  fetch: typeof fetch = async (input, init) => {
    const url = typeof input === "string" ? input
      : input instanceof URL ? input.toString() : input.url;
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = typeof init?.body === "string"
      ? (JSON.parse(init.body) as unknown) : undefined;
    this.requests.push({ method, path, body });
    const step = this.script.shift();
    if (step === undefined) {
      throw new Error(`unscripted request: ${method} ${path}`);
    }
    if (step.method !== method || step.path !== path) {
      throw new Error(`expected ${step.method} ${step.path}, `
        + `got ${method} ${path}`);
    }
    return jsonResponse(step.status, step.body);
  };
}

/** Wrap a fetch so calls wait until release() — for in-flight assertions. */
export function gated(fetchImpl: typeof fetch): {
  fetch: typeof fetch; release: () => void;
} {
  let release!: () => void;
  const gate = new Promise<void>((resolve) => { release = resolve; });
  return {
    fetch: async (input, init) => {
      await gate;
      return fetchImpl(input, init);
    },
    release,
  };
}

/** Reject the first `failures` calls, then delegate. */
export function flaky(fetchImpl: typeof fetch, failures: number): typeof fetch {
  let remaining = failures;
  return async (input, init) => {
    if (remaining > 0) {
      remaining -= 1;
      throw new TypeError("NetworkError: connection refused");
    }
    return fetchImpl(input, init);
  };
}

export class MemoryStorage {
  private readonly map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

/** Drain the microtask queue so settled promises run their handlers. */
export async function flush(): Promise<void> {
  for (let i = 0; i < 10; i += 1) {
    await Promise.resolve();
  }
}
