/**
 * Typed client for the demo-service API. Every UI value comes from these
 * responses; the client never synthesizes data.
 */

import { subscribeSse, SseEvent } from "./sse.js";
import {
  ApiErrorBody,
  EpsilonPreset,
  InstallResponse,
  QueryResponse,
  StateSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let body: ApiErrorBody = { error: `http_${response.status}` };
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      /* non-JSON error body; keep the status code */
    }
    throw new ApiError(response.status, body.error, body.message ?? body.error);
  }
  return (await response.json()) as T;
}

export class DemoClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  async installApp(
    manifestText: string,
    preset?: EpsilonPreset,
  ): Promise<InstallResponse> {
    const query = preset ? `?preset=${preset}` : "";
    const response = await this.fetchFn(`${this.baseUrl}/api/apps${query}`, {
      method: "POST",
      body: manifestText,
      headers: { "content-type": "application/json" },
    });
    return expectJson<InstallResponse>(response);
  }

  async removeApp(appId: string): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/api/apps/${appId}`, {
      method: "DELETE",
    });
    await expectJson<unknown>(response);
  }

  async playbackStep(ticks: number): Promise<StateSnapshot> {
    return this.playback({ action: "step", n: ticks });
  }

  async playback(body: {
    action: "start" | "pause" | "step";
    n?: number;
  }): Promise<StateSnapshot> {
    const response = await this.fetchFn(`${this.baseUrl}/api/playback`, {
      method: "POST",
      body: JSON.stringify(body),
      headers: { "content-type": "application/json" },
    });
    return expectJson<StateSnapshot>(response);
  }

  async query(
    appId: string,
    category: string,
    k: number,
  ): Promise<QueryResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/api/query`, {
      method: "POST",
      body: JSON.stringify({ app_id: appId, category, k }),
      headers: { "content-type": "application/json" },
    });
    return expectJson<QueryResponse>(response);
  }

  async state(): Promise<StateSnapshot> {
    const response = await this.fetchFn(`${this.baseUrl}/api/state`);
    return expectJson<StateSnapshot>(response);
  }

  /** Live state snapshots; reconnects until the signal aborts. */
  async *events(options: {
    signal?: AbortSignal;
    limit?: number;
    reconnect?: boolean;
    onReconnect?: (attempt: number) => void;
  } = {}): AsyncGenerator<StateSnapshot> {
    const query = options.limit ? `?limit=${options.limit}` : "";
    const stream = subscribeSse(`${this.baseUrl}/api/events${query}`, {
      signal: options.signal,
      reconnect: options.reconnect,
      onReconnect: options.onReconnect,
      fetchFn: this.fetchFn,
    });
    for await (const event of stream as AsyncGenerator<SseEvent>) {
      if (event.event === "state") {
        yield JSON.parse(event.data) as StateSnapshot;
      }
    }
  }
}
