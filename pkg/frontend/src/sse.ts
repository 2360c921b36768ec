/**
 * Minimal server-sent-events reader on top of fetch streaming.
 *
 * Works in browsers and in node 20+ (no EventSource dependency), supports
 * the `?limit=` test hook of the demo service, and reconnects with backoff
 * until aborted. One render loop consumes the yielded events.
 */

export interface SseEvent {
  id: string | null;
  event: string;
  data: string;
}

export interface SseOptions {
  signal?: AbortSignal;
  /** called before each reconnect attempt */
  onReconnect?: (attempt: number) => void;
  reconnectDelayMs?: number;
  fetchFn?: typeof fetch;
}

function parseFrame(frame: string): SseEvent | null {
  let id: string | null = null;
  let event = "message";
  const data: string[] = [];
  for (const line of frame.split("\n")) {
    if (line.startsWith("id:")) id = line.slice(3).trim();
    else if (line.startsWith("event:")) event = line.slice(6).trim();
    else if (line.startsWith("data:")) data.push(line.slice(5).trim());
  }
  if (data.length === 0) return null;
  return { id, event, data: data.join("\n") };
}

/** Split an SSE byte stream into events; ends when the stream closes. */
export async function* readSseStream(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<SseEvent> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let sep: number;
      while ((sep = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, sep);
        buffer = buffer.slice(sep + 2);
        const event = parseFrame(frame);
        if (event) yield event;
      }
    }
  } finally {
    reader.releaseLock();
  }
}

/**
 * Subscribe to an SSE endpoint with automatic reconnect. The generator
 * only terminates when the signal aborts (or, for `?limit=` URLs used in
 * tests, when the capped stream ends and `reconnect` is false).
 */
export async function* subscribeSse(
  url: string,
  options: SseOptions & { reconnect?: boolean } = {},
): AsyncGenerator<SseEvent> {
  const fetchFn = options.fetchFn ?? fetch;
  const reconnect = options.reconnect ?? true;
  let attempt = 0;
  for (;;) {
    if (options.signal?.aborted) return;
    try {
      const response = await fetchFn(url, {
        signal: options.signal,
        headers: { accept: "text/event-stream" },
      });
      if (!response.ok || response.body === null) {
        throw new Error(`event stream returned ${response.status}`);
      }
      attempt = 0;
      yield* readSseStream(response.body);
    } catch (err) {
      if (options.signal?.aborted) return;
      if (!reconnect) throw err;
    }
    if (!reconnect) return;
    attempt += 1;
    options.onReconnect?.(attempt);
    await new Promise((resolve) =>
      setTimeout(resolve, options.reconnectDelayMs ?? 500),
    );
  }
}
