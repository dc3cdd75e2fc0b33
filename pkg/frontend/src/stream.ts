// NDJSON event-stream client with resume and resync support.
//
// Reads /api/events?cursor=N&follow=true line by line. Event records update
// the cursor; a {"control":"resync"} record means the log was truncated past
// our cursor and the consumer must refetch a snapshot before continuing.
// Network drops reconnect with backoff, resuming after the last seen seq.

import type { LifecycleEvent, StreamRecord } from "./types.js";
import { isControl } from "./types.js";

export type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<{
  ok: boolean;
  status: number;
  body: ReadableStream<Uint8Array> | null;
}>;

export interface StreamHandlers {
  onEvent: (event: LifecycleEvent) => void;
  onResync: () => Promise<void> | void;
  onStateChange?: (state: "connecting" | "open" | "retrying" | "closed") => void;
}

export interface StreamOptions {
  fetchImpl?: FetchLike;
  retryDelayMs?: number;
  maxRetryDelayMs?: number;
}

/** Split an NDJSON byte stream into parsed records, tolerating chunk seams. */
export async function* ndjsonRecords(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<StreamRecord> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) yield JSON.parse(line) as StreamRecord;
      }
    }
    const rest = buffer.trim();
    if (rest) yield JSON.parse(rest) as StreamRecord;
  } finally {
    reader.releaseLock();
  }
}

export class EventStream {
  private cursor: number;
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    cursor: number,
    private readonly handlers: StreamHandlers,
    private readonly options: StreamOptions = {},
  ) {
    this.cursor = cursor;
  }

  get lastSeq(): number {
    return this.cursor;
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
    this.handlers.onStateChange?.("closed");
  }

  /** Runs until stop(); resolves when stopped. */
  async run(): Promise<void> {
    const fetchImpl: FetchLike = this.options.fetchImpl ?? (fetch as unknown as FetchLike);
    let delay = this.options.retryDelayMs ?? 500;
    const maxDelay = this.options.maxRetryDelayMs ?? 10_000;
    while (!this.stopped) {
      this.handlers.onStateChange?.("connecting");
      this.controller = new AbortController();
      try {
        const response = await fetchImpl(
          `${this.baseUrl}/api/events?cursor=${this.cursor}&follow=true`,
          { signal: this.controller.signal },
        );
        if (!response.ok || response.body === null) {
          throw new Error(`stream request failed: ${response.status}`);
        }
        this.handlers.onStateChange?.("open");
        delay = this.options.retryDelayMs ?? 500;
        for await (const record of ndjsonRecords(response.body)) {
          if (this.stopped) return;
          if (isControl(record)) {
            if (record.control === "resync") {
              await this.handlers.onResync();
              this.cursor = record.oldest !== null && record.oldest !== undefined
                ? record.oldest - 1
                : this.cursor;
            }
            continue; // idle keep-alives are skipped
          }
          this.cursor = record.seq;
          this.handlers.onEvent(record);
        }
      } catch (err) {
        if (this.stopped) return;
      }
      if (this.stopped) return;
      this.handlers.onStateChange?.("retrying");
      await new Promise((resolve) => setTimeout(resolve, delay));
      delay = Math.min(delay * 2, maxDelay);
    }
  }
}
