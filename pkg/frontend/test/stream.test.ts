import { describe, expect, it } from "vitest";

import { EventStream, ndjsonRecords, type FetchLike } from "../src/stream.js";
import type { LifecycleEvent } from "../src/types.js";

const encoder = new TextEncoder();

function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
  let i = 0;
  return new ReadableStream({
    pull(controller) {
      if (i < chunks.length) {
        controller.enqueue(encoder.encode(chunks[i]!));
        i += 1;
      } else {
        controller.close();
      }
    },
  });
}

async function collect(body: ReadableStream<Uint8Array>) {
  const out = [];
  for await (const record of ndjsonRecords(body)) out.push(record);
  return out;
}

describe("ndjsonRecords", () => {
  it("parses one record per line", async () => {
    const records = await collect(streamOf([
      '{"seq":1,"time":1,"subject":"a","action":"Loaded","detail":{}}\n',
      '{"seq":2,"time":2,"subject":"b","action":"Activated","detail":{}}\n',
    ]));
    expect(records.map((r) => ("seq" in r ? r.seq : -1))).toEqual([1, 2]);
  });

  it("tolerates lines split across chunk boundaries", async () => {
    const records = await collect(streamOf([
      '{"seq":1,"time":1,"sub',
      'ject":"a","action":"Loaded","detail":{}}\n{"control"',
      ':"idle"}\n',
    ]));
    expect(records).toHaveLength(2);
    expect(records[1]).toEqual({ control: "idle" });
  });

  it("skips blank lines and handles a missing trailing newline", async () => {
    const records = await collect(streamOf([
      "\n\n",
      '{"control":"resync","oldest":17}',
    ]));
    expect(records).toEqual([{ control: "resync", oldest: 17 }]);
  });
});

function fetchScript(bodies: (string[] | Error)[]): { fetchImpl: FetchLike; urls: string[] } {
  const urls: string[] = [];
  let call = 0;
  const fetchImpl: FetchLike = async (url) => {
    urls.push(url);
    const body = bodies[Math.min(call, bodies.length - 1)]!;
    call += 1;
    if (body instanceof Error) throw body;
    return { ok: true, status: 200, body: streamOf(body) };
  };
  return { fetchImpl, urls };
}

describe("EventStream", () => {
  it("delivers events, skips idle records, resumes after the last seq", async () => {
    const { fetchImpl, urls } = fetchScript([
      [
        '{"seq":5,"time":1,"subject":"x","action":"Loaded","detail":{}}\n',
        '{"control":"idle"}\n',
        '{"seq":6,"time":2,"subject":"x","action":"Activated","detail":{}}\n',
      ],
      [],
    ]);
    const events: LifecycleEvent[] = [];
    const stream = new EventStream("", 4, {
      onEvent: (e) => {
        events.push(e);
        if (e.seq === 6) stream.stop();
      },
      onResync: () => {},
    }, { fetchImpl, retryDelayMs: 1 });
    await stream.run();
    expect(events.map((e) => e.action)).toEqual(["Loaded", "Activated"]);
    expect(urls[0]).toContain("cursor=4");
    expect(stream.lastSeq).toBe(6);
  });

  it("invokes resync and restarts from the oldest retained seq", async () => {
    const { fetchImpl, urls } = fetchScript([
      ['{"control":"resync","oldest":40}\n'],
      ['{"seq":40,"time":9,"subject":"y","action":"Released","detail":{}}\n'],
      [],
    ]);
    let resyncs = 0;
    const stream = new EventStream("", 0, {
      onEvent: (e) => {
        if (e.seq === 40) stream.stop();
      },
      onResync: () => {
        resyncs += 1;
      },
    }, { fetchImpl, retryDelayMs: 1 });
    await stream.run();
    expect(resyncs).toBe(1);
    expect(urls.some((u) => u.includes("cursor=39"))).toBe(true);
  });

  it("reconnects after a network failure, resuming the cursor", async () => {
    const { fetchImpl, urls } = fetchScript([
      ['{"seq":10,"time":1,"subject":"z","action":"Loaded","detail":{}}\n'],
      new Error("boom"),
      ['{"seq":11,"time":2,"subject":"z","action":"Activated","detail":{}}\n'],
      [],
    ]);
    const seen: number[] = [];
    const states: string[] = [];
    const stream = new EventStream("", 9, {
      onEvent: (e) => {
        seen.push(e.seq);
        if (e.seq === 11) stream.stop();
      },
      onResync: () => {},
      onStateChange: (s) => states.push(s),
    }, { fetchImpl, retryDelayMs: 1 });
    await stream.run();
    expect(seen).toEqual([10, 11]);
    expect(urls.filter((u) => u.includes("cursor=10")).length).toBeGreaterThan(0);
    expect(states).toContain("retrying");
  });
});
