import assert from "node:assert/strict";
import { test } from "node:test";

import { readSseStream } from "../src/sse.js";

function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
  const encoder = new TextEncoder();
  return new ReadableStream<Uint8Array>({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
      controller.close();
    },
  });
}

test("parses complete event frames", async () => {
  const events = [];
  for await (const ev of readSseStream(streamOf([
    'id: 0\nevent: state\ndata: {"a": 1}\n\n',
    'id: 1\nevent: state\ndata: {"a": 2}\n\n',
  ]))) {
    events.push(ev);
  }
  assert.equal(events.length, 2);
  assert.equal(events[0].event, "state");
  assert.deepEqual(JSON.parse(events[1].data), { a: 2 });
});

test("reassembles frames split across chunks", async () => {
  const events = [];
  for await (const ev of readSseStream(streamOf([
    "event: sta", "te\ndata: {\"x\":", " 42}\n", "\n",
  ]))) {
    events.push(ev);
  }
  assert.equal(events.length, 1);
  assert.equal(events[0].event, "state");
  assert.deepEqual(JSON.parse(events[0].data), { x: 42 });
});

test("ignores frames without data", async () => {
  const events = [];
  for await (const ev of readSseStream(streamOf(["event: ping\n\n", "data: 1\n\n"]))) {
    events.push(ev);
  }
  assert.equal(events.length, 1);
  assert.equal(events[0].data, "1");
});
