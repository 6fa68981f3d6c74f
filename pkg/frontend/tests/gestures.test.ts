import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { dispatch, interpret, type Gesture } from "../src/gestures.js";
import { RecordingTransport } from "./helpers.js";

describe("gesture interpretation", () => {
  it("camera gestures never produce API operations", () => {
    expect(interpret({ kind: "pan", dx: 10, dy: -4 })).toBeNull();
    expect(interpret({ kind: "zoom", factor: 1.1, atX: 0, atY: 0 })).toBeNull();
  });

  it("every canvas gesture maps to exactly one operation", () => {
    const geometry = { x: 1, y: 2, width: 240, height: 120 };
    const cases: Array<[Gesture, string]> = [
      [{ kind: "create-text", x: 1, y: 2, content: "hi" }, "createTextBlock"],
      [{ kind: "create-model", x: 1, y: 2, params: { temperature: 1 } }, "createModelBlock"],
      [{ kind: "move-block", block: "t1", geometry }, "moveResize"],
      [{ kind: "resize-block", block: "t1", geometry }, "moveResize"],
      [{ kind: "commit-text", block: "t1", content: "x" }, "editContent"],
      [{ kind: "drop-onto-block", dragged: "t2", target: "t1" }, "concatenate"],
      [{ kind: "drag-selection-out", block: "t1", start: 0, end: 2, x: 5, y: 6 }, "split"],
      [{ kind: "wire-prong", host: "t1", prongIndex: 0, source: "t2" }, "attach"],
      [{ kind: "unwire-prong", host: "t1", prongIndex: 0 }, "attach"],
      [{ kind: "connect-blocks", text: "t1", model: "m2", x: 0, y: 0 }, "createPipeline"],
      [{ kind: "drop-into-pipeline", pipeline: "p3", block: "m4" }, "expand"],
      [
        {
          kind: "wire-output",
          pipeline: "p3",
          sink: { kind: "select", target: null, prong_index: null },
        },
        "connectOutput",
      ],
      [{ kind: "select-text", block: "t1", start: 1, end: 4 }, "select"],
      [{ kind: "click-canvas" }, "clearSelection"],
      [{ kind: "edit-param", block: "m2", field: "temperature", value: 1.5 }, "configure"],
      [{ kind: "click-generate", pipeline: "p3" }, "run"],
      [{ kind: "revert-history", block: "t1", seq: 0 }, "revert"],
      [{ kind: "press-delete", block: "t1" }, "deleteBlock"],
    ];
    for (const [gesture, call] of cases) {
      const operation = interpret(gesture);
      expect(operation, gesture.kind).not.toBeNull();
      expect(operation!.call, gesture.kind).toBe(call);
    }
  });

  it("concatenate maps drop direction onto (target, source)", () => {
    const operation = interpret({ kind: "drop-onto-block", dragged: "t9", target: "t3" });
    expect(operation).toEqual({ call: "concatenate", args: ["t3", "t9"] });
  });
});

describe("gesture/API bijection", () => {
  it("a recorded gesture script replays as the canonical request sequence", async () => {
    const transport = new RecordingTransport();
    const client = new ApiClient(transport, "doc1");

    // Build blocks, wire a two-stage chain, and generate: the same tool a
    // CLI script would assemble with op create-text/create-model/
    // create-pipeline/connect-output/expand/run.
    const script: Gesture[] = [
      { kind: "create-text", x: 0, y: 0, content: "seed words" },
      { kind: "create-model", x: 300, y: 0, params: { temperature: 0.2 } },
      { kind: "connect-blocks", text: "t1", model: "m2", x: 0, y: 200 },
      { kind: "create-text", x: 0, y: 420, content: "Improve: [[input]]" },
      { kind: "create-model", x: 300, y: 420, params: { temperature: 1.0 } },
      { kind: "connect-blocks", text: "t4", model: "m5", x: 0, y: 600 },
      {
        kind: "wire-output",
        pipeline: "p3",
        sink: { kind: "input_prong", target: "t4", prong_index: 0 },
      },
      { kind: "pan", dx: 55, dy: 0 },
      { kind: "click-generate", pipeline: "p6" },
    ];
    for (const gesture of script) {
      await dispatch(client, gesture);
    }

    expect(transport.log).toEqual([
      {
        method: "POST",
        path: "/documents/doc1/blocks",
        body: {
          kind: "text",
          content: "seed words",
          geometry: { x: 0, y: 0, width: 240, height: 120 },
        },
      },
      {
        method: "POST",
        path: "/documents/doc1/blocks",
        body: {
          kind: "model",
          params: { temperature: 0.2 },
          geometry: { x: 300, y: 0, width: 240, height: 120 },
        },
      },
      {
        method: "POST",
        path: "/documents/doc1/blocks",
        body: {
          kind: "pipeline",
          text: "t1",
          model: "m2",
          geometry: { x: 0, y: 200, width: 240, height: 120 },
        },
      },
      {
        method: "POST",
        path: "/documents/doc1/blocks",
        body: {
          kind: "text",
          content: "Improve: [[input]]",
          geometry: { x: 0, y: 420, width: 240, height: 120 },
        },
      },
      {
        method: "POST",
        path: "/documents/doc1/blocks",
        body: {
          kind: "model",
          params: { temperature: 1.0 },
          geometry: { x: 300, y: 420, width: 240, height: 120 },
        },
      },
      {
        method: "POST",
        path: "/documents/doc1/blocks",
        body: {
          kind: "pipeline",
          text: "t4",
          model: "m5",
          geometry: { x: 0, y: 600, width: 240, height: 120 },
        },
      },
      {
        method: "POST",
        path: "/documents/doc1/ops/connect-output",
        body: {
          pipeline: "p3",
          sink: { kind: "input_prong", target: "t4", prong_index: 0 },
        },
      },
      // the pan gesture must not appear here
      { method: "POST", path: "/documents/doc1/run", body: { roots: ["p6"] } },
    ]);
  });

  it("dispatch returns null for view-only gestures without touching the wire", async () => {
    const transport = new RecordingTransport();
    const client = new ApiClient(transport, "doc1");
    const result = await dispatch(client, { kind: "zoom", factor: 2, atX: 10, atY: 10 });
    expect(result).toBeNull();
    expect(transport.log).toEqual([]);
  });
});
