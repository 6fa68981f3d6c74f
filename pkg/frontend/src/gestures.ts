/**
 * Gesture interpretation: every canvas gesture maps to exactly one API
 * operation (camera gestures map to none and stay client-side).
 *
 * The interpreter is pure: (gesture, document context) in, an operation
 * description out. dispatch() then invokes the matching ApiClient call.
 * Keeping the mapping declarative is what makes the gesture/API bijection
 * testable without a browser.
 */

import type { ApiClient } from "./api.js";
import type { Geometry, Sink } from "./types.js";

export type Gesture =
  | { kind: "pan"; dx: number; dy: number }
  | { kind: "zoom"; factor: number; atX: number; atY: number }
  | { kind: "create-text"; x: number; y: number; content: string }
  | { kind: "create-model"; x: number; y: number; params: Record<string, unknown> }
  | { kind: "move-block"; block: string; geometry: Geometry }
  | { kind: "resize-block"; block: string; geometry: Geometry }
  | { kind: "commit-text"; block: string; content: string }
  | { kind: "drop-onto-block"; dragged: string; target: string }
  | { kind: "drag-selection-out"; block: string; start: number; end: number; x: number; y: number }
  | { kind: "wire-prong"; host: string; prongIndex: number; source: string }
  | { kind: "unwire-prong"; host: string; prongIndex: number }
  | { kind: "connect-blocks"; text: string; model: string; x: number; y: number }
  | { kind: "drop-into-pipeline"; pipeline: string; block: string }
  | { kind: "wire-output"; pipeline: string; sink: Sink }
  | { kind: "select-text"; block: string; start: number; end: number }
  | { kind: "click-canvas" }
  | { kind: "edit-param"; block: string; field: string; value: unknown }
  | { kind: "click-generate"; pipeline: string }
  | { kind: "revert-history"; block: string; seq: number }
  | { kind: "press-delete"; block: string };

export type Operation =
  | { call: "createTextBlock"; args: [string, Geometry] }
  | { call: "createModelBlock"; args: [Record<string, unknown>, Geometry] }
  | { call: "createPipeline"; args: [string, string, Geometry] }
  | { call: "editContent"; args: [string, string] }
  | { call: "moveResize"; args: [string, Geometry] }
  | { call: "configure"; args: [string, Record<string, unknown>] }
  | { call: "concatenate"; args: [string, string] }
  | { call: "split"; args: [string, number, number, Geometry] }
  | { call: "attach"; args: [string, number, string | null] }
  | { call: "expand"; args: [string, string] }
  | { call: "connectOutput"; args: [string, Sink] }
  | { call: "select"; args: [string, number, number] }
  | { call: "clearSelection"; args: [] }
  | { call: "deleteBlock"; args: [string] }
  | { call: "run"; args: [string[]] }
  | { call: "revert"; args: [string, number] };

const DEFAULT_SIZE = { width: 240, height: 120 };

function geometryAt(x: number, y: number): Geometry {
  return { x, y, ...DEFAULT_SIZE };
}

/** Map one gesture to its single API operation; null for view-only gestures. */
export function interpret(gesture: Gesture): Operation | null {
  switch (gesture.kind) {
    case "pan":
    case "zoom":
      return null; // camera only, never leaves the client
    case "create-text":
      return { call: "createTextBlock", args: [gesture.content, geometryAt(gesture.x, gesture.y)] };
    case "create-model":
      return { call: "createModelBlock", args: [gesture.params, geometryAt(gesture.x, gesture.y)] };
    case "move-block":
    case "resize-block":
      return { call: "moveResize", args: [gesture.block, gesture.geometry] };
    case "commit-text":
      return { call: "editContent", args: [gesture.block, gesture.content] };
    case "drop-onto-block":
      return { call: "concatenate", args: [gesture.target, gesture.dragged] };
    case "drag-selection-out":
      return {
        call: "split",
        args: [gesture.block, gesture.start, gesture.end, geometryAt(gesture.x, gesture.y)],
      };
    case "wire-prong":
      return { call: "attach", args: [gesture.host, gesture.prongIndex, gesture.source] };
    case "unwire-prong":
      return { call: "attach", args: [gesture.host, gesture.prongIndex, null] };
    case "connect-blocks":
      return {
        call: "createPipeline",
        args: [gesture.text, gesture.model, geometryAt(gesture.x, gesture.y)],
      };
    case "drop-into-pipeline":
      return { call: "expand", args: [gesture.pipeline, gesture.block] };
    case "wire-output":
      return { call: "connectOutput", args: [gesture.pipeline, gesture.sink] };
    case "select-text":
      return { call: "select", args: [gesture.block, gesture.start, gesture.end] };
    case "click-canvas":
      return { call: "clearSelection", args: [] };
    case "edit-param":
      return { call: "configure", args: [gesture.block, { [gesture.field]: gesture.value }] };
    case "click-generate":
      return { call: "run", args: [[gesture.pipeline]] };
    case "revert-history":
      return { call: "revert", args: [gesture.block, gesture.seq] };
    case "press-delete":
      return { call: "deleteBlock", args: [gesture.block] };
  }
}

/** Execute a gesture's operation; resolves to the op (or null for view-only). */
export async function dispatch(client: ApiClient, gesture: Gesture): Promise<Operation | null> {
  const operation = interpret(gesture);
  if (operation === null) return null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  await (client[operation.call] as any)(...operation.args);
  return operation;
}
