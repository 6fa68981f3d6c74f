import type { Transport, TransportResponse } from "../src/api.js";
import type { Block, DocumentDto } from "../src/types.js";

export interface LoggedRequest {
  method: string;
  path: string;
  body: unknown;
}

/** Records every request; replies 200 with canned bodies per path prefix. */
export class RecordingTransport implements Transport {
  log: LoggedRequest[] = [];
  responses: Array<TransportResponse> = [];

  async request(method: string, path: string, body?: unknown): Promise<TransportResponse> {
    this.log.push({ method, path, body: body ?? null });
    return this.responses.shift() ?? { status: 200, body: { block_id: "t1", revision: 1 } };
  }
}

export function emptyDocument(id = "doc1"): DocumentDto {
  return {
    schema_version: 1,
    id,
    title: "",
    next_seq: 1,
    clock: 0,
    blocks: [],
    attachments: [],
    selection: null,
    records: [],
    histories: {},
  };
}

export function textBlock(id: string, content: string, x = 0, y = 0): Block {
  return {
    kind: "text",
    id,
    content,
    geometry: { x, y, width: 240, height: 120 },
  };
}

export function modelBlock(id: string, temperature = 0.7): Block {
  return {
    kind: "model",
    id,
    params: {
      model_name: "default",
      temperature,
      top_p: 1.0,
      max_tokens: 64,
      stop_sequences: [],
      presence_penalty: 0,
      frequency_penalty: 0,
    },
    geometry: { x: 300, y: 0, width: 240, height: 160 },
  };
}

export function pipelineBlock(
  id: string,
  textSlots: string[],
  modelSlots: string[],
  generations: string[] = [],
): Block {
  return {
    kind: "pipeline",
    id,
    text_slots: textSlots,
    model_slots: modelSlots,
    output: {
      generations,
      sink: { kind: "container", target: null, prong_index: null },
    },
    geometry: { x: 0, y: 300, width: 280, height: 160 },
  };
}
