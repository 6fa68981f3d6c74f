/**
 * Typed client for the lmcanvas service.
 *
 * All document access goes through a Transport so tests can record and
 * replay requests without a server. One ApiClient instance is bound to
 * one document.
 */

import type { ApiError, DocumentDto, Geometry, GenerationRecord, HistoryEntry, Sink } from "./types.js";

export interface TransportResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  request(method: string, path: string, body?: unknown): Promise<TransportResponse>;
}

export class FetchTransport implements Transport {
  constructor(private baseUrl: string) {}

  async request(method: string, path: string, body?: unknown): Promise<TransportResponse> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let parsed: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = text;
      }
    }
    return { status: response.status, body: parsed };
  }
}

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public detail: ApiError,
  ) {
    super(`${detail.error}: ${detail.message}`);
  }
}

export interface DocumentSnapshot {
  revision: number;
  document: DocumentDto;
}

function unwrap<T>(response: TransportResponse): T {
  if (response.status >= 400) {
    const detail = (response.body ?? { error: "Unknown", message: "" }) as ApiError;
    throw new ApiRequestError(response.status, detail);
  }
  return response.body as T;
}

export class ApiClient {
  constructor(
    private transport: Transport,
    public readonly docId: string,
  ) {}

  private get base(): string {
    return `/documents/${this.docId}`;
  }

  async getDocument(): Promise<DocumentSnapshot> {
    return unwrap(await this.transport.request("GET", this.base));
  }

  async createTextBlock(content: string, geometry: Geometry): Promise<{ block_id: string }> {
    return unwrap(
      await this.transport.request("POST", `${this.base}/blocks`, {
        kind: "text",
        content,
        geometry,
      }),
    );
  }

  async createModelBlock(
    params: Record<string, unknown>,
    geometry: Geometry,
  ): Promise<{ block_id: string }> {
    return unwrap(
      await this.transport.request("POST", `${this.base}/blocks`, {
        kind: "model",
        params,
        geometry,
      }),
    );
  }

  async createPipeline(
    text: string,
    model: string,
    geometry: Geometry,
  ): Promise<{ block_id: string }> {
    return unwrap(
      await this.transport.request("POST", `${this.base}/blocks`, {
        kind: "pipeline",
        text,
        model,
        geometry,
      }),
    );
  }

  async editContent(block: string, content: string): Promise<void> {
    unwrap(await this.transport.request("PATCH", `${this.base}/blocks/${block}`, { content }));
  }

  async moveResize(block: string, geometry: Geometry): Promise<void> {
    unwrap(await this.transport.request("PATCH", `${this.base}/blocks/${block}`, { geometry }));
  }

  async configure(block: string, params: Record<string, unknown>): Promise<void> {
    unwrap(await this.transport.request("PATCH", `${this.base}/blocks/${block}`, { params }));
  }

  async concatenate(target: string, source: string): Promise<void> {
    unwrap(
      await this.transport.request("POST", `${this.base}/ops/concatenate`, { target, source }),
    );
  }

  async split(
    block: string,
    start: number,
    end: number,
    geometry: Geometry,
  ): Promise<{ block_id: string }> {
    return unwrap(
      await this.transport.request("POST", `${this.base}/ops/split`, {
        block,
        start,
        end,
        geometry,
      }),
    );
  }

  async attach(host: string, prongIndex: number, source: string | null): Promise<void> {
    unwrap(
      await this.transport.request("POST", `${this.base}/ops/attach`, {
        host,
        prong_index: prongIndex,
        source,
      }),
    );
  }

  async expand(pipeline: string, block: string): Promise<void> {
    unwrap(await this.transport.request("POST", `${this.base}/ops/expand`, { pipeline, block }));
  }

  async connectOutput(pipeline: string, sink: Sink): Promise<void> {
    unwrap(
      await this.transport.request("POST", `${this.base}/ops/connect-output`, { pipeline, sink }),
    );
  }

  async select(block: string, start: number, end: number): Promise<void> {
    unwrap(await this.transport.request("POST", `${this.base}/ops/select`, { block, start, end }));
  }

  async clearSelection(): Promise<void> {
    unwrap(await this.transport.request("POST", `${this.base}/ops/clear-selection`, {}));
  }

  async deleteBlock(block: string): Promise<void> {
    unwrap(await this.transport.request("POST", `${this.base}/ops/delete`, { block }));
  }

  async run(roots: string[]): Promise<{ run_id: string; records?: GenerationRecord[] }> {
    return unwrap(await this.transport.request("POST", `${this.base}/run`, { roots }));
  }

  async history(block: string): Promise<{ entries: HistoryEntry[] }> {
    return unwrap(await this.transport.request("GET", `${this.base}/blocks/${block}/history`));
  }

  async revert(block: string, toSeq: number): Promise<void> {
    unwrap(
      await this.transport.request("POST", `${this.base}/blocks/${block}/history/revert`, {
        to_seq: toSeq,
      }),
    );
  }
}
