/**
 * Client document store.
 *
 * The server is the single source of truth: the store never mutates the
 * document locally. ApiEvents act as invalidation signals; each one
 * triggers a snapshot refetch, and a sequence gap forces one too (the
 * stream replays from `since`, so a gap means the subscription lapsed).
 * The derived canvas model is a pure projection of the snapshot, which is
 * what makes reload-statelessness testable: same snapshot, same canvas.
 */

import { prongCount, scanTokens } from "./scan.js";
import type { ApiEvent, Block, DocumentDto, GenerationRecord } from "./types.js";

export interface CanvasBlockView {
  id: string;
  kind: Block["kind"];
  x: number;
  y: number;
  width: number;
  height: number;
  label: string;
  prongs: number;
  selectHoles: number;
  nested: boolean;
}

export interface CanvasWireView {
  kind: "attachment" | "continuation" | "input_prong" | "slot";
  from: string;
  to: string;
  prongIndex: number | null;
}

export interface CanvasModel {
  documentId: string;
  title: string;
  blocks: CanvasBlockView[];
  wires: CanvasWireView[];
  selection: { block: string; start: number; end: number } | null;
  containerCounts: Record<string, number>;
}

export function deriveCanvasModel(document: DocumentDto): CanvasModel {
  const nested = new Set<string>();
  for (const block of document.blocks) {
    if (block.kind === "pipeline") {
      for (const slot of [...block.text_slots, ...block.model_slots]) nested.add(slot);
    }
  }

  const blocks: CanvasBlockView[] = document.blocks
    .map((block) => ({
      id: block.id,
      kind: block.kind,
      x: block.geometry.x,
      y: block.geometry.y,
      width: block.geometry.width,
      height: block.geometry.height,
      label:
        block.kind === "text"
          ? block.content
          : block.kind === "model"
            ? `${block.params.model_name} t=${block.params.temperature}`
            : `${block.text_slots.length}×${block.model_slots.length}`,
      prongs: block.kind === "text" ? prongCount(block.content) : 0,
      selectHoles:
        block.kind === "text" ? scanTokens(block.content).filter((s) => s.kind === "select").length : 0,
      nested: nested.has(block.id),
    }))
    .sort((a, b) => Number(a.id.slice(1)) - Number(b.id.slice(1)));

  const wires: CanvasWireView[] = [];
  for (const attachment of document.attachments) {
    wires.push({
      kind: "attachment",
      from: attachment.source,
      to: attachment.host,
      prongIndex: attachment.prong_index,
    });
  }
  const containerCounts: Record<string, number> = {};
  for (const block of document.blocks) {
    if (block.kind !== "pipeline") continue;
    containerCounts[block.id] = block.output.generations.length;
    for (const slot of block.text_slots) {
      wires.push({ kind: "slot", from: slot, to: block.id, prongIndex: null });
    }
    const sink = block.output.sink;
    if (sink.kind === "continuation" && sink.target) {
      wires.push({ kind: "continuation", from: block.id, to: sink.target, prongIndex: null });
    } else if (sink.kind === "input_prong" && sink.target) {
      wires.push({
        kind: "input_prong",
        from: block.id,
        to: sink.target,
        prongIndex: sink.prong_index,
      });
    }
  }

  return {
    documentId: document.id,
    title: document.title,
    blocks,
    wires,
    selection: document.selection,
    containerCounts,
  };
}

export function recordsOf(document: DocumentDto, pipeline: string): GenerationRecord[] {
  const byId = new Map(document.records.map((r) => [r.id, r]));
  const block = document.blocks.find((b) => b.id === pipeline);
  if (!block || block.kind !== "pipeline") return [];
  return block.output.generations
    .map((id) => byId.get(id))
    .filter((r): r is GenerationRecord => r !== undefined);
}

export type StoreListener = (model: CanvasModel) => void;

export class CanvasStore {
  document: DocumentDto | null = null;
  revision = 0;
  lastEventSeq = 0;
  resyncs = 0;
  private listeners: StoreListener[] = [];

  constructor(private refetch: () => Promise<{ revision: number; document: DocumentDto }>) {}

  onChange(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  model(): CanvasModel | null {
    return this.document ? deriveCanvasModel(this.document) : null;
  }

  applySnapshot(snapshot: { revision: number; document: DocumentDto }): void {
    this.document = snapshot.document;
    this.revision = snapshot.revision;
    if (this.lastEventSeq < snapshot.revision) this.lastEventSeq = snapshot.revision;
    const model = this.model();
    if (model) for (const listener of this.listeners) listener(model);
  }

  /** Handle one stream event; returns the refetch promise it triggered. */
  async applyEvent(event: ApiEvent): Promise<void> {
    if (event.seq <= this.lastEventSeq) return; // replayed duplicate
    if (event.seq > this.lastEventSeq + 1) this.resyncs += 1;
    this.lastEventSeq = event.seq;
    this.applySnapshot(await this.refetch());
  }
}
