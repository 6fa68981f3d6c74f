/**
 * Wire types for the lmcanvas HTTP service.
 *
 * These mirror the canonical JSON document format: snake_case fields,
 * blocks discriminated by "kind".
 */

export interface Geometry {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface ModelParams {
  model_name: string;
  temperature: number;
  top_p: number;
  max_tokens: number;
  stop_sequences: string[];
  presence_penalty: number;
  frequency_penalty: number;
}

export type SinkKind = "container" | "continuation" | "input_prong" | "select";

export interface Sink {
  kind: SinkKind;
  target: string | null;
  prong_index: number | null;
}

export interface TextBlock {
  kind: "text";
  id: string;
  content: string;
  geometry: Geometry;
}

export interface ModelBlock {
  kind: "model";
  id: string;
  params: ModelParams;
  geometry: Geometry;
}

export interface PipelineBlock {
  kind: "pipeline";
  id: string;
  text_slots: string[];
  model_slots: string[];
  output: { generations: string[]; sink: Sink };
  geometry: Geometry;
}

export type Block = TextBlock | ModelBlock | PipelineBlock;

export interface Attachment {
  host: string;
  prong_index: number;
  source: string;
}

export interface Selection {
  block: string;
  start: number;
  end: number;
}

export interface GenerationRecord {
  id: string;
  pipeline: string;
  text_slot: string;
  model_slot: string;
  status: "ok" | "error";
  error_name: string | null;
  error_message: string | null;
  resolved_prompt: { text: string; provenance: unknown[] } | null;
  params_snapshot: ModelParams;
  output_text: string;
  output_block: string | null;
  created_at: number;
}

export interface HistoryEntry {
  seq: number;
  kind: string;
  content_after: string;
  created_at: number;
  ref: string | null;
  origin: string | null;
  to_seq: number | null;
}

export interface DocumentDto {
  schema_version: number;
  id: string;
  title: string;
  next_seq: number;
  clock: number;
  blocks: Block[];
  attachments: Attachment[];
  selection: Selection | null;
  records: GenerationRecord[];
  histories: Record<string, HistoryEntry[]>;
}

export type ApiEventKind =
  | "block_changed"
  | "block_deleted"
  | "generation_started"
  | "generation_finished"
  | "selection_changed"
  | "document_saved";

export interface ApiEvent {
  seq: number;
  kind: ApiEventKind;
  payload: Record<string, unknown>;
}

export interface ApiError {
  error: string;
  message: string;
  cycle?: string[];
  field?: string;
}
