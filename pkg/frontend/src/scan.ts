/**
 * Client-side template token scan, used to draw input prongs and select
 * holes on text blocks. Mirrors the server's tokenizer exactly: literal
 * `[[input]]` / `[[select]]`, case-sensitive, left-to-right, near-misses
 * stay literal text.
 */

export const INPUT_TOKEN = "[[input]]";
export const SELECT_TOKEN = "[[select]]";

export interface TokenSpan {
  kind: "input" | "select";
  index: number; // ordinal among its own kind, textual order
  start: number;
  end: number;
}

export function scanTokens(content: string): TokenSpan[] {
  const spans: TokenSpan[] = [];
  let inputs = 0;
  let selects = 0;
  let i = 0;
  while (i < content.length) {
    const j = content.indexOf("[[", i);
    if (j < 0) break;
    if (content.startsWith(INPUT_TOKEN, j)) {
      spans.push({ kind: "input", index: inputs++, start: j, end: j + INPUT_TOKEN.length });
      i = j + INPUT_TOKEN.length;
    } else if (content.startsWith(SELECT_TOKEN, j)) {
      spans.push({ kind: "select", index: selects++, start: j, end: j + SELECT_TOKEN.length });
      i = j + SELECT_TOKEN.length;
    } else {
      i = j + 1;
    }
  }
  return spans;
}

export function prongCount(content: string): number {
  return scanTokens(content).filter((s) => s.kind === "input").length;
}

export function selectCount(content: string): number {
  return scanTokens(content).filter((s) => s.kind === "select").length;
}
