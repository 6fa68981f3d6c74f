/**
 * DOM renderer and pointer-event wiring for the infinite canvas.
 *
 * The canvas re-renders from store snapshots only; every user gesture is
 * fed through gestures.dispatch and the resulting server event triggers
 * the next render. API rejections surface as a toast pinned to the block
 * that caused them.
 */

import { ApiClient, ApiRequestError } from "./api.js";
import { dispatch, type Gesture } from "./gestures.js";
import { scanTokens } from "./scan.js";
import { recordsOf, type CanvasModel, type CanvasStore } from "./store.js";
import type { DocumentDto, HistoryEntry } from "./types.js";
import { initialViewState, pan, screenToWorld, zoomAt, type ViewState } from "./view.js";

interface DragContext {
  pointerId: number;
  block: string;
  offsetX: number;
  offsetY: number;
  width: number;
  height: number;
  moved: boolean;
  source: "body" | "container";
}

export class CanvasApp {
  private view: ViewState = initialViewState();
  private world: HTMLElement;
  private wireLayer: SVGSVGElement;
  private toast: HTMLElement;
  private drag: DragContext | null = null;
  private panPointer: number | null = null;
  private lastPointer = { x: 0, y: 0 };
  private selectedBlock: string | null = null;
  private editing: string | null = null;

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private store: CanvasStore,
  ) {
    this.root.classList.add("lmc-root");
    this.wireLayer = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.wireLayer.classList.add("lmc-wires");
    this.world = document.createElement("div");
    this.world.classList.add("lmc-world");
    this.toast = document.createElement("div");
    this.toast.classList.add("lmc-toast");
    this.toast.hidden = true;
    this.root.append(this.wireLayer, this.world, this.toast);

    this.root.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    this.root.addEventListener("pointermove", (e) => this.onPointerMove(e));
    this.root.addEventListener("pointerup", (e) => this.onPointerUp(e));
    this.root.addEventListener("wheel", (e) => this.onWheel(e), { passive: false });
    window.addEventListener("keydown", (e) => this.onKey(e));

    store.onChange(() => this.render());
  }

  private async gesture(gesture: Gesture, atBlock?: string): Promise<void> {
    try {
      await dispatch(this.client, gesture);
    } catch (error) {
      if (error instanceof ApiRequestError) {
        this.showToast(`${error.detail.error}: ${error.detail.message}`, atBlock);
      } else {
        this.showToast(String(error), atBlock);
      }
    }
  }

  private showToast(message: string, nearBlock?: string): void {
    this.toast.textContent = message;
    this.toast.hidden = false;
    if (nearBlock) {
      const element = this.world.querySelector<HTMLElement>(`[data-block="${nearBlock}"]`);
      if (element) {
        this.toast.style.left = element.style.left;
        this.toast.style.top = `${parseFloat(element.style.top) - 28}px`;
      }
    }
    setTimeout(() => (this.toast.hidden = true), 4000);
  }

  // -- pointer handling ---------------------------------------------------

  private onPointerDown(event: PointerEvent): void {
    const target = event.target as HTMLElement;
    const blockEl = target.closest<HTMLElement>("[data-block]");
    this.lastPointer = { x: event.clientX, y: event.clientY };
    if (!blockEl) {
      this.panPointer = event.pointerId;
      if (this.selectedBlock === null) void this.gesture({ kind: "click-canvas" });
      this.selectedBlock = null;
      return;
    }
    if (target.closest(".lmc-no-drag")) return;
    const id = blockEl.dataset.block as string;
    this.selectedBlock = id;
    const world = screenToWorld(this.view.camera, event.clientX, event.clientY);
    const model = this.store.model();
    const view = model?.blocks.find((b) => b.id === id);
    if (!view) return;
    this.drag = {
      pointerId: event.pointerId,
      block: id,
      offsetX: world.x - view.x,
      offsetY: world.y - view.y,
      width: view.width,
      height: view.height,
      moved: false,
      source: target.closest(".lmc-container-badge") ? "container" : "body",
    };
  }

  private onPointerMove(event: PointerEvent): void {
    if (this.panPointer === event.pointerId) {
      this.view.camera = pan(
        this.view.camera,
        event.clientX - this.lastPointer.x,
        event.clientY - this.lastPointer.y,
      );
      this.lastPointer = { x: event.clientX, y: event.clientY };
      this.render();
      return;
    }
    if (this.drag && this.drag.pointerId === event.pointerId) {
      this.drag.moved = true;
      const element = this.world.querySelector<HTMLElement>(`[data-block="${this.drag.block}"]`);
      if (element && this.drag.source === "body") {
        const world = screenToWorld(this.view.camera, event.clientX, event.clientY);
        element.style.left = `${world.x - this.drag.offsetX}px`;
        element.style.top = `${world.y - this.drag.offsetY}px`;
      }
    }
  }

  private onPointerUp(event: PointerEvent): void {
    if (this.panPointer === event.pointerId) {
      this.panPointer = null;
      return;
    }
    const drag = this.drag;
    if (!drag || drag.pointerId !== event.pointerId) return;
    this.drag = null;
    if (!drag.moved) return;

    const world = screenToWorld(this.view.camera, event.clientX, event.clientY);
    const dropped = this.hitTest(world.x, world.y, drag.block);
    const document_ = this.documentOrNull();
    if (!document_) return;

    if (drag.source === "container") {
      void this.dropOutputWire(drag.block, dropped, world.x, world.y);
      return;
    }

    const dragged = document_.blocks.find((b) => b.id === drag.block);
    const target = dropped ? document_.blocks.find((b) => b.id === dropped.block) : undefined;
    if (dragged && target && dropped) {
      if (dropped.prong !== null && target.kind === "text" && dragged.kind === "text") {
        void this.gesture(
          { kind: "wire-prong", host: target.id, prongIndex: dropped.prong, source: dragged.id },
          target.id,
        );
        return;
      }
      if (target.kind === "pipeline" && dragged.kind !== "pipeline") {
        void this.gesture({ kind: "drop-into-pipeline", pipeline: target.id, block: dragged.id }, target.id);
        return;
      }
      if (target.kind === "text" && dragged.kind === "text") {
        void this.gesture({ kind: "drop-onto-block", dragged: dragged.id, target: target.id }, target.id);
        return;
      }
      if (
        (target.kind === "model" && dragged.kind === "text") ||
        (target.kind === "text" && dragged.kind === "model")
      ) {
        const text = dragged.kind === "text" ? dragged.id : target.id;
        const model = dragged.kind === "model" ? dragged.id : target.id;
        void this.gesture({ kind: "connect-blocks", text, model, x: world.x, y: world.y + 160 }, text);
        return;
      }
    }
    // plain move
    void this.gesture({
      kind: "move-block",
      block: drag.block,
      geometry: {
        x: world.x - drag.offsetX,
        y: world.y - drag.offsetY,
        width: drag.width,
        height: drag.height,
      },
    });
  }

  private async dropOutputWire(
    pipeline: string,
    dropped: { block: string; prong: number | null } | null,
    x: number,
    y: number,
  ): Promise<void> {
    if (!dropped) return;
    const document_ = this.documentOrNull();
    const target = document_?.blocks.find((b) => b.id === dropped.block);
    if (!target || target.kind !== "text") return;
    if (dropped.prong !== null) {
      await this.gesture(
        {
          kind: "wire-output",
          pipeline,
          sink: { kind: "input_prong", target: target.id, prong_index: dropped.prong },
        },
        pipeline,
      );
    } else {
      await this.gesture(
        { kind: "wire-output", pipeline, sink: { kind: "continuation", target: target.id, prong_index: null } },
        pipeline,
      );
    }
  }

  private onWheel(event: WheelEvent): void {
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1.1 : 1 / 1.1;
    this.view.camera = zoomAt(this.view.camera, factor, event.clientX, event.clientY);
    this.render();
  }

  private onKey(event: KeyboardEvent): void {
    if (event.key === "Delete" && this.selectedBlock && !this.editing) {
      const block = this.selectedBlock;
      this.selectedBlock = null;
      void this.gesture({ kind: "press-delete", block }, block);
    }
  }

  private hitTest(
    wx: number,
    wy: number,
    ignore: string,
  ): { block: string; prong: number | null } | null {
    const model = this.store.model();
    if (!model) return null;
    for (const block of [...model.blocks].reverse()) {
      if (block.id === ignore) continue;
      if (wx < block.x - 14 || wx > block.x + block.width || wy < block.y || wy > block.y + block.height)
        continue;
      if (block.prongs > 0 && wx < block.x + 6) {
        const pitch = block.height / block.prongs;
        const prong = Math.min(block.prongs - 1, Math.floor((wy - block.y) / pitch));
        return { block: block.id, prong };
      }
      if (wx < block.x) continue;
      return { block: block.id, prong: null };
    }
    return null;
  }

  private documentOrNull(): DocumentDto | null {
    return this.store.document;
  }

  // -- rendering -------------------------------------------------------------

  render(): void {
    const model = this.store.model();
    if (!model) return;
    const camera = this.view.camera;
    this.world.style.transform = `scale(${camera.zoom}) translate(${-camera.x}px, ${-camera.y}px)`;
    this.wireLayer.style.transform = this.world.style.transform;

    this.world.querySelectorAll("[data-block]").forEach((el) => {
      if (!model.blocks.some((b) => b.id === (el as HTMLElement).dataset.block)) el.remove();
    });
    for (const block of model.blocks) {
      this.renderBlock(block.id, model);
    }
    this.renderWires(model);
  }

  private renderBlock(id: string, model: CanvasModel): void {
    const view = model.blocks.find((b) => b.id === id);
    if (!view) return;
    let element = this.world.querySelector<HTMLElement>(`[data-block="${id}"]`);
    if (!element) {
      element = document.createElement("div");
      element.dataset.block = id;
      this.world.appendChild(element);
    }
    element.className = `lmc-block lmc-${view.kind}` + (view.nested ? " lmc-nested" : "");
    element.style.left = `${view.x}px`;
    element.style.top = `${view.y}px`;
    element.style.width = `${view.width}px`;
    element.style.minHeight = `${view.height}px`;
    if (this.editing === id) return; // keep the live textarea
    element.innerHTML = "";
    element.append(this.blockHeader(id, view.kind), this.blockBody(id, view.kind));
    if (view.kind === "text" && view.prongs > 0) {
      for (let i = 0; i < view.prongs; i++) {
        const notch = document.createElement("div");
        notch.className = "lmc-prong";
        notch.style.top = `${((i + 0.5) * view.height) / view.prongs - 7}px`;
        notch.title = `input prong ${i}`;
        element.appendChild(notch);
      }
    }
  }

  private blockHeader(id: string, kind: string): HTMLElement {
    const header = document.createElement("div");
    header.className = "lmc-header";
    const label = document.createElement("span");
    label.textContent = `${id}`;
    header.appendChild(label);
    if (kind === "text") {
      const historyButton = document.createElement("button");
      historyButton.className = "lmc-no-drag";
      historyButton.textContent = "history";
      historyButton.onclick = () => void this.toggleHistory(id);
      header.appendChild(historyButton);
    }
    if (kind === "pipeline") {
      const generate = document.createElement("button");
      generate.className = "lmc-no-drag lmc-generate";
      generate.textContent = "generate";
      generate.onclick = () => void this.gesture({ kind: "click-generate", pipeline: id }, id);
      header.appendChild(generate);
    }
    return header;
  }

  private blockBody(id: string, kind: string): HTMLElement {
    const document_ = this.documentOrNull();
    const body = document.createElement("div");
    body.className = "lmc-body";
    const block = document_?.blocks.find((b) => b.id === id);
    if (!block) return body;

    if (block.kind === "text") {
      body.classList.add("lmc-text-body");
      body.textContent = block.content;
      body.ondblclick = () => this.openEditor(id);
    } else if (block.kind === "model") {
      for (const [field, value] of Object.entries(block.params)) {
        const row = document.createElement("div");
        row.className = "lmc-param lmc-no-drag";
        row.textContent = `${field} = ${JSON.stringify(value)}`;
        row.onclick = () => this.openParamWidget(id, field, value);
        body.appendChild(row);
      }
    } else {
      const slots = document.createElement("div");
      slots.textContent = `texts: ${block.text_slots.join(", ")} | models: ${block.model_slots.join(", ")}`;
      const badge = document.createElement("div");
      badge.className = "lmc-container-badge";
      badge.textContent = `${block.output.generations.length}`;
      badge.title = `output container (sink: ${block.output.sink.kind}); drag onto a text block or prong`;
      const sinkRow = document.createElement("div");
      sinkRow.className = "lmc-no-drag";
      for (const kindOption of ["container", "select"] as const) {
        const button = document.createElement("button");
        button.textContent = kindOption;
        button.onclick = () =>
          void this.gesture(
            { kind: "wire-output", pipeline: id, sink: { kind: kindOption, target: null, prong_index: null } },
            id,
          );
        sinkRow.appendChild(button);
      }
      const outputs = document.createElement("div");
      outputs.className = "lmc-outputs lmc-no-drag";
      for (const record of recordsOf(this.store.document as DocumentDto, id).slice(-3)) {
        const row = document.createElement("div");
        row.className = `lmc-record lmc-${record.status}`;
        row.textContent =
          record.status === "ok" ? record.output_text : `${record.error_name}: ${record.error_message}`;
        outputs.appendChild(row);
      }
      body.append(slots, badge, sinkRow, outputs);
    }
    return body;
  }

  private openEditor(id: string): void {
    const document_ = this.documentOrNull();
    const block = document_?.blocks.find((b) => b.id === id);
    const element = this.world.querySelector<HTMLElement>(`[data-block="${id}"]`);
    if (!block || block.kind !== "text" || !element) return;
    this.editing = id;
    element.innerHTML = "";
    const editor = document.createElement("textarea");
    editor.className = "lmc-editor lmc-no-drag";
    editor.value = block.content;
    const bar = document.createElement("div");
    bar.className = "lmc-no-drag lmc-editor-bar";
    const mark = document.createElement("button");
    mark.textContent = "mark selection";
    mark.onclick = () =>
      void this.gesture(
        { kind: "select-text", block: id, start: editor.selectionStart, end: editor.selectionEnd },
        id,
      );
    const splitOut = document.createElement("button");
    splitOut.textContent = "split out";
    splitOut.onclick = () => {
      const { selectionStart, selectionEnd } = editor;
      this.editing = null;
      void this.gesture(
        {
          kind: "drag-selection-out",
          block: id,
          start: selectionStart,
          end: selectionEnd,
          x: block.geometry.x + block.geometry.width + 60,
          y: block.geometry.y,
        },
        id,
      );
    };
    const done = document.createElement("button");
    done.textContent = "done";
    done.onclick = () => {
      this.editing = null;
      void this.gesture({ kind: "commit-text", block: id, content: editor.value }, id);
    };
    bar.append(mark, splitOut, done);
    element.append(editor, bar);
    editor.focus();
  }

  private openParamWidget(id: string, field: string, current: unknown): void {
    const raw = prompt(`${field}`, JSON.stringify(current));
    if (raw === null) return;
    let value: unknown;
    try {
      value = JSON.parse(raw);
    } catch {
      value = raw;
    }
    void this.gesture({ kind: "edit-param", block: id, field, value }, id);
  }

  private async toggleHistory(id: string): Promise<void> {
    const existing = this.root.querySelector(".lmc-history");
    if (existing) {
      existing.remove();
      return;
    }
    const { entries } = await this.client.history(id);
    const panel = document.createElement("div");
    panel.className = "lmc-history lmc-no-drag";
    const title = document.createElement("h3");
    title.textContent = `history of ${id}`;
    panel.appendChild(title);
    for (const entry of entries as HistoryEntry[]) {
      const row = document.createElement("div");
      row.className = "lmc-history-row";
      const text = document.createElement("span");
      text.textContent = `#${entry.seq} ${entry.kind}${entry.ref ? " → " + entry.ref : ""}: ${entry.content_after.slice(0, 60)}`;
      const revert = document.createElement("button");
      revert.textContent = "revert";
      revert.onclick = () => {
        panel.remove();
        void this.gesture({ kind: "revert-history", block: id, seq: entry.seq }, id);
      };
      row.append(text, revert);
      panel.appendChild(row);
    }
    const close = document.createElement("button");
    close.textContent = "close";
    close.onclick = () => panel.remove();
    panel.appendChild(close);
    this.root.appendChild(panel);
  }

  private renderWires(model: CanvasModel): void {
    const ns = "http://www.w3.org/2000/svg";
    this.wireLayer.innerHTML = "";
    const centers = new Map(model.blocks.map((b) => [b.id, { x: b.x + b.width / 2, y: b.y + b.height / 2 }]));
    for (const wire of model.wires) {
      const from = centers.get(wire.from);
      const to = centers.get(wire.to);
      if (!from || !to) continue;
      const line = document.createElementNS(ns, "line");
      line.setAttribute("x1", String(from.x));
      line.setAttribute("y1", String(from.y));
      line.setAttribute("x2", String(to.x));
      line.setAttribute("y2", String(to.y));
      line.setAttribute("class", `lmc-wire lmc-wire-${wire.kind}`);
      this.wireLayer.appendChild(line);
    }
  }
}
