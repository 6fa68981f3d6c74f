/**
 * Pure view state: camera pan/zoom, drag interactions, open panels.
 *
 * Never persisted server-side; block geometry is the only view-adjacent
 * data that lives in the document.
 */

export interface Camera {
  x: number; // world coordinate at the viewport's left edge
  y: number;
  zoom: number;
}

export type DragKind =
  | "move"
  | "concatenate-hover"
  | "split-out"
  | "attach"
  | "connect-output";

export interface DragState {
  kind: DragKind;
  block: string;
  startX: number;
  startY: number;
}

export interface ViewState {
  camera: Camera;
  drag: DragState | null;
  paramPanel: string | null; // model block id
  historyPanel: string | null; // text block id
}

export function initialViewState(): ViewState {
  return { camera: { x: 0, y: 0, zoom: 1 }, drag: null, paramPanel: null, historyPanel: null };
}

export function worldToScreen(camera: Camera, wx: number, wy: number): { x: number; y: number } {
  return { x: (wx - camera.x) * camera.zoom, y: (wy - camera.y) * camera.zoom };
}

export function screenToWorld(camera: Camera, sx: number, sy: number): { x: number; y: number } {
  return { x: sx / camera.zoom + camera.x, y: sy / camera.zoom + camera.y };
}

export function pan(camera: Camera, dxScreen: number, dyScreen: number): Camera {
  return {
    x: camera.x - dxScreen / camera.zoom,
    y: camera.y - dyScreen / camera.zoom,
    zoom: camera.zoom,
  };
}

/** Zoom about a screen point so the world point under the cursor stays put. */
export function zoomAt(camera: Camera, factor: number, sx: number, sy: number): Camera {
  const zoom = Math.min(4, Math.max(0.1, camera.zoom * factor));
  const anchor = screenToWorld(camera, sx, sy);
  return { x: anchor.x - sx / zoom, y: anchor.y - sy / zoom, zoom };
}
