/**
 * Bootstrap: resolve the document, build the store, subscribe to events,
 * mount the canvas. The served page talks to the same origin that serves
 * it unless ?api= overrides.
 */

import { ApiClient, FetchTransport } from "./api.js";
import { CanvasApp } from "./render.js";
import { subscribe } from "./sse.js";
import { CanvasStore } from "./store.js";

async function boot(): Promise<void> {
  const query = new URLSearchParams(window.location.search);
  const apiBase = query.get("api") ?? "";
  const transport = new FetchTransport(apiBase);

  let docId = query.get("doc");
  if (!docId) {
    const created = await transport.request("POST", "/documents", { title: "Untitled canvas" });
    docId = (created.body as { id: string }).id;
    query.set("doc", docId);
    window.history.replaceState(null, "", `?${query}`);
  }

  const client = new ApiClient(transport, docId);
  const store = new CanvasStore(() => client.getDocument());
  const rootElement = document.getElementById("canvas");
  if (!rootElement) throw new Error("missing #canvas element");
  new CanvasApp(rootElement, client, store);

  store.applySnapshot(await client.getDocument());
  subscribe(apiBase, docId, store.lastEventSeq, (event) => {
    void store.applyEvent(event);
  });

  const toolbar = document.getElementById("toolbar");
  if (toolbar) {
    const newText = document.createElement("button");
    newText.textContent = "+ text";
    newText.onclick = () =>
      void client.createTextBlock("", { x: 40, y: 40, width: 240, height: 120 });
    const newModel = document.createElement("button");
    newModel.textContent = "+ model";
    newModel.onclick = () =>
      void client.createModelBlock(
        { temperature: 0.7 },
        { x: 320, y: 40, width: 240, height: 160 },
      );
    toolbar.append(newText, newModel);
  }
}

void boot();
