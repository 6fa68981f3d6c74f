/**
 * Server-sent event subscription with seq-ordered delivery.
 *
 * Wraps the native EventSource in the browser; tests feed parsed events
 * straight into the handler. Reconnects resume from the last seen seq so
 * the store's gap detection only fires on true losses.
 */

import type { ApiEvent } from "./types.js";

export type EventHandler = (event: ApiEvent) => void;

export interface EventStream {
  close(): void;
}

export function subscribe(
  baseUrl: string,
  docId: string,
  since: number,
  handler: EventHandler,
): EventStream {
  let lastSeq = since;
  let source = new EventSource(`${baseUrl}/documents/${docId}/events?since=${lastSeq}`);

  const onMessage = (message: MessageEvent<string>) => {
    const event = JSON.parse(message.data) as ApiEvent;
    if (event.seq > lastSeq) lastSeq = event.seq;
    handler(event);
  };
  source.onmessage = onMessage;
  source.onerror = () => {
    // EventSource auto-reconnects, but from the original URL; rebuild it so
    // the replay starts after what we already processed.
    source.close();
    source = new EventSource(`${baseUrl}/documents/${docId}/events?since=${lastSeq}`);
    source.onmessage = onMessage;
  };

  return {
    close() {
      source.close();
    },
  };
}
