/**
 * Thin HTTP client for the risk service.
 *
 * Only the documented endpoints are used; anything the server rejects is
 * surfaced as an ``ApiError`` carrying the status code and the server's
 * message so the caller can render it next to the offending control.
 */

import type { Accepted, EventEnvelope, SessionCreated, Snapshot, UpdateMessage } from "./types.js";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") {
      message = body.error;
    }
  } catch {
    // keep the status line
  }
  return new ApiError(response.status, message);
}

export class ApiClient {
  readonly base: string;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  async createSession(options: Record<string, unknown> = {}): Promise<SessionCreated> {
    const response = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(options),
    });
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return (await response.json()) as SessionCreated;
  }

  async postEvent(sessionId: string, event: EventEnvelope): Promise<Accepted> {
    const response = await fetch(`${this.base}/sessions/${sessionId}/events`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(event),
    });
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return (await response.json()) as Accepted;
  }

  async getSnapshot(sessionId: string): Promise<Snapshot> {
    const response = await fetch(`${this.base}/sessions/${sessionId}/snapshot`);
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return (await response.json()) as Snapshot;
  }

  /**
   * Open the update stream.  The browser's EventSource resumes from the
   * last delivered frame on reconnect by itself; ``after`` only positions
   * the very first connect.  Returns a function that closes the stream.
   */
  subscribe(
    sessionId: string,
    after: number,
    onMessage: (message: UpdateMessage) => void,
  ): () => void {
    const source = new EventSource(
      `${this.base}/sessions/${sessionId}/updates?after=${after}`,
    );
    source.onmessage = (frame) => {
      onMessage(JSON.parse(frame.data) as UpdateMessage);
    };
    return () => source.close();
  }
}
