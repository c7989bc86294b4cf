/**
 * Gesture-to-event bridge.
 *
 * Every user gesture maps to exactly one posted event with the next
 * sequence number.  The controller keeps an audit trail of that mapping so
 * the one-gesture-one-event rule can be checked mechanically, and it owns
 * the sequence counter: a rejected post returns its number to the pool, a
 * server-side failure rewinds to the failed number.
 */

import type { Accepted, EventEnvelope, EventKind, MarginalDoc, UpdateMessage } from "./types.js";

export interface Transport {
  postEvent(sessionId: string, event: EventEnvelope): Promise<Accepted>;
}

export interface AuditEntry {
  gesture: string;
  seq: number;
}

export class SessionController {
  readonly sessionId: string;
  readonly audit: AuditEntry[] = [];

  private transport: Transport;
  private nextSeq: number;
  private clock: () => number;
  private lastGestureAt: number | null = null;
  // Posts are chained so a burst of gestures cannot reorder on the wire.
  private chain: Promise<void> = Promise.resolve();

  constructor(
    transport: Transport,
    sessionId: string,
    head: number,
    clock: () => number = () => Date.now(),
  ) {
    this.transport = transport;
    this.sessionId = sessionId;
    this.nextSeq = head + 1;
    this.clock = clock;
  }

  get pendingSeq(): number {
    return this.nextSeq;
  }

  /** Rewind after a failed event so the next gesture reuses its number. */
  onUpdate(message: UpdateMessage): void {
    if (message.kind === "error") {
      this.nextSeq = Math.min(this.nextSeq, message.seq);
    }
  }

  addAsset(assetId: string, marginal: MarginalDoc, weight = 1.0): Promise<Accepted> {
    return this.send("add-asset", "AddAsset", {
      asset_id: assetId,
      marginal,
      weight,
    });
  }

  removeAsset(assetId: string): Promise<Accepted> {
    return this.send("remove-asset", "RemoveAsset", { asset_id: assetId });
  }

  setWeight(assetId: string, weight: number): Promise<Accepted> {
    return this.send("set-weight", "SetWeight", { asset_id: assetId, weight });
  }

  setCorrelation(a: string, b: string, rho: number): Promise<Accepted> {
    return this.send("set-correlation", "SetCorrelation", { pair: [a, b], rho });
  }

  setAlpha(alpha: number): Promise<Accepted> {
    return this.send("set-alpha", "SetAlpha", { alpha });
  }

  setHorizon(horizon: number): Promise<Accepted> {
    return this.send("set-horizon", "SetHorizon", { horizon });
  }

  private send(
    gesture: string,
    kind: EventKind,
    payload: Record<string, unknown>,
  ): Promise<Accepted> {
    const seq = this.nextSeq;
    this.nextSeq += 1;
    const now = this.clock();
    const gap = this.lastGestureAt === null ? 0 : Math.max(0, now - this.lastGestureAt);
    this.lastGestureAt = now;
    const event: EventEnvelope = { seq, kind, payload };
    if (gap > 0) {
      event.user_time_ms = gap;
    }
    this.audit.push({ gesture, seq });
    const result = this.chain.then(() => this.transport.postEvent(this.sessionId, event));
    this.chain = result.then(
      () => undefined,
      () => {
        // Intake rejected the event, so its number was never consumed.
        this.nextSeq = Math.min(this.nextSeq, seq);
      },
    );
    return result;
  }
}
