/**
 * View state and its reducer.
 *
 * The state is a pure projection of the update stream: risk, sensitivity
 * and timing sections each remember the highest sequence number they have
 * applied and drop anything older, so late or replayed messages can never
 * roll the display backwards.  Weight edits are optimistic: the slider
 * value is shown immediately but flagged pending until the server's own
 * portfolio arrives with the matching sequence number.
 */

import type {
  ErrorBody,
  PortfolioDoc,
  RiskDoc,
  SensitivityDoc,
  Snapshot,
  TimingRowDoc,
  UpdateMessage,
} from "./types.js";

export interface InlineError {
  seq: number;
  eventKind: string;
  message: string;
}

export interface OptimisticWeight {
  weight: number;
  seq: number;
}

export interface ViewState {
  session: string | null;
  /** Highest sequence number with a completed risk (or error) outcome. */
  head: number;
  portfolio: PortfolioDoc | null;
  risk: RiskDoc | null;
  riskSeq: number;
  sensitivity: SensitivityDoc | null;
  sensitivitySeq: number;
  timing: TimingRowDoc[];
  timingSeq: number;
  /** Slider values shown before the server confirms them, keyed by asset. */
  optimistic: Record<string, OptimisticWeight>;
  /** Last failure, for inline rendering next to the offending control. */
  error: InlineError | null;
}

export function initialState(): ViewState {
  return {
    session: null,
    head: 0,
    portfolio: null,
    risk: null,
    riskSeq: 0,
    sensitivity: null,
    sensitivitySeq: 0,
    timing: [],
    timingSeq: 0,
    optimistic: {},
    error: null,
  };
}

/** Adopt a snapshot wholesale, e.g. on connect or after a reconnect. */
export function rehydrate(state: ViewState, snapshot: Snapshot): ViewState {
  return {
    ...state,
    session: snapshot.session,
    head: snapshot.head,
    portfolio: snapshot.portfolio,
    risk: snapshot.risk,
    riskSeq: snapshot.head,
    sensitivity: snapshot.sensitivity,
    sensitivitySeq: snapshot.head,
    timing: snapshot.timing.rows,
    timingSeq: snapshot.head,
    optimistic: {},
    error: null,
  };
}

/** Record a slider value the server has not confirmed yet. */
export function optimisticWeight(
  state: ViewState,
  assetId: string,
  weight: number,
  seq: number,
): ViewState {
  return {
    ...state,
    optimistic: { ...state.optimistic, [assetId]: { weight, seq } },
  };
}

/** The weight to display for an asset: pending edit first, server truth after. */
export function displayWeight(state: ViewState, assetId: string): number | null {
  const pending = state.optimistic[assetId];
  if (pending !== undefined) {
    return pending.weight;
  }
  const asset = state.portfolio?.assets.find((a) => a.asset_id === assetId);
  return asset ? asset.weight : null;
}

function confirmOptimistic(
  optimistic: Record<string, OptimisticWeight>,
  seq: number,
): Record<string, OptimisticWeight> {
  const still: Record<string, OptimisticWeight> = {};
  for (const [assetId, edit] of Object.entries(optimistic)) {
    if (edit.seq > seq) {
      still[assetId] = edit;
    }
  }
  return still;
}

/**
 * Fold one update message into the view.
 *
 * Messages with a sequence number below the section's high-water mark are
 * dropped; everything else lands verbatim (the view does no risk math).
 */
export function applyUpdate(state: ViewState, message: UpdateMessage): ViewState {
  switch (message.kind) {
    case "risk": {
      if (message.seq < state.riskSeq) {
        return state;
      }
      return {
        ...state,
        head: Math.max(state.head, message.seq),
        portfolio: message.body.portfolio,
        risk: message.body.risk,
        riskSeq: message.seq,
        optimistic: confirmOptimistic(state.optimistic, message.seq),
        error: state.error && state.error.seq <= message.seq ? null : state.error,
      };
    }
    case "sensitivity": {
      if (message.seq < state.sensitivitySeq) {
        return state;
      }
      return { ...state, sensitivity: message.body, sensitivitySeq: message.seq };
    }
    case "timing": {
      if (message.seq < state.timingSeq) {
        return state;
      }
      const rows = state.timing.filter((row) => row.seq !== message.body.seq);
      rows.push(message.body);
      rows.sort((a, b) => a.seq - b.seq);
      return { ...state, timing: rows, timingSeq: message.seq };
    }
    case "error": {
      // The failed edit must stop masking server truth; queued edits behind
      // it keep waiting for their own outcome messages.
      const body: ErrorBody = message.body;
      return {
        ...state,
        optimistic: confirmOptimistic(state.optimistic, message.seq),
        error: { seq: message.seq, eventKind: body.event_kind, message: body.message },
      };
    }
  }
}
