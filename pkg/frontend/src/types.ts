/**
 * Wire schema types, field for field what the service sends and accepts.
 *
 * The UI never derives numbers of its own from these; everything rendered
 * is copied out of an update message or a snapshot.
 */

export type EventKind =
  | "AddAsset"
  | "RemoveAsset"
  | "SetWeight"
  | "SetCorrelation"
  | "SetAlpha"
  | "SetHorizon"
  | "SetSampleCount"
  | "AttachHistory";

export interface EventEnvelope {
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
  user_time_ms?: number;
}

export interface MarginalDoc {
  kind: string;
  [parameter: string]: unknown;
}

export interface AssetDoc {
  asset_id: string;
  weight: number;
  generation: number;
  marginal: MarginalDoc;
}

export interface CorrelationDoc {
  i: string;
  j: string;
  rho: number;
}

export interface PortfolioDoc {
  assets: AssetDoc[];
  correlation: CorrelationDoc[];
  alpha: number;
  horizon: number;
  n: number;
  normalized_weights: boolean;
}

export interface RiskReportDoc {
  var: number;
  cvar: number;
  evar: number;
  alpha: number;
  n: number;
  horizon: number;
  computed_at: string;
}

export interface RiskDoc {
  root: RiskReportDoc | null;
  assets: Record<string, RiskReportDoc>;
}

export interface PairDoc {
  i: string;
  j: string;
  value: number;
}

export interface SensitivityDoc {
  estimator: string;
  n: number;
  inputs: string[];
  variance: number;
  first: number[];
  total: number[];
  pairs?: PairDoc[];
}

export interface TimingRowDoc {
  seq: number;
  pt_ms: number;
  gt_ms: number;
  st_ms: number;
  ot_ms: number;
}

export interface Snapshot {
  session: string;
  head: number;
  portfolio: PortfolioDoc;
  risk: RiskDoc;
  sensitivity: SensitivityDoc | null;
  timing: { summary: Record<string, unknown>; rows: TimingRowDoc[] };
}

export interface RiskBody {
  portfolio: PortfolioDoc;
  risk: RiskDoc;
}

export interface ErrorBody {
  event_kind: string;
  message: string;
}

export interface RiskUpdate {
  seq: number;
  kind: "risk";
  body: RiskBody;
}

export interface SensitivityUpdate {
  seq: number;
  kind: "sensitivity";
  body: SensitivityDoc;
}

export interface TimingUpdate {
  seq: number;
  kind: "timing";
  body: TimingRowDoc;
}

export interface ErrorUpdate {
  seq: number;
  kind: "error";
  body: ErrorBody;
}

export type UpdateMessage = RiskUpdate | SensitivityUpdate | TimingUpdate | ErrorUpdate;

export interface Accepted {
  accepted: boolean;
  seq: number;
}

export interface SessionCreated {
  session: string;
  head: number;
}
