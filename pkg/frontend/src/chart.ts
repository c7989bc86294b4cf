/**
 * Pure presentation model for the sensitivity panel.
 *
 * Turning the report into rows here (instead of inside the DOM code) keeps
 * the ordering and label rules unit-testable without a browser.
 */

import { fmt3 } from "./format.js";
import type { SensitivityDoc } from "./types.js";

export interface SensitivityBar {
  input: string;
  first: number;
  total: number;
  firstLabel: string;
  totalLabel: string;
}

export interface PairRow {
  label: string;
  value: number;
  valueLabel: string;
}

export type ChartModel =
  | { kind: "bars"; bars: SensitivityBar[]; pairs: PairRow[] }
  | { kind: "empty"; message: string };

/** Build the panel model, most influential input first. */
export function chartModel(report: SensitivityDoc | null): ChartModel {
  if (report === null) {
    return { kind: "empty", message: "No sensitivity report yet." };
  }
  if (report.inputs.length === 0) {
    return { kind: "empty", message: "The portfolio has no stochastic inputs." };
  }
  if (!(report.variance > 0)) {
    return {
      kind: "empty",
      message: "Output variance is zero, so variance shares are undefined.",
    };
  }
  const bars = report.inputs.map((input, idx) => {
    const first = report.first[idx] ?? 0;
    const total = report.total[idx] ?? 0;
    return {
      input,
      first,
      total,
      firstLabel: fmt3(first),
      totalLabel: fmt3(total),
    };
  });
  bars.sort((a, b) => b.total - a.total || a.input.localeCompare(b.input));
  const pairs = (report.pairs ?? []).map((pair) => ({
    label: `${pair.i} x ${pair.j}`,
    value: pair.value,
    valueLabel: fmt3(pair.value),
  }));
  pairs.sort((a, b) => b.value - a.value || a.label.localeCompare(b.label));
  return { kind: "bars", bars, pairs };
}
