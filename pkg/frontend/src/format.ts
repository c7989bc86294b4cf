/** Display formatting. Values themselves are never transformed, only printed. */

/** Three-decimal label, with negative zero flattened to "0.000". */
export function fmt3(value: number): string {
  const text = value.toFixed(3);
  return text === "-0.000" ? "0.000" : text;
}

/** Risk panel numbers carry a little more precision than chart labels. */
export function fmtRisk(value: number): string {
  const text = value.toFixed(4);
  return text === "-0.0000" ? "0.0000" : text;
}

export function fmtMs(value: number): string {
  return `${value.toFixed(1)} ms`;
}

export function fmtPercent(value: number): string {
  return `${(100 * value).toFixed(1)}%`;
}
