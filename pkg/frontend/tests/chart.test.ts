import { describe, expect, it } from "vitest";

import { chartModel } from "../src/chart.js";
import type { SensitivityDoc } from "../src/types.js";

function doc(overrides: Partial<SensitivityDoc> = {}): SensitivityDoc {
  return {
    estimator: "pick_freeze",
    n: 8192,
    inputs: ["equity", "bond"],
    variance: 0.004,
    first: [0.2, 0.8],
    total: [0.21, 0.82],
    ...overrides,
  };
}

describe("chartModel bars", () => {
  it("orders inputs by total share, largest first", () => {
    const model = chartModel(doc());
    expect(model.kind).toBe("bars");
    if (model.kind !== "bars") {
      return;
    }
    expect(model.bars.map((b) => b.input)).toEqual(["bond", "equity"]);
    expect(model.bars[0]?.total).toBe(0.82);
  });

  it("labels match the report values to three decimals", () => {
    const model = chartModel(
      doc({ inputs: ["x1", "x2"], first: [0.31391, 0.44241], total: [0.5576, 0.44241] }),
    );
    if (model.kind !== "bars") {
      throw new Error("expected bars");
    }
    const byInput = Object.fromEntries(model.bars.map((b) => [b.input, b]));
    expect(byInput["x1"]?.firstLabel).toBe("0.314");
    expect(byInput["x1"]?.totalLabel).toBe("0.558");
    expect(byInput["x2"]?.firstLabel).toBe("0.442");
  });

  it("breaks total-share ties by input name", () => {
    const model = chartModel(doc({ inputs: ["zeta", "alpha"], total: [0.5, 0.5] }));
    if (model.kind !== "bars") {
      throw new Error("expected bars");
    }
    expect(model.bars.map((b) => b.input)).toEqual(["alpha", "zeta"]);
  });
});

describe("chartModel interactions", () => {
  it("builds pair rows with three-decimal labels, largest first", () => {
    const model = chartModel(
      doc({
        estimator: "binned_anova",
        pairs: [
          { i: "equity", j: "bond", value: 0.0123456 },
          { i: "bond", j: "fx", value: 0.24371 },
        ],
      }),
    );
    if (model.kind !== "bars") {
      throw new Error("expected bars");
    }
    expect(model.pairs.map((p) => p.label)).toEqual(["bond x fx", "equity x bond"]);
    expect(model.pairs[0]?.valueLabel).toBe("0.244");
    expect(model.pairs[1]?.valueLabel).toBe("0.012");
  });

  it("yields no pair rows when the report has none", () => {
    const model = chartModel(doc());
    if (model.kind !== "bars") {
      throw new Error("expected bars");
    }
    expect(model.pairs).toEqual([]);
  });
});

describe("chartModel empty states", () => {
  it("explains a missing report", () => {
    const model = chartModel(null);
    expect(model).toEqual({ kind: "empty", message: "No sensitivity report yet." });
  });

  it("explains a portfolio with no stochastic inputs", () => {
    const model = chartModel(doc({ inputs: [], first: [], total: [] }));
    expect(model.kind).toBe("empty");
    if (model.kind === "empty") {
      expect(model.message).toMatch(/no stochastic inputs/);
    }
  });

  it("explains a degenerate zero-variance output", () => {
    const model = chartModel(doc({ variance: 0 }));
    expect(model.kind).toBe("empty");
    if (model.kind === "empty") {
      expect(model.message).toMatch(/variance is zero/);
    }
  });
});
