"""Variance-based sensitivity indices for simulation models.

Two estimation routes, kept deliberately independent of each other:

``pick_freeze``
    Classic two-matrix scheme.  Draw matrices A and B of independent
    inputs, evaluate the model on A, B and on each hybrid A_B^(i) (A with
    column i replaced from B).  First-order indices use the correlation
    form ``S_i = mean(Y_B * (Y_ABi - Y_A)) / D`` and total indices the
    half mean-square difference ``ST_i = mean((Y_A - Y_ABi)^2) / (2 D)``.
    Costs ``(d + 2) * n`` model evaluations.

``binned_anova``
    Works on an existing joint sample (X, Y) with no extra model calls.
    Inputs are rank-binned into equal-mass bins; conditional means realize
    the variance decomposition terms ``f_0 = E[Y]``, ``f_i = E[Y|X_i] - f_0``
    and ``f_ij = E[Y|X_i, X_j] - f_0 - f_i - f_j``, and each term's variance
    over bin masses gives its index.  Truncated at pair order; for an
    independent-input model of order <= 2 the indices sum to one up to
    binning bias.

The portfolio engine feeds the *standard-normal copula drivers* in as
inputs, never the correlated returns, so the independence assumption both
estimators rely on holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateModelError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)
from .sampling import Marginal, stream

__all__ = [
    "AnovaTerms",
    "SensitivityReport",
    "pick_freeze",
    "binned_anova",
    "check_sum_to_one",
    "default_bin_count",
]


@dataclass(frozen=True)
class AnovaTerms:
    """Realized decomposition tables from the binned estimator.

    ``f0`` is the output mean.  ``tables[input_id]`` holds that input's
    conditional-mean table over its bins (zero mean under ``masses``);
    ``pair_tables`` holds the flattened residual tables for each pair.
    """

    f0: float
    bins: int
    tables: dict
    masses: dict
    pair_tables: dict | None = None
    pair_masses: dict | None = None


@dataclass(frozen=True)
class SensitivityReport:
    """Sensitivity indices for one model output.

    ``first`` and ``total`` are aligned with ``input_ids``.  ``pairs`` maps
    ``(i, j)`` index pairs (i < j) to second-order indices and is only
    populated by the binned estimator.  ``variance`` is the model output
    variance the indices are normalized by.  ``terms`` carries the realized
    decomposition tables when the binned estimator produced the report; it
    stays out of the payload and out of equality.
    """

    estimator: str
    n: int
    input_ids: tuple
    variance: float
    first: tuple
    total: tuple
    pairs: dict | None = None
    terms: AnovaTerms | None = field(default=None, compare=False, repr=False)

    def to_payload(self) -> dict:
        payload = {
            "estimator": self.estimator,
            "n": self.n,
            "inputs": list(self.input_ids),
            "variance": self.variance,
            "first": list(self.first),
            "total": list(self.total),
        }
        if self.pairs is not None:
            payload["pairs"] = [
                {"i": self.input_ids[i], "j": self.input_ids[j], "value": v}
                for (i, j), v in sorted(self.pairs.items())
            ]
        return payload


def check_sum_to_one(report: SensitivityReport) -> float:
    """Distance of the reported index sum from 1.

    Sums first-order indices plus whatever interaction orders the report
    carries.  Only meaningful when the model is well captured at the
    report's truncation order; the return value is the caller's evidence
    either way.
    """
    total = float(np.sum(report.first))
    if report.pairs:
        total += float(np.sum(list(report.pairs.values())))
    return abs(total - 1.0)


# ---------------------------------------------------------------------------
# Pick-freeze
# ---------------------------------------------------------------------------


def pick_freeze(
    model: Callable[[np.ndarray], np.ndarray],
    marginals: Sequence[Marginal],
    n: int,
    seed: int,
    input_ids: Sequence[str] | None = None,
) -> SensitivityReport:
    """Estimate first-order and total Sobol indices by pick-freeze.

    Parameters
    ----------
    model : callable
        Maps an ``(n, d)`` input matrix to an ``(n,)`` output vector.
        Must be deterministic; it is called ``d + 2`` times.
    marginals : sequence of Marginal
        Independent input distributions, one per column.
    n : int
        Rows per matrix.
    seed : int
        Stream seed; every matrix derives from it reproducibly.

    Raises
    ------
    DegenerateModelError
        If the model output variance vanishes.
    """
    d = len(marginals)
    if d == 0:
        raise ParameterError("need at least one input marginal")
    if n < 64:
        raise ParameterError(f"pick-freeze needs n >= 64, got {n}")
    ids = tuple(input_ids) if input_ids is not None else tuple(f"x{i + 1}" for i in range(d))
    if len(ids) != d:
        raise ShapeError(f"{len(ids)} input ids for {d} marginals")

    def draw(tag: str) -> np.ndarray:
        cols = [
            marginals[j].transform_normal(stream("pick_freeze", tag, seed, j).standard_normal(n))
            for j in range(d)
        ]
        return np.column_stack(cols)

    a = draw("A")
    b = draw("B")
    y_a = _evaluate(model, a, n)
    y_b = _evaluate(model, b, n)

    pooled = np.concatenate([y_a, y_b])
    variance = float(np.var(pooled))
    if variance <= 1e-300:
        raise DegenerateModelError("model output variance is zero; indices are undefined")

    first = []
    total = []
    for i in range(d):
        hybrid = a.copy()
        hybrid[:, i] = b[:, i]
        y_h = _evaluate(model, hybrid, n)
        first.append(float(np.mean(y_b * (y_h - y_a))) / variance)
        total.append(0.5 * float(np.mean((y_a - y_h) ** 2)) / variance)

    return SensitivityReport(
        estimator="pick_freeze",
        n=n,
        input_ids=ids,
        variance=variance,
        first=tuple(first),
        total=tuple(total),
        pairs=None,
    )


def _evaluate(model, x: np.ndarray, n: int) -> np.ndarray:
    y = np.asarray(model(x), dtype=float)
    if y.shape != (n,):
        raise ShapeError(f"model returned shape {y.shape}, expected ({n},)")
    if not np.all(np.isfinite(y)):
        raise ParameterError("model returned non-finite values")
    return y


# ---------------------------------------------------------------------------
# Binned variance decomposition
# ---------------------------------------------------------------------------


def default_bin_count(n: int) -> int:
    """Equal-mass bin count: ceil(n^(1/3)) capped at 64."""
    return int(min(64, np.ceil(n ** (1.0 / 3.0))))


def _rank_bins(x: np.ndarray, bins: int) -> np.ndarray:
    # Rank-based equal-mass binning; deterministic under ties via stable sort.
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.int64)
    ranks[order] = np.arange(x.size)
    return (ranks * bins) // x.size


def binned_anova(
    inputs: np.ndarray,
    y: np.ndarray,
    *,
    order: int = 2,
    bins: int | None = None,
    input_ids: Sequence[str] | None = None,
    min_bin_average: int = 20,
) -> SensitivityReport:
    """Decompose output variance over an existing joint sample.

    Parameters
    ----------
    inputs : ndarray, shape (n, d)
        Independent input columns (the copula drivers, in portfolio use).
    y : ndarray, shape (n,)
        Model output aligned with the rows.
    order : int
        1 for main effects only, 2 to include pairwise interactions.
    bins : int, optional
        Equal-mass bins per dimension; defaults to ``min(64, ceil(n^(1/3)))``.
    min_bin_average : int
        Required average occupancy per (joint) bin; guards against reading
        noise as interaction variance.

    Returns
    -------
    SensitivityReport
        With ``pairs`` populated when ``order == 2`` and d >= 2, and
        ``total`` as each input's first-order index plus its share of every
        pair it appears in.
    """
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"inputs must be 2-d (n, d), got shape {x.shape}")
    n, d = x.shape
    if y.shape != (n,):
        raise ShapeError(f"output shape {y.shape} does not match {n} input rows")
    if d == 0:
        raise ParameterError("need at least one input column")
    if order not in (1, 2):
        raise ParameterError(f"order must be 1 or 2, got {order}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("inputs and output must be finite")
    ids = tuple(input_ids) if input_ids is not None else tuple(f"x{i + 1}" for i in range(d))
    if len(ids) != d:
        raise ShapeError(f"{len(ids)} input ids for {d} input columns")

    if min_bin_average < 1:
        raise ParameterError(f"min_bin_average must be >= 1, got {min_bin_average}")
    if bins is None:
        bins = default_bin_count(n)
        if order == 2 and d >= 2:
            # Joint cells must stay populated too; shrink until they can be.
            bins = min(bins, int(np.sqrt(n / min_bin_average)))
    bins = int(bins)
    if bins < 2:
        raise ParameterError(f"need at least 2 bins, got {bins}")
    if n < bins * min_bin_average:
        raise InsufficientDataError(
            f"{n} samples cannot fill {bins} bins at >= {min_bin_average} each"
        )

    f0 = float(np.mean(y))
    variance = float(np.var(y))
    if variance <= 1e-300:
        raise DegenerateModelError("output variance is zero; indices are undefined")

    bin_idx = np.column_stack([_rank_bins(x[:, j], bins) for j in range(d)])
    centered = y - f0

    # Main effects: f_i tables are conditional means of the centered output.
    tables = []
    masses = []
    first = []
    for j in range(d):
        counts = np.bincount(bin_idx[:, j], minlength=bins)
        sums = np.bincount(bin_idx[:, j], weights=centered, minlength=bins)
        mass = counts / n
        table = np.zeros(bins)
        occupied = counts > 0
        table[occupied] = sums[occupied] / counts[occupied]
        tables.append(table)
        masses.append(mass)
        first.append(float(np.sum(mass * table**2)) / variance)

    pairs: dict | None = None
    pair_tables: dict | None = None
    pair_masses: dict | None = None
    if order == 2 and d >= 2:
        if n < bins * bins * min_bin_average:
            raise InsufficientDataError(
                f"{n} samples cannot fill {bins}x{bins} joint bins at >= {min_bin_average} each"
            )
        pairs = {}
        pair_tables = {}
        pair_masses = {}
        for i in range(d):
            for j in range(i + 1, d):
                joint = bin_idx[:, i] * bins + bin_idx[:, j]
                counts = np.bincount(joint, minlength=bins * bins)
                sums = np.bincount(joint, weights=centered, minlength=bins * bins)
                occupied = counts > 0
                cell_mean = np.zeros(bins * bins)
                cell_mean[occupied] = sums[occupied] / counts[occupied]
                grid_i = np.repeat(tables[i], bins)
                grid_j = np.tile(tables[j], bins)
                residual = np.where(occupied, cell_mean - grid_i - grid_j, 0.0)
                mass = counts / n
                pairs[(i, j)] = float(np.sum(mass * residual**2)) / variance
                pair_tables[(ids[i], ids[j])] = residual
                pair_masses[(ids[i], ids[j])] = mass

    total = list(first)
    if pairs:
        for (i, j), value in pairs.items():
            total[i] += value
            total[j] += value

    terms = AnovaTerms(
        f0=f0,
        bins=bins,
        tables={ids[j]: tables[j] for j in range(d)},
        masses={ids[j]: masses[j] for j in range(d)},
        pair_tables=pair_tables,
        pair_masses=pair_masses,
    )
    return SensitivityReport(
        estimator="binned_anova",
        n=n,
        input_ids=ids,
        variance=variance,
        first=tuple(first),
        total=tuple(total),
        pairs=pairs,
        terms=terms,
    )
