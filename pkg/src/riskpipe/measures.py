"""Tail risk measures on simulated return tuples.

Conventions, fixed across the package:

* Inputs are *returns* (gains positive).  Losses are their negation, and
  every measure is reported as a positive loss figure for a long position
  in the tuple.
* ``alpha`` is a confidence level in (0, 1): ``alpha = 0.95`` talks about
  the worst 5% of outcomes.
* VaR is the interpolated order-statistic quantile of the loss sample
  (rank ``(n - 1) * alpha + 1``).  CVaR is the exact tail mean of the
  empirical distribution, with fractional weight on the boundary order
  statistic so the tail holds exactly ``1 - alpha`` probability mass.
  EVaR is the entropic bound ``inf_z z^-1 * log(mgf(z) / (1 - alpha))``,
  minimized by golden-section search in log z.

For any sample, ``var <= cvar <= evar`` holds mathematically; the code
asserts it rather than clamping, so a violation is a bug, not a rounding
policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from scipy.special import logsumexp

from .errors import NumericError, ParameterError, ShapeError
from .sampling import SampleTuple, stream

__all__ = ["RiskReport", "var", "cvar", "evar", "risk_report", "horizon_returns"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _losses(returns, alpha: float) -> np.ndarray:
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    values = returns.values if isinstance(returns, SampleTuple) else np.asarray(returns, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ShapeError(f"need a 1-d sample with length >= 2, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ParameterError("sample contains non-finite values")
    return -values


def var(returns, alpha: float) -> float:
    """Value at risk: interpolated empirical quantile of the loss sample."""
    losses = _losses(returns, alpha)
    return float(np.quantile(losses, alpha, method="linear"))


def cvar(returns, alpha: float) -> float:
    """Conditional value at risk (expected shortfall) of the loss sample.

    Averages the worst ``n * (1 - alpha)`` losses, giving the boundary
    order statistic the fractional weight that makes the tail mass exactly
    ``1 - alpha``.  This is the discrete Rockafellar-Uryasev superquantile
    of the empirical distribution, so ``cvar >= var`` without adjustment.
    """
    losses = np.sort(_losses(returns, alpha))
    n = losses.size
    tail_mass = n * (1.0 - alpha)
    full = int(tail_mass)
    frac = tail_mass - full
    total = float(np.sum(losses[n - full:])) if full > 0 else 0.0
    if frac > 0.0 and full < n:
        total += frac * float(losses[n - full - 1])
    return total / tail_mass


def evar(returns, alpha: float) -> float:
    """Entropic value at risk via golden-section search on log z.

    The dual objective ``g(z) = (logsumexp(z * L) - log n - log(1 - alpha)) / z``
    is unimodal in ``z > 0`` (its numerator's derivative is increasing), so
    golden-section over ``log z`` in the bracket ``[1e-6, 1e6 / max|L|]``
    converges to the infimum; the search stops at relative width 1e-8.

    A constant sample short-circuits to the constant itself, which is the
    exact point-mass limit the optimizer can only approach.
    """
    return _evar_min(returns, alpha)[0]


def _evar_min(returns, alpha: float) -> tuple:
    """(value, minimizing z); z is nan for the constant short-circuit."""
    losses = _losses(returns, alpha)
    lo, hi = float(losses.min()), float(losses.max())
    if lo == hi:
        return hi, math.nan
    scale = max(abs(lo), abs(hi))
    n = losses.size
    offset = math.log(n) + math.log1p(-alpha)

    def objective(log_z: float) -> float:
        z = math.exp(log_z)
        return (float(logsumexp(z * losses)) - offset) / z

    a = math.log(1e-6)
    b = math.log(1e6 / scale)
    if not b > a:
        raise NumericError(f"entropic search bracket collapsed for loss scale {scale:.3e}")
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while (b - a) > 1e-8:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    log_z = (a + b) / 2.0
    result = objective(log_z)
    if not math.isfinite(result):
        raise NumericError("entropic objective left the finite regime")
    return result, math.exp(log_z)


def horizon_returns(tuple_: SampleTuple, horizon: int) -> np.ndarray:
    """Aggregate one-step returns to an ``horizon``-step sample.

    Each output value sums ``horizon`` independent bootstrap resamples of
    the one-step tuple (i.i.d. steps).  The resampling stream is keyed by
    the tuple's own identity plus the horizon, so reports are reproducible
    without any shared mutable generator.  ``horizon == 1`` returns the
    tuple's values untouched.
    """
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    if horizon == 1:
        return tuple_.values
    n = len(tuple_)
    rng = stream("horizon", tuple_.seed, tuple_.asset_id, tuple_.generation, horizon)
    idx = rng.integers(0, n, size=(horizon, n))
    return tuple_.values[idx].sum(axis=0)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class RiskReport:
    """The three tail measures for one tuple at one (alpha, horizon).

    ``computed_at`` records when the report was assembled; it is excluded
    from equality so recomputing identical inputs compares equal.
    """

    var: float
    cvar: float
    evar: float
    alpha: float
    n: int
    horizon: int = 1
    computed_at: str = field(default_factory=_utc_now, compare=False)

    def to_payload(self) -> dict:
        return {
            "var": self.var,
            "cvar": self.cvar,
            "evar": self.evar,
            "alpha": self.alpha,
            "n": self.n,
            "horizon": self.horizon,
            "computed_at": self.computed_at,
        }


def risk_report(returns, alpha: float, horizon: int = 1) -> RiskReport:
    """Bundle var/cvar/evar for a tuple, optionally at a multi-step horizon.

    Multi-step horizons need the reproducible resampling stream carried by
    a :class:`SampleTuple`; raw arrays are accepted only at horizon 1.
    """
    if horizon != 1:
        if not isinstance(returns, SampleTuple):
            raise ParameterError("multi-step horizons need a SampleTuple input")
        values = horizon_returns(returns, horizon)
    else:
        values = returns.values if isinstance(returns, SampleTuple) else np.asarray(returns, dtype=float)

    v = var(values, alpha)
    c = cvar(values, alpha)
    e = evar(values, alpha)
    slack = 1e-9 * max(1.0, abs(v), abs(c), abs(e))
    if not (v <= c + slack and c <= e + slack):
        raise NumericError(
            f"risk measure ordering violated: var={v!r} cvar={c!r} evar={e!r} at alpha={alpha}"
        )
    return RiskReport(var=v, cvar=c, evar=e, alpha=alpha, n=int(np.asarray(values).size), horizon=horizon)
