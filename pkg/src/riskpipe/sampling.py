"""Marginal distributions, reproducible sampling and the Gaussian copula.

Every random draw in this package comes from a Philox counter-based bit
generator (via :class:`numpy.random.Generator`).  Streams are keyed by a
SHA-256 digest of a canonical ``purpose|seed|asset|generation`` string, so
any (seed, asset, generation) triple maps to the same stream on every
platform and in any evaluation order.  That property is what makes
incremental recomputation bit-identical to batch replay.

Correlation is imposed with a Gaussian copula: independent standard-normal
driver tuples are mixed through the Cholesky factor of the target
correlation matrix, pushed through the normal CDF, and mapped onto each
asset's marginal by inverse transform.  Mixing always happens in canonical
(asset-id sorted) order, which keeps the output invariant under permutation
of the inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import (
    DecompositionError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)

__all__ = [
    "Constant",
    "Normal",
    "LogNormal",
    "Uniform",
    "Triangular",
    "Empirical",
    "Marginal",
    "marginal_from_payload",
    "SampleTuple",
    "CorrelationMatrix",
    "PriceHistory",
    "derive_key",
    "stream",
    "driver_normals",
    "sample_marginal",
    "cholesky_factor",
    "correlate_tuples",
    "historical_returns",
    "bootstrap",
]

# Largest open-interval probabilities a float64 can carry; inverse-normal
# transforms clip to this range so extreme drivers stay finite.
_U_LO = np.finfo(np.float64).tiny
_U_HI = np.nextafter(1.0, 0.0)


def derive_key(*parts: object) -> int:
    """Derive a 128-bit Philox key from a canonical tuple of parts.

    Parts are joined with an unprintable separator so that
    ``("a", "bc")`` and ``("ab", "c")`` cannot collide.
    """
    material = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def stream(*parts: object) -> np.random.Generator:
    """Return the reproducible random stream identified by ``parts``."""
    return np.random.Generator(np.random.Philox(key=derive_key(*parts)))


def driver_normals(seed: int, asset_id: str, generation: int, n: int) -> np.ndarray:
    """Standard-normal driver draws for one asset.

    This is the single entry point both `sample_marginal` and the portfolio
    engine use, so an asset's driver tuple depends only on
    ``(seed, asset_id, generation, n)`` and never on evaluation order.
    """
    if n < 2:
        raise ParameterError(f"tuple length must be >= 2, got {n}")
    return stream("marginal", seed, asset_id, generation).standard_normal(n)


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# Marginal families
# ---------------------------------------------------------------------------


class Marginal:
    """Base class for one-dimensional return distributions.

    Subclasses implement ``transform_normal`` (map standard normals onto the
    target law, the inverse-CDF route unless an exact affine shortcut
    exists), ``cdf`` for goodness-of-fit checks, and payload round-trips for
    the wire/store formats.
    """

    kind: str = ""

    def transform_normal(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ppf(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_payload(self) -> dict:
        raise NotImplementedError

    def _ppf_of_normal(self, z: np.ndarray) -> np.ndarray:
        u = np.clip(ndtr(z), _U_LO, _U_HI)
        return self.ppf(u)


@dataclass(frozen=True)
class Constant(Marginal):
    """Degenerate point mass; useful for cash legs and fixed fees."""

    value: float
    kind = "constant"

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ParameterError("constant value must be finite")

    def transform_normal(self, z):
        return np.full(np.shape(z), float(self.value))

    def ppf(self, u):
        return np.full(np.shape(u), float(self.value))

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def to_payload(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class Normal(Marginal):
    mu: float
    sigma: float
    kind = "normal"

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise ParameterError("normal parameters must be finite")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    def transform_normal(self, z):
        # Affine in the driver; exact, and preserves Pearson correlation.
        return self.mu + self.sigma * np.asarray(z, dtype=float)

    def ppf(self, u):
        return self.mu + self.sigma * ndtri(u)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def to_payload(self):
        return {"kind": self.kind, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class LogNormal(Marginal):
    """exp(N(mu_log, sigma_log^2)); parameters are on the log scale."""

    mu_log: float
    sigma_log: float
    kind = "lognormal"

    def __post_init__(self):
        if not (np.isfinite(self.mu_log) and np.isfinite(self.sigma_log)):
            raise ParameterError("lognormal parameters must be finite")
        if self.sigma_log <= 0:
            raise ParameterError(f"sigma_log must be positive, got {self.sigma_log}")

    def transform_normal(self, z):
        return np.exp(self.mu_log + self.sigma_log * np.asarray(z, dtype=float))

    def ppf(self, u):
        return np.exp(self.mu_log + self.sigma_log * ndtri(u))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        pos = x > 0
        out[pos] = ndtr((np.log(x[pos]) - self.mu_log) / self.sigma_log)
        return out

    def to_payload(self):
        return {"kind": self.kind, "mu_log": self.mu_log, "sigma_log": self.sigma_log}


@dataclass(frozen=True)
class Uniform(Marginal):
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ParameterError("uniform bounds must be finite")
        if not self.lo < self.hi:
            raise ParameterError(f"uniform requires lo < hi, got [{self.lo}, {self.hi}]")

    def transform_normal(self, z):
        return self._ppf_of_normal(np.asarray(z, dtype=float))

    def ppf(self, u):
        return self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def to_payload(self):
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Triangular(Marginal):
    lo: float
    mode: float
    hi: float
    kind = "triangular"

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.lo, self.mode, self.hi)):
            raise ParameterError("triangular parameters must be finite")
        if not (self.lo <= self.mode <= self.hi) or not self.lo < self.hi:
            raise ParameterError(
                f"triangular requires lo <= mode <= hi and lo < hi, "
                f"got ({self.lo}, {self.mode}, {self.hi})"
            )

    def transform_normal(self, z):
        return self._ppf_of_normal(np.asarray(z, dtype=float))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        span = self.hi - self.lo
        f_mode = (self.mode - self.lo) / span
        left = self.lo + np.sqrt(np.maximum(u, 0.0) * span * (self.mode - self.lo))
        right = self.hi - np.sqrt(np.maximum(1.0 - u, 0.0) * span * (self.hi - self.mode))
        return np.where(u <= f_mode, left, right)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        span = self.hi - self.lo
        out = np.zeros(x.shape)
        if self.mode > self.lo:
            rising = (x > self.lo) & (x < self.mode)
            out[rising] = (x[rising] - self.lo) ** 2 / (span * (self.mode - self.lo))
        if self.hi > self.mode:
            falling = (x >= self.mode) & (x < self.hi)
            out[falling] = 1.0 - (self.hi - x[falling]) ** 2 / (span * (self.hi - self.mode))
        out[x >= self.hi] = 1.0
        return out

    def to_payload(self):
        return {"kind": self.kind, "lo": self.lo, "mode": self.mode, "hi": self.hi}


@dataclass(frozen=True)
class Empirical(Marginal):
    """Distribution defined by observed samples.

    The quantile function interpolates linearly between order statistics
    (the plotting positions are ``k/(m-1)`` for ``m`` sorted samples), and
    the CDF is its exact inverse.  A single-sample history degenerates to a
    point mass.
    """

    samples: tuple = field(repr=False)
    kind = "empirical"

    def __init__(self, samples: Sequence[float]):
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterError("empirical marginal needs a non-empty 1-d sample")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("empirical samples must be finite")
        object.__setattr__(self, "samples", tuple(float(v) for v in arr))
        object.__setattr__(self, "_sorted", _readonly(np.sort(arr)))

    @property
    def sorted_samples(self) -> np.ndarray:
        return self._sorted

    def transform_normal(self, z):
        return self._ppf_of_normal(np.asarray(z, dtype=float))

    def ppf(self, u):
        s = self._sorted
        if s.size == 1:
            return np.full(np.shape(u), s[0])
        grid = np.linspace(0.0, 1.0, s.size)
        return np.interp(np.asarray(u, dtype=float), grid, s)

    def cdf(self, x):
        s = self._sorted
        if s.size == 1:
            return np.where(np.asarray(x, dtype=float) >= s[0], 1.0, 0.0)
        grid = np.linspace(0.0, 1.0, s.size)
        return np.interp(np.asarray(x, dtype=float), s, grid, left=0.0, right=1.0)

    def to_payload(self):
        return {"kind": self.kind, "samples": list(self.samples)}


_MARGINAL_KINDS = {
    "constant": Constant,
    "normal": Normal,
    "lognormal": LogNormal,
    "uniform": Uniform,
    "triangular": Triangular,
    "empirical": Empirical,
}


def marginal_from_payload(payload: dict) -> Marginal:
    """Rebuild a marginal from its wire/store payload."""
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ParameterError(f"marginal payload needs a 'kind' field, got {payload!r}")
    kind = payload["kind"]
    cls = _MARGINAL_KINDS.get(kind)
    if cls is None:
        raise ParameterError(f"unknown marginal kind {kind!r}")
    kwargs = {k: v for k, v in payload.items() if k != "kind"}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for marginal {kind!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Tuples and correlation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleTuple:
    """An immutable vector of simulated one-step returns for one asset.

    ``seed`` and ``generation`` identify the driver stream that produced it,
    which is all the tuple cache needs to key on.
    """

    values: np.ndarray
    asset_id: str
    seed: int
    generation: int = 0

    def __post_init__(self):
        values = _readonly(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 1 or values.size < 2:
            raise ShapeError(f"sample tuple must be 1-d with length >= 2, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParameterError(f"sample tuple for {self.asset_id!r} contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric correlation matrix with unit diagonal.

    Positive semidefiniteness is not checked here; `cholesky_factor` is the
    gatekeeper and reports the failing pivot when it rejects a matrix.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.entries, dtype=np.float64))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"correlation matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ParameterError("correlation entries must be finite")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
            raise ParameterError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12, rtol=0.0):
            raise ParameterError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(m) > 1.0 + 1e-12):
            raise ParameterError("correlation entries must lie in [-1, 1]")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def identity(cls, dim: int) -> "CorrelationMatrix":
        return cls(np.eye(dim))

    @classmethod
    def from_pairs(cls, ids: Sequence[str], pairs: dict) -> "CorrelationMatrix":
        """Assemble a matrix over ``ids`` from a {frozenset({a, b}): rho} map."""
        index = {aid: i for i, aid in enumerate(ids)}
        m = np.eye(len(ids))
        for key, rho in pairs.items():
            a, b = tuple(key)
            if a in index and b in index:
                m[index[a], index[b]] = rho
                m[index[b], index[a]] = rho
        return cls(m)


@dataclass(frozen=True, eq=False)
class PriceHistory:
    """Timestamped price series for one asset, strictly increasing in time."""

    asset_id: str
    timestamps: tuple
    prices: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceHistory):
            return NotImplemented
        return (
            self.asset_id == other.asset_id
            and self.timestamps == other.timestamps
            and np.array_equal(self.prices, other.prices)
        )

    def __post_init__(self):
        prices = _readonly(np.asarray(self.prices, dtype=np.float64))
        ts = tuple(self.timestamps)
        if len(ts) != prices.size:
            raise ShapeError(
                f"history for {self.asset_id!r}: {len(ts)} timestamps vs {prices.size} prices"
            )
        if prices.size == 0:
            raise InsufficientDataError(f"history for {self.asset_id!r} is empty")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise ParameterError(f"prices for {self.asset_id!r} must be finite and positive")
        for a, b in zip(ts, ts[1:]):
            if not a < b:
                raise ParameterError(
                    f"timestamps for {self.asset_id!r} must be strictly increasing"
                )
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return int(self.prices.size)

    def to_payload(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "timestamps": [t.isoformat() for t in self.timestamps],
            "prices": [float(p) for p in self.prices],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "PriceHistory":
        return cls(
            asset_id=payload["asset_id"],
            timestamps=tuple(datetime.fromisoformat(t) for t in payload["timestamps"]),
            prices=np.asarray(payload["prices"], dtype=float),
        )


# ---------------------------------------------------------------------------
# Sampling operations
# ---------------------------------------------------------------------------


def sample_marginal(
    dist: Marginal,
    n: int,
    seed: int,
    *,
    asset_id: str = "asset",
    generation: int = 0,
) -> SampleTuple:
    """Draw ``n`` i.i.d. values from ``dist`` into an immutable tuple.

    Parameters
    ----------
    dist : Marginal
        Target distribution.
    n : int
        Tuple length, at least 2.
    seed : int
        Stream seed.  Identical ``(dist, n, seed, asset_id, generation)``
        inputs reproduce the tuple bit for bit.

    Returns
    -------
    SampleTuple
    """
    z = driver_normals(seed, asset_id, generation, n)
    values = dist.transform_normal(z)
    return SampleTuple(values=values, asset_id=asset_id, seed=seed, generation=generation)


def cholesky_factor(corr: CorrelationMatrix | np.ndarray) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T equal to the correlation matrix.

    Accepts positive semidefinite input: a zero pivot is allowed when the
    rest of its column is consistent with it (e.g. perfectly correlated
    pairs).  Anything else is rejected.

    Raises
    ------
    DecompositionError
        Naming the first failing pivot index.  Shrinking the matrix toward
        the identity (rho' = (1 - eps) * rho) is the usual remedy for
        estimated matrices that fail by a hair.
    """
    entries = corr.entries if isinstance(corr, CorrelationMatrix) else np.asarray(corr, dtype=float)
    dim = entries.shape[0]
    lower = np.zeros((dim, dim))
    tol = 1e-10
    for j in range(dim):
        pivot = entries[j, j] - float(lower[j, :j] @ lower[j, :j])
        if pivot < -tol:
            raise DecompositionError(
                f"correlation matrix is not positive semidefinite: pivot {j} "
                f"evaluated to {pivot:.3e}; shrink the matrix toward the "
                f"identity and retry",
                pivot=j,
            )
        if pivot > tol:
            lower[j, j] = np.sqrt(pivot)
            for i in range(j + 1, dim):
                lower[i, j] = (entries[i, j] - float(lower[i, :j] @ lower[j, :j])) / lower[j, j]
        else:
            # Semidefinite direction: the whole column must vanish too.
            lower[j, j] = 0.0
            for i in range(j + 1, dim):
                residual = entries[i, j] - float(lower[i, :j] @ lower[j, :j])
                if abs(residual) > 1e-8:
                    raise DecompositionError(
                        f"correlation matrix is not positive semidefinite: pivot {j} "
                        f"is zero but column residual {residual:.3e} is not; shrink "
                        f"the matrix toward the identity and retry",
                        pivot=j,
                    )
    return lower


def correlate_tuples(
    drivers: Sequence[SampleTuple],
    corr: CorrelationMatrix,
    marginals: Sequence[Marginal],
) -> list[SampleTuple]:
    """Impose a correlation structure on independent standard-normal drivers.

    Parameters
    ----------
    drivers : sequence of SampleTuple
        Independent standard-normal tuples, one per asset, all the same
        length, with unique asset ids.
    corr : CorrelationMatrix
        Target correlation, aligned with the order of ``drivers``.
    marginals : sequence of Marginal
        Target marginal for each driver, same order.

    Returns
    -------
    list of SampleTuple
        Correlated tuples in the input order, carrying each driver's
        identity metadata.

    Notes
    -----
    Internally the rows are sorted by asset id before mixing, and the given
    correlation matrix is permuted to match.  Because the Cholesky factor is
    order dependent, this canonicalization is what makes the operation
    insensitive to how the caller happened to order the inputs.
    """
    if len(drivers) != len(marginals):
        raise ShapeError(f"{len(drivers)} drivers vs {len(marginals)} marginals")
    if corr.dim != len(drivers):
        raise ShapeError(f"correlation is {corr.dim}x{corr.dim} for {len(drivers)} drivers")
    if not drivers:
        return []
    n = len(drivers[0])
    for t in drivers:
        if len(t) != n:
            raise ShapeError("driver tuples must share one length")
    ids = [t.asset_id for t in drivers]
    if len(set(ids)) != len(ids):
        raise ParameterError(f"asset ids must be unique, got {ids}")

    order = sorted(range(len(ids)), key=lambda i: ids[i])
    z = np.vstack([drivers[i].values for i in order])
    perm = np.asarray(order)
    sorted_corr = corr.entries[np.ix_(perm, perm)]
    lower = cholesky_factor(sorted_corr)
    mixed = lower @ z

    out: list[SampleTuple] = [None] * len(drivers)  # type: ignore[list-item]
    for row, i in enumerate(order):
        values = marginals[i].transform_normal(mixed[row])
        out[i] = SampleTuple(
            values=values,
            asset_id=drivers[i].asset_id,
            seed=drivers[i].seed,
            generation=drivers[i].generation,
        )
    return out


def historical_returns(prices: np.ndarray, step: int = 1) -> np.ndarray:
    """Arithmetic returns over ``step`` observations: (p[j+step] - p[j]) / p[j]."""
    prices = np.asarray(prices, dtype=float)
    if step < 1:
        raise ParameterError(f"step must be >= 1, got {step}")
    if prices.ndim != 1 or prices.size < step + 1:
        raise InsufficientDataError(
            f"need at least {step + 1} prices for step {step}, got {prices.size}"
        )
    if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
        raise ParameterError("prices must be finite and positive")
    return (prices[step:] - prices[:-step]) / prices[:-step]


def bootstrap(values: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Resample ``n`` values i.i.d. with replacement, reproducibly by seed."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InsufficientDataError("cannot bootstrap an empty sample")
    if n < 1:
        raise ParameterError(f"bootstrap size must be >= 1, got {n}")
    idx = stream("bootstrap", seed).integers(0, values.size, size=n)
    return values[idx]
