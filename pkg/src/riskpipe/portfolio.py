"""Portfolio trees, session events and incremental recomputation.

A session owns a set of assets, an optional correlation structure, and a
fixed sample count ``n``.  Every asset has a standard-normal *driver*
tuple keyed by ``(session seed, asset id, generation)``; asset return
tuples are the copula transform of those drivers, and the portfolio tuple
is the weighted sum of asset tuples folded in asset-id order.

Two properties fall out of keying everything by content rather than by
arrival order, and the test suite leans on both:

* permuting AddAsset order produces the same final state, bit for bit;
* applying events one at a time (recomputing reports after each) and
  replaying the same script in one batch produce identical tuples and
  reports, so live incremental operation never drifts from a clean rerun.

Events carry strictly sequential numbers.  An event that fails validation
raises and leaves the session untouched.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import measures, sensitivity
from .errors import (
    ConflictError,
    EmptyPortfolioError,
    DegenerateModelError,
    InsufficientDataError,
    NotFoundError,
    ParameterError,
    ShapeError,
)
from .sampling import (
    CorrelationMatrix,
    Empirical,
    Marginal,
    SampleTuple,
    correlate_tuples,
    derive_key,
    driver_normals,
    historical_returns,
    marginal_from_payload,
)
from .scheduler import (
    COMPLETELY_DIVISIBLE,
    INCOMPLETELY_DIVISIBLE,
    NESTED,
    TimingLedger,
)
from .store import AssetStore, TupleCache

__all__ = [
    "Leaf",
    "Composite",
    "aggregate",
    "classify_divisibility",
    "SessionEvent",
    "EVENT_KINDS",
    "read_script",
    "write_script",
    "Session",
    "PORTFOLIO_ID",
]

logger = logging.getLogger(__name__)

PORTFOLIO_ID = "__portfolio__"

EVENT_KINDS = (
    "AddAsset",
    "RemoveAsset",
    "SetWeight",
    "SetCorrelation",
    "SetAlpha",
    "SetHorizon",
    "SetSampleCount",
    "AttachHistory",
)


# ---------------------------------------------------------------------------
# Portfolio trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    """A single asset position: a tuple source scaled by a weight."""

    node_id: str
    weight: float
    marginal: Marginal | None = None

    def __post_init__(self):
        if not self.node_id:
            raise ParameterError("leaf node_id must be non-empty")
        if not np.isfinite(self.weight):
            raise ParameterError(f"leaf weight must be finite, got {self.weight}")


@dataclass(frozen=True)
class Composite:
    """A group of child nodes combined with per-child multipliers."""

    node_id: str
    children: tuple
    multipliers: tuple

    def __init__(self, node_id: str, children: Sequence, multipliers: Sequence[float] | None = None):
        if not node_id:
            raise ParameterError("composite node_id must be non-empty")
        children = tuple(children)
        multipliers = tuple(1.0 for _ in children) if multipliers is None else tuple(
            float(m) for m in multipliers
        )
        if len(children) != len(multipliers):
            raise ShapeError(
                f"composite {node_id!r}: {len(children)} children vs {len(multipliers)} multipliers"
            )
        ids = [c.node_id for c in children]
        if len(set(ids)) != len(ids):
            raise ParameterError(f"composite {node_id!r} has duplicate child ids: {ids}")
        if not all(np.isfinite(m) for m in multipliers):
            raise ParameterError(f"composite {node_id!r} multipliers must be finite")
        object.__setattr__(self, "node_id", node_id)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "multipliers", multipliers)


def aggregate(node, tuples: Mapping[str, object]) -> np.ndarray:
    """Weighted sum of leaf tuples, folded bottom-up through composites.

    Children are folded in node-id order regardless of construction order,
    which pins the floating-point result to the portfolio's content.
    """
    if isinstance(node, Leaf):
        try:
            values = tuples[node.node_id]
        except KeyError:
            raise NotFoundError(f"no tuple provided for leaf {node.node_id!r}") from None
        arr = values.values if isinstance(values, SampleTuple) else np.asarray(values, dtype=float)
        return node.weight * arr
    if isinstance(node, Composite):
        if not node.children:
            raise EmptyPortfolioError(f"composite {node.node_id!r} has no children")
        order = sorted(range(len(node.children)), key=lambda i: node.children[i].node_id)
        acc: np.ndarray | None = None
        for i in order:
            term = node.multipliers[i] * aggregate(node.children[i], tuples)
            acc = term if acc is None else acc + term
        return acc
    raise ParameterError(f"unknown node type {type(node).__name__}")


def classify_divisibility(node, corr: CorrelationMatrix | None = None) -> str:
    """Classify how independently a portfolio's parts can be simulated.

    Flat portfolios of independent single-asset leaves decompose whole;
    correlation or multi-leaf groups force a synthesis pass; groups inside
    groups recurse level by level.
    """
    if isinstance(node, Leaf):
        has_groups = False
        nested = False
    elif isinstance(node, Composite):
        if not node.children:
            raise EmptyPortfolioError(f"composite {node.node_id!r} has no children")
        has_groups = False
        nested = False
        for child in node.children:
            if isinstance(child, Composite):
                if any(isinstance(g, Composite) for g in child.children):
                    nested = True
                if len(child.children) >= 2:
                    has_groups = True
    else:
        raise ParameterError(f"unknown node type {type(node).__name__}")

    correlated = corr is not None and bool(
        np.any(np.abs(corr.entries - np.eye(corr.dim)) > 0.0)
    )
    if nested:
        return NESTED
    if has_groups or correlated:
        return INCOMPLETELY_DIVISIBLE
    return COMPLETELY_DIVISIBLE


# ---------------------------------------------------------------------------
# Events and scripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SessionEvent:
    """One user action: a kind, its payload, and how long the user took."""

    seq: int
    kind: str
    payload: dict = field(default_factory=dict)
    user_time_ms: float = 0.0

    def __post_init__(self):
        if not isinstance(self.seq, int) or self.seq < 1:
            raise ParameterError(f"event seq must be a positive int, got {self.seq!r}")
        if self.kind not in EVENT_KINDS:
            raise ParameterError(f"unknown event kind {self.kind!r}, expected one of {EVENT_KINDS}")
        if not isinstance(self.payload, dict):
            raise ParameterError(f"event payload must be an object, got {type(self.payload).__name__}")
        if not (isinstance(self.user_time_ms, (int, float)) and self.user_time_ms >= 0):
            raise ParameterError(f"user_time_ms must be >= 0, got {self.user_time_ms!r}")

    def to_payload(self) -> dict:
        out = {"seq": self.seq, "kind": self.kind, "payload": self.payload}
        if self.user_time_ms:
            out["user_time_ms"] = self.user_time_ms
        return out

    @classmethod
    def from_payload(cls, payload: dict) -> "SessionEvent":
        """Parse the wire form; ``user_time`` is accepted as an alias in ms."""
        if not isinstance(payload, dict):
            raise ParameterError(f"event must be an object, got {type(payload).__name__}")
        unknown = set(payload) - {"seq", "kind", "payload", "user_time_ms", "user_time"}
        if unknown:
            raise ParameterError(f"unknown event fields: {sorted(unknown)}")
        user_time = payload.get("user_time_ms", payload.get("user_time", 0.0))
        return cls(
            seq=payload.get("seq", 0),
            kind=payload.get("kind", ""),
            payload=payload.get("payload", {}),
            user_time_ms=user_time,
        )


def read_script(source: str | Path | Iterable[str]) -> list[SessionEvent]:
    """Read a JSON-lines event script (one event object per line)."""
    from .errors import ParseError

    if isinstance(source, Path):
        lines = source.read_text().splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [str(line) for line in source]
    events: list[SessionEvent] = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            payload = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"script line {lineno}: invalid JSON: {exc.msg}",
                             line=lineno) from None
        try:
            events.append(SessionEvent.from_payload(payload))
        except ParameterError as exc:
            raise ParseError(f"script line {lineno}: {exc}", line=lineno) from None
    return events


def write_script(events: Sequence[SessionEvent], path: str | Path) -> None:
    Path(path).write_text(
        "".join(json.dumps(e.to_payload(), sort_keys=True) + "\n" for e in events)
    )


# ---------------------------------------------------------------------------
# Session engine
# ---------------------------------------------------------------------------


@dataclass
class _AssetState:
    marginal: Marginal
    weight: float
    generation: int = 0


class Session:
    """A live portfolio with incremental recomputation.

    Parameters
    ----------
    seed : int
        Session seed; all driver streams derive from it.
    n : int
        Sample count, shared by every tuple in the session (common random
        numbers).  Changeable only before the first asset arrives.
    alpha, horizon :
        Reporting parameters; adjustable by events at any time.
    sensitivity : bool
        Recompute driver-level sensitivity indices after mutating events.
    normalized_weights : bool
        Treat weights as fractions of their sum instead of absolute
        exposures.
    cache : TupleCache | bool | None
        ``True`` builds a default-budget cache, ``False``/``None`` disables
        caching, or pass a cache instance to share one.
    store : AssetStore, optional
        Used to resolve ``AttachHistory`` events that reference stored
        price histories.
    """

    def __init__(
        self,
        seed: int = 0,
        n: int = 100_000,
        alpha: float = 0.95,
        horizon: int = 1,
        *,
        sensitivity: bool = True,
        normalized_weights: bool = False,
        cache: TupleCache | bool | None = True,
        store: AssetStore | None = None,
        session_id: str = "local",
    ):
        if n < 2:
            raise ParameterError(f"sample count must be >= 2, got {n}")
        if not 0.0 < alpha < 1.0:
            raise ParameterError(f"alpha must lie strictly inside (0, 1), got {alpha}")
        if horizon < 1:
            raise ParameterError(f"horizon must be >= 1, got {horizon}")
        self.seed = int(seed)
        self.n = int(n)
        self.alpha = float(alpha)
        self.horizon = int(horizon)
        self.session_id = session_id
        self.sensitivity_enabled = bool(sensitivity)
        self.normalized_weights = bool(normalized_weights)
        self.store = store
        if cache is True:
            self.cache: TupleCache | None = TupleCache()
        elif cache:
            self.cache = cache
        else:
            self.cache = None

        self.ledger = TimingLedger()
        self._assets: dict[str, _AssetState] = {}
        self._corr: dict[frozenset, float] = {}
        self._drivers: dict[str, SampleTuple] = {}
        self._values: dict[str, SampleTuple] = {}
        self._asset_reports: dict[str, measures.RiskReport] = {}
        self._root_tuple: SampleTuple | None = None
        self._root_report: measures.RiskReport | None = None
        self._sensitivity_report: sensitivity.SensitivityReport | None = None
        self._head = 0
        self._ever_added = False
        self._defer_reports = False
        self._last_apply_end: float | None = None

    # -- public surface ------------------------------------------------------

    @property
    def head(self) -> int:
        return self._head

    def asset_ids(self) -> list[str]:
        return sorted(self._assets)

    def weight_of(self, asset_id: str) -> float:
        return self._state_of(asset_id).weight

    def root_tuple(self) -> SampleTuple:
        if self._root_tuple is None:
            raise EmptyPortfolioError("portfolio has no assets")
        return self._root_tuple

    def asset_tuple(self, asset_id: str) -> SampleTuple:
        self._state_of(asset_id)
        return self._values[asset_id]

    def report(self) -> measures.RiskReport:
        if self._root_report is None:
            raise EmptyPortfolioError("portfolio has no assets")
        return self._root_report

    def asset_report(self, asset_id: str) -> measures.RiskReport:
        self._state_of(asset_id)
        return self._asset_reports[asset_id]

    def sensitivity_report(self) -> sensitivity.SensitivityReport | None:
        return self._sensitivity_report

    def correlation_matrix(self) -> CorrelationMatrix:
        return CorrelationMatrix.from_pairs(self.asset_ids(), self._corr)

    def divisibility(self) -> str:
        if not self._assets:
            raise EmptyPortfolioError("portfolio has no assets")
        leaves = [
            Leaf(node_id=aid, weight=state.weight, marginal=state.marginal)
            for aid, state in self._assets.items()
        ]
        return classify_divisibility(
            Composite(PORTFOLIO_ID, leaves), self.correlation_matrix()
        )

    def apply(self, event: SessionEvent) -> dict:
        """Apply one event and return the refreshed notification payload.

        Raises on any validation failure with the session left untouched;
        the sequence number is consumed only on success.
        """
        apply_start = time.perf_counter()
        if event.seq != self._head + 1:
            raise ConflictError(
                f"event seq {event.seq} does not follow head {self._head}; "
                f"expected {self._head + 1}"
            )
        handler = getattr(self, f"_on_{_snake(event.kind)}", None)
        if handler is None:
            raise ParameterError(f"unknown event kind {event.kind!r}")

        if event.user_time_ms > 0:
            pt_ms = float(event.user_time_ms)
        elif self._last_apply_end is not None:
            pt_ms = (apply_start - self._last_apply_end) * 1000.0
        else:
            pt_ms = 0.0

        gt_start = time.perf_counter()
        plan = handler(event.payload)  # validates and mutates; returns recompute plan
        gt_ms = (time.perf_counter() - gt_start) * 1000.0

        st_start = time.perf_counter()
        self._recompute(plan)
        st_ms = (time.perf_counter() - st_start) * 1000.0

        self._head = event.seq
        self.ledger.open_event(event.seq)
        self.ledger.record(event.seq, "pt", max(pt_ms, 0.0))
        self.ledger.record(event.seq, "gt", gt_ms)
        self.ledger.record(event.seq, "st", st_ms)

        ot_start = time.perf_counter()
        notification = {
            "seq": event.seq,
            "event_kind": event.kind,
            "risk": {
                "portfolio": self._portfolio_payload(),
                "risk": self._risk_payload(),
            },
            "sensitivity": (
                self._sensitivity_report.to_payload() if self._sensitivity_report else None
            ),
        }
        ot_ms = (time.perf_counter() - ot_start) * 1000.0
        self.ledger.record(event.seq, "ot", ot_ms)
        notification["timing"] = {
            "seq": event.seq,
            "pt_ms": max(pt_ms, 0.0),
            "gt_ms": gt_ms,
            "st_ms": st_ms,
            "ot_ms": ot_ms,
        }
        self._last_apply_end = time.perf_counter()
        return notification

    def replay(self, events: Sequence[SessionEvent]) -> "Session":
        """Apply a whole script with per-event reporting deferred to the end."""
        self._defer_reports = True
        try:
            for event in events:
                self.apply(event)
        finally:
            self._defer_reports = False
        self._recompute(_Plan(tuples=frozenset(self._assets), reports="all", sensitivity=True))
        return self

    def snapshot(self) -> dict:
        return {
            "session": self.session_id,
            "head": self._head,
            "portfolio": self._portfolio_payload(),
            "risk": self._risk_payload(),
            "sensitivity": (
                self._sensitivity_report.to_payload() if self._sensitivity_report else None
            ),
            "timing": {
                "summary": self.ledger.summary(),
                "rows": [
                    {
                        "seq": r.seq,
                        "pt_ms": r.pt_ms,
                        "gt_ms": r.gt_ms,
                        "st_ms": r.st_ms,
                        "ot_ms": r.ot_ms,
                    }
                    for r in self.ledger.rows()
                ],
            },
        }

    # -- event handlers ------------------------------------------------------
    # Each validates fully before mutating, then returns the recompute plan.

    def _on_add_asset(self, payload: dict) -> "_Plan":
        asset_id = _field(payload, "asset_id", str)
        if not asset_id:
            raise ParameterError("asset_id must be non-empty")
        if asset_id == PORTFOLIO_ID:
            raise ParameterError(f"asset id {PORTFOLIO_ID!r} is reserved")
        if asset_id in self._assets:
            raise ConflictError(f"asset {asset_id!r} already exists")
        weight = _finite(payload, "weight")
        marginal = self._marginal_from_payload_or_prices(payload)
        self._assets[asset_id] = _AssetState(marginal=marginal, weight=weight)
        self._ever_added = True
        self._ensure_driver(asset_id)
        affected = set(self._assets) if self._has_correlation() else {asset_id}
        return _Plan(tuples=frozenset(affected), reports="affected", sensitivity=True)

    def _on_remove_asset(self, payload: dict) -> "_Plan":
        asset_id = _field(payload, "asset_id", str)
        self._state_of(asset_id)
        # Mixing entangles every tuple, so removal from a correlated session
        # rebuilds the survivors even if no correlated pairs remain afterwards.
        was_correlated = self._has_correlation()
        del self._assets[asset_id]
        self._drivers.pop(asset_id, None)
        self._values.pop(asset_id, None)
        self._asset_reports.pop(asset_id, None)
        self._corr = {k: v for k, v in self._corr.items() if asset_id not in k}
        if self.cache is not None:
            self.cache.invalidate_asset(asset_id)
        affected = set(self._assets) if was_correlated else set()
        return _Plan(tuples=frozenset(affected), reports="affected", sensitivity=True)

    def _on_set_weight(self, payload: dict) -> "_Plan":
        asset_id = _field(payload, "asset_id", str)
        state = self._state_of(asset_id)
        state.weight = _finite(payload, "weight")
        return _Plan(tuples=frozenset(), reports="root", sensitivity=True)

    def _on_set_correlation(self, payload: dict) -> "_Plan":
        candidate = dict(self._corr)
        if "pair" in payload:
            pair = payload["pair"]
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise ParameterError(f"pair must list two asset ids, got {pair!r}")
            a, b = pair
            if a == b:
                raise ParameterError("cannot set correlation of an asset with itself")
            self._state_of(a)
            self._state_of(b)
            rho = _finite(payload, "rho")
            if abs(rho) > 1.0:
                raise ParameterError(f"rho must lie in [-1, 1], got {rho}")
            if rho == 0.0:
                candidate.pop(frozenset((a, b)), None)
            else:
                candidate[frozenset((a, b))] = rho
        elif "matrix" in payload:
            ids = payload.get("assets")
            if not isinstance(ids, list) or set(ids) != set(self._assets) or len(ids) != len(
                self._assets
            ):
                raise ParameterError(
                    "matrix form needs 'assets' listing every session asset exactly once"
                )
            matrix = CorrelationMatrix(np.asarray(payload["matrix"], dtype=float))
            if matrix.dim != len(ids):
                raise ShapeError(f"matrix is {matrix.dim}x{matrix.dim} for {len(ids)} assets")
            candidate = {}
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    rho = float(matrix.entries[i, j])
                    if rho != 0.0:
                        candidate[frozenset((ids[i], ids[j]))] = rho
        else:
            raise ParameterError("SetCorrelation needs either 'pair'+'rho' or 'assets'+'matrix'")

        # Reject non-PSD structures before committing anything.
        from .sampling import cholesky_factor

        cholesky_factor(CorrelationMatrix.from_pairs(self.asset_ids(), candidate))
        self._corr = candidate
        return _Plan(tuples=frozenset(self._assets), reports="affected", sensitivity=True)

    def _on_set_alpha(self, payload: dict) -> "_Plan":
        alpha = _finite(payload, "alpha")
        if not 0.0 < alpha < 1.0:
            raise ParameterError(f"alpha must lie strictly inside (0, 1), got {alpha}")
        self.alpha = alpha
        return _Plan(tuples=frozenset(), reports="all", sensitivity=False)

    def _on_set_horizon(self, payload: dict) -> "_Plan":
        horizon = _int_field(payload, "horizon")
        if horizon < 1:
            raise ParameterError(f"horizon must be >= 1, got {horizon}")
        self.horizon = horizon
        return _Plan(tuples=frozenset(), reports="all", sensitivity=False)

    def _on_set_sample_count(self, payload: dict) -> "_Plan":
        if self._ever_added:
            raise ConflictError("sample count is fixed once the first asset has been added")
        n = _int_field(payload, "n")
        if n < 2:
            raise ParameterError(f"sample count must be >= 2, got {n}")
        self.n = n
        return _Plan(tuples=frozenset(), reports="none", sensitivity=False)

    def _on_attach_history(self, payload: dict) -> "_Plan":
        asset_id = _field(payload, "asset_id", str)
        state = self._state_of(asset_id)
        steps = _int_field(payload, "steps", default=1)
        if steps < 1:
            raise ParameterError(f"steps must be >= 1, got {steps}")
        if "prices" in payload:
            prices = np.asarray(payload["prices"], dtype=float)
        elif "source" in payload:
            if self.store is None:
                raise ParameterError(
                    "AttachHistory references a stored history but the session has no store"
                )
            prices = self.store.get_history(str(payload["source"])).prices
        else:
            raise ParameterError("AttachHistory needs 'prices' or a stored 'source'")
        returns = historical_returns(prices, step=steps)
        state.marginal = Empirical(returns)
        state.generation += 1
        self._ensure_driver(asset_id)
        affected = set(self._assets) if self._has_correlation() else {asset_id}
        return _Plan(tuples=frozenset(affected), reports="affected", sensitivity=True)

    # -- recomputation machinery ----------------------------------------------

    def _state_of(self, asset_id) -> _AssetState:
        state = self._assets.get(asset_id)
        if state is None:
            raise NotFoundError(f"no asset {asset_id!r} in session {self.session_id!r}")
        return state

    def _marginal_from_payload_or_prices(self, payload: dict) -> Marginal:
        if "marginal" in payload:
            spec = payload["marginal"]
            if not isinstance(spec, dict):
                raise ParameterError(f"'marginal' must be an object, got {type(spec).__name__}")
            return marginal_from_payload(spec)
        if "prices" in payload:
            steps = _int_field(payload, "steps", default=1)
            if steps < 1:
                raise ParameterError(f"steps must be >= 1, got {steps}")
            returns = historical_returns(np.asarray(payload["prices"], dtype=float), step=steps)
            return Empirical(returns)
        raise ParameterError("AddAsset needs a 'marginal' object or a 'prices' series")

    def _has_correlation(self) -> bool:
        return bool(self._corr)

    def _ensure_driver(self, asset_id: str) -> None:
        state = self._assets[asset_id]
        current = self._drivers.get(asset_id)
        if current is not None and current.generation == state.generation and len(current) == self.n:
            return
        key = (
            asset_id,
            derive_key("marginal", self.seed, asset_id, state.generation),
            self.n,
            1,
        )
        values = self.cache.get(key) if self.cache is not None else None
        if values is None:
            values = driver_normals(self.seed, asset_id, state.generation, self.n)
            if self.cache is not None:
                self.cache.put(key, values)
        self._drivers[asset_id] = SampleTuple(
            values=values, asset_id=asset_id, seed=self.seed, generation=state.generation
        )

    def _rebuild_values(self, affected: frozenset) -> None:
        if not affected:
            return
        ids = self.asset_ids()
        if self._has_correlation():
            drivers = [self._drivers[aid] for aid in ids]
            marginals = [self._assets[aid].marginal for aid in ids]
            correlated = correlate_tuples(drivers, self.correlation_matrix(), marginals)
            self._values = {t.asset_id: t for t in correlated}
        else:
            for aid in affected:
                if aid not in self._assets:
                    continue
                driver = self._drivers[aid]
                state = self._assets[aid]
                self._values[aid] = SampleTuple(
                    values=state.marginal.transform_normal(driver.values),
                    asset_id=aid,
                    seed=driver.seed,
                    generation=driver.generation,
                )

    def _effective_weights(self) -> dict[str, float]:
        weights = {aid: self._assets[aid].weight for aid in self.asset_ids()}
        if not self.normalized_weights:
            return weights
        total = sum(weights.values())
        if total == 0.0:
            raise ParameterError("normalized weights need a non-zero weight sum")
        return {aid: w / total for aid, w in weights.items()}

    def _recompute_root(self) -> None:
        if not self._assets:
            self._root_tuple = None
            self._root_report = None
            self._sensitivity_report = None
            return
        weights = self._effective_weights()
        acc = np.zeros(self.n)
        for aid in self.asset_ids():
            acc = acc + weights[aid] * self._values[aid].values
        self._root_tuple = SampleTuple(
            values=acc, asset_id=PORTFOLIO_ID, seed=self.seed, generation=0
        )

    def _recompute(self, plan: "_Plan") -> None:
        self._rebuild_values(plan.tuples)
        self._recompute_root()
        if self._defer_reports:
            return
        if plan.reports != "none":
            if plan.reports == "all":
                report_ids = set(self._assets)
            elif plan.reports == "root":
                report_ids = set()
            else:
                report_ids = set(plan.tuples) & set(self._assets)
            for aid in sorted(report_ids):
                self._asset_reports[aid] = measures.risk_report(
                    self._values[aid], self.alpha, self.horizon
                )
            self._root_report = (
                measures.risk_report(self._root_tuple, self.alpha, self.horizon)
                if self._root_tuple is not None
                else None
            )
        if plan.sensitivity:
            self._recompute_sensitivity()

    def _recompute_sensitivity(self) -> None:
        if not self.sensitivity_enabled or not self._assets:
            self._sensitivity_report = None
            return
        ids = self.asset_ids()
        inputs = np.column_stack([self._drivers[aid].values for aid in ids])
        try:
            self._sensitivity_report = sensitivity.binned_anova(
                inputs,
                self._root_tuple.values,
                order=2 if len(ids) >= 2 else 1,
                input_ids=ids,
            )
        except (InsufficientDataError, DegenerateModelError) as exc:
            logger.debug("sensitivity unavailable: %s", exc)
            self._sensitivity_report = None

    # -- payload builders ------------------------------------------------------

    def _portfolio_payload(self) -> dict:
        assets = [
            {
                "asset_id": aid,
                "weight": self._assets[aid].weight,
                "generation": self._assets[aid].generation,
                "marginal": self._assets[aid].marginal.to_payload(),
            }
            for aid in self.asset_ids()
        ]
        correlation = [
            {"i": pair[0], "j": pair[1], "rho": rho}
            for pair, rho in sorted(
                ((tuple(sorted(k)), v) for k, v in self._corr.items())
            )
        ]
        return {
            "assets": assets,
            "correlation": correlation,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "n": self.n,
            "normalized_weights": self.normalized_weights,
        }

    def _risk_payload(self) -> dict:
        return {
            "root": self._root_report.to_payload() if self._root_report else None,
            "assets": {
                aid: self._asset_reports[aid].to_payload()
                for aid in self.asset_ids()
                if aid in self._asset_reports
            },
        }


@dataclass(frozen=True)
class _Plan:
    """What apply() must refresh: tuples to rebuild, reports scope, sensitivity."""

    tuples: frozenset
    reports: str  # "affected" | "all" | "root" | "none"
    sensitivity: bool


def _snake(kind: str) -> str:
    out = []
    for ch in kind:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def _field(payload: dict, name: str, typ) -> object:
    if name not in payload:
        raise ParameterError(f"payload is missing {name!r}")
    value = payload[name]
    if not isinstance(value, typ):
        raise ParameterError(f"{name!r} must be {typ.__name__}, got {type(value).__name__}")
    return value


def _finite(payload: dict, name: str) -> float:
    if name not in payload:
        raise ParameterError(f"payload is missing {name!r}")
    value = payload[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        raise ParameterError(f"{name!r} must be a finite number, got {value!r}")
    return float(value)


def _int_field(payload: dict, name: str, default: int | None = None) -> int:
    if name not in payload:
        if default is not None:
            return default
        raise ParameterError(f"payload is missing {name!r}")
    value = payload[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParameterError(f"{name!r} must be an integer, got {value!r}")
    return value
