"""Event timing ledger, pipelined execution and wall-clock prediction.

The interaction model this package targets is a user parameterizing a
portfolio one event at a time while the engine generates and simulates in
the background.  Four phases are tracked per event, all in milliseconds:

``pt``  user parameterization (think) time
``gt``  random-number / tuple generation time
``st``  simulation and measure computation time
``ot``  overhead (cache writes, notification assembly, bookkeeping)

For a fully divisible problem the predicted wall time overlaps each
event's generation and simulation with the *next* event's parameterization:
the first simulation has no predecessor slot, and the last simulation's
``st + ot`` trails after the final ``pt``.  Problems that need a synthesis
pass after the per-asset work (correlated or grouped portfolios) add their
exclusive synthesis and overhead terms on top.

`run_pipelined` and `serial_baseline` execute synthetic scripts with real
sleeps so predictions can be validated against measured wall time.
"""

from __future__ import annotations

import csv
import io
import threading
import time
from dataclasses import dataclass, field
from queue import Queue
from typing import Iterable, Sequence

from .errors import EmptyLedgerError, NotFoundError, ParameterError

__all__ = [
    "COMPLETELY_DIVISIBLE",
    "INCOMPLETELY_DIVISIBLE",
    "NESTED",
    "PHASES",
    "TimingRow",
    "TimingLedger",
    "TimedEvent",
    "run_pipelined",
    "serial_baseline",
]

COMPLETELY_DIVISIBLE = "completely_divisible"
INCOMPLETELY_DIVISIBLE = "incompletely_divisible"
NESTED = "nested"

PHASES = ("pt", "gt", "st", "ot")


@dataclass
class TimingRow:
    """Accumulated phase durations for one event."""

    seq: int
    pt_ms: float = 0.0
    gt_ms: float = 0.0
    st_ms: float = 0.0
    ot_ms: float = 0.0

    def phase_total(self) -> float:
        return self.pt_ms + self.gt_ms + self.st_ms + self.ot_ms


@dataclass
class TimingLedger:
    """Per-event phase durations plus portfolio-level synthesis terms.

    Rows must be opened before they can be recorded into; records for the
    same (seq, phase) accumulate, and recording order does not matter.
    """

    st_ex_ms: float = 0.0
    oh_ex_ms: float = 0.0
    _rows: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def open_event(self, seq: int) -> None:
        if not isinstance(seq, int) or seq < 0:
            raise ParameterError(f"sequence number must be a non-negative int, got {seq!r}")
        with self._lock:
            self._rows.setdefault(seq, TimingRow(seq=seq))

    def record(self, seq: int, phase: str, duration_ms: float) -> None:
        if phase not in PHASES:
            raise ParameterError(f"unknown phase {phase!r}, expected one of {PHASES}")
        if not duration_ms >= 0.0:
            raise ParameterError(f"duration must be >= 0 ms, got {duration_ms}")
        with self._lock:
            row = self._rows.get(seq)
            if row is None:
                raise NotFoundError(f"no open event with seq {seq}; call open_event first")
            setattr(row, f"{phase}_ms", getattr(row, f"{phase}_ms") + float(duration_ms))

    def rows(self) -> list[TimingRow]:
        with self._lock:
            return [self._rows[s] for s in sorted(self._rows)]

    def __len__(self) -> int:
        with self._lock:
            return len(self._rows)

    def totals(self) -> dict:
        """Summed phase durations: PT, GT, ST and OH over all events."""
        out = {phase: 0.0 for phase in PHASES}
        for row in self.rows():
            for phase in PHASES:
                out[phase] += getattr(row, f"{phase}_ms")
        return out

    def predict_total_ms(self, kind: str = COMPLETELY_DIVISIBLE) -> float:
        """Predicted pipelined wall time for the recorded event mix.

        For a completely divisible problem each slot costs the max of the
        event's own ``pt`` and ``gt`` against the previous event's trailing
        ``st + ot``; the last event's ``st + ot`` is appended.  Incompletely
        divisible and nested problems add the exclusive synthesis terms
        (``st_ex_ms + oh_ex_ms``) once on top.
        """
        rows = self.rows()
        if not rows:
            raise EmptyLedgerError("cannot predict from an empty ledger")
        total = 0.0
        prior_sim = 0.0
        for row in rows:
            total += max(row.pt_ms, row.gt_ms, prior_sim)
            prior_sim = row.st_ms + row.ot_ms
        total += prior_sim
        if kind == COMPLETELY_DIVISIBLE:
            return total
        if kind in (INCOMPLETELY_DIVISIBLE, NESTED):
            return total + self.st_ex_ms + self.oh_ex_ms
        raise ParameterError(f"unknown divisibility kind {kind!r}")

    def serial_total_ms(self) -> float:
        """Wall time if nothing overlapped: every phase end to end."""
        rows = self.rows()
        if not rows:
            raise EmptyLedgerError("cannot total an empty ledger")
        return sum(row.phase_total() for row in rows) + self.st_ex_ms + self.oh_ex_ms

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seq", "pt_ms", "gt_ms", "st_ms", "ot_ms"])
        for row in self.rows():
            writer.writerow(
                [row.seq]
                + [f"{getattr(row, f'{phase}_ms'):.6f}" for phase in PHASES]
            )
        return buf.getvalue()

    def summary(self) -> dict:
        totals = self.totals()
        out = {
            "events": len(self),
            "totals_ms": totals,
            "st_ex_ms": self.st_ex_ms,
            "oh_ex_ms": self.oh_ex_ms,
        }
        if len(self):
            out["predicted_ms"] = {
                COMPLETELY_DIVISIBLE: self.predict_total_ms(COMPLETELY_DIVISIBLE),
                INCOMPLETELY_DIVISIBLE: self.predict_total_ms(INCOMPLETELY_DIVISIBLE),
            }
            out["serial_ms"] = self.serial_total_ms()
        return out


# ---------------------------------------------------------------------------
# Synthetic execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimedEvent:
    """A scripted event with fixed phase durations, for timing studies."""

    seq: int
    pt_ms: float
    gt_ms: float
    st_ms: float
    ot_ms: float


def _sleep_ms(duration_ms: float) -> float:
    start = time.perf_counter()
    if duration_ms > 0:
        time.sleep(duration_ms / 1000.0)
    return (time.perf_counter() - start) * 1000.0


def run_pipelined(
    script: Sequence[TimedEvent],
    *,
    st_ex_ms: float = 0.0,
    oh_ex_ms: float = 0.0,
) -> tuple[TimingLedger, float]:
    """Execute a synthetic script with generation/simulation overlapped.

    Event intake sleeps each event's ``pt`` on the caller thread while a
    single worker thread runs the previous event's ``gt``/``st``/``ot``.
    At most one background task is in flight, mirroring the engine's
    single-writer pipeline.  Returns the measured ledger and the measured
    wall time in milliseconds (synthesis terms, when given, are slept after
    the pipeline drains).
    """
    _validate_script(script)
    ledger = TimingLedger(st_ex_ms=0.0, oh_ex_ms=0.0)
    tasks: Queue = Queue()

    def worker() -> None:
        while True:
            item = tasks.get()
            if item is None:
                return
            ledger.record(item.seq, "gt", _sleep_ms(item.gt_ms))
            ledger.record(item.seq, "st", _sleep_ms(item.st_ms))
            ledger.record(item.seq, "ot", _sleep_ms(item.ot_ms))

    thread = threading.Thread(target=worker, daemon=True)
    start = time.perf_counter()
    thread.start()
    for event in script:
        ledger.open_event(event.seq)
        ledger.record(event.seq, "pt", _sleep_ms(event.pt_ms))
        tasks.put(event)
    tasks.put(None)
    thread.join()
    ledger.st_ex_ms = _sleep_ms(st_ex_ms)
    ledger.oh_ex_ms = _sleep_ms(oh_ex_ms)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return ledger, elapsed_ms


def serial_baseline(
    script: Sequence[TimedEvent],
    *,
    st_ex_ms: float = 0.0,
    oh_ex_ms: float = 0.0,
) -> tuple[TimingLedger, float]:
    """Execute the same script with no overlap at all."""
    _validate_script(script)
    ledger = TimingLedger(st_ex_ms=0.0, oh_ex_ms=0.0)
    start = time.perf_counter()
    for event in script:
        ledger.open_event(event.seq)
        for phase in PHASES:
            ledger.record(event.seq, phase, _sleep_ms(getattr(event, f"{phase}_ms")))
    ledger.st_ex_ms = _sleep_ms(st_ex_ms)
    ledger.oh_ex_ms = _sleep_ms(oh_ex_ms)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return ledger, elapsed_ms


def _validate_script(script: Iterable[TimedEvent]) -> None:
    seqs = [e.seq for e in script]
    if len(set(seqs)) != len(seqs):
        raise ParameterError("timing script has duplicate sequence numbers")
    for event in script:
        for phase in PHASES:
            if getattr(event, f"{phase}_ms") < 0:
                raise ParameterError(f"event {event.seq} has a negative {phase} duration")
