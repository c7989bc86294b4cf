"""Acceptance gate: one test per headline requirement.

Every check here compares the pipeline against an independent oracle
(closed-form quantiles from the stdlib NormalDist, analytic variance
shares, hand-computable schedule totals) at the tolerance the requirement
states, so a regression anywhere upstream fails exactly one readable line
of this file.
"""

import json
import math
import time
from statistics import NormalDist

import numpy as np
import pytest

from riskpipe.measures import cvar, evar, var
from riskpipe.portfolio import Session, SessionEvent
from riskpipe.sampling import Normal, Uniform
from riskpipe.scheduler import (
    COMPLETELY_DIVISIBLE,
    TimedEvent,
    TimingLedger,
    run_pipelined,
    serial_baseline,
)
from riskpipe.sensitivity import binned_anova, check_sum_to_one, pick_freeze


def event(seq, kind, payload):
    return SessionEvent.from_payload({"seq": seq, "kind": kind, "payload": payload})


def add_normal(seq, asset_id, weight, mu=0.0, sigma=1.0):
    return event(seq, "AddAsset", {
        "asset_id": asset_id,
        "weight": weight,
        "marginal": {"kind": "normal", "mu": mu, "sigma": sigma},
    })


def random_script(rng, length):
    """Mixed add/reweight/remove script that always ends non-empty."""
    events = [add_normal(1, "asset0", 1.0, 0.01, 0.2)]
    alive = ["asset0"]
    created = 1
    for seq in range(2, length + 1):
        roll = rng.random()
        if roll < 0.45 or (roll >= 0.75 and len(alive) < 2):
            asset_id = f"asset{created}"
            created += 1
            alive.append(asset_id)
            events.append(add_normal(
                seq, asset_id, float(rng.uniform(0.2, 2.0)),
                float(rng.normal(0.0, 0.01)), float(rng.uniform(0.05, 0.4)),
            ))
        elif roll < 0.75:
            target = alive[int(rng.integers(len(alive)))]
            events.append(event(seq, "SetWeight", {
                "asset_id": target, "weight": float(rng.uniform(0.1, 3.0)),
            }))
        else:
            target = alive.pop(int(rng.integers(len(alive))))
            events.append(event(seq, "RemoveAsset", {"asset_id": target}))
    return events


def report_documents(session):
    """The portfolio, risk, and sensitivity documents as canonical bytes.

    Timing and the computed-at stamps are wall-clock artifacts and stay out
    of the comparison; everything else must serialize identically.
    """
    snap = session.snapshot()
    doc = {
        "portfolio": snap["portfolio"],
        "risk": snap["risk"],
        "sensitivity": snap["sensitivity"],
    }
    doc = json.loads(json.dumps(doc))
    for report in [doc["risk"]["root"], *doc["risk"]["assets"].values()]:
        if report is not None:
            report.pop("computed_at")
    return json.dumps(doc, sort_keys=True).encode()


class TestAcceptance:
    def test_single_normal_asset_matches_closed_form_risk(self):
        started = time.perf_counter()
        session = Session(seed=11, n=1_000_000, alpha=0.95, sensitivity=False)
        session.apply(add_normal(1, "a", 1.0))
        report = session.report()
        elapsed = time.perf_counter() - started

        gauss = NormalDist()
        quantile = gauss.inv_cdf(0.95)
        tail_mean = gauss.pdf(quantile) / 0.05
        entropic = math.sqrt(2.0 * math.log(1.0 / 0.05))

        assert report.var == pytest.approx(quantile, abs=0.01)
        assert report.cvar == pytest.approx(tail_mean, abs=0.015)
        assert report.evar == pytest.approx(entropic, abs=0.03)
        assert elapsed < 5.0

    def test_risk_measures_are_ordered_on_random_tuples(self):
        rng = np.random.default_rng(2024)
        violations = 0
        for _ in range(1000):
            size = int(rng.integers(200, 3000))
            shape = rng.integers(3)
            if shape == 0:
                values = rng.standard_normal(size) * rng.uniform(0.5, 3.0)
            elif shape == 1:
                values = rng.lognormal(0.0, rng.uniform(0.2, 1.0), size) - 1.0
            else:
                values = rng.uniform(-2.0, 1.0, size)
            alpha = float(rng.uniform(0.5, 0.995))
            v, c, e = var(values, alpha), cvar(values, alpha), evar(values, alpha)
            if not v <= c + 1e-9 <= e + 2e-9:
                violations += 1
        assert violations == 0

    def test_correlated_portfolio_matches_closed_form_risk(self):
        session = Session(seed=5, n=1_000_000, alpha=0.95, sensitivity=False)
        session.apply(add_normal(1, "a", 1.0))
        session.apply(add_normal(2, "b", 1.0))
        session.apply(event(3, "SetCorrelation", {"pair": ["a", "b"], "rho": 0.5}))

        # var(A + B) = 1 + 1 + 2 * 0.5, so the portfolio scale is sqrt(3)
        oracle = math.sqrt(3.0) * NormalDist().inv_cdf(0.95)
        assert session.report().var == pytest.approx(oracle, abs=0.02)

        realized = np.corrcoef(
            session.asset_tuple("a").values, session.asset_tuple("b").values
        )[0, 1]
        assert realized == pytest.approx(0.5, abs=0.01)

    def test_incremental_state_equals_batch_replay(self):
        started = time.perf_counter()
        rng = np.random.default_rng(7)
        for trial in range(100):
            events = random_script(rng, 50)

            live = Session(seed=trial, n=128)
            for item in events:
                live.apply(item)

            batch = Session(seed=trial, n=128, cache=False)
            batch.replay(events)

            assert live.root_tuple().values.tobytes() == \
                batch.root_tuple().values.tobytes()
            assert live.report() == batch.report()
            live_sens = live.sensitivity_report()
            batch_sens = batch.sensitivity_report()
            if live_sens is None:
                assert batch_sens is None
            else:
                assert live_sens.to_payload() == batch_sens.to_payload()
        assert time.perf_counter() - started < 60.0

    def test_linear_model_sensitivities_match_variance_shares(self):
        def model(x):
            return x[:, 0] + 2.0 * x[:, 1] + 3.0 * x[:, 2]

        report = pick_freeze(model, [Normal(0.0, 1.0)] * 3, n=1 << 16, seed=101)
        shares = np.array([1.0, 4.0, 9.0]) / 14.0
        assert np.allclose(report.first, shares, atol=0.02)
        assert np.allclose(report.total, shares, atol=0.02)

    def test_ishigami_sensitivities_match_the_analytic_oracle(self):
        a, b = 7.0, 0.1

        def model(x):
            return (np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2
                    + b * x[:, 2] ** 4 * np.sin(x[:, 0]))

        d1 = 0.5 * (1.0 + b * math.pi**4 / 5.0) ** 2
        d2 = a**2 / 8.0
        d13 = 8.0 * b**2 * math.pi**8 / 225.0
        total_variance = d1 + d2 + d13
        first_ref = np.array([d1, d2, 0.0]) / total_variance
        total_ref = np.array([d1 + d13, d2, d13]) / total_variance

        # the oracle itself reproduces the published constants
        assert np.allclose(first_ref, [0.3139, 0.4424, 0.0], atol=5e-4)
        assert np.allclose(total_ref, [0.5576, 0.4424, 0.2437], atol=5e-4)

        report = pick_freeze(model, [Uniform(-math.pi, math.pi)] * 3, n=1 << 16, seed=7)
        assert np.allclose(report.first, first_ref, atol=0.03)
        assert np.allclose(report.total, total_ref, atol=0.03)

    def test_interaction_decomposition_sums_to_one(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(1 << 16, 2))
        additive = binned_anova(x, x[:, 0] + 2.0 * x[:, 1], order=2)
        assert check_sum_to_one(additive) < 0.02

        rng = np.random.default_rng(9)
        u = rng.uniform(-1.0, 1.0, size=(1 << 16, 2))
        bilinear = binned_anova(u, u[:, 0] * u[:, 1], order=2)
        assert check_sum_to_one(bilinear) < 0.02

    def test_pipelined_schedule_meets_the_model(self):
        rows = [(50.0, 5.0, 5.0, 0.0)] * 8
        script = [TimedEvent(seq=i, pt_ms=pt, gt_ms=gt, st_ms=st, ot_ms=ot)
                  for i, (pt, gt, st, ot) in enumerate(rows, start=1)]

        configured = TimingLedger()
        for item in script:
            configured.open_event(item.seq)
            configured.record(item.seq, "pt", item.pt_ms)
            configured.record(item.seq, "gt", item.gt_ms)
            configured.record(item.seq, "st", item.st_ms)
            configured.record(item.seq, "ot", item.ot_ms)
        predicted = configured.predict_total_ms(COMPLETELY_DIVISIBLE)
        assert predicted == 405.0
        assert configured.serial_total_ms() == 480.0

        pipelined_runs, serial_runs, wins = [], [], 0
        for _ in range(10):
            _, pipelined_ms = run_pipelined(script)
            _, serial_ms = serial_baseline(script)
            pipelined_runs.append(pipelined_ms)
            serial_runs.append(serial_ms)
            wins += pipelined_ms < serial_ms

        assert wins == 10
        assert float(np.median(pipelined_runs)) == pytest.approx(predicted, rel=0.15)
        assert float(np.median(serial_runs)) == pytest.approx(480.0, rel=0.15)

    def test_cache_is_invisible_in_the_reports(self):
        events = [
            add_normal(1, "a", 1.0, 0.01, 0.2),
            add_normal(2, "b", 0.5, 0.0, 0.1),
            event(3, "SetCorrelation", {"pair": ["a", "b"], "rho": 0.4}),
            event(4, "SetWeight", {"asset_id": "a", "weight": 1.5}),
        ]
        cached = Session(seed=3, n=50_000, cache=True)
        cached.replay(events)
        uncached = Session(seed=3, n=50_000, cache=False)
        uncached.replay(events)

        assert cached.root_tuple().values.tobytes() == \
            uncached.root_tuple().values.tobytes()
        assert report_documents(cached) == report_documents(uncached)
