"""Tests for the HTTP service, driven in-process through the test client."""

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from gosset import __version__
from gosset.api import app
from gosset.distributions import ReturnDistribution
from gosset.greeks import greeks_report
from gosset.pricing import (
    MarketParams,
    TailMode,
    TailPolicy,
    black_scholes_call,
    price_call,
    price_put,
)

client = TestClient(app)


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_openapi_schema_builds():
    assert client.get("/openapi.json").status_code == 200


# ------------------------------------------------------------------ price


def test_price_defaults_match_the_library():
    resp = client.post("/price", json={})
    assert resp.status_code == 200
    body = resp.json()

    dist = ReturnDistribution(3.0)
    mkt = MarketParams(s0=50.0, strike=49.0, rt=0.03, sigma_t=0.3)
    capped = TailPolicy.from_probabilities(dist, TailMode.CAPPED, p_c=0.999, p_p=0.0)
    trunc = TailPolicy.from_probabilities(dist, TailMode.TRUNCATED, p_c=0.999, p_p=0.0)
    qc = price_call(dist, capped, mkt)
    qt = price_call(dist, trunc, mkt)
    assert body["call_capped"] == pytest.approx(qc.value_at_zero, rel=1e-14)
    assert body["call_truncated"] == pytest.approx(qt.value_at_zero, rel=1e-14)
    assert body["put_capped"] == pytest.approx(
        price_put(dist, capped, mkt).value_at_zero, rel=1e-14
    )
    assert body["put_truncated"] == pytest.approx(
        price_put(dist, trunc, mkt).value_at_zero, rel=1e-14
    )
    assert body["black_scholes_call"] == pytest.approx(black_scholes_call(mkt), rel=1e-14)
    assert body["normalization_capped"] == pytest.approx(qc.z, rel=1e-14)
    assert body["normalization_truncated"] == pytest.approx(qt.z, rel=1e-14)


def test_price_accepts_inf_shape_and_full_coverage():
    resp = client.post("/price", json={"nu": "inf", "p_c": 1.0, "p_p": 0.0})
    assert resp.status_code == 200
    body = resp.json()
    # no cap exists at p_c = 1, and the whole normal is Black-Scholes
    assert body["call_capped"] is None
    assert body["put_capped"] is None
    assert body["normalization_capped"] is None
    assert body["call_truncated"] == pytest.approx(body["black_scholes_call"], rel=1e-10)
    assert body["put_truncated"] == pytest.approx(body["black_scholes_put"], rel=1e-10)


def test_price_curve_sweeps_the_strike():
    resp = client.post(
        "/price/curve",
        json={"sweep": {"param": "K", "lo": 40.0, "hi": 60.0, "steps": 5}},
    )
    assert resp.status_code == 200
    points = resp.json()
    assert [p["value"] for p in points] == [40.0, 45.0, 50.0, 55.0, 60.0]
    calls = [p["call_truncated"] for p in points]
    assert all(a > b for a, b in zip(calls, calls[1:]))
    mid = client.post("/price", json={"strike": 50.0}).json()
    assert points[2]["call_truncated"] == mid["call_truncated"]


def test_price_curve_rejects_reversed_bounds():
    resp = client.post(
        "/price/curve",
        json={"sweep": {"param": "K", "lo": 60.0, "hi": 40.0, "steps": 5}},
    )
    assert resp.status_code == 422


# ----------------------------------------------------------------- greeks


def test_greeks_match_the_library():
    resp = client.post("/greeks", json={"mode": "truncated"})
    assert resp.status_code == 200
    body = resp.json()
    dist = ReturnDistribution(3.0)
    mkt = MarketParams(s0=50.0, strike=49.0, rt=0.03, sigma_t=0.3)
    policy = TailPolicy.from_probabilities(
        dist, TailMode.TRUNCATED, p_c=0.999, p_p=0.0
    )
    report = greeks_report(dist, policy, mkt)
    assert body["mode"] == "truncated"
    assert body["price"] == pytest.approx(
        price_call(dist, policy, mkt).value_at_zero, rel=1e-14
    )
    assert body["delta"] == pytest.approx(report.delta, rel=1e-14)
    assert body["gamma"] == pytest.approx(report.gamma, rel=1e-14)
    assert body["vega"] == pytest.approx(report.vega, rel=1e-14)
    assert body["theta"] == pytest.approx(report.theta, rel=1e-14)
    assert body["dc_dnu"] == pytest.approx(report.dc_dnu, rel=1e-14)
    assert body["dc_dp"] == pytest.approx(report.dc_dp, rel=1e-14)


def test_greeks_normal_limit_has_no_shape_derivative():
    resp = client.post("/greeks", json={"nu": "inf"})
    assert resp.status_code == 200
    assert resp.json()["dc_dnu"] is None


def test_greeks_reject_unknown_mode():
    assert client.post("/greeks", json={"mode": "sideways"}).status_code == 422


# ----------------------------------------------------------------- table1


def test_table1_default_rows():
    resp = client.post("/table1", json={})
    assert resp.status_code == 200
    rows = resp.json()
    assert [r["nu"] for r in rows] == [3.0, 8.0, 21.0, None]
    assert rows[0]["x_c"] == pytest.approx(10.215, abs=1e-3)
    assert rows[3]["x_c"] == pytest.approx(3.090, abs=1e-3)
    assert rows[0]["max_increase"] == pytest.approx(21.421, abs=5e-3)


# -------------------------------------------------- calibrate and simulate


@pytest.fixture(scope="module")
def t6_returns():
    rng = np.random.default_rng(4242)
    return (0.01 * rng.standard_t(6.0, 44 * 120)).tolist()


def test_calibrate_recovers_a_heavy_tail(t6_returns):
    resp = client.post(
        "/calibrate", json={"returns": t6_returns, "window": 44, "drops": [8, 16]}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["n_windows"] == 120
    assert 3.0 < body["nu_hat"] < 12.0
    assert body["nu_lo"] < body["nu_hat"]
    assert body["nu_hi"] is None or body["nu_hi"] > body["nu_hat"]
    assert len(body["ratios"]) == 2
    for row in body["ratios"]:
        assert 0.0 < row["ratio"] < row["asymptote"] < 1.0
        assert row["uncertainty"] > 0.0
    assert body["ratios"][0]["coverage"] == pytest.approx(36.0 / 44.0)


def test_calibrate_normal_data_has_no_finite_shape():
    # Thin-tailed data drives the measured ratios past the normal
    # asymptote; the service reports that as an upstream numerical failure.
    rng = np.random.default_rng(0)
    returns = (0.01 * rng.standard_normal(22 * 50)).tolist()
    resp = client.post("/calibrate", json={"returns": returns})
    assert resp.status_code == 502
    assert "asymptote" in resp.json()["detail"]


def test_calibrate_validates_the_request():
    assert client.post("/calibrate", json={"returns": [0.1]}).status_code == 422
    # 0.5 is exact in binary, so the windows are exactly flat
    flat = client.post("/calibrate", json={"returns": [0.5] * 88})
    assert flat.status_code == 422
    one_drop = client.post(
        "/calibrate", json={"returns": [0.01, -0.02] * 44, "drops": [2]}
    )
    assert one_drop.status_code == 422


def test_simulate_is_seeded_and_deterministic():
    req = {"nu": 3.0, "window": 22, "drops": [2, 4], "trials": 200, "seed": 7}
    first = client.post("/simulate", json=req)
    second = client.post("/simulate", json=req)
    assert first.status_code == 200
    assert first.json() == second.json()
    rows = first.json()
    assert [(r["drop"], r["kept"]) for r in rows] == [(0, 22), (2, 20), (4, 18)]
    assert rows[0]["ratio"] is None
    assert all(0.0 < r["ratio"] < 1.0 for r in rows[1:])


def test_simulate_requires_a_seed():
    resp = client.post("/simulate", json={"nu": 3.0})
    assert resp.status_code == 422


# ---------------------------------------------------------------- fit-chi


@pytest.fixture(scope="module")
def chi_samples():
    rng = np.random.default_rng(123)
    return (0.02 * np.sqrt(rng.chisquare(4.0, 5_000))).tolist()


def test_fit_chi_recovers_parameters(chi_samples):
    resp = client.post("/fit-chi", json={"samples": chi_samples})
    assert resp.status_code == 200
    body = resp.json()
    assert body["k"] == pytest.approx(4.0, rel=0.10)
    assert body["scale"] == pytest.approx(0.02, rel=0.10)
    assert body["ks_statistic"] < 0.03
    assert body["residual_ss"] >= 0.0


def test_fit_chi_binned_method(chi_samples):
    resp = client.post(
        "/fit-chi", json={"samples": chi_samples, "method": "binned_lsq"}
    )
    assert resp.status_code == 200
    assert resp.json()["k"] == pytest.approx(4.0, rel=0.2)


def test_fit_chi_rejects_short_samples(chi_samples):
    resp = client.post("/fit-chi", json={"samples": chi_samples[:29]})
    assert resp.status_code == 422


# -------------------------------------------------------------- failures


def test_validation_errors_are_422():
    assert client.post("/price", json={"nu": 0.0}).status_code == 422
    assert client.post("/price", json={"p_c": 1.5}).status_code == 422
    assert client.post("/price", json={"p_p": 1.0}).status_code == 422
    assert client.post("/price", json={"sigma": -0.1}).status_code == 422


def test_unbounded_integral_is_a_502():
    # finite nu with no cap: the normalization integral diverges
    resp = client.post("/price", json={"nu": 3.0, "p_c": 1.0})
    assert resp.status_code == 502
    assert "overflow" in resp.json()["detail"].lower()
