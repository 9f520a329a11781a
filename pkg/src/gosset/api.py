"""HTTP service exposing pricing, sensitivities, and calibration.

Run with ``gosset serve`` or ``uvicorn gosset.api:app``.  Validation
failures map to 422, numerical failures (non-converging quadrature, no
curve solution) to 502 with the reason in the body.  Infinite values are
encoded as null in responses so every payload is strict JSON; the shape
parameter accepts the string ``"inf"`` on input.
"""

from __future__ import annotations

import math
from typing import Dict, List, Literal, Optional, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from gosset import __version__
from gosset.calibration import (
    FitTarget,
    NegativeVarianceError,
    NoSolutionError,
    estimate_nu,
    fit_chi,
    normal_asymptote,
    normalized_vol_curve,
    simulate_window_study,
    window_volatilities,
)
from gosset.distributions import ReturnDistribution
from gosset.greeks import greeks_report
from gosset.ingest import ReturnSeries
from gosset.pricing import (
    MarketParams,
    TailMode,
    TailPolicy,
    black_scholes_call,
    black_scholes_put,
    price_call,
    price_put,
)
from gosset.quadrature import QuadratureError

app = FastAPI(
    title="gosset",
    version=__version__,
    description="European option pricing under capped or truncated "
    "fat-tailed return distributions.",
)


def _finite(x: Optional[float]) -> Optional[float]:
    if x is None or not math.isfinite(x):
        return None
    return float(x)


class ModelInputs(BaseModel):
    """Shared market and tail-policy fields."""

    nu: Union[float, Literal["inf"]] = 3.0
    p_p: float = Field(default=0.0, ge=0.0, lt=1.0)
    p_c: float = Field(default=0.999, gt=0.0, le=1.0)
    s0: float = Field(default=50.0, gt=0.0)
    strike: float = Field(default=49.0, ge=0.0)
    rt: float = 0.03
    sigma: float = Field(default=0.3, gt=0.0)

    @field_validator("nu")
    @classmethod
    def _coerce_nu(cls, v):
        if isinstance(v, str):
            return math.inf
        return float(v)


class SweepSpec(BaseModel):
    param: Literal["S0", "K", "sigma", "nu", "p"]
    lo: float
    hi: float
    steps: int = Field(ge=1, le=10_000)


class CurveRequest(ModelInputs):
    sweep: SweepSpec


class PriceResponse(BaseModel):
    """Capped fields are null when p_c = 1 (no cap exists there)."""

    call_capped: Optional[float]
    call_truncated: float
    put_capped: Optional[float]
    put_truncated: float
    black_scholes_call: float
    black_scholes_put: float
    normalization_capped: Optional[float]
    normalization_truncated: float


class CurvePoint(PriceResponse):
    value: float


class GreeksRequest(ModelInputs):
    mode: Literal["capped", "truncated"] = "capped"


class GreeksResponse(BaseModel):
    mode: str
    price: float
    delta: float
    gamma: float
    vega: float
    theta: float
    dc_dnu: Optional[float] = None
    dc_dp: Optional[float] = None


class Table1Request(BaseModel):
    p: float = Field(default=0.999, gt=0.0, lt=1.0)
    sigma: float = Field(default=0.3, gt=0.0)
    nus: List[Union[float, Literal["inf"]]] = [3.0, 8.0, 21.0, "inf"]


class Table1Row(BaseModel):
    nu: Optional[float]
    x_c: float
    max_increase: float


class CalibrateRequest(BaseModel):
    returns: List[float] = Field(min_length=2)
    window: int = Field(default=22, ge=2)
    drops: List[int] = Field(default=[2, 4], min_length=2)


class RatioRow(BaseModel):
    drop: int
    coverage: float
    ratio: float
    uncertainty: float
    asymptote: float


class CalibrateResponse(BaseModel):
    nu_hat: float
    nu_lo: float
    nu_hi: Optional[float]
    n_windows: int
    ratios: List[RatioRow]


class SimulateRequest(BaseModel):
    nu: Union[float, Literal["inf"]] = 3.0
    window: int = Field(default=22, ge=2)
    drops: List[int] = Field(default=[2, 4], min_length=1)
    trials: int = Field(default=1000, ge=1, le=1_000_000)
    seed: int
    scale: float = Field(default=1.0, gt=0.0)

    @field_validator("nu")
    @classmethod
    def _coerce_nu(cls, v):
        if isinstance(v, str):
            return math.inf
        return float(v)


class SimulateRow(BaseModel):
    drop: int
    kept: int
    mean: float
    median: float
    std: float
    ratio: Optional[float] = None
    uncertainty: Optional[float] = None


class FitChiRequest(BaseModel):
    samples: List[float] = Field(min_length=30)
    target: Literal["volatility", "reciprocal_volatility"] = "volatility"
    method: Literal["mle", "binned_lsq"] = "mle"


class FitChiResponse(BaseModel):
    k: float
    scale: float
    ks_statistic: float
    residual_ss: float


def _guard(fn):
    try:
        return fn()
    except (ValueError, NegativeVarianceError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except (QuadratureError, NoSolutionError, OverflowError) as exc:
        raise HTTPException(status_code=502, detail=str(exc))


def _price_at(req: ModelInputs, overrides: Dict[str, float]) -> PriceResponse:
    nu = overrides.get("nu", req.nu)
    p_c = overrides.get("p", req.p_c)
    dist = ReturnDistribution(nu)
    mkt = MarketParams(
        s0=overrides.get("S0", req.s0),
        strike=overrides.get("K", req.strike),
        rt=req.rt,
        sigma_t=overrides.get("sigma", req.sigma),
    )
    capped = None
    if p_c < 1.0:
        capped = TailPolicy.from_probabilities(
            dist, TailMode.CAPPED, p_c=p_c, p_p=req.p_p
        )
    truncated = TailPolicy.from_probabilities(
        dist, TailMode.TRUNCATED, p_c=p_c, p_p=req.p_p
    )
    qc = price_call(dist, capped, mkt) if capped else None
    qt = price_call(dist, truncated, mkt)
    return PriceResponse(
        call_capped=qc.value_at_zero if qc else None,
        call_truncated=qt.value_at_zero,
        put_capped=price_put(dist, capped, mkt).value_at_zero if capped else None,
        put_truncated=price_put(dist, truncated, mkt).value_at_zero,
        black_scholes_call=black_scholes_call(mkt),
        black_scholes_put=black_scholes_put(mkt),
        normalization_capped=qc.z if qc else None,
        normalization_truncated=qt.z,
    )


@app.get("/health")
def health() -> Dict[str, str]:
    return {"status": "ok", "version": __version__}


@app.post("/price", response_model=PriceResponse)
def price(req: ModelInputs) -> PriceResponse:
    return _guard(lambda: _price_at(req, {}))


@app.post("/price/curve", response_model=List[CurvePoint])
def price_curve(req: CurveRequest) -> List[CurvePoint]:
    sweep = req.sweep
    if sweep.hi < sweep.lo:
        raise HTTPException(status_code=422, detail="sweep hi must be >= lo")

    def run() -> List[CurvePoint]:
        points = []
        for i in range(sweep.steps):
            frac = i / (sweep.steps - 1) if sweep.steps > 1 else 0.0
            value = sweep.lo + (sweep.hi - sweep.lo) * frac
            base = _price_at(req, {sweep.param: value})
            points.append(CurvePoint(value=value, **base.model_dump()))
        return points

    return _guard(run)


@app.post("/greeks", response_model=GreeksResponse)
def greeks(req: GreeksRequest) -> GreeksResponse:
    def run() -> GreeksResponse:
        dist = ReturnDistribution(req.nu)
        mkt = MarketParams(s0=req.s0, strike=req.strike, rt=req.rt, sigma_t=req.sigma)
        policy = TailPolicy.from_probabilities(
            dist, TailMode(req.mode), p_c=req.p_c, p_p=req.p_p
        )
        report = greeks_report(dist, policy, mkt)
        quote = price_call(dist, policy, mkt)
        return GreeksResponse(
            mode=req.mode,
            price=quote.value_at_zero,
            delta=report.delta,
            gamma=report.gamma,
            vega=report.vega,
            theta=report.theta,
            dc_dnu=report.dc_dnu,
            dc_dp=report.dc_dp,
        )

    return _guard(run)


@app.post("/table1", response_model=List[Table1Row])
def table1(req: Table1Request) -> List[Table1Row]:
    def run() -> List[Table1Row]:
        rows = []
        for nu in req.nus:
            value = math.inf if isinstance(nu, str) else float(nu)
            x_c = ReturnDistribution(value).quantile(req.p)
            rows.append(
                Table1Row(nu=_finite(value), x_c=x_c,
                          max_increase=math.exp(req.sigma * x_c))
            )
        return rows

    return _guard(run)


@app.post("/calibrate", response_model=CalibrateResponse)
def calibrate(req: CalibrateRequest) -> CalibrateResponse:
    def run() -> CalibrateResponse:
        series = ReturnSeries(returns=req.returns)
        study = window_volatilities(series, req.window, req.drops)
        result = estimate_nu(study)
        rows = []
        for d in sorted(req.drops):
            ratio, unc = study.ratios[d]
            p_n = (req.window - d) / req.window
            rows.append(
                RatioRow(
                    drop=d,
                    coverage=p_n,
                    ratio=ratio,
                    uncertainty=unc,
                    asymptote=normal_asymptote(p_n),
                )
            )
        lo, hi = result.nu_ci
        return CalibrateResponse(
            nu_hat=result.nu_hat,
            nu_lo=lo,
            nu_hi=_finite(hi),
            n_windows=study.n_windows,
            ratios=rows,
        )

    return _guard(run)


@app.post("/simulate", response_model=List[SimulateRow])
def simulate(req: SimulateRequest) -> List[SimulateRow]:
    def run() -> List[SimulateRow]:
        study = simulate_window_study(
            ReturnDistribution(req.nu),
            window_len=req.window,
            drop_counts=req.drops,
            n_trials=req.trials,
            seed=req.seed,
            scale=req.scale,
        )
        rows = []
        for d in study.drop_counts:
            ratio, unc = study.ratios.get(d, (None, None))
            rows.append(
                SimulateRow(
                    drop=d,
                    kept=req.window - d,
                    mean=study.mean[d],
                    median=study.median[d],
                    std=study.std[d],
                    ratio=ratio,
                    uncertainty=unc,
                )
            )
        return rows

    return _guard(run)


@app.post("/fit-chi", response_model=FitChiResponse)
def fit_chi_endpoint(req: FitChiRequest) -> FitChiResponse:
    def run() -> FitChiResponse:
        target = (
            FitTarget.VOLATILITY
            if req.target == "volatility"
            else FitTarget.RECIPROCAL_VOLATILITY
        )
        fit = fit_chi(req.samples, target=target, method=req.method)
        return FitChiResponse(
            k=fit.params.k,
            scale=fit.params.scale,
            ks_statistic=fit.ks_statistic,
            residual_ss=fit.residual_ss,
        )

    return _guard(run)
