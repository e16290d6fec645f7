"""
Tailwise — VaR/ES approximation service
Thin read-only HTTP surface; logic lives in distributions.py, approx.py, reports.py
"""
from contextlib import asynccontextmanager
from typing import List, Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from approx import C1, C2, DEFAULT_METHODS, ApproxMethod, blowup_alpha, es_approx, var_approx
from config import settings
from distributions import has_closed_form, exact_es, exact_var, format_spec, moment_summary, parse_spec
from errors import DomainError, SingularityError, TailwiseError
from utils import configure_logging, parse_list

# ── Logging ─────────────────────────────────────────────────────────────────

logger = configure_logging()

# ── App Lifecycle ───────────────────────────────────────────────────────────

@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("Tailwise starting up")
    yield
    logger.info("Tailwise shut down")

app = FastAPI(title="Tailwise", lifespan=lifespan)


@app.exception_handler(DomainError)
async def domain_error_handler(request: Request, exc: DomainError):
    return JSONResponse(status_code=422, content={"detail": str(exc), "key": exc.key})


@app.exception_handler(SingularityError)
async def singularity_handler(request: Request, exc: SingularityError):
    return JSONResponse(status_code=409, content={"detail": str(exc), "denominator": exc.denominator})


@app.exception_handler(TailwiseError)
async def tailwise_error_handler(request: Request, exc: TailwiseError):
    logger.exception("Request failed: %s", request.url.path)
    return JSONResponse(status_code=422, content={"detail": str(exc)})


# ── Schemas ─────────────────────────────────────────────────────────────────

class MomentsOut(BaseModel):
    spec: str
    mean: float
    sd: float
    variance: float
    skewness: float
    excess_kurtosis: float
    sd_over_mean: Optional[float]
    c1: float
    c2: float
    kurt1_blowup_alpha: Optional[float]


class EstimateOut(BaseModel):
    method: str
    measure: str
    alpha: float
    value: float
    denominator: Optional[float]
    in_validity_region: bool
    notes: List[str]


class EstimatesOut(BaseModel):
    spec: str
    exact: Optional[float]
    estimates: List[EstimateOut]


def _methods(methods: Optional[str]) -> List[ApproxMethod]:
    if not methods:
        return list(DEFAULT_METHODS)
    return [ApproxMethod.parse(m) for m in parse_list(methods)]


def _estimates(spec_text: str, alpha: float, methods: Optional[str], measure: str) -> EstimatesOut:
    spec = parse_spec(spec_text)
    m = moment_summary(spec)
    compute = var_approx if measure == "var" else es_approx
    exact = None
    if has_closed_form(spec):
        exact = (exact_var if measure == "var" else exact_es)(spec, alpha)
    out = []
    for method in _methods(methods):
        est = compute(method, m, alpha)
        out.append(EstimateOut(
            method=method.value, measure=measure, alpha=alpha, value=est.value,
            denominator=est.denominator_value, in_validity_region=est.in_validity_region,
            notes=est.notes,
        ))
    return EstimatesOut(spec=format_spec(spec), exact=exact, estimates=out)


# ── Endpoints ───────────────────────────────────────────────────────────────

@app.get("/moments", response_model=MomentsOut)
async def moments(spec: str = Query(..., description="key=value loss spec")):
    loss = parse_spec(spec)
    m = moment_summary(loss)
    return MomentsOut(
        spec=format_spec(loss), mean=m.mean, sd=m.sd, variance=m.variance,
        skewness=m.skewness, excess_kurtosis=m.excess_kurtosis,
        sd_over_mean=m.relative_sd if m.mean else None,
        c1=C1, c2=C2, kurt1_blowup_alpha=blowup_alpha(m),
    )


@app.get("/var", response_model=EstimatesOut)
async def var(spec: str = Query(...), alpha: float = Query(..., gt=0, lt=1), methods: Optional[str] = None):
    return _estimates(spec, alpha, methods, "var")


@app.get("/es", response_model=EstimatesOut)
async def es(spec: str = Query(...), alpha: float = Query(..., gt=0, lt=1), methods: Optional[str] = None):
    return _estimates(spec, alpha, methods, "es")


# ── Health & Root ───────────────────────────────────────────────────────────

@app.get("/")
async def root():
    return {"status": "Tailwise is running!", "version": "1.0.0"}


@app.get("/health")
async def health():
    return {"status": "healthy", "environment": settings.environment}


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=settings.port)
