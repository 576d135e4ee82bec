"""HTTP service wrapping the solver pipeline.

One POST endpoint runs a sweep and returns the report; the CLI is a thin
client of this app, either in-process or against a remote instance.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .errors import IoError
from .poly import PolynomialParseError
from .problems import KNOWN_OPTIMAL_VALUES, UnknownLabel, problem_from_config
from .relaxation import OrderTooSmall
from .runner import RunConfig, StageFailure, all_orders_solved, report_to_dict, run
from .sdp import NoBackend, SolveSettings

CLIENT_FAULTS = (
    ValueError,  # covers OrderTooSmall, PolynomialParseError, bad configs
    KeyError,  # covers UnknownLabel
    IoError,
    TypeError,
    NoBackend,  # the client named the backend
)


class SettingsModel(BaseModel):
    backend: str = ""
    max_iter: int = Field(default=200, ge=1)
    tol_feas: float = Field(default=1e-8, gt=0)
    tol_gap_abs: float = Field(default=1e-8, gt=0)
    tol_gap_rel: float = Field(default=1e-8, gt=0)
    time_limit: float = Field(default=0.0, ge=0)
    verbose: bool = False

    def to_settings(self) -> SolveSettings:
        return SolveSettings(**self.model_dump())


class OracleModel(BaseModel):
    n: int = Field(ge=1)
    levels: int = Field(ge=1)


class SolveRequest(BaseModel):
    builtin: str | None = None
    problem: dict | None = None
    orders: list[int] | str = "min"
    settings: SettingsModel = SettingsModel()
    oracle: OracleModel | None = None
    tol: float = Field(default=0.0, ge=0)
    include_sdpa: bool = False


class OrderEntryModel(BaseModel):
    order: int
    degree: int
    lower_bound: float
    status: str
    flat: bool
    residual_inf: float
    psd_min_eig: float
    iterations: int
    solve_time: float
    wall_time: float
    upper_bound: float | None = None
    gap: float | None = None
    sdpa: str | None = None


class RunReportModel(BaseModel):
    label: str
    orders: list[OrderEntryModel]
    oracle_value: float | None = None
    oracle_n: int | None = None
    oracle_levels: int | None = None
    total_time: float
    all_solved: bool


app = FastAPI(
    title="momocp",
    description="Certified lower bounds for scalar optimal control problems "
    "with unbounded controls, by moment relaxations of occupation measures.",
)


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.get("/builtins")
def builtins() -> dict:
    return {
        "problems": sorted(KNOWN_OPTIMAL_VALUES),
        "known_values": dict(KNOWN_OPTIMAL_VALUES),
    }


def _fault(stage: str, exc: BaseException) -> HTTPException:
    status = 400 if isinstance(exc, CLIENT_FAULTS) else 500
    return HTTPException(status_code=status, detail={
        "stage": stage,
        "error": type(exc).__name__,
        "message": str(exc),
    })


@app.post("/solve", response_model=RunReportModel)
def solve(request: SolveRequest) -> dict:
    if (request.builtin is None) == (request.problem is None):
        raise _fault("config", ValueError("exactly one of builtin, problem is required"))
    try:
        problem = None
        if request.problem is not None:
            problem = problem_from_config(request.problem)
        cfg = RunConfig(
            builtin=request.builtin or "",
            problem=problem,
            orders=request.orders,
            settings=request.settings.to_settings(),
            oracle=(request.oracle.n, request.oracle.levels) if request.oracle else None,
            tol=request.tol,
            keep_sdpa_text=request.include_sdpa,
        )
        report = run(cfg)
    except StageFailure as exc:
        raise _fault(exc.stage, exc.cause) from exc
    except (OrderTooSmall, UnknownLabel, PolynomialParseError, ValueError, KeyError) as exc:
        raise _fault("config", exc) from exc

    payload = report_to_dict(report)
    payload["all_solved"] = all_orders_solved(report)
    return payload
