"""Order sweeps: build, assemble, solve, cross-check, and report.

The runner owns the order-to-degree bookkeeping: "order" is the moment matrix
truncation d, "degree" is 2d.  Test-function degrees follow the problem kind,
so rebuilding the LP per order keeps the Liouville rows representable.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .errors import IoError
from .homogenize import build_polynomial_lp, default_test_degree
from .oracle import grid_search_upper_bound
from .problems import RawMeasureLpProblem, builtin_problem, load_problem
from .relaxation import OrderTooSmall, assemble_sdp, min_order
from .sdp import SolveSettings, export_sdpa, solve_relaxation, to_standard_form

REPORT_FORMATS = ("table", "json")

OK_STATUSES = ("optimal", "near_optimal")


class StageFailure(RuntimeError):
    """An error inside run(), tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} stage failed: {cause}")


@dataclass(frozen=True)
class RunConfig:
    """What to solve and how to report it.

    Exactly one problem source applies: a built-in name, a config file path,
    or an already-constructed problem object.  ``orders`` is a list of moment
    orders or a range string like "1..3"; the word "min" stands for the
    smallest representable order.  ``oracle`` is an (N, levels) pair for the
    grid search; ``tol`` stops the sweep early once the oracle gap (or the
    change between successive bounds) drops below it.
    """

    builtin: str = ""
    config_path: str = ""
    problem: object = None
    orders: object = "min"
    settings: SolveSettings = field(default_factory=SolveSettings)
    report_format: str = "table"
    export_dir: str = ""
    oracle: object = None
    tol: float = 0.0
    keep_sdpa_text: bool = False


@dataclass(frozen=True)
class OrderEntry:
    """Summary of one solved order."""

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
    upper_bound: object = None
    gap: object = None
    sdpa: object = None


@dataclass(frozen=True)
class RunReport:
    label: str
    entries: tuple = ()
    oracle_value: object = None
    oracle_n: object = None
    oracle_levels: object = None
    total_time: float = 0.0


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except OrderTooSmall:
        raise
    except Exception as exc:
        raise StageFailure(name, exc) from exc


def _resolve_problem(cfg: RunConfig):
    sources = [s for s in (cfg.builtin, cfg.config_path, cfg.problem) if s]
    if len(sources) != 1:
        raise ValueError("exactly one of builtin, config_path, problem is required")
    if cfg.problem is not None:
        return cfg.problem
    if cfg.builtin:
        return builtin_problem(cfg.builtin)
    return load_problem(cfg.config_path)


def _lp_for_order(problem, order: int):
    if isinstance(problem, RawMeasureLpProblem):
        return problem.with_test_degree(2 * order - 1).lp
    return build_polynomial_lp(problem, default_test_degree(order, problem.r))


def _minimum_order(problem) -> int:
    if isinstance(problem, RawMeasureLpProblem):
        return min_order(problem.with_test_degree(1).lp)
    probe = build_polynomial_lp(problem, 1)
    # also the smallest order whose default test degree reaches 1
    r_eff = max(problem.r, 1)
    return max(min_order(probe), (r_eff + 2) // 2)


def parse_orders(text: str, minimum: int) -> list:
    """Range syntax: "2", "1,2,3", "1..3"; "min" means the smallest valid order."""

    def one(tok: str) -> int:
        tok = tok.strip()
        if tok == "min":
            return minimum
        return int(tok)

    text = text.strip()
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = one(lo_text), one(hi_text)
        if hi < lo:
            raise ValueError(f"empty order range {text!r}")
        return list(range(lo, hi + 1))
    return [one(tok) for tok in text.split(",") if tok.strip()]


def _resolve_orders(cfg: RunConfig, minimum: int) -> list:
    orders = cfg.orders
    if isinstance(orders, str):
        orders = parse_orders(orders, minimum)
    orders = [int(d) for d in orders]
    if not orders:
        raise ValueError("orders must be nonempty")
    for d in orders:
        if d < minimum:
            raise OrderTooSmall(
                f"order {d} is below the minimum {minimum} needed to represent "
                f"every constraint polynomial"
            )
    return sorted(set(orders))


def _label_of(problem) -> str:
    label = getattr(problem, "label", "")
    return label or "custom"


def run(cfg: RunConfig) -> RunReport:
    """Solve the requested orders and assemble a report."""
    t_total = time.perf_counter()
    problem = _stage("config", _resolve_problem, cfg)
    label = _label_of(problem)

    minimum = _stage("build", _minimum_order, problem)
    orders = _resolve_orders(cfg, minimum)

    upper = None
    if cfg.oracle is not None:
        n_steps, levels = cfg.oracle
        upper = _stage("oracle", grid_search_upper_bound, problem, int(n_steps), int(levels))[0]

    entries = []
    previous_bound = None
    for d in orders:
        t_order = time.perf_counter()
        lp = _stage("build", _lp_for_order, problem, d)
        rel = _stage("assemble", assemble_sdp, lp, d)
        report = _stage("solve", solve_relaxation, rel, cfg.settings)

        sdpa_text = None
        if cfg.export_dir or cfg.keep_sdpa_text:
            sdpa_text = _stage("export", export_sdpa, to_standard_form(rel))
            if cfg.export_dir:
                path = os.path.join(cfg.export_dir, f"{label}_order{d}.dat-s")
                try:
                    with open(path, "w", encoding="ascii") as fh:
                        fh.write(sdpa_text)
                except OSError as exc:
                    raise StageFailure("export", IoError(str(exc))) from exc
            if not cfg.keep_sdpa_text:
                sdpa_text = None

        gap = None if upper is None else upper - report.lower_bound
        entries.append(OrderEntry(
            order=d,
            degree=2 * d,
            lower_bound=report.lower_bound,
            status=report.status,
            flat=report.flat,
            residual_inf=report.row_residual_inf,
            psd_min_eig=report.psd_min_eig,
            iterations=report.iterations,
            solve_time=report.solve_time,
            wall_time=time.perf_counter() - t_order,
            upper_bound=upper,
            gap=gap,
            sdpa=sdpa_text,
        ))

        if cfg.tol > 0 and report.status in OK_STATUSES:
            if gap is not None and gap <= cfg.tol:
                break
            if gap is None and previous_bound is not None \
                    and abs(report.lower_bound - previous_bound) <= cfg.tol:
                break
        previous_bound = report.lower_bound

    n_steps, levels = cfg.oracle if cfg.oracle is not None else (None, None)
    return RunReport(
        label=label,
        entries=tuple(entries),
        oracle_value=upper,
        oracle_n=n_steps,
        oracle_levels=levels,
        total_time=time.perf_counter() - t_total,
    )


def all_orders_solved(rep: RunReport) -> bool:
    return bool(rep.entries) and all(e.status in OK_STATUSES for e in rep.entries)


def report_to_dict(rep: RunReport) -> dict:
    entries = []
    for e in rep.entries:
        entries.append({
            "order": e.order,
            "degree": e.degree,
            "lower_bound": e.lower_bound,
            "status": e.status,
            "flat": e.flat,
            "residual_inf": e.residual_inf,
            "psd_min_eig": e.psd_min_eig,
            "iterations": e.iterations,
            "solve_time": e.solve_time,
            "wall_time": e.wall_time,
            "upper_bound": e.upper_bound,
            "gap": e.gap,
            "sdpa": e.sdpa,
        })
    return {
        "label": rep.label,
        "orders": entries,
        "oracle_value": rep.oracle_value,
        "oracle_n": rep.oracle_n,
        "oracle_levels": rep.oracle_levels,
        "total_time": rep.total_time,
    }


def report_from_dict(data: dict) -> RunReport:
    entries = tuple(
        OrderEntry(
            order=int(e["order"]),
            degree=int(e["degree"]),
            lower_bound=float(e["lower_bound"]),
            status=str(e["status"]),
            flat=bool(e["flat"]),
            residual_inf=float(e["residual_inf"]),
            psd_min_eig=float(e["psd_min_eig"]),
            iterations=int(e["iterations"]),
            solve_time=float(e["solve_time"]),
            wall_time=float(e["wall_time"]),
            upper_bound=e.get("upper_bound"),
            gap=e.get("gap"),
            sdpa=e.get("sdpa"),
        )
        for e in data["orders"]
    )
    return RunReport(
        label=str(data["label"]),
        entries=entries,
        oracle_value=data.get("oracle_value"),
        oracle_n=data.get("oracle_n"),
        oracle_levels=data.get("oracle_levels"),
        total_time=float(data.get("total_time", 0.0)),
    )


_TABLE_HEADER = f"{'order':>5}  {'degree':>6}  {'lower_bound':>15}  {'status':<15}  {'flat':<4}  {'time[s]':>8}"


def format_report(rep: RunReport, fmt: str = "table") -> str:
    """Render a report; the json form round-trips through report_from_dict."""
    if fmt == "json":
        return json.dumps(report_to_dict(rep), indent=2)
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}; expected one of {REPORT_FORMATS}")
    lines = [_TABLE_HEADER]
    for e in rep.entries:
        flat = "yes" if e.flat else "no"
        lines.append(
            f"{e.order:>5}  {e.degree:>6}  {e.lower_bound:>15.9g}  {e.status:<15}  "
            f"{flat:<4}  {e.wall_time:>8.2f}"
        )
    if rep.oracle_value is not None:
        lines.append(
            f"oracle upper bound: {rep.oracle_value:.9g} "
            f"(N={rep.oracle_n}, levels={rep.oracle_levels})"
        )
        if rep.entries:
            lines.append(f"final gap: {rep.entries[-1].gap:.9g}")
    return "\n".join(lines)
