"""Conic backend: standard form, solver adapters, and SDPA file exchange.

The standard form fixes the decision vector as the concatenated
pseudo-moments of all measures (followed by slack variables for converted
inequality rows), a linear objective to minimize, affine equality rows,
and positive semidefinite constraints given as affine matrix maps
F(y) = sum_v y_v A_v + B.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .errors import IoError
from .poly import format_monomial
from .relaxation import (
    MomentRelaxation,
    SolveReport,
    flatness_check,
    psd_min_eigenvalue,
    row_residuals,
    unscale_moments,
)


class NoBackend(RuntimeError):
    """No conic solver is registered."""


class SolverFailure(RuntimeError):
    """The backend crashed or returned no usable solution."""

    def __init__(self, status: str, message: str = ""):
        super().__init__(f"solver failed with status {status!r}"
                         + (f": {message}" if message else ""))
        self.status = status


@dataclass(frozen=True)
class PsdBlockMap:
    """Affine matrix map F(y) = sum_v y_v A_v + B, constrained PSD.

    ``entries`` holds the upper triangle as (var, i, j, value) with
    0-based indices and i <= j; var = -1 addresses the constant part B.
    """

    side: int
    entries: tuple[tuple[int, int, int, float], ...]
    label: str = ""


@dataclass(frozen=True)
class SdpStandardForm:
    nvars: int
    objective: tuple[float, ...]
    blocks: tuple[PsdBlockMap, ...]
    eq_coefficients: tuple[tuple[tuple[int, float], ...], ...]
    eq_rhs: tuple[float, ...]
    var_labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class BackendSolution:
    y: np.ndarray
    objective: float
    status: str  # optimal | near_optimal | infeasible | unbounded | numerical_error
    iterations: int = 0
    primal_residual: float = math.nan
    dual_residual: float = math.nan
    solve_time: float = 0.0
    backend: str = ""
    raw_status: str = ""


@dataclass(frozen=True)
class SolveSettings:
    backend: str = ""
    max_iter: int = 200
    tol_feas: float = 1e-8
    tol_gap_abs: float = 1e-8
    tol_gap_rel: float = 1e-8
    time_limit: float = 0.0  # seconds; 0 disables the limit
    verbose: bool = False


def to_standard_form(rel: MomentRelaxation) -> SdpStandardForm:
    """Convert a relaxation to standard form, one slack per inequality row."""
    ineq_rows = [row for row in rel.affine_rows if row.relation == "le"]
    nvars = rel.nvars + len(ineq_rows)

    objective = [0.0] * nvars
    for gidx, c in rel.objective:
        objective[gidx] = c

    blocks = []
    for block in rel.psd_blocks:
        entries = []
        for i, j, form in block.entries:
            for gidx, c in form:
                entries.append((gidx, i, j, c))
        blocks.append(PsdBlockMap(side=block.side, entries=tuple(entries),
                                  label=block.label))

    eq_coefficients = []
    eq_rhs = []
    slack = rel.nvars
    for row in rel.affine_rows:
        if row.relation == "eq":
            eq_coefficients.append(row.coefficients)
            eq_rhs.append(row.rhs)
        else:
            eq_coefficients.append(tuple(row.coefficients) + ((slack, 1.0),))
            eq_rhs.append(row.rhs)
            blocks.append(PsdBlockMap(side=1, entries=((slack, 0, 0, 1.0),),
                                      label=f"slack {row.label}".strip()))
            slack += 1

    labels = []
    for mi, basis in enumerate(rel.bases):
        labels.extend(f"nu[{mi}] {format_monomial(m)}" for m in basis)
    labels.extend(f"slack[{k}]" for k in range(len(ineq_rows)))

    return SdpStandardForm(
        nvars=nvars,
        objective=tuple(objective),
        blocks=tuple(blocks),
        eq_coefficients=tuple(eq_coefficients),
        eq_rhs=tuple(eq_rhs),
        var_labels=tuple(labels),
    )


# -- backends ----------------------------------------------------------------

_BACKENDS: dict = {}


def register_backend(name: str, solver) -> None:
    """Register a callable (SdpStandardForm, SolveSettings) -> BackendSolution."""
    _BACKENDS[name] = solver


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def _svec_rows(side: int):
    """Scaled upper-triangle positions in the order the PSD cone expects."""
    pos = {}
    k = 0
    for col in range(side):
        for row in range(col + 1):
            pos[(row, col)] = k
            k += 1
    return pos


def _solve_clarabel(form: SdpStandardForm, settings: SolveSettings) -> BackendSolution:
    import clarabel

    n = form.nvars
    rows_a = []
    cols_a = []
    vals_a = []
    b = []
    cones = []
    offset = 0

    for coeffs, rhs in zip(form.eq_coefficients, form.eq_rhs):
        for gidx, c in coeffs:
            rows_a.append(offset)
            cols_a.append(gidx)
            vals_a.append(c)
        b.append(rhs)
        offset += 1
    if form.eq_rhs:
        cones.append(clarabel.ZeroConeT(len(form.eq_rhs)))

    root2 = math.sqrt(2.0)
    for block in form.blocks:
        if block.side == 1:
            # scalar nonnegativity: F(y) = sum y A + B >= 0
            const = 0.0
            for var, _, _, value in block.entries:
                if var < 0:
                    const += value
                else:
                    rows_a.append(offset)
                    cols_a.append(var)
                    vals_a.append(-value)
            b.append(const)
            offset += 1
            cones.append(clarabel.NonnegativeConeT(1))
            continue
        pos = _svec_rows(block.side)
        m = block.side * (block.side + 1) // 2
        consts = np.zeros(m)
        for var, i, j, value in block.entries:
            scale = 1.0 if i == j else root2
            k = pos[(min(i, j), max(i, j))]
            if var < 0:
                consts[k] += scale * value
            else:
                rows_a.append(offset + k)
                cols_a.append(var)
                vals_a.append(-scale * value)
        b.extend(consts.tolist())
        offset += m
        cones.append(clarabel.PSDTriangleConeT(block.side))

    A = sparse.csc_matrix(
        (vals_a, (rows_a, cols_a)), shape=(offset, n)
    )
    P = sparse.csc_matrix((n, n))
    q = np.asarray(form.objective, dtype=float)

    opts = clarabel.DefaultSettings()
    opts.verbose = settings.verbose
    opts.max_iter = settings.max_iter
    opts.tol_feas = settings.tol_feas
    opts.tol_gap_abs = settings.tol_gap_abs
    opts.tol_gap_rel = settings.tol_gap_rel
    if settings.time_limit > 0:
        opts.time_limit = settings.time_limit

    t0 = time.perf_counter()
    try:
        solver = clarabel.DefaultSolver(P, q, A, np.asarray(b), cones, opts)
        result = solver.solve()
    except BaseException as exc:  # the native layer can raise panics
        raise SolverFailure("crashed", str(exc)) from exc
    elapsed = time.perf_counter() - t0

    raw = str(result.status).rsplit(".", 1)[-1]
    status = {
        "Solved": "optimal",
        "AlmostSolved": "near_optimal",
        "PrimalInfeasible": "infeasible",
        "AlmostPrimalInfeasible": "infeasible",
        "DualInfeasible": "unbounded",
        "AlmostDualInfeasible": "unbounded",
    }.get(raw, "numerical_error")

    return BackendSolution(
        y=np.asarray(result.x, dtype=float),
        objective=float(result.obj_val),
        status=status,
        iterations=int(result.iterations),
        primal_residual=float(result.r_prim),
        dual_residual=float(result.r_dual),
        solve_time=elapsed,
        backend="clarabel",
        raw_status=raw,
    )


try:  # pragma: no cover - exercised implicitly by every solve
    import clarabel as _clarabel_probe  # noqa: F401

    register_backend("clarabel", _solve_clarabel)
except ImportError:  # pragma: no cover
    pass


def solve(form: SdpStandardForm, settings: SolveSettings = SolveSettings()) -> BackendSolution:
    """Solve the standard form with the requested (or only) backend."""
    if not _BACKENDS:
        raise NoBackend("no conic solver is registered")
    name = settings.backend or ("clarabel" if "clarabel" in _BACKENDS
                                else next(iter(sorted(_BACKENDS))))
    if name not in _BACKENDS:
        raise NoBackend(f"backend {name!r} is not registered; "
                        f"available: {available_backends()}")
    solution = _BACKENDS[name](form, settings)
    return replace(solution, backend=name) if not solution.backend else solution


def solve_relaxation(rel: MomentRelaxation, settings: SolveSettings = SolveSettings()) -> SolveReport:
    """Solve a moment relaxation and attach diagnostics to the result."""
    form = to_standard_form(rel)
    solution = solve(form, settings)
    y = solution.y[:rel.nvars] if solution.y is not None and len(solution.y) else np.zeros(rel.nvars)

    usable = solution.status in ("optimal", "near_optimal")
    if usable:
        moments = unscale_moments(rel, y)
        residual = float(np.max(row_residuals(rel, y), initial=0.0))
        min_eig = psd_min_eigenvalue(rel, y)
        flat = all(
            flatness_check(mom, rel.order, variables=rel.lp.measures[mi].variables)
            for mi, mom in enumerate(moments)
        )
    else:
        moments = tuple({} for _ in rel.bases)
        residual = math.nan
        min_eig = math.nan
        flat = False

    return SolveReport(
        order=rel.order,
        lower_bound=solution.objective if usable else math.nan,
        status=solution.status,
        row_residual_inf=residual,
        psd_min_eig=min_eig,
        flat=flat,
        moments=moments,
        solve_time=solution.solve_time,
        iterations=solution.iterations,
        backend=solution.backend,
        message=solution.raw_status,
    )


# -- SDPA sparse format ------------------------------------------------------
#
# The exported file states the SDPA primal
#     min c'x  s.t.  X = sum_i x_i F_i - F0,  X >= 0 (block diagonal)
# with our decision vector as x.  PSD blocks map one-to-one; the equality
# rows are folded into one diagonal block holding a +/- pair per row.


def _fmt(value: float) -> str:
    return repr(float(value))


def export_sdpa(form: SdpStandardForm, sink=None) -> str:
    """Write the standard form as SDPA sparse text (.dat-s); returns the text."""
    if not form.blocks and not form.eq_rhs:
        raise ValueError("cannot export a form with no constraints")

    lines = []
    n_eq = len(form.eq_rhs)
    n_blocks = len(form.blocks) + (1 if n_eq else 0)
    if n_eq:
        lines.append(f'"momocp: eq_rows={n_eq} in block {n_blocks} as +/- pairs')

    lines.append(str(form.nvars))
    lines.append(str(n_blocks))
    sizes = [str(block.side) for block in form.blocks]
    if n_eq:
        sizes.append(str(-2 * n_eq))
    lines.append(" ".join(sizes))
    lines.append(" ".join(_fmt(c) for c in form.objective))

    for bi, block in enumerate(form.blocks, start=1):
        ordered = sorted(block.entries, key=lambda e: (e[0], e[1], e[2]))
        for var, i, j, value in ordered:
            if value == 0.0:
                continue
            if var < 0:
                # constant part B enters as F0 = -B
                lines.append(f"0 {bi} {i + 1} {j + 1} {_fmt(-value)}")
            else:
                lines.append(f"{var + 1} {bi} {i + 1} {j + 1} {_fmt(value)}")

    if n_eq:
        bi = n_blocks
        for k, (coeffs, rhs) in enumerate(zip(form.eq_coefficients, form.eq_rhs)):
            up, dn = 2 * k + 1, 2 * k + 2
            for gidx, c in coeffs:
                if c == 0.0:
                    continue
                lines.append(f"{gidx + 1} {bi} {up} {up} {_fmt(c)}")
                lines.append(f"{gidx + 1} {bi} {dn} {dn} {_fmt(-c)}")
            if rhs != 0.0:
                lines.append(f"0 {bi} {up} {up} {_fmt(rhs)}")
                lines.append(f"0 {bi} {dn} {dn} {_fmt(-rhs)}")

    text = "\n".join(lines) + "\n"
    if sink is not None:
        try:
            if hasattr(sink, "write"):
                sink.write(text)
            else:
                with open(sink, "w", encoding="ascii") as fh:
                    fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write SDPA file: {exc}") from exc
    return text


def parse_sdpa(source) -> SdpStandardForm:
    """Inverse of export_sdpa; accepts text, a path, or a readable object."""
    if hasattr(source, "read"):
        text = source.read()
    elif hasattr(source, "__fspath__"):
        try:
            with open(source, "r", encoding="ascii") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read SDPA file: {exc}") from exc
    elif isinstance(source, str) and "\n" not in source:
        try:
            with open(source, "r", encoding="ascii") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read SDPA file: {exc}") from exc
    else:
        text = source

    eq_block = 0
    n_eq = 0
    data_lines = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        if line.startswith('"') or line.startswith("*"):
            if "eq_rows=" in line:
                n_eq = int(line.split("eq_rows=")[1].split()[0])
                eq_block = int(line.split("in block")[1].split()[0])
            continue
        data_lines.append(line)

    if len(data_lines) < 4:
        raise IoError("SDPA file is truncated")
    try:
        nvars = int(data_lines[0])
        n_blocks = int(data_lines[1])
        sizes = [int(tok) for tok in data_lines[2].replace(",", " ").split()]
    except ValueError as exc:
        raise IoError(f"malformed SDPA header: {exc}") from exc
    if len(sizes) != n_blocks:
        raise IoError(f"block count {n_blocks} does not match sizes {sizes}")
    try:
        objective = tuple(float(tok) for tok in data_lines[3].replace(",", " ").split())
    except ValueError as exc:
        raise IoError(f"malformed SDPA objective line: {exc}") from exc
    if len(objective) != nvars:
        raise IoError(f"objective length {len(objective)} does not match nvars {nvars}")

    block_entries: dict[int, list] = {k: [] for k in range(1, n_blocks + 1)}
    for line in data_lines[4:]:
        toks = line.split()
        if len(toks) != 5:
            raise IoError(f"malformed SDPA entry: {line!r}")
        try:
            mat, blk = int(toks[0]), int(toks[1])
            i, j, val = int(toks[2]), int(toks[3]), float(toks[4])
        except ValueError as exc:
            raise IoError(f"malformed SDPA entry: {line!r}") from exc
        if blk not in block_entries:
            raise IoError(f"entry references unknown block {blk}: {line!r}")
        block_entries[blk].append((mat, i, j, val))

    blocks = []
    for k in range(1, n_blocks + 1):
        if k == eq_block:
            continue
        side = abs(sizes[k - 1])
        entries = []
        for mat, i, j, val in block_entries[k]:
            if mat == 0:
                entries.append((-1, i - 1, j - 1, -val))
            else:
                entries.append((mat - 1, i - 1, j - 1, val))
        blocks.append(PsdBlockMap(side=side, entries=tuple(entries)))

    eq_coefficients = []
    eq_rhs = []
    if n_eq:
        coeff_maps = [dict() for _ in range(n_eq)]
        rhs = [0.0] * n_eq
        for mat, i, j, val in block_entries[eq_block]:
            if i != j:
                raise IoError("equality block must be diagonal")
            if i % 2 == 0:
                continue  # the mirrored negative copy
            row = (i - 1) // 2
            if mat == 0:
                rhs[row] = val
            else:
                coeff_maps[row][mat - 1] = val
        eq_coefficients = [tuple(sorted(cm.items())) for cm in coeff_maps]
        eq_rhs = rhs

    return SdpStandardForm(
        nvars=nvars,
        objective=objective,
        blocks=tuple(blocks),
        eq_coefficients=tuple(eq_coefficients),
        eq_rhs=tuple(eq_rhs),
    )


def standard_form_signature(form: SdpStandardForm):
    """Canonical comparison key: structure only, entry order and labels ignored."""
    return (
        form.nvars,
        form.objective,
        tuple((b.side, tuple(sorted(b.entries))) for b in form.blocks),
        tuple(form.eq_coefficients),
        tuple(form.eq_rhs),
    )
