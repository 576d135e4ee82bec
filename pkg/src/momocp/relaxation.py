"""Truncation of a measure LP into a semidefinite program on pseudo-moments.

At order d, each measure is represented by the vector of its pseudo-moments
up to degree 2d.  Being a moment vector is relaxed to positive
semidefiniteness of the moment matrix and of one localizing matrix per
support inequality; support equalities pin localizing entries to zero, and
the LP rows and objective become affine expressions of the moments.

Time and state are affinely rescaled to [-1, 1] before assembly (moment
matrices of wide or offset boxes are badly conditioned) and the returned
moments are expressed back in the original coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .measure_lp import MeasureLP, linear_bounds, max_constraint_degree, validate_lp
from .poly import NVARS, VAR_INDEX, Monomial, Polynomial, grlex_key


class OrderTooSmall(ValueError):
    """The relaxation order cannot represent every constraint polynomial."""


def monomials_up_to(variables: tuple[str, ...], degree: int) -> tuple[Monomial, ...]:
    """All monomials in the given variables with total degree <= degree,
    as full-universe exponent tuples in graded lex order."""
    idxs = sorted(VAR_INDEX[v] for v in variables)
    out = []
    for total in range(degree + 1):
        for combo in combinations_with_replacement(idxs, total):
            mono = [0] * NVARS
            for i in combo:
                mono[i] += 1
            out.append(tuple(mono))
    return tuple(sorted(out, key=grlex_key))


@dataclass(frozen=True)
class LinearMatrixBlock:
    """Symmetric matrix whose entries are linear forms in the moment vector.

    ``entries`` lists the upper triangle: (i, j, ((variable, coeff), ...)).
    """

    measure: int
    label: str
    side: int
    entries: tuple[tuple[int, int, tuple[tuple[int, float], ...]], ...]


@dataclass(frozen=True)
class AffineRow:
    """One affine constraint sum_k c_k y_k (= | <=) rhs on the moment vector."""

    coefficients: tuple[tuple[int, float], ...]
    relation: str
    rhs: float
    label: str = ""


@dataclass(frozen=True)
class MomentRelaxation:
    order: int
    nvars: int
    lp: MeasureLP = field(repr=False)
    measure_offsets: tuple[int, ...]
    bases: tuple[tuple[Monomial, ...], ...] = field(repr=False)
    scalings: tuple[tuple[tuple[str, float, float], ...], ...]
    psd_blocks: tuple[LinearMatrixBlock, ...] = field(repr=False)
    affine_rows: tuple[AffineRow, ...] = field(repr=False)
    objective: tuple[tuple[int, float], ...] = field(repr=False)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of solving one relaxation order."""

    order: int
    lower_bound: float
    status: str  # optimal | near_optimal | infeasible | unbounded | numerical_error
    row_residual_inf: float
    psd_min_eig: float
    flat: bool
    moments: tuple[dict, ...]
    solve_time: float = 0.0
    iterations: int = 0
    backend: str = ""
    message: str = ""


def min_order(lp: MeasureLP) -> int:
    """Smallest order whose moment vector can represent every constraint."""
    return max(1, math.ceil(max_constraint_degree(lp) / 2))


def _detect_box(g: Polynomial):
    """Recognize a univariate concave quadratic; return (var, lo, hi) or None."""
    used = g.variables_used()
    if len(used) != 1:
        return None
    var = next(iter(used))
    if g.degree_in(var) != 2:
        return None
    i = VAR_INDEX[var]
    a2 = a1 = a0 = 0.0
    for mono, coef in g.terms.items():
        if mono[i] == 2:
            a2 = coef
        elif mono[i] == 1:
            a1 = coef
        else:
            a0 = coef
    if a2 >= 0:
        return None
    disc = a1 * a1 - 4 * a2 * a0
    if disc <= 0:
        return None
    root = math.sqrt(disc)
    lo = (-a1 + root) / (2 * a2)
    hi = (-a1 - root) / (2 * a2)
    return (var, min(lo, hi), max(lo, hi))


def _measure_scaling(support) -> tuple[tuple[str, float, float], ...]:
    """Affine change var = mid + half * var' per box-constrained variable."""
    intervals: dict[str, tuple[float, float]] = dict(linear_bounds(support))
    for g in support.inequalities:
        box = _detect_box(g)
        if box is not None and box[0] not in intervals:
            intervals[box[0]] = (box[1], box[2])
    found: dict[str, tuple[float, float]] = {}
    for var, (lo, hi) in intervals.items():
        if not lo < hi:
            continue
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        if abs(mid) < 1e-14 and abs(half - 1.0) < 1e-14:
            continue  # already [-1, 1]
        found[var] = (mid, half)
    return tuple((v, mid, half) for v, (mid, half) in sorted(found.items()))


def _apply_scaling(p: Polynomial, scaling) -> Polynomial:
    for var, mid, half in scaling:
        replacement = Polynomial.constant(mid) + half * Polynomial.variable(var)
        p = p.substitute(var, replacement)
    return p


def _normalize(p: Polynomial) -> Polynomial:
    peak = max(abs(c) for c in p.terms.values())
    return p * (1.0 / peak)


def assemble_sdp(lp: MeasureLP, d: int) -> MomentRelaxation:
    """Order-d moment relaxation of the measure LP."""
    bad = validate_lp(lp)
    if bad:
        raise ValueError("cannot relax an ill-formed LP: " + "; ".join(bad))
    need = min_order(lp)
    if d < need:
        raise OrderTooSmall(f"order {d} cannot represent degree-"
                            f"{max_constraint_degree(lp)} data; need at least {need}")

    scalings = tuple(_measure_scaling(sup) for sup in lp.measures)

    bases: list[tuple[Monomial, ...]] = []
    index_maps: list[dict[Monomial, int]] = []
    offsets: list[int] = []
    total = 0
    for sup in lp.measures:
        basis = monomials_up_to(sup.variables, 2 * d)
        bases.append(basis)
        index_maps.append({m: k for k, m in enumerate(basis)})
        offsets.append(total)
        total += len(basis)

    def functional(mi: int, p: Polynomial) -> tuple[tuple[int, float], ...]:
        # the pseudo-moment functional: polynomial -> affine form in y
        combined: dict[int, float] = {}
        for mono, coef in p.terms.items():
            pos = index_maps[mi].get(mono)
            if pos is None:
                raise OrderTooSmall(f"degree of {p} exceeds moment vector of order {d}")
            gidx = offsets[mi] + pos
            combined[gidx] = combined.get(gidx, 0.0) + coef
        return tuple(sorted(combined.items()))

    def mono_mul(a: Monomial, b: Monomial) -> Monomial:
        return tuple(ea + eb for ea, eb in zip(a, b))

    blocks: list[LinearMatrixBlock] = []
    rows: list[AffineRow] = []

    for mi, sup in enumerate(lp.measures):
        basis = bases[mi]
        half_basis = [m for m in basis if sum(m) <= d]

        entries = []
        for i in range(len(half_basis)):
            for j in range(i, len(half_basis)):
                prod = mono_mul(half_basis[i], half_basis[j])
                entries.append((i, j, functional(mi, Polynomial({prod: 1.0}))))
        blocks.append(LinearMatrixBlock(
            measure=mi, label=f"moment nu[{mi}]", side=len(half_basis),
            entries=tuple(entries),
        ))

        for g in sup.inequalities:
            gs = _normalize(_apply_scaling(g, scalings[mi]))
            dg = math.ceil(gs.total_degree / 2)
            sub_basis = [m for m in basis if sum(m) <= d - dg]
            entries = []
            for i in range(len(sub_basis)):
                for j in range(i, len(sub_basis)):
                    pair = mono_mul(sub_basis[i], sub_basis[j])
                    shifted = Polynomial({mono_mul(pair, m): c for m, c in gs.terms.items()})
                    entries.append((i, j, functional(mi, shifted)))
            blocks.append(LinearMatrixBlock(
                measure=mi, label=f"localizing nu[{mi}] {g}", side=len(sub_basis),
                entries=tuple(entries),
            ))

        for h in sup.equalities:
            hs = _normalize(_apply_scaling(h, scalings[mi]))
            dh = math.ceil(hs.total_degree / 2)
            # all distinct products of the localizing structure: monomials
            # up to degree 2(d - dh), each forcing one affine row to zero
            for m in monomials_up_to(sup.variables, 2 * (d - dh)):
                shifted = Polynomial({mono_mul(m, hm): c for hm, c in hs.terms.items()})
                rows.append(AffineRow(
                    coefficients=functional(mi, shifted),
                    relation="eq",
                    rhs=0.0,
                    label=f"support nu[{mi}] ({h}) * {Polynomial({m: 1.0})}",
                ))

    for row in lp.rows:
        combined: dict[int, float] = {}
        for mi, p in row.coefficients:
            for gidx, c in functional(mi, _apply_scaling(p, scalings[mi])):
                combined[gidx] = combined.get(gidx, 0.0) + c
        rows.append(AffineRow(
            coefficients=tuple(sorted(combined.items())),
            relation=row.relation,
            rhs=row.rhs,
            label=row.label,
        ))

    objective: dict[int, float] = {}
    for mi, p in lp.objective:
        for gidx, c in functional(mi, _apply_scaling(p, scalings[mi])):
            objective[gidx] = objective.get(gidx, 0.0) + c

    return MomentRelaxation(
        order=d,
        nvars=total,
        lp=lp,
        measure_offsets=tuple(offsets),
        bases=tuple(bases),
        scalings=scalings,
        psd_blocks=tuple(blocks),
        affine_rows=tuple(rows),
        objective=tuple(sorted(objective.items())),
    )


def unscale_moments(rel: MomentRelaxation, y) -> tuple[dict, ...]:
    """Per-measure pseudo-moments in the original coordinates."""
    result = []
    for mi, basis in enumerate(rel.bases):
        index_map = {m: k for k, m in enumerate(basis)}
        offset = rel.measure_offsets[mi]
        scaling = rel.scalings[mi]
        moments = {}
        for mono in basis:
            expanded = _apply_scaling(Polynomial({mono: 1.0}), scaling)
            moments[mono] = float(sum(
                c * y[offset + index_map[m]] for m, c in expanded.terms.items()
            ))
        result.append(moments)
    return tuple(result)


def block_matrix(block: LinearMatrixBlock, y) -> np.ndarray:
    """Evaluate a linear matrix block at a moment vector."""
    mat = np.zeros((block.side, block.side))
    for i, j, form in block.entries:
        val = sum(c * y[g] for g, c in form)
        mat[i, j] = val
        mat[j, i] = val
    return mat


def row_residuals(rel: MomentRelaxation, y) -> np.ndarray:
    """Violation per affine row: |error| for equalities, positive part for bounds."""
    out = np.zeros(len(rel.affine_rows))
    for k, row in enumerate(rel.affine_rows):
        val = sum(c * y[g] for g, c in row.coefficients)
        out[k] = abs(val - row.rhs) if row.relation == "eq" else max(0.0, val - row.rhs)
    return out


def psd_min_eigenvalue(rel: MomentRelaxation, y) -> float:
    worst = math.inf
    for block in rel.psd_blocks:
        eigs = np.linalg.eigvalsh(block_matrix(block, y))
        worst = min(worst, float(eigs[0]))
    return worst


def _numerical_rank(mat: np.ndarray, tol: float) -> int:
    if mat.size == 0:
        return 0
    sigma = np.linalg.svd(mat, compute_uv=False)
    if sigma[0] <= 0:
        return 0
    return int(np.sum(sigma >= tol * sigma[0]))


def flatness_check(moments, d: int, tol: float = 1e-6, variables: tuple[str, ...] = None) -> bool:
    """Rank-stabilization certificate: rank M_d equals rank M_(d-1).

    ``moments`` maps full-universe exponent tuples to values; ``variables``
    defaults to every variable appearing with a nonzero exponent.
    """
    if variables is None:
        seen = set()
        for mono in moments:
            for i, e in enumerate(mono):
                if e:
                    seen.add(i)
        variables = tuple(name for name, i in VAR_INDEX.items() if i in seen)
    if d < 1:
        return True

    def moment_matrix(k: int) -> np.ndarray:
        basis = monomials_up_to(variables, k)
        mat = np.zeros((len(basis), len(basis)))
        for i, mi in enumerate(basis):
            for j, mj in enumerate(basis):
                prod = tuple(a + b for a, b in zip(mi, mj))
                mat[i, j] = moments[prod]
        return mat

    return _numerical_rank(moment_matrix(d), tol) == _numerical_rank(moment_matrix(d - 1), tol)
