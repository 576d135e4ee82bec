"""Solver-agnostic linear programs over nonnegative measures.

A :class:`MeasureLP` is a list of measures, each supported on a basic
semialgebraic set, together with linear functional constraints on their
moments and a linear objective to minimize.  This is the handoff point
between problem construction and the moment relaxation: everything
upstream produces one of these, everything downstream consumes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .poly import VARIABLES, Polynomial


@dataclass(frozen=True)
class SupportSet:
    """Basic semialgebraic support of one measure.

    ``inequalities`` are polynomials g with meaning g >= 0 on the support,
    ``equalities`` are polynomials h with meaning h = 0.  ``variables``
    lists the coordinates this measure actually lives on.
    """

    variables: tuple[str, ...]
    inequalities: tuple[Polynomial, ...] = ()
    equalities: tuple[Polynomial, ...] = ()

    def __post_init__(self):
        for name in self.variables:
            if name not in VARIABLES:
                raise ValueError(f"unknown variable {name!r}")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variables in support")


@dataclass(frozen=True)
class LinearFunctionalRow:
    """One linear constraint sum_i <p_i, nu_i> (= | <=) rhs.

    ``coefficients`` pairs a measure index with the polynomial integrated
    against that measure.  ``label`` is free-form diagnostic text.
    """

    coefficients: tuple[tuple[int, Polynomial], ...]
    relation: str
    rhs: float
    label: str = ""

    def __post_init__(self):
        if self.relation not in ("eq", "le"):
            raise ValueError(f"relation must be 'eq' or 'le', got {self.relation!r}")


@dataclass(frozen=True)
class MeasureLP:
    """Minimize a linear functional of measure moments subject to rows."""

    measures: tuple[SupportSet, ...]
    objective: tuple[tuple[int, Polynomial], ...]
    rows: tuple[LinearFunctionalRow, ...]
    label: str = ""


def _constant_term(p: Polynomial) -> float:
    return p.terms.get((0,) * len(VARIABLES), 0.0)


def _univariate_parts(p: Polynomial) -> dict[str, list[tuple[int, float]]] | None:
    """Split p into per-variable univariate terms, or None if any term mixes variables."""
    parts: dict[str, list[tuple[int, float]]] = {}
    for mono, coef in p.terms.items():
        active = [(i, e) for i, e in enumerate(mono) if e > 0]
        if not active:
            continue
        if len(active) > 1:
            return None
        i, e = active[0]
        parts.setdefault(VARIABLES[i], []).append((e, coef))
    return parts


def _sign_directions(support: SupportSet) -> dict[str, set[int]]:
    """Pure sign constraints: +1 for a row implying v >= 0, -1 for v <= 0."""
    signs: dict[str, set[int]] = {}
    for g in support.inequalities:
        parts = _univariate_parts(g)
        if parts is None or len(parts) != 1 or _constant_term(g) != 0.0:
            continue
        (var, terms), = parts.items()
        if len(terms) == 1 and terms[0][0] == 1:
            signs.setdefault(var, set()).add(1 if terms[0][1] > 0 else -1)
    return signs


def linear_bounds(support: SupportSet) -> dict[str, tuple[float, float]]:
    """Interval bounds implied by univariate linear inequalities c1*v + c0 >= 0."""
    lows: dict[str, float] = {}
    highs: dict[str, float] = {}
    for g in support.inequalities:
        parts = _univariate_parts(g)
        if parts is None or len(parts) != 1:
            continue
        (var, terms), = parts.items()
        if len(terms) != 1 or terms[0][0] != 1:
            continue
        c1 = terms[0][1]
        bound = -_constant_term(g) / c1
        if c1 > 0:
            lows[var] = max(bound, lows.get(var, -float("inf")))
        else:
            highs[var] = min(bound, highs.get(var, float("inf")))
    return {
        var: (lows[var], highs[var])
        for var in lows.keys() & highs.keys()
        if lows[var] <= highs[var]
    }


def bounded_variables(support: SupportSet) -> set[str]:
    """Variables whose boundedness follows syntactically from the support.

    Three patterns are recognized: a pair of univariate linear inequalities
    giving a two-sided interval, a univariate inequality of even degree with
    negative leading coefficient (a box constraint like
    (x - lo)(hi - x) >= 0), and an equality whose terms are single-variable
    powers summing to a positive constant where every term is certifiably
    nonnegative (a sphere slice like z^s + w^s - 1 = 0, with sign
    constraints supplying the certificate for odd powers).
    """
    bounded: set[str] = set(linear_bounds(support))
    signs = _sign_directions(support)

    for g in support.inequalities:
        parts = _univariate_parts(g)
        if parts is None or len(parts) != 1:
            continue
        (var, terms), = parts.items()
        deg = max(e for e, _ in terms)
        lead = sum(c for e, c in terms if e == deg)
        if deg >= 2 and deg % 2 == 0 and lead < 0:
            bounded.add(var)

    for h in support.equalities:
        parts = _univariate_parts(h)
        if parts is None or not parts:
            continue
        if _constant_term(h) >= 0:
            # need the form  sum of powers = positive constant
            continue
        ok = True
        for var, terms in parts.items():
            if len(terms) != 1:
                ok = False
                break
            e, c = terms[0]
            if e % 2 == 0 and c > 0:
                continue
            if e % 2 == 1 and c > 0 and 1 in signs.get(var, set()):
                continue
            if e % 2 == 1 and c < 0 and -1 in signs.get(var, set()):
                continue
            ok = False
            break
        if ok:
            bounded.update(parts.keys())

    return bounded


def _uses_only(p: Polynomial, allowed: tuple[str, ...]) -> bool:
    return p.variables_used() <= set(allowed)


def validate_lp(lp: MeasureLP) -> list[str]:
    """Check structural invariants; an empty list means the LP is well formed."""
    problems: list[str] = []

    for mi, sup in enumerate(lp.measures):
        for g in sup.inequalities:
            if not _uses_only(g, sup.variables):
                problems.append(f"inactive-variable: measure {mi} inequality {g} "
                                f"leaves active set {sup.variables}")
        for h in sup.equalities:
            if not _uses_only(h, sup.variables):
                problems.append(f"inactive-variable: measure {mi} equality {h} "
                                f"leaves active set {sup.variables}")
        free = set(sup.variables) - bounded_variables(sup)
        for var in sorted(free):
            problems.append(f"unbounded-variable: measure {mi} variable {var} "
                            f"has no box or sphere constraint")

    if not lp.rows:
        problems.append("no-rows: the LP needs at least one moment constraint")

    n = len(lp.measures)
    for mi, p in lp.objective:
        if not 0 <= mi < n:
            problems.append(f"bad-measure-index: objective references measure {mi}")
        elif not _uses_only(p, lp.measures[mi].variables):
            problems.append(f"inactive-variable: objective term {p} on measure {mi}")
    for k, row in enumerate(lp.rows):
        for mi, p in row.coefficients:
            if not 0 <= mi < n:
                problems.append(f"bad-measure-index: row {k} references measure {mi}")
            elif not _uses_only(p, lp.measures[mi].variables):
                problems.append(f"inactive-variable: row {k} term {p} on measure {mi}")

    return problems


def max_constraint_degree(lp: MeasureLP) -> int:
    """Largest total degree over every polynomial appearing in the LP."""
    degree = 0
    for _, p in lp.objective:
        degree = max(degree, p.total_degree)
    for row in lp.rows:
        for _, p in row.coefficients:
            degree = max(degree, p.total_degree)
    for sup in lp.measures:
        for g in sup.inequalities:
            degree = max(degree, g.total_degree)
        for h in sup.equalities:
            degree = max(degree, h.total_degree)
    return degree


def dump_lp(lp: MeasureLP) -> str:
    """Human-readable text form of the LP, one line per row."""
    lines = []
    if lp.label:
        lines.append(f"# {lp.label}")
    for mi, sup in enumerate(lp.measures):
        geqs = ", ".join(f"{g} >= 0" for g in sup.inequalities)
        heqs = ", ".join(f"{h} = 0" for h in sup.equalities)
        body = "; ".join(s for s in (geqs, heqs) if s)
        lines.append(f"measure nu[{mi}] on ({', '.join(sup.variables)}): {body}")
    obj = " + ".join(f"<{p}, nu[{mi}]>" for mi, p in lp.objective)
    lines.append(f"minimize {obj}")
    for row in lp.rows:
        lhs = " + ".join(f"<{p}, nu[{mi}]>" for mi, p in row.coefficients)
        rel = "=" if row.relation == "eq" else "<="
        tag = f"  # {row.label}" if row.label else ""
        lines.append(f"{lhs} {rel} {row.rhs!r}{tag}")
    return "\n".join(lines)
