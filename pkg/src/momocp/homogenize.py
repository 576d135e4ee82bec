"""Compactification of the unbounded control direction.

The control u is mapped to a point (z, w) on the slice
z^s + w^s = 1, w >= 0 via z = u / (1 + u^s)^(1/s), w = 1 / (1 + u^s)^(1/s),
with u = +-infinity landing on (+-1, 0).  Clearing denominators turns the
running cost into the polynomial w^r * l(t, x, z/w), and the weak form of
the dynamics becomes a family of affine constraints on the moments of a
single measure over (t, x, z, w).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .measure_lp import LinearFunctionalRow, MeasureLP, SupportSet
from .poly import Polynomial
from .problems import OcpProblem, validate

SLICE_TOL = 1e-9


class DomainError(ValueError):
    """The control value is outside the domain of the slice map."""


class NotOnSlice(ValueError):
    """The point does not satisfy z^s + w^s = 1, w >= 0 within tolerance."""


class OddFreeControl(ValueError):
    """Sign-unrestricted control with odd exponent needs the split builder."""


@dataclass(frozen=True)
class SphereSlice:
    """The compact set of homogenized control directions."""

    s: int
    sign_restriction: str = "none"  # none | z_nonneg | z_nonpos

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"slice exponent must be positive, got {self.s}")
        if self.sign_restriction not in ("none", "z_nonneg", "z_nonpos"):
            raise ValueError(f"unknown sign restriction {self.sign_restriction!r}")
        if self.s % 2 == 1 and self.sign_restriction == "none":
            raise ValueError(f"slice with odd exponent {self.s} is unbounded "
                             f"without a sign restriction on z")


@dataclass(frozen=True)
class HomogenizedLagrangian:
    """The cleared running cost w^r * l(t, x, z/w) and its clearing exponent."""

    ltilde: Polynomial
    r: int


def map_control(u: float, s: int) -> tuple[float, float]:
    """Send a control value (possibly infinite) onto the slice."""
    if s < 1 or int(s) != s:
        raise ValueError(f"slice exponent must be a positive integer, got {s}")
    if math.isinf(u):
        return (1.0 if u > 0 else -1.0, 0.0)
    if s % 2 == 1 and u <= -1.0:
        raise DomainError(f"1 + u^{s} is not positive at u={u}")
    au = abs(u)
    if au <= 1.0:
        denom = (1.0 + u ** s) ** (1.0 / s)
        return (u / denom, 1.0 / denom)
    # factor |u| out of the root to avoid overflow for large controls
    inv = 1.0 / au
    scale = (inv ** s + 1.0) ** (1.0 / s)
    return (math.copysign(1.0, u) / scale, inv / scale)


def unmap_control(z: float, w: float, s: int, tol: float = SLICE_TOL) -> float:
    """Invert the slice map; (+-1, 0) goes back to +-infinity."""
    if w < -tol:
        raise NotOnSlice(f"w={w} is negative beyond tolerance {tol}")
    residual = z ** s + w ** s - 1.0
    if abs(residual) > tol:
        raise NotOnSlice(f"z^{s} + w^{s} - 1 = {residual:.3e} exceeds tolerance {tol}")
    if w <= 0.0:
        return math.copysign(math.inf, z)
    return z / w


def homogenize_lagrangian(l: Polynomial, r: int) -> HomogenizedLagrangian:
    """Clear the control denominator: ltilde = w^r * l(t, x, z/w)."""
    extra = l.variables_used() - {"t", "x", "u"}
    if extra:
        raise ValueError(f"running cost may only use (t, x, u), found {sorted(extra)}")
    return HomogenizedLagrangian(ltilde=l.substitute_ratio("u", "z", "w", r), r=r)


def _box(var: str, lo: float, hi: float) -> tuple[Polynomial, Polynomial]:
    # one-sided linear constraints relax more gradually along the hierarchy
    # than their quadratic product, matching the reference bound sequences
    v = Polynomial.variable(var)
    return (v - lo, hi - v)


def _slice_support(p: OcpProblem, sign_restriction: str) -> SupportSet:
    z = Polynomial.variable("z")
    w = Polynomial.variable("w")
    inequalities = [*_box("t", p.a, p.b), *_box("x", p.x_lo, p.x_hi), w]
    if sign_restriction == "z_nonneg":
        inequalities.append(z)
    elif sign_restriction == "z_nonpos":
        inequalities.append(-z)
    sphere = z ** p.s + w ** p.s - 1
    if sign_restriction == "z_nonpos" and p.s % 2 == 1:
        # mirror the slice so it stays bounded on the z <= 0 piece
        sphere = -(z ** p.s) + w ** p.s - 1
    return SupportSet(
        variables=("t", "x", "z", "w"),
        inequalities=tuple(inequalities),
        equalities=(sphere,),
    )


def _liouville_coefficient(alpha: int, beta: int, r: int) -> Polynomial:
    """Moment coefficient of the test monomial t^alpha * x^beta.

    Along a trajectory, d/dt (t^a x^b) integrates to the boundary term, so
    the row polynomial is (dv/dt) w^r + (dv/dx) z w^(r-1).
    """
    terms = {}
    if alpha:
        terms[(alpha - 1, beta, 0, 0, r)] = float(alpha)
    if beta:
        terms[(alpha, beta - 1, 0, 1, r - 1)] = float(beta)
    return Polynomial(terms)


def _liouville_rows(p: OcpProblem, test_degree: int, measures: tuple[int, ...]):
    rows = []
    for total in range(1, test_degree + 1):
        for alpha in range(total, -1, -1):
            beta = total - alpha
            poly = _liouville_coefficient(alpha, beta, p.r)
            rhs = p.b ** alpha * p.x_b ** beta - p.a ** alpha * p.x_a ** beta
            rows.append(LinearFunctionalRow(
                coefficients=tuple((mi, poly) for mi in measures),
                relation="eq",
                rhs=rhs,
                label=f"dynamics t^{alpha}*x^{beta}",
            ))
    return rows


def build_polynomial_lp(p: OcpProblem, test_degree: int) -> MeasureLP:
    """Single-measure LP over (t, x, z, w) for sign-definite or even-degree controls."""
    if test_degree < 1:
        raise ValueError("test_degree must be at least 1")
    bad = validate(p)
    if p.control_sign == "free" and (p.r % 2 == 1 or p.s % 2 == 1):
        raise OddFreeControl(
            f"r={p.r}, s={p.s} with sign-unrestricted control: the moment bound "
            f"needs |u|^r, which is not polynomial; use the split construction")
    if bad:
        raise ValueError("invalid problem: " + "; ".join(bad))

    sign_restriction = {
        "free": "none",
        "nonnegative": "z_nonneg",
        "nonpositive": "z_nonpos",
    }[p.control_sign]
    support = _slice_support(p, sign_restriction)

    hom = homogenize_lagrangian(p.lagrangian, p.r)
    rows = _liouville_rows(p, test_degree, measures=(0,))

    z = Polynomial.variable("z")
    # |u|^r moment becomes z^r on the slice, with the sign flipped to keep
    # it equal to |z|^r on a nonpositive control piece
    mass_poly = z ** p.r
    if p.control_sign == "nonpositive" and p.r % 2 == 1:
        mass_poly = -mass_poly
    rows.append(LinearFunctionalRow(
        coefficients=((0, mass_poly),),
        relation="le",
        rhs=p.C,
        label="mass",
    ))

    return MeasureLP(
        measures=(support,),
        objective=((0, hom.ltilde),),
        rows=tuple(rows),
        label=p.label or "custom",
    )


def build_polynomial_lp_split(p: OcpProblem, test_degree: int) -> MeasureLP:
    """Two-measure LP splitting a sign-unrestricted control at u = 0.

    One measure carries z >= 0, the other z <= 0, so |u|^r is polynomial
    on each piece regardless of the parity of r.  For even r and s this is
    an equivalent reformulation of the single-measure build.
    """
    if test_degree < 1:
        raise ValueError("test_degree must be at least 1")
    if p.control_sign != "free":
        raise ValueError(f"the split construction applies to sign-unrestricted "
                         f"controls, got {p.control_sign!r}")
    bad = [v for v in validate(p) if not v.startswith("odd-r-free-control")]
    if bad:
        raise ValueError("invalid problem: " + "; ".join(bad))

    support_pos = _slice_support(p, "z_nonneg")
    support_neg = _slice_support(p, "z_nonpos")

    hom = homogenize_lagrangian(p.lagrangian, p.r)
    rows = _liouville_rows(p, test_degree, measures=(0, 1))

    z = Polynomial.variable("z")
    mass_pos = z ** p.r
    mass_neg = (-z) ** p.r
    rows.append(LinearFunctionalRow(
        coefficients=((0, mass_pos), (1, mass_neg)),
        relation="le",
        rhs=p.C,
        label="mass",
    ))

    return MeasureLP(
        measures=(support_pos, support_neg),
        objective=((0, hom.ltilde), (1, hom.ltilde)),
        rows=tuple(rows),
        label=(p.label or "custom") + "-split",
    )


def default_test_degree(order: int, r: int) -> int:
    """Largest truncation keeping every dynamics row within relaxation degree 2*order."""
    return 2 * order - max(r, 1)
