"""Scalar optimal control instances and the two built-in benchmark problems.

A problem asks to minimize the integral of a polynomial Lagrangian
l(t, x, u) over trajectories x: [a, b] -> [x_lo, x_hi] with fixed
endpoints and derivative u = dx/dt, where u may be unbounded but its
r-th absolute moment is bounded by a known constant C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .errors import IoError
from .measure_lp import LinearFunctionalRow, MeasureLP, SupportSet
from .poly import Polynomial, parse_polynomial

CONTROL_SIGNS = ("free", "nonnegative", "nonpositive")


class UnknownLabel(KeyError):
    """No built-in problem is registered under the requested name."""


@dataclass(frozen=True)
class OcpProblem:
    """Fixed-endpoint scalar control problem with polynomial running cost.

    ``r`` is the moment exponent: trajectories are admissible when the
    integral of |u|^r is at most C.  ``s`` is the exponent of the sphere
    slice used to compactify the control direction; it defaults to r,
    which is the choice that keeps the total measure mass bounded.
    """

    a: float
    b: float
    x_a: float
    x_b: float
    x_lo: float
    x_hi: float
    lagrangian: Polynomial
    r: int
    C: float
    s: int = 0
    control_sign: str = "free"
    label: str = ""

    def __post_init__(self):
        if self.s == 0:
            object.__setattr__(self, "s", self.r)


@dataclass(frozen=True)
class RawMeasureLpProblem:
    """A problem shipped directly as a measure LP.

    Used when the reduction to occupation measures is bespoke rather than
    the generic polynomial pipeline; built through a factory that accepts
    the truncation degree for the dynamics test functions.
    """

    label: str
    lp: MeasureLP
    rebuild: object = field(default=None, compare=False)

    def with_test_degree(self, test_degree: int) -> "RawMeasureLpProblem":
        if self.rebuild is None:
            return self
        return self.rebuild(test_degree)


def validate(p: OcpProblem) -> list[str]:
    """Structural checks; an empty list means the instance is well posed."""
    bad: list[str] = []
    if not p.a < p.b:
        bad.append(f"interval-degenerate: a={p.a} is not strictly below b={p.b}")
    if not p.x_lo < p.x_hi:
        bad.append(f"box-degenerate: x_lo={p.x_lo} is not strictly below x_hi={p.x_hi}")
    else:
        if not p.x_lo <= p.x_a <= p.x_hi:
            bad.append(f"endpoint-outside-box: x_a={p.x_a} lies outside [{p.x_lo}, {p.x_hi}]")
        if not p.x_lo <= p.x_b <= p.x_hi:
            bad.append(f"endpoint-outside-box: x_b={p.x_b} lies outside [{p.x_lo}, {p.x_hi}]")
    extra = p.lagrangian.variables_used() - {"t", "x", "u"}
    if extra:
        bad.append(f"lagrangian-extra-variables: uses {sorted(extra)}")
    if p.r < max(1, p.lagrangian.degree_in("u")):
        bad.append(f"r-too-small: r={p.r} is below max(1, control degree "
                   f"{p.lagrangian.degree_in('u')})")
    if p.s < 1:
        bad.append(f"s-not-positive: s={p.s}")
    if p.control_sign not in CONTROL_SIGNS:
        bad.append(f"unknown-control-sign: {p.control_sign!r}")
    if p.control_sign == "free" and (p.r % 2 == 1 or p.s % 2 == 1):
        bad.append(f"odd-r-free-control: r={p.r}, s={p.s} must both be even when "
                   f"the control is unrestricted in sign")
    if not p.C > 0:
        bad.append(f"nonpositive-C: C={p.C}")
    return bad


def lavrentiev_modified() -> OcpProblem:
    """Variational problem exhibiting the Lavrentiev phenomenon, with the
    repulsion term dropped and the control restricted to be nonnegative."""
    return OcpProblem(
        a=0.0, b=1.0, x_a=0.0, x_b=1.0,
        x_lo=-1.0, x_hi=1.0,
        lagrangian=parse_polynomial("(t - x^3)^2 * u"),
        r=1, s=1, C=5.0,
        control_sign="nonnegative",
        label="lavrentiev",
    )


BRACHISTOCHRONE_MASS_BOUND = 2.0 * math.sqrt(2.0)


def brachistochrone_measure_lp(test_degree: int = 1) -> RawMeasureLpProblem:
    """Minimum-time descent problem as a measure LP with polynomial data.

    The state is pre-transformed by y = sqrt(x), after which the running
    cost becomes the mass of a rescaled occupation measure on
    (t, y, z, w) with (z, w) on the unit half-circle.  The x variable of
    the universe plays the role of y.  ``test_degree`` truncates the set
    of dynamics test monomials t^alpha * y^beta.
    """
    if test_degree < 1:
        raise ValueError("test_degree must be at least 1")
    t = Polynomial.variable("t")
    x = Polynomial.variable("x")
    z = Polynomial.variable("z")
    w = Polynomial.variable("w")
    one = Polynomial.constant(1.0)

    support = SupportSet(
        variables=("t", "x", "z", "w"),
        inequalities=(t, 1 - t, x, 1 - x, w),
        equalities=(z ** 2 + w ** 2 - 1,),
    )

    rows = []
    # weak dynamics: for v = t^alpha * y^beta, integrating
    # (dv/dt) w y + (dv/dy) z / 2 against nu equals v(1,1) - v(0,0) = 1
    for total in range(1, test_degree + 1):
        for alpha in range(total, -1, -1):
            beta = total - alpha
            poly = Polynomial.zero()
            if alpha:
                poly = poly + alpha * t ** (alpha - 1) * x ** (beta + 1) * w
            if beta:
                poly = poly + (beta / 2.0) * t ** alpha * x ** (beta - 1) * z
            rows.append(LinearFunctionalRow(
                coefficients=((0, poly),),
                relation="eq",
                rhs=1.0,
                label=f"dynamics t^{alpha}*x^{beta}",
            ))
    rows.append(LinearFunctionalRow(
        coefficients=((0, one),),
        relation="le",
        rhs=BRACHISTOCHRONE_MASS_BOUND,
        label="mass",
    ))

    lp = MeasureLP(
        measures=(support,),
        objective=((0, one),),
        rows=tuple(rows),
        label="brachistochrone",
    )
    return RawMeasureLpProblem(
        label="brachistochrone",
        lp=lp,
        rebuild=brachistochrone_measure_lp,
    )


KNOWN_OPTIMAL_VALUES = {
    "lavrentiev": 0.0,
    "brachistochrone": 2.5819,
}


def known_optimal_value(label: str) -> float:
    """Reference optimal value of a built-in problem (5 significant digits)."""
    try:
        return KNOWN_OPTIMAL_VALUES[label]
    except KeyError:
        raise UnknownLabel(f"no reference value for {label!r}; "
                           f"known: {sorted(KNOWN_OPTIMAL_VALUES)}") from None


def builtin_problem(label: str):
    """Look up a built-in problem by name."""
    if label == "lavrentiev":
        return lavrentiev_modified()
    if label == "brachistochrone":
        return brachistochrone_measure_lp()
    raise UnknownLabel(f"no built-in problem named {label!r}; "
                       f"known: ['brachistochrone', 'lavrentiev']")


def coercive_moment_bound(a: float, b: float, c1: float, c2: float, k: float, r: int) -> float:
    """Moment budget for a cost that is coercive in the control.

    If l(t, x, u) >= c2 |u|^r whenever |u| >= c1, and k upper-bounds the
    optimal value, then every near-optimal trajectory satisfies
    integral of |u|^r <= (b - a) c1^r + k / c2.
    """
    if c1 <= 0 or c2 <= 0:
        raise ValueError("coercivity constants must be positive")
    return (b - a) * c1 ** r + k / c2


PROBLEM_CONFIG_KEYS = {
    "a", "b", "x_a", "x_b", "x_lo", "x_hi", "lagrangian", "r", "s", "C",
    "control_sign", "label",
}


def problem_from_config(cfg: dict):
    """Build a problem from a configuration mapping.

    Either the single key ``builtin`` selects a shipped problem, or the
    full field set describes a custom one.  ``s`` defaults to ``r`` and
    ``control_sign`` to ``free``.
    """
    if not isinstance(cfg, dict):
        raise ValueError(f"problem config must be a mapping, got {type(cfg).__name__}")
    if "builtin" in cfg:
        extra = set(cfg) - {"builtin"}
        if extra:
            raise ValueError(f"builtin selection does not take other keys: {sorted(extra)}")
        return builtin_problem(str(cfg["builtin"]))

    unknown = set(cfg) - PROBLEM_CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown problem config keys: {sorted(unknown)}")
    required = {"a", "b", "x_a", "x_b", "x_lo", "x_hi", "lagrangian", "r", "C"}
    missing = required - set(cfg)
    if missing:
        raise ValueError(f"missing problem config keys: {sorted(missing)}")

    lagrangian = cfg["lagrangian"]
    if isinstance(lagrangian, str):
        lagrangian = parse_polynomial(lagrangian)
    problem = OcpProblem(
        a=float(cfg["a"]), b=float(cfg["b"]),
        x_a=float(cfg["x_a"]), x_b=float(cfg["x_b"]),
        x_lo=float(cfg["x_lo"]), x_hi=float(cfg["x_hi"]),
        lagrangian=lagrangian,
        r=int(cfg["r"]),
        C=float(cfg["C"]),
        s=int(cfg.get("s", 0)),
        control_sign=str(cfg.get("control_sign", "free")),
        label=str(cfg.get("label", "custom")),
    )
    bad = validate(problem)
    if bad:
        raise ValueError("invalid problem config: " + "; ".join(bad))
    return problem


def load_config(path: str) -> dict:
    """Read a YAML problem config mapping from disk."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise IoError(f"cannot read problem config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise IoError(f"cannot parse problem config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise IoError(f"problem config {path} must be a mapping")
    return cfg


def load_problem(path: str):
    """Read a YAML problem config from disk and build the problem."""
    return problem_from_config(load_config(path))
