"""Slice map, cleared Lagrangian, and the two measure-LP builders."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momocp.homogenize import (
    DomainError,
    NotOnSlice,
    OddFreeControl,
    SphereSlice,
    build_polynomial_lp,
    build_polynomial_lp_split,
    default_test_degree,
    homogenize_lagrangian,
    map_control,
    unmap_control,
)
from momocp.measure_lp import validate_lp
from momocp.poly import ClearTooSmall, Polynomial, parse_polynomial
from momocp.problems import OcpProblem, lavrentiev_modified, validate

T = Polynomial.variable("t")
X = Polynomial.variable("x")
Z = Polynomial.variable("z")
W = Polynomial.variable("w")


class TestSliceMap:
    def test_zero_control(self):
        assert map_control(0.0, 2) == (0.0, 1.0)

    def test_infinite_controls(self):
        assert map_control(math.inf, 2) == (1.0, 0.0)
        assert map_control(-math.inf, 2) == (-1.0, 0.0)

    def test_unit_control_even_slice(self):
        z, w = map_control(1.0, 2)
        assert z == pytest.approx(1 / math.sqrt(2), rel=1e-15)
        assert w == pytest.approx(1 / math.sqrt(2), rel=1e-15)

    def test_output_on_slice(self):
        for s in (1, 2, 3, 4):
            for u in (0.0, 0.3, 1.0, 7.5, 1e8, 1e200):
                z, w = map_control(u, s)
                assert abs(z**s + w**s - 1) <= 1e-12
                assert w >= 0

    def test_odd_slice_domain(self):
        with pytest.raises(DomainError):
            map_control(-1.0, 1)
        with pytest.raises(DomainError):
            map_control(-2.0, 3)

    def test_unmap_identity_points(self):
        assert unmap_control(0.0, 1.0, 2) == 0.0
        assert unmap_control(1.0, 0.0, 2) == math.inf
        assert unmap_control(-1.0, 0.0, 2) == -math.inf

    def test_unmap_rejects_off_slice(self):
        with pytest.raises(NotOnSlice):
            unmap_control(0.5, 0.5, 2)
        with pytest.raises(NotOnSlice):
            unmap_control(0.0, -1.0, 2)

    def test_round_trip(self):
        u = 3.7
        z, w = map_control(u, 4)
        assert unmap_control(z, w, 4) == pytest.approx(u, rel=1e-9)

    def test_slice_requires_sign_for_odd_exponent(self):
        with pytest.raises(ValueError):
            SphereSlice(s=1, sign_restriction="none")
        assert SphereSlice(s=1, sign_restriction="z_nonneg").s == 1
        assert SphereSlice(s=2).sign_restriction == "none"


@given(
    st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
    st.sampled_from([2, 4, 6]),
)
@settings(max_examples=300, deadline=None)
def test_map_unmap_are_mutual_inverses(u, s):
    z, w = map_control(u, s)
    assert abs(z**s + w**s - 1) <= 1e-12
    back = unmap_control(z, w, s)
    assert back == pytest.approx(u, rel=1e-9, abs=1e-9)


@given(st.floats(min_value=-0.99, max_value=1e6, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_map_unmap_odd_slice(u):
    z, w = map_control(u, 3)
    assert unmap_control(z, w, 3) == pytest.approx(u, rel=1e-9, abs=1e-9)


class TestHomogenizedLagrangian:
    def test_linear_control_cost(self):
        l = parse_polynomial("(t - x^3)^2 * u")
        hom = homogenize_lagrangian(l, 1)
        assert hom.ltilde == parse_polynomial("(t - x^3)^2 * z")

    def test_pure_square(self):
        assert homogenize_lagrangian(parse_polynomial("u^2"), 2).ltilde == Z**2

    def test_mixed_terms_pick_up_w_powers(self):
        hom = homogenize_lagrangian(parse_polynomial("t*u^2 + x"), 2)
        assert hom.ltilde == T * Z**2 + X * W**2

    def test_r_below_control_degree(self):
        with pytest.raises(ClearTooSmall):
            homogenize_lagrangian(parse_polynomial("u^3"), 2)

    def test_rejects_slice_variables(self):
        with pytest.raises(ValueError):
            homogenize_lagrangian(Z * X, 1)

    @given(
        st.floats(min_value=-2, max_value=2, allow_nan=False),
        st.floats(min_value=-2, max_value=2, allow_nan=False),
        st.floats(min_value=-3, max_value=3, allow_nan=False),
        st.floats(min_value=0.05, max_value=2, allow_nan=False),
    )
    @settings(max_examples=300, deadline=None)
    def test_clearing_identity(self, tv, xv, uv, wv):
        l = parse_polynomial("(t - x^3)^2 * u + t*u^2 - 0.5*x")
        r = 2
        hom = homogenize_lagrangian(l, r)
        lhs = hom.ltilde.evaluate({"t": tv, "x": xv, "z": uv * wv, "w": wv})
        rhs = wv**r * l.evaluate({"t": tv, "x": xv, "u": uv})
        scale = 1 + abs(rhs)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10 * scale)


def free_even_problem(**overrides):
    fields = dict(
        a=0.0, b=1.0, x_a=0.0, x_b=0.5, x_lo=-1.0, x_hi=1.0,
        lagrangian=parse_polynomial("(u - x)^2"), r=2, C=5.0,
        label="tracking",
    )
    fields.update(overrides)
    return OcpProblem(**fields)


class TestBuildPolynomialLp:
    def test_lavrentiev_rows(self):
        lp = build_polynomial_lp(lavrentiev_modified(), test_degree=1)
        by_label = {row.label: row for row in lp.rows}
        # v = x gives <z, nu> = 1, v = t gives <w, nu> = 1
        assert by_label["dynamics t^0*x^1"].coefficients[0][1] == Z
        assert by_label["dynamics t^0*x^1"].rhs == 1.0
        assert by_label["dynamics t^1*x^0"].coefficients[0][1] == W
        assert by_label["dynamics t^1*x^0"].rhs == 1.0
        assert by_label["mass"].relation == "le"
        assert by_label["mass"].rhs == 5.0
        assert by_label["mass"].coefficients[0][1] == Z

    def test_lavrentiev_objective(self):
        lp = build_polynomial_lp(lavrentiev_modified(), test_degree=1)
        assert lp.objective == ((0, parse_polynomial("(t - x^3)^2 * z")),)

    def test_lavrentiev_support(self):
        lp = build_polynomial_lp(lavrentiev_modified(), test_degree=2)
        sup = lp.measures[0]
        assert Z + W - 1 in sup.equalities
        assert Z in sup.inequalities  # control sign restriction
        assert W in sup.inequalities
        assert validate_lp(lp) == []

    def test_row_count(self):
        d = 3
        lp = build_polynomial_lp(lavrentiev_modified(), test_degree=d)
        eq_rows = [row for row in lp.rows if row.relation == "eq"]
        assert len(eq_rows) == (d + 1) * (d + 2) // 2 - 1

    def test_even_case_mass_polynomial(self):
        lp = build_polynomial_lp(free_even_problem(), test_degree=2)
        mass = [row for row in lp.rows if row.relation == "le"][0]
        assert mass.coefficients[0][1] == Z**2

    def test_validates_generic_even_problem(self):
        lp = build_polynomial_lp(free_even_problem(), test_degree=3)
        assert validate_lp(lp) == []

    def test_free_odd_control_rejected(self):
        p = free_even_problem(lagrangian=parse_polynomial("u"), r=1)
        with pytest.raises(OddFreeControl):
            build_polynomial_lp(p, test_degree=1)

    def test_invalid_problem_rejected(self):
        p = free_even_problem(C=-1.0)
        with pytest.raises(ValueError, match="nonpositive-C"):
            build_polynomial_lp(p, test_degree=1)

    def test_nonpositive_control_flips_mass_sign(self):
        p = free_even_problem(
            lagrangian=parse_polynomial("(t - x^3)^2 * u"),
            r=1, s=1, control_sign="nonpositive", x_b=-0.5,
        )
        assert validate(p) == []
        lp = build_polynomial_lp(p, test_degree=1)
        mass = [row for row in lp.rows if row.relation == "le"][0]
        assert mass.coefficients[0][1] == -Z
        # mirrored sphere keeps the z <= 0 piece bounded
        assert -(Z) + W - 1 in lp.measures[0].equalities
        assert validate_lp(lp) == []


class TestBuildSplit:
    def test_two_measures_share_rows(self):
        lp = build_polynomial_lp_split(free_even_problem(), test_degree=2)
        assert len(lp.measures) == 2
        for row in lp.rows:
            if row.relation == "eq":
                indices = [mi for mi, _ in row.coefficients]
                assert indices == [0, 1]
                polys = {p for _, p in row.coefficients}
                assert len(polys) == 1

    def test_sign_constraints(self):
        lp = build_polynomial_lp_split(free_even_problem(), test_degree=1)
        assert Z in lp.measures[0].inequalities
        assert -Z in lp.measures[1].inequalities
        assert validate_lp(lp) == []

    def test_odd_r_mass_row(self):
        p = free_even_problem(lagrangian=parse_polynomial("u"), r=1, s=1)
        lp = build_polynomial_lp_split(p, test_degree=1)
        mass = [row for row in lp.rows if row.relation == "le"][0]
        assert dict(mass.coefficients)[0] == Z
        assert dict(mass.coefficients)[1] == -Z
        # objective is the same cleared cost on both pieces
        assert dict(lp.objective)[0] == Z
        assert dict(lp.objective)[1] == Z
        assert validate_lp(lp) == []

    def test_odd_slice_is_mirrored_on_negative_piece(self):
        p = free_even_problem(lagrangian=parse_polynomial("u"), r=1, s=1)
        lp = build_polynomial_lp_split(p, test_degree=1)
        assert Z + W - 1 in lp.measures[0].equalities
        assert -(Z) + W - 1 in lp.measures[1].equalities

    def test_requires_free_sign(self):
        with pytest.raises(ValueError):
            build_polynomial_lp_split(lavrentiev_modified(), test_degree=1)


class TestDefaultTestDegree:
    def test_formula(self):
        assert default_test_degree(4, 1) == 7
        assert default_test_degree(2, 2) == 2
        assert default_test_degree(1, 1) == 1


def trajectory_pseudo_moments(p, u, monomials, quad_points=64):
    """Moments of the linear trajectory's occupation measure, rescaled so
    that integration against cleared polynomials reproduces time integrals."""
    z, w = map_control(u, p.s)
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    ts = 0.5 * (p.a + p.b) + 0.5 * (p.b - p.a) * nodes
    ws = 0.5 * (p.b - p.a) * weights
    xs = p.x_a + (p.x_b - p.x_a) * (ts - p.a) / (p.b - p.a)
    moments = {}
    for mono in monomials:
        et, ex, _, ez, ew = mono
        vals = ts**et * xs**ex * z**ez * w**ew
        moments[mono] = float(np.sum(ws * vals)) * w ** (-p.r)
    return moments


class TestDiscreteMeasureFeasibility:
    @pytest.mark.parametrize("test_degree", [1, 2, 3])
    def test_linear_trajectory_satisfies_dynamics_rows(self, test_degree):
        p = free_even_problem()
        u = (p.x_b - p.x_a) / (p.b - p.a)
        lp = build_polynomial_lp(p, test_degree=test_degree)
        needed = set()
        for row in lp.rows:
            if row.relation != "eq":
                continue
            for _, poly in row.coefficients:
                needed.update(poly.terms)
        moments = trajectory_pseudo_moments(p, u, needed)
        for row in lp.rows:
            if row.relation != "eq":
                continue
            total = 0.0
            for _, poly in row.coefficients:
                total += sum(c * moments[m] for m, c in poly.terms.items())
            assert total == pytest.approx(row.rhs, abs=1e-8), row.label

    def test_lavrentiev_trajectory_mass_moment(self):
        # the v = t row integrates w^r, whose rescaled moment is b - a
        p = lavrentiev_modified()
        u = 1.0
        mono = (0, 0, 0, 0, p.r)
        moments = trajectory_pseudo_moments(p, u, {mono})
        assert moments[mono] == pytest.approx(p.b - p.a, abs=1e-10)
