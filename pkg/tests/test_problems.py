"""Problem model, validation rules, built-ins, and config loading."""

import math

import pytest

from momocp.errors import IoError
from momocp.measure_lp import max_constraint_degree, validate_lp
from momocp.poly import Polynomial, parse_polynomial
from momocp.problems import (
    OcpProblem,
    UnknownLabel,
    brachistochrone_measure_lp,
    builtin_problem,
    coercive_moment_bound,
    known_optimal_value,
    lavrentiev_modified,
    load_problem,
    problem_from_config,
    validate,
)


def valid_problem(**overrides):
    fields = dict(
        a=0.0, b=1.0, x_a=0.0, x_b=0.5, x_lo=-1.0, x_hi=1.0,
        lagrangian=parse_polynomial("(u - x)^2"), r=2, C=5.0,
    )
    fields.update(overrides)
    return OcpProblem(**fields)


class TestValidate:
    def test_valid_instance(self):
        assert validate(valid_problem()) == []

    def test_degenerate_interval(self):
        bad = validate(valid_problem(a=1.0, b=1.0))
        assert any(v.startswith("interval-degenerate") for v in bad)

    def test_free_control_odd_r(self):
        bad = validate(valid_problem(lagrangian=parse_polynomial("u"), r=1))
        assert any(v.startswith("odd-r-free-control") for v in bad)

    def test_endpoint_outside_box(self):
        bad = validate(valid_problem(x_b=3.0))
        assert any(v.startswith("endpoint-outside-box") for v in bad)

    def test_r_below_control_degree(self):
        bad = validate(valid_problem(lagrangian=parse_polynomial("u^4"), r=2))
        assert any(v.startswith("r-too-small") for v in bad)

    def test_nonpositive_budget(self):
        bad = validate(valid_problem(C=0.0))
        assert any(v.startswith("nonpositive-C") for v in bad)

    def test_lagrangian_extra_variables(self):
        bad = validate(valid_problem(lagrangian=parse_polynomial("z * u^2")))
        assert any(v.startswith("lagrangian-extra-variables") for v in bad)

    def test_validate_is_pure(self):
        p = valid_problem()
        assert validate(p) == validate(p) == []


class TestLavrentiev:
    def test_reference_fields(self):
        p = lavrentiev_modified()
        assert p.C == 5.0
        assert p.r == 1
        assert p.s == 1
        assert (p.a, p.b, p.x_a, p.x_b) == (0.0, 1.0, 0.0, 1.0)
        assert (p.x_lo, p.x_hi) == (-1.0, 1.0)
        assert p.control_sign == "nonnegative"
        assert p.lagrangian == parse_polynomial("(t - x^3)^2 * u")

    def test_passes_validation(self):
        assert validate(lavrentiev_modified()) == []


class TestBrachistochrone:
    def test_mass_bound_is_two_root_two(self):
        raw = brachistochrone_measure_lp()
        mass_rows = [row for row in raw.lp.rows if row.relation == "le"]
        assert len(mass_rows) == 1
        assert mass_rows[0].rhs == pytest.approx(2 * math.sqrt(2), abs=1e-12)

    def test_sphere_constraint_present(self):
        raw = brachistochrone_measure_lp()
        z = Polynomial.variable("z")
        w = Polynomial.variable("w")
        assert (z**2 + w**2 - 1) in raw.lp.measures[0].equalities

    def test_row_for_v_equals_t(self):
        # test monomial v = t integrates w*y against nu, boundary term 1
        raw = brachistochrone_measure_lp()
        x = Polynomial.variable("x")
        w = Polynomial.variable("w")
        rows = [row for row in raw.lp.rows if row.relation == "eq"]
        target = [row for row in rows if row.coefficients[0][1] == x * w]
        assert len(target) == 1
        assert target[0].rhs == 1.0

    def test_constant_test_function_omitted(self):
        raw = brachistochrone_measure_lp(test_degree=3)
        eq_rows = [row for row in raw.lp.rows if row.relation == "eq"]
        # (alpha, beta) with 1 <= alpha + beta <= 3: 9 pairs
        assert len(eq_rows) == 9
        for row in eq_rows:
            assert not row.coefficients[0][1].is_zero

    def test_passes_lp_validation(self):
        assert validate_lp(brachistochrone_measure_lp().lp) == []

    def test_max_degree_is_two_at_default_truncation(self):
        assert max_constraint_degree(brachistochrone_measure_lp().lp) == 2

    def test_rebuild_with_higher_truncation(self):
        raw = brachistochrone_measure_lp()
        finer = raw.with_test_degree(4)
        assert len(finer.lp.rows) > len(raw.lp.rows)
        assert finer.label == raw.label


class TestKnownValues:
    def test_reference_values(self):
        assert known_optimal_value("lavrentiev") == 0.0
        assert known_optimal_value("brachistochrone") == 2.5819

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            known_optimal_value("pendulum")
        with pytest.raises(UnknownLabel):
            builtin_problem("pendulum")


class TestCoerciveBound:
    def test_formula(self):
        # interval length 1, l >= 0.5|u|^2 for |u| >= 2, value at most 3
        assert coercive_moment_bound(0.0, 1.0, c1=2.0, c2=0.5, k=3.0, r=2) == pytest.approx(10.0)

    def test_rejects_nonpositive_constants(self):
        with pytest.raises(ValueError):
            coercive_moment_bound(0.0, 1.0, c1=0.0, c2=1.0, k=1.0, r=1)


class TestConfig:
    def test_builtin_selection(self):
        p = problem_from_config({"builtin": "lavrentiev"})
        assert p.label == "lavrentiev"

    def test_builtin_rejects_extra_keys(self):
        with pytest.raises(ValueError):
            problem_from_config({"builtin": "lavrentiev", "C": 3})

    def test_full_problem(self):
        cfg = dict(a=0, b=1, x_a=0, x_b=0.5, x_lo=-1, x_hi=1,
                   lagrangian="(u - x)^2", r=2, C=5)
        p = problem_from_config(cfg)
        assert p.s == 2  # defaults to r
        assert p.control_sign == "free"
        assert p.lagrangian == parse_polynomial("(u - x)^2")

    def test_invalid_problem_rejected(self):
        cfg = dict(a=1, b=1, x_a=0, x_b=0.5, x_lo=-1, x_hi=1,
                   lagrangian="u^2", r=2, C=5)
        with pytest.raises(ValueError, match="interval-degenerate"):
            problem_from_config(cfg)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            problem_from_config({"builtin2": "x"})

    def test_yaml_round_trip(self, tmp_path):
        path = tmp_path / "problem.yaml"
        path.write_text(
            "a: 0\nb: 1\nx_a: 0\nx_b: 0.5\nx_lo: -1\nx_hi: 1\n"
            "lagrangian: (u - x)^2\nr: 2\nC: 5\ncontrol_sign: free\n"
        )
        p = load_problem(str(path))
        assert p.C == 5.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_problem(str(tmp_path / "absent.yaml"))
