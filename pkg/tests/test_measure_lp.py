"""Structural checks on the measure-LP intermediate representation."""

import pytest

from momocp.measure_lp import (
    LinearFunctionalRow,
    MeasureLP,
    SupportSet,
    bounded_variables,
    dump_lp,
    max_constraint_degree,
    validate_lp,
)
from momocp.poly import Polynomial, parse_polynomial

T = Polynomial.variable("t")
X = Polynomial.variable("x")
Z = Polynomial.variable("z")
W = Polynomial.variable("w")


def box_support():
    return SupportSet(
        variables=("t", "x"),
        inequalities=(T * (1 - T), (X + 1) * (1 - X)),
    )


def simple_lp():
    row = LinearFunctionalRow(coefficients=((0, T),), relation="eq", rhs=0.5)
    return MeasureLP(measures=(box_support(),), objective=((0, X),), rows=(row,))


class TestBoundedness:
    def test_box_constraints_bound(self):
        assert bounded_variables(box_support()) == {"t", "x"}

    def test_even_sphere_bounds_both(self):
        sup = SupportSet(
            variables=("z", "w"),
            inequalities=(W,),
            equalities=(Z**2 + W**2 - 1,),
        )
        assert bounded_variables(sup) == {"z", "w"}

    def test_odd_sphere_needs_signs(self):
        eq = (Z + W - 1,)
        without = SupportSet(variables=("z", "w"), inequalities=(W,), equalities=eq)
        assert bounded_variables(without) == set()
        with_signs = SupportSet(
            variables=("z", "w"), inequalities=(Z, W), equalities=eq
        )
        assert bounded_variables(with_signs) == {"z", "w"}

    def test_mirrored_odd_sphere(self):
        # z <= 0 piece: (-z)^3 + w^3 = 1 certified by -z >= 0 and w >= 0
        sup = SupportSet(
            variables=("z", "w"),
            inequalities=(-Z, W),
            equalities=(-(Z**3) + W**3 - 1,),
        )
        assert bounded_variables(sup) == {"z", "w"}

    def test_one_sided_is_not_enough(self):
        sup = SupportSet(variables=("t",), inequalities=(T,))
        assert bounded_variables(sup) == set()


class TestValidate:
    def test_well_formed(self):
        assert validate_lp(simple_lp()) == []

    def test_no_rows(self):
        lp = MeasureLP(measures=(box_support(),), objective=((0, X),), rows=())
        assert any(v.startswith("no-rows") for v in validate_lp(lp))

    def test_unbounded_variable(self):
        sup = SupportSet(variables=("t", "z"), inequalities=(T * (1 - T),))
        lp = MeasureLP(
            measures=(sup,),
            objective=((0, T),),
            rows=(LinearFunctionalRow(((0, T),), "eq", 1.0),),
        )
        bad = validate_lp(lp)
        assert any(v.startswith("unbounded-variable") and " z " in v for v in bad)

    def test_inactive_variable(self):
        row = LinearFunctionalRow(coefficients=((0, Z),), relation="eq", rhs=0.0)
        lp = MeasureLP(measures=(box_support(),), objective=((0, X),), rows=(row,))
        assert any(v.startswith("inactive-variable") for v in validate_lp(lp))

    def test_bad_measure_index(self):
        row = LinearFunctionalRow(coefficients=((3, T),), relation="eq", rhs=0.0)
        lp = MeasureLP(measures=(box_support(),), objective=((0, X),), rows=(row,))
        assert any(v.startswith("bad-measure-index") for v in validate_lp(lp))

    def test_relation_checked_at_construction(self):
        with pytest.raises(ValueError):
            LinearFunctionalRow(coefficients=((0, T),), relation="ge", rhs=0.0)


class TestDegree:
    def test_linear_rows_only(self):
        lp = MeasureLP(
            measures=(SupportSet(variables=("t",), inequalities=()),),
            objective=((0, T),),
            rows=(LinearFunctionalRow(((0, T),), "eq", 1.0),),
        )
        assert max_constraint_degree(lp) == 1

    def test_counts_supports_rows_and_objective(self):
        sup = SupportSet(
            variables=("t", "x"),
            inequalities=(T * (1 - T),),
            equalities=(X**4 - 1,),
        )
        lp = MeasureLP(
            measures=(sup,),
            objective=((0, parse_polynomial("t*x^2")),),
            rows=(LinearFunctionalRow(((0, T),), "eq", 1.0),),
        )
        assert max_constraint_degree(lp) == 4


def test_dump_is_readable():
    text = dump_lp(simple_lp())
    assert "minimize" in text
    assert "nu[0]" in text
    assert "= 0.5" in text
