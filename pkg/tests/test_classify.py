import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from polycrit.classify import (Capacity, CapacityThreshold, Rule, capacity_threshold,
                               classify_measure_on_polyhedron, classify_removability, cube_polyhedron,
                               polyhedron_from_dict)
from polycrit.errors import DomainError
from polycrit.exponents import StratumSpec, build_exponent_table
from polycrit.measures import dirac, uniform
from polycrit.spectral import Arc


@pytest.fixture(scope="module")
def cube():
    return cube_polyhedron()


def verdicts(cube, q):
    rep = classify_measure_on_polyhedron(cube.strata, q, cube.measure)
    return [(c.stratum, c.verdict) for c in rep.components], rep


def test_edge_threshold():
    edge = build_exponent_table(StratumSpec(3, 2, opening=Arc(math.pi / 2)))
    thr = capacity_threshold(edge, 1.8)
    assert thr.d_crit == pytest.approx(0.5)
    assert thr(0) is Capacity.NULL and thr(1) is Capacity.POSITIVE
    assert capacity_threshold(edge, 1.5)(0) is Capacity.POSITIVE


def test_threshold_edge_cases():
    assert CapacityThreshold(2, -0.1, 3.0)(2) is Capacity.NULL
    # s q' = m puts every set at or below the threshold
    assert CapacityThreshold(1, 0.5, 2.0)(0) is Capacity.NULL
    assert CapacityThreshold(2, 1.0, 2.0)(0) is Capacity.NULL
    assert CapacityThreshold(2, 0.5, 2.0)(1) is Capacity.BOUNDARY


def test_vertex_has_no_threshold():
    with pytest.raises(DomainError):
        capacity_threshold(build_exponent_table(StratumSpec(3, 3, gamma=12.0)), 1.8)


def test_cube_q19(cube):
    got, rep = verdicts(cube, 1.9)
    assert got == [("face", "good"), ("edge", "bad"), ("edge", "good"), ("vertex", "bad")]
    assert rep.overall == "bad"
    assert rep.components[1].d_crit == pytest.approx(7 / 9)


def test_cube_q14(cube):
    got, rep = verdicts(cube, 1.4)
    assert all(v == "good" for _, v in got) and rep.overall == "good"
    assert all(c.rule is Rule.UNRESTRICTED for c in rep.components)


def test_cube_q25(cube):
    got, rep = verdicts(cube, 2.5)
    assert got == [("face", "good"), ("edge", "bad"), ("edge", "bad"), ("vertex", "bad")]
    assert rep.components[0].d_crit == pytest.approx(2 / 3)
    assert rep.components[1].rule is Rule.MUST_VANISH


def test_removability(cube):
    assert classify_removability(cube.strata, 1.9, [("edge", 0)]).verdict == "removable"
    assert classify_removability(cube.strata, 1.9, [("edge", 1)]).verdict == "not removable"
    assert classify_removability(cube.strata, 1.5, [("vertex", 0)]).verdict == "removable"
    assert classify_removability(cube.strata, 1.4, [("vertex", 0)]).verdict == "not removable"


def test_boundary_dimension_is_indeterminate():
    doc = {"strata": [{"id": "e", "N": 4, "k": 2, "gamma": 4.0}],
           "measure": [{"stratum": "e", "pieces": [{"lower": [0, 0], "upper": [1, 0], "mass": 1}]}]}
    poly = polyhedron_from_dict(doc)
    table = poly.tables["e"]
    # pick q with d_crit = 1 on the 2-dimensional edge: 2 - s q' = 1
    q = brentq(lambda x: 2 - table.s(x) * x / (x - 1) - 1, table.q_c + 1e-9, table.q_c_star - 1e-9)
    rep = classify_measure_on_polyhedron(poly.strata, q, poly.measure)
    assert rep.overall == "indeterminate"
    assert classify_removability(poly.strata, q, [("e", 1)]).verdict == "indeterminate"


def test_unknown_stratum():
    poly = cube_polyhedron()
    with pytest.raises(DomainError):
        classify_measure_on_polyhedron(poly.strata, 1.9, [("ridge", dirac(1))])
    with pytest.raises(DomainError):
        classify_measure_on_polyhedron(poly.strata, 1.9, [("edge", uniform([0, 0], [1, 1]))])


@settings(max_examples=60, deadline=None)
@given(st.floats(1.05, 3.0))
def test_good_iff_components_good(q):
    poly = cube_polyhedron()
    rep = classify_measure_on_polyhedron(poly.strata, q, poly.measure)
    parts = [classify_measure_on_polyhedron(poly.strata, q, [c]).overall for c in poly.measure]
    assert (rep.overall == "good") == all(p == "good" for p in parts)


@settings(max_examples=60, deadline=None)
@given(st.floats(5 / 3, 1.999))
def test_point_null_in_capacity_band(q):
    edge = build_exponent_table(StratumSpec(3, 2, gamma=4.0))
    thr = capacity_threshold(edge, q)
    assert thr(0) is Capacity.NULL
    assert thr.d_crit <= 1.0
