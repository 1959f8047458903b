import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from newhouse_lab.cantor import affine_image, distance, member, refine, thickness, two_branch_affine
from newhouse_lab.hyperbolicity import pliss_times
from newhouse_lab.skew import SkewPoint, evaluate, inverse, make_bc

from oracle import pliss_scan

F = make_bc(0.6, 5)
SETTINGS = settings(max_examples=60, deadline=None)

ab = st.tuples(st.floats(0.05, 0.45), st.floats(0.55, 0.95))


@SETTINGS
@given(ab, st.floats(0.1, 10.0), st.floats(-5.0, 5.0), st.booleans())
def test_thickness_affine_invariant(p, alpha, beta, flip):
    a = refine(two_branch_affine(*p), 7)
    s = -alpha if flip else alpha
    assert math.isclose(thickness(affine_image(a, s, beta)).tau, thickness(a).tau, rel_tol=1e-8)


@SETTINGS
@given(ab, st.integers(1, 8))
def test_cover_endpoints_are_members(p, g):
    a = refine(two_branch_affine(*p), g)
    coarse = refine(two_branch_affine(*p), max(g - 2, 0))
    assert all(member(coarse, float(x), 1e-14) for x in a.lo[::7])
    assert distance(a, float(a.lo[0]) - 1.0) == 1.0


@SETTINGS
@given(st.lists(st.floats(0.05, 3.0), max_size=80), st.floats(0.55, 0.95))
def test_pliss_matches_scan(a, gamma1):
    assert pliss_times(a, 0.5 * gamma1, gamma1).times == pliss_scan(a, gamma1)


@SETTINGS
@given(st.floats(-1.0, 1.0).filter(lambda x: x != 0.0), st.floats(0.0, 1.0))
def test_inverse_round_trip(x, y):
    img = evaluate(F, SkewPoint(x, y))
    q = inverse(F, img)
    back = evaluate(F, q)
    assert abs(back.x - img.x) < 1e-12 and abs(q.y - y) < 1e-12
    # x itself is only well conditioned away from the critical line
    if abs(x) >= 1e-3:
        assert abs(q.x - x) < 1e-9


@SETTINGS
@given(st.floats(0.0, 0.3))
def test_line_of_tangencies(y):
    from newhouse_lab.skew import eval2_on_critical

    q = eval2_on_critical(F, y)
    assert abs(q.x - (-1 + F.params.rho * y)) <= 1e-12
    assert abs(q.y - 0.09 * y) <= 1e-15
