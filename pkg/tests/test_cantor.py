import json
import math
from fractions import Fraction as Q

import numpy as np
import pytest

from newhouse_lab import (
    DegenerateInterval,
    DegenerateScale,
    MarkovViolation,
    NoBoundedGap,
    NonExpanding,
)
from newhouse_lab.cantor import (
    Branch,
    Interval,
    MarkovSystem,
    affine_image,
    cylinder,
    distance,
    distance_batch,
    gaps_and_bridges,
    hull,
    kt_system,
    member,
    member_at,
    middle_thirds,
    quadratic_system,
    refine,
    system_from_config,
    system_from_json,
    tent_partition,
    tent_system,
    thickness,
    two_branch_affine,
)
from newhouse_lab.expressions import Affine

from oracle import affine_full_cover, brute_thickness, tent_cover


def kt_oracle(t, g):
    t = Q(t)
    return affine_full_cover([(0, t / 2, True), (1 - t / 2, 1, False)], g)


class TestInterval:
    def test_degenerate(self):
        with pytest.raises(DegenerateInterval):
            Interval(1.0, 1.0)
        with pytest.raises(DegenerateInterval):
            Interval(2.0, 1.0)

    def test_basic(self):
        iv = Interval(0.25, 0.75)
        assert iv.length == 0.5 and iv.mid == 0.5
        assert iv.contains(0.75) and not iv.contains(0.76)
        assert iv.contains(0.76, tol=0.02)


class TestMarkovSystem:
    def test_overlapping_domains(self):
        with pytest.raises(MarkovViolation):
            MarkovSystem((Branch(Interval(0.0, 0.5), Affine(3.0, 0.0)),
                          Branch(Interval(0.4, 1.0), Affine(-2.0, 2.0))))

    def test_partial_cover_rejected(self):
        # image [0, 0.5] meets the domain [1/3 .. ] only partly
        with pytest.raises(MarkovViolation):
            MarkovSystem((Branch(Interval(0.0, 0.25), Affine(2.0, 0.0)),
                          Branch(Interval(0.3, 1.0), Affine(-1.5, 1.5))))

    def test_non_expanding(self):
        with pytest.raises(NonExpanding):
            MarkovSystem((Branch(Interval(0.0, 0.5), Affine(1.0, 0.0)),))

    def test_transitions(self):
        assert kt_system(0.5).transitions == ((0, 1), (0, 1))
        s = tent_system(5)
        assert len(s.branches) == 4
        assert all(len(t) >= 1 for t in s.transitions)

    def test_json_round_trip(self):
        s = kt_system(0.4)
        s2 = system_from_json(json.loads(json.dumps(s.to_json())))
        a, b = refine(s, 6), refine(s2, 6)
        assert np.array_equal(a.lo, b.lo) and np.array_equal(a.width, b.width)

    def test_presets(self):
        assert system_from_config({"preset": "kt", "t": 0.5}).label.startswith("k^t")
        assert len(system_from_config({"preset": "tent", "m": 4}).branches) == 3
        quadratic_system(5)  # eventually expanding, accepted without the check


class TestRefine:
    def test_counts(self):
        assert len(refine(middle_thirds(), 0)) == 2
        assert len(refine(middle_thirds(), 5)) == 2 ** 6

    @pytest.mark.parametrize("t", ["3/10", "1/2", "4/5"])
    def test_matches_exact_cover(self, t):
        g = 7
        exact = kt_oracle(Q(t), g)
        a = refine(kt_system(float(Q(t))), g)
        assert len(a) == len(exact)
        lo = np.array([float(x) for x, _ in exact])
        hi = np.array([float(y) for _, y in exact])
        assert np.max(np.abs(a.lo - lo)) < 1e-15
        assert np.max(np.abs(a.hi - hi)) < 1e-15

    @pytest.mark.parametrize("m", [4, 5])
    def test_tent_matches_exact_cover(self, m):
        exact = tent_cover(m, 5)
        a = refine(tent_system(m), 5)
        assert len(a) == len(exact)
        assert np.max(np.abs(a.lo - np.array([float(x) for x, _ in exact]))) < 1e-14

    def test_nested(self):
        s = kt_system(0.6)
        coarse, fine = refine(s, 4), refine(s, 7)
        for x0, x1 in zip(fine.lo, fine.hi):
            assert member(coarse, x0, 1e-15) and member(coarse, x1, 1e-15)

    def test_cylinder_is_cover_interval(self):
        s = kt_system(0.5)
        lo, hi = cylinder(s, (0, 1, 1))
        a = refine(s, 2)
        k = int(np.argmin(np.abs(a.lo - lo)))
        assert a.lo[k] == pytest.approx(lo, abs=1e-15)
        assert a.hi[k] == pytest.approx(hi, abs=1e-15)

    def test_negative_generation(self):
        with pytest.raises(ValueError):
            refine(middle_thirds(), -1)


class TestMembership:
    def test_member_examples(self):
        a = refine(kt_system(0.5), 12)
        assert member(a, 0.0, 1e-12)
        assert member(a, 1.0 / 16.0, 1e-12)
        assert not member(a, 0.5, 1e-3)

    def test_distance_batch_agrees(self, rng):
        a = refine(kt_system(0.4), 6)
        xs = rng.uniform(-0.1, 1.1, 500)
        d = distance_batch(a, xs)
        assert np.allclose(d, [distance(a, x) for x in xs], atol=0, rtol=0)

    def test_member_at_deep(self):
        a = refine(kt_system(0.5), 3)
        x = float(refine(kt_system(0.5), 20).lo[12345])
        assert member_at(a, x, 1e-15, 20)
        assert not member_at(a, 0.5, 1e-9, 5)


class TestThickness:
    @pytest.mark.parametrize("t", ["3/10", "1/2", "4/5"])
    def test_closed_form(self, t):
        tt = float(Q(t))
        rep = thickness(refine(kt_system(tt), 10))
        assert abs(rep.tau - tt / (2 * (1 - tt))) <= 1e-9

    @pytest.mark.parametrize("t,g", [("1/2", 5), ("3/10", 6), ("4/5", 6), ("2/7", 4)])
    def test_matches_bruteforce(self, t, g):
        tt = Q(t)
        expect = float(brute_thickness(kt_oracle(tt, g)))
        assert thickness(refine(kt_system(float(tt)), g)).tau == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("a,b,g", [("1/5", "3/5", 5), ("2/5", "1/2", 5), ("1/10", "7/10", 6)])
    def test_two_branch_bruteforce(self, a, b, g):
        qa, qb = Q(a), Q(b)
        exact = affine_full_cover([(0, qa, True), (qb, 1, False)], g)
        got = thickness(refine(two_branch_affine(float(qa), float(qb)), g)).tau
        assert got == pytest.approx(float(brute_thickness(exact)), rel=1e-12)

    @pytest.mark.parametrize("m,expect", [(4, 3), (5, 7)])
    def test_tent_thickness(self, m, expect):
        # closed form 2^(m-2) - 1; cross-checked against the exact rational scan
        assert float(brute_thickness(tent_cover(m, 4))) == expect
        assert thickness(refine(tent_system(m), 10)).tau == pytest.approx(expect, rel=1e-12)

    def test_middle_thirds(self):
        for g in range(1, 13):
            assert abs(thickness(refine(middle_thirds(), g)).tau - 1.0) <= 1e-12

    def test_witness_ratio(self):
        rep = thickness(refine(kt_system(0.3), 8))
        assert rep.witness_bridge.length / rep.witness_gap.length == pytest.approx(rep.tau, rel=1e-9)

    def test_single_interval(self):
        s = MarkovSystem((Branch(Interval(0.0, 0.5), Affine(2.0, 0.0)),))
        with pytest.raises(NoBoundedGap):
            thickness(refine(s, 3))
        assert gaps_and_bridges(refine(s, 3)) == []

    def test_affine_invariance(self):
        a = refine(kt_system(0.3), 8)
        for alpha, beta in [(2.5, -1.0), (-0.3, 0.7)]:
            assert thickness(affine_image(a, alpha, beta)).tau == pytest.approx(thickness(a).tau, rel=1e-9)

    def test_degenerate_scale(self):
        with pytest.raises(DegenerateScale):
            affine_image(refine(middle_thirds(), 2), 0.0, 1.0)

    def test_bridges_avoid_longer_gaps(self):
        a = refine(kt_system(0.4), 6)
        gaps = a.gap_width
        for (gap, lb, rb) in gaps_and_bridges(a):
            inner = (a.hi[:-1] > lb.lo) & (a.lo[1:] < lb.hi)
            assert np.all(gaps[inner] < gap.length * (1 + 1e-9))


def test_tent_partition_endpoints():
    m = 5
    d = Q(1, 2 ** m - 1)
    parts = tent_partition(m)
    assert parts[0] == (2 * d, (1 - d) / 2 ** (m - 2))
    assert len(parts) == m - 1


def test_hull():
    h = hull(refine(kt_system(0.5), 4))
    assert (h.lo, h.hi) == (0.0, 1.0)
