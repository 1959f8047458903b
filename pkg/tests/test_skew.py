import math

import numpy as np
import pytest

from newhouse_lab import LinkingViolated, NotInImage, UndefinedAtCriticalLine, UnimodalityViolated
from newhouse_lab.cantor import hull, member, refine, thickness
from newhouse_lab.skew import (
    MINUS,
    PLUS,
    BCParams,
    SkewPoint,
    critical_points,
    eval2_on_critical,
    evaluate,
    heteroclinic_tangency_search,
    inverse,
    inverse_batch,
    line_of_tangencies,
    linking_inequality,
    make_bc,
    make_user,
    skew_from_config,
    stable_projection,
    unstable_projection,
    vertical_cover,
)


class TestParams:
    def test_derived(self):
        p = BCParams(0.6, 5)
        assert p.delta == 1 / 31
        assert p.eps == pytest.approx(math.sin(math.pi / 62), rel=1e-15)
        assert p.eps == pytest.approx(0.050649, abs=1e-6)
        assert p.mu_max == pytest.approx(1 - math.sqrt(1 - p.rho * 0.6 / 4), rel=1e-14)

    def test_linking_holds(self):
        p = BCParams(0.6, 5)
        assert linking_inequality(p.t, p.m, p.rho)[3]

    @pytest.mark.parametrize("m", [4, 5, 6, 7, 8])
    def test_unscaled_rho_links_for_m_at_least_4(self, m):
        d = 1 / (2 ** m - 1)
        for t in (0.2, 0.6, 0.9):
            rho = 2 * (1 - math.cos(1.5 * math.pi * d)) / t
            assert linking_inequality(t, m, rho)[3]

    def test_unscaled_rho_fails_for_m3(self):
        d = 1 / 7
        rho = 2 * (1 - math.cos(1.5 * math.pi * d)) / 0.6
        assert not linking_inequality(0.6, 3, rho)[3]

    @pytest.mark.parametrize("bad", [dict(t=0.0, m=5), dict(t=1.0, m=5), dict(t=0.5, m=3),
                                     dict(t=0.5, m=5, c_rho=1.0)])
    def test_preconditions(self, bad):
        with pytest.raises(ValueError):
            BCParams(**bad)

    def test_unscaled_rho_not_unimodal(self):
        with pytest.raises(UnimodalityViolated):
            make_bc(0.6, 5, rho_mode="paper")

    def test_large_c_rho_breaks_linking(self):
        with pytest.raises(LinkingViolated):
            make_bc(0.6, 5, c_rho=40.0)


class TestMap:
    def test_endpoints(self, bc):
        assert evaluate(bc, SkewPoint(1.0, 0.0)) == SkewPoint(-1.0, 0.0)
        assert evaluate(bc, SkewPoint(-1.0, 0.0)) == SkewPoint(-1.0, 1.0)

    def test_critical_value(self, bc):
        y = 0.2
        q = evaluate(bc, SkewPoint(0.0, y, PLUS))
        assert q.x == pytest.approx(1 - float(bc.mu(y)), abs=1e-15)
        assert q.y == pytest.approx(0.3 * y, abs=1e-15)
        q = evaluate(bc, SkewPoint(0.0, y, MINUS))
        assert q.y == pytest.approx(1 - 0.3 * y, abs=1e-15)

    def test_needs_side(self, bc):
        with pytest.raises(UndefinedAtCriticalLine):
            evaluate(bc, SkewPoint(0.0, 0.3))

    def test_outer_is_quadratic(self, bc, rng):
        x = rng.uniform(bc.eps, 1.0, 200) * rng.choice([-1, 1], 200)
        y = rng.uniform(0, 1, 200)
        f, fx, fy = bc.f_parts(x, y)
        assert np.allclose(f, 1 - 2 * x * x, atol=1e-15)
        assert np.all(fy == 0.0)

    def test_unimodal(self, bc):
        xs = np.linspace(-1, 1, 2001)
        xs = xs[xs != 0]
        for y in np.linspace(0, 1, 41):
            f, _, _ = bc.f_parts(xs, np.full(xs.shape, y))
            left, right = f[xs < 0], f[xs > 0]
            assert np.all(np.diff(left) > 0) and np.all(np.diff(right) < 0)

    def test_seam_c2(self, bc):
        e = bc.eps
        for y in (0.1, 0.25, 0.5, 0.9):
            Y = np.full(3, y)
            X = np.array([e - 1e-12, e, e + 1e-12])
            f, fx, _ = bc.f_parts(X, Y)
            assert np.max(np.abs(f - (1 - 2 * X * X))) < 1e-8
            assert np.max(np.abs(fx + 4 * X)) < 1e-8
            # second derivative from inside the strip by a one-sided difference of f_x
            h = 1e-7
            _, fxi, _ = bc.f_parts(np.array([e - h, e]), np.full(2, y))
            assert (fxi[1] - fxi[0]) / h == pytest.approx(-4.0, abs=1e-4)

    def test_mu_symmetric(self, bc):
        ys = refine(bc.vertical, 6).lo
        assert np.max(np.abs(bc.mu(ys) - bc.mu(1 - ys))) <= 1e-12

    def test_mu_wing(self, bc):
        p = bc.params
        ys = np.linspace(0, p.t / 2, 101)
        assert np.allclose(bc.mu(ys), 1 - np.sqrt(1 - p.rho * ys / 2), atol=1e-15)


class TestLineOfTangencies:
    def test_closed_form(self, bc, rng):
        p = bc.params
        ys = rng.uniform(0, p.t / 2, 1000)
        dev = 0.0
        for y in ys:
            q = eval2_on_critical(bc, y)
            dev = max(dev, abs(q.x - (-1 + p.rho * y)), abs(q.y - p.t ** 2 * y / 4))
        assert dev <= 1e-12

    def test_examples(self, bc):
        p = bc.params
        q = eval2_on_critical(bc, 0.0)
        assert (q.x, q.y) == (-1.0, 0.0)
        q = eval2_on_critical(bc, p.t / 2)
        assert q.x == pytest.approx(-1 + p.rho * p.t / 2, abs=1e-12)
        assert q.y == pytest.approx(p.t ** 3 / 8, abs=1e-15)
        L = line_of_tangencies(bc)
        assert L.slope == p.rho
        assert L.endpoints()[1][1] == pytest.approx(p.t ** 3 / 8)


class TestProjections:
    def test_stable_hull(self, bc):
        h = hull(stable_projection(bc, 8))
        assert h.lo == pytest.approx(-math.cos(math.pi / 31), abs=1e-14)
        assert h.hi == pytest.approx(-math.cos(math.pi * (30 / 31) / 16), abs=1e-14)

    def test_unstable(self, bc):
        p = bc.params
        a = unstable_projection(bc, 10)
        h = hull(a)
        assert h.lo == -1.0 and h.hi == pytest.approx(-1 + p.rho * p.t / 2, abs=1e-15)
        assert thickness(a).tau == pytest.approx(0.75, rel=1e-9)

    def test_generation_zero(self, bc):
        assert len(stable_projection(bc, 0)) == 1
        assert len(unstable_projection(bc, 0)) == 1

    def test_stable_thickness_frozen(self, bc):
        # measured value, smooth distortion of the tent-set thickness 7
        assert thickness(stable_projection(bc, 12)).tau == pytest.approx(6.89411292988643, rel=1e-9)


class TestInverse:
    def test_round_trip(self, bc, rng):
        x = rng.uniform(-1, 1, 10000)
        x[x == 0] = 0.5
        y = rng.uniform(0, 1, 10000)
        f, _, _ = bc.f_parts(x, y)
        yn = np.where(x > 0, 0.3 * y, 1 - 0.3 * y)
        px, py, ok = inverse_batch(bc, f, yn)
        assert ok.all()
        assert np.max(np.abs(px - x)) < 1e-10 and np.max(np.abs(py - y)) < 1e-10

    def test_examples(self):
        F = make_bc(0.5, 5)
        q = inverse(F, evaluate(F, SkewPoint(1.0, 0.0)))
        assert q.x == pytest.approx(1.0) and q.y == 0.0
        q = inverse(F, SkewPoint(-1.0, 1.0))
        assert q.x == pytest.approx(-1.0) and q.y == 0.0
        with pytest.raises(NotInImage):
            inverse(F, SkewPoint(0.3, 0.5))


class TestCriticalPoints:
    def test_generation_zero(self, bc):
        pts = critical_points(bc, 0)
        assert sorted({p.y for p in pts}) == [0.0, 0.3, 0.7, 1.0]
        assert len(pts) == 8

    def test_count_and_membership(self, bc):
        g = 4
        pts = critical_points(bc, g)
        assert len(pts) == 2 * 2 ** (g + 2)
        cov = vertical_cover(bc, g)
        assert all(member(cov, p.y, 1e-15) for p in pts)


class TestTangencySearch:
    def test_witness_height_hits_at_two(self, bc):
        from newhouse_lab.certificate import certify_nonhyperbolic

        cert = certify_nonhyperbolic(0.6, 5, N=0)
        hits = heteroclinic_tangency_search(bc, 10, 4, 1e-9, extra_ys=[cert.witness_y])
        mine = [h for h in hits if h.y == cert.witness_y and h.side == PLUS]
        assert mine and mine[0].k == 2

    def test_k_max_one_is_empty(self, bc):
        assert heteroclinic_tangency_search(bc, 6, 1, 1e-9) == []


class TestUserFamily:
    def test_config(self):
        F = skew_from_config({"kind": "user", "x_family": {"ca": 1.5, "cb": 0.3},
                              "vertical": {"a": 0.3, "b": 0.6}})
        q = evaluate(F, SkewPoint(0.5, 0.5))
        assert q.x == pytest.approx(1 - 1.65 * 0.25) and q.y == pytest.approx(0.15)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            make_user(2.5, 0.0, 0.3, 0.6)
