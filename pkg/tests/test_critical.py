import numpy as np
import pytest

from newhouse_lab import kernels
from newhouse_lab.critical import (
    BUDGET,
    RETURNED,
    SINK,
    box_absorption,
    flatten,
    flatten_distance,
    quasi_critical_returns,
)
from newhouse_lab.hyperbolicity import sink_census
from newhouse_lab.skew import make_user


@pytest.fixture(scope="module")
def G(bc):
    return flatten(bc, bc.eps)


class TestReturns:
    def test_zero_budget(self, bc):
        rep = quasi_critical_returns(bc, bc.eps, 3, 0)
        assert {o.verdict for o in rep.outcomes} == {BUDGET}
        assert rep.m0_observed is None

    def test_witness_adjacent_do_not_return_early(self, bc):
        # (eps_m, y) maps onto the boundary orbit of the horseshoe, so nothing
        # returns within a short budget
        rep = quasi_critical_returns(bc, bc.eps, 6, 20)
        assert {o.verdict for o in rep.outcomes} == {BUDGET}
        xs, *_ = kernels.orbit_trace(bc.theta, bc.eps, 0.3, 0.0, 20)
        assert np.all(np.abs(xs[1:]) >= bc.eps)

    def test_soundness(self, bc):
        rep = quasi_critical_returns(bc, bc.eps, 4, 200)
        for o in rep.outcomes[:40]:
            assert o.verdict == RETURNED
            xs, *_ = kernels.orbit_trace(bc.theta, o.point.x, o.point.y, 0.0, o.m)
            assert np.all(np.abs(xs[1:o.m]) >= bc.eps) and abs(xs[o.m]) < bc.eps
        assert rep.m0_observed == max(o.m for o in rep.outcomes)

    def test_sink_family(self):
        U = make_user(0.5, 0.0, 0.4, 0.6, eps=0.05)
        rep = quasi_critical_returns(U, 0.05, 4, 200)
        assert {o.verdict for o in rep.outcomes} == {SINK}
        assert all(o.sink_id == 0 for o in rep.outcomes)

    def test_rejects_bad_eps(self, bc):
        with pytest.raises(ValueError):
            quasi_critical_returns(bc, 0.0, 3, 5)


class TestFlatten:
    def test_orbit_agreement(self, bc, G, rng):
        for _ in range(200):
            x0, y0 = rng.uniform(-1, 1), rng.uniform(0, 1)
            a = kernels.orbit_trace(bc.theta, x0, y0, 0.0, 50)
            b = kernels.orbit_trace(G.theta, x0, y0, 0.0, 50)
            inside = np.nonzero(np.abs(a[0]) <= bc.eps)[0]
            k = int(inside[0]) if inside.size else 50
            assert np.array_equal(a[0][:k + 1], b[0][:k + 1])
            assert np.array_equal(a[1][:k + 1], b[1][:k + 1])

    def test_flat_in_strip(self, G, bc):
        for y in (0.1, 0.5, 0.9):
            xs = np.linspace(1e-6, bc.eps * 0.999, 50)
            for s in (1.0, -1.0):
                vals = [float(kernels.get_backend("numpy").step(G.theta, s * x, y, 0.0)[0]) for x in xs]
                assert max(vals) - min(vals) == 0.0
                fx = kernels.get_backend("numpy").step(G.theta, s * xs[3], y, 0.0)[2]
                assert float(fx) == 0.0

    def test_distance_bound(self, bc):
        assert flatten_distance(bc, bc.eps) <= 4 * bc.eps


@pytest.fixture(scope="module")
def boxes(G, bc):
    return box_absorption(G, bc.eps, 3)


class TestBoxes:
    def test_resolved_within_returns(self, bc, boxes):
        rep = quasi_critical_returns(bc, bc.eps, 3, 400)
        assert {o.verdict for o in rep.outcomes} == {RETURNED}
        assert not boxes.unresolved
        assert all(e.r <= rep.m0_observed + 1 for e in boxes.edges)

    def test_out_degree(self, boxes):
        ids = [e.box for e in boxes.edges]
        assert len(ids) == len(set(ids)) == 2 * 2 ** 4

    def test_super_attracting(self, bc, boxes):
        assert boxes.cycles
        t = bc.params.t
        for c in boxes.cycles:
            assert c.x_multiplier == 0.0
            assert abs(abs(c.y_multiplier) - (t / 2) ** c.period) <= 1e-12
            assert c.closure_error <= 1e-12

    def test_cycle_in_census(self, bc, boxes):
        G = flatten(bc, bc.eps)
        sinks = sink_census(G, max_period=max(c.period for c in boxes.cycles))
        for c in boxes.cycles:
            found = [s for s in sinks if s.period == c.period and
                     min(np.hypot(px - c.point[0], py - c.point[1]) for px, py in s.orbit) < 1e-8]
            assert found and found[0].x_multiplier == 0.0

    def test_user_family_short_cycles(self):
        U = make_user(2.0, 0.0, 0.3, 0.7)
        b = box_absorption(flatten(U, 0.2), 0.2, 2)
        assert [c.period for c in b.cycles] == [3]
        assert all(c.x_multiplier == 0.0 for c in b.cycles)

    def test_unresolved_when_budget_small(self, bc):
        b = box_absorption(flatten(bc, bc.eps), bc.eps, 2, budget=5)
        assert len(b.unresolved) == len(b.edges)
        assert not b.cycles
