"""Quasi-critical returns, flattening of the critical strip and absorption of
strip boxes into super-attracting cycles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .cantor import refine
from .hyperbolicity import SinkRecord, sink_census
from .kernels import layout as L
from .skew import MINUS, NONE, PLUS, SkewMap, SkewPoint, side_name

RETURNED = "ReturnedAfter"
SINK = "SinkBasin"
BUDGET = "BudgetExceeded"
HIT = "HitCriticalLine"


@dataclass(frozen=True)
class ReturnOutcome:
    point: SkewPoint
    verdict: str
    m: Optional[int] = None
    sink_id: Optional[int] = None
    trace_length: int = 0

    def to_row(self):
        return {"x": self.point.x, "y": self.point.y, "verdict": self.verdict,
                "m": "" if self.m is None else self.m,
                "sink_id": "" if self.sink_id is None else self.sink_id,
                "trace_length": self.trace_length}


@dataclass(frozen=True)
class ReturnsReport:
    outcomes: list
    m0_observed: Optional[int]

    def counts(self):
        out = {}
        for o in self.outcomes:
            out[o.verdict] = out.get(o.verdict, 0) + 1
        return out

    def to_json(self):
        return {"m0_observed": self.m0_observed, "counts": self.counts(), "n": len(self.outcomes)}


def quasi_critical_points(F: SkewMap, eps: float, g: int):
    cover = refine(F.vertical, g)
    ys = np.unique(np.concatenate([cover.lo, cover.hi]))
    return [SkewPoint(s * eps, float(y)) for y in ys for s in (1.0, -1.0)]


def quasi_critical_returns(F: SkewMap, eps: float, g: int, budget: int,
                           sinks: Optional[Sequence[SinkRecord]] = None,
                           strip_tol: float = 0.0) -> ReturnsReport:
    """Classify the orbits of ``(+-eps, y)`` for ``y`` the endpoints of the
    generation-``g`` vertical cover.

    A return is the first ``m >= 1`` with ``|x_m| < eps - strip_tol``.  An orbit
    entering the verified contraction ball of a census sink is a basin orbit.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    pts = quasi_critical_points(F, eps, g)
    if sinks is None:
        sinks = sink_census(F, max_period=8) if budget > 0 else []
    xs = np.array([p.x for p in pts])
    ys = np.array([p.y for p in pts])
    n = xs.size
    verdict = np.full(n, BUDGET, dtype=object)
    when = np.full(n, -1, np.int64)
    sink_of = np.full(n, -1, np.int64)
    active = np.ones(n, bool)
    x, y = xs.copy(), ys.copy()
    for k in range(1, budget + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        nx, ny, good = kernels.iterate_batch(F.theta, x[idx], y[idx], np.zeros(idx.size), 1)
        x[idx], y[idx] = nx, ny
        bad = idx[~good]
        verdict[bad], when[bad], active[bad] = HIT, k, False
        idx = idx[good]
        ret = np.abs(x[idx]) < eps - strip_tol
        r = idx[ret]
        verdict[r], when[r], active[r] = RETURNED, k, False
        idx = idx[~ret]
        for sid, s in enumerate(sinks):
            if idx.size == 0:
                break
            near = np.zeros(idx.size, bool)
            for (px, py) in s.orbit:
                near |= np.hypot(x[idx] - px, y[idx] - py) <= s.contraction_radius
            hit = idx[near]
            verdict[hit], when[hit], sink_of[hit], active[hit] = SINK, k, sid, False
            idx = idx[~near]
    outcomes = []
    for i, p in enumerate(pts):
        v = verdict[i]
        outcomes.append(ReturnOutcome(
            p, v,
            m=int(when[i]) if v == RETURNED else None,
            sink_id=int(sink_of[i]) if v == SINK else None,
            trace_length=int(when[i]) if when[i] >= 0 else int(budget)))
    returned = [o.m for o in outcomes if o.verdict == RETURNED]
    return ReturnsReport(outcomes, max(returned) if returned else None)


# ---------------------------------------------------------------- flatness

def flatten(F: SkewMap, eps: float) -> SkewMap:
    """``G = F`` off the strip; on ``|x| <= eps`` the x-output is frozen at
    ``f(sgn(x) eps, y)``, so ``dg/dx = 0`` there."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return F.with_flat(eps)


def flatten_distance(F: SkewMap, eps: float, nx: int = 401, ny: int = 201) -> float:
    """``max |f(x, y) - f(sgn(x) eps, y)|`` over a grid of the strip."""
    xs = np.linspace(-eps, eps, nx)
    xs = xs[xs != 0.0]
    X, Y = np.meshgrid(xs, np.linspace(0.0, 1.0, ny))
    f, _, _ = F.f_parts(X, Y)
    fe, _, _ = F.f_parts(np.sign(X) * eps, Y)
    return float(np.max(np.abs(f - fe)))


@dataclass(frozen=True)
class BoxEdge:
    box: int
    side: int
    interval: tuple
    target: Optional[int]
    sink_id: Optional[int]
    r: Optional[int]
    x_entry: Optional[float]

    def to_json(self):
        return {"box_id": self.box, "side": side_name(self.side),
                "interval": list(self.interval), "image_box_id": self.target,
                "sink_id": self.sink_id, "r_l": self.r}


@dataclass(frozen=True)
class SuperCycle:
    boxes: tuple
    period: int
    point: tuple
    x_multiplier: float
    y_multiplier: float
    closure_error: float

    def to_json(self):
        return {"boxes": list(self.boxes), "period": self.period, "point": list(self.point),
                "x_multiplier": self.x_multiplier, "y_multiplier": self.y_multiplier,
                "closure_error": self.closure_error}


@dataclass(frozen=True)
class BoxAbsorption:
    edges: list
    cycles: list
    unresolved: list
    markov_level: int

    def to_json(self):
        return {"markov_level": self.markov_level, "edges": [e.to_json() for e in self.edges],
                "cycles": [c.to_json() for c in self.cycles], "unresolved": list(self.unresolved)}


def _vertical_affine(F: SkewMap, sign: float):
    """``K_sign`` as ``(alpha, beta)`` with ``K(y) = alpha y + beta``."""
    if sign > 0:
        return float(F.theta[L.KP]), 0.0
    return -float(F.theta[L.KM]), 1.0


def box_absorption(G: SkewMap, eps: float, markov_level: int, budget: int = 1000,
                   sinks: Optional[Sequence[SinkRecord]] = None) -> BoxAbsorption:
    """Follow each half box ``[0, +-eps] x I_l`` (``I_l`` a generation-
    ``markov_level`` interval of the vertical Cantor set) under the flattened
    map until it lands in another box or in a sink ball.

    Flatness makes the x-image of a box a single value, so one representative
    fiber carries the box; its y-interval is tracked exactly through the
    affine vertical branches.
    """
    if markov_level < 0:
        raise ValueError("markov_level must be >= 0")
    if sinks is None:
        sinks = []
    cover = refine(G.vertical, markov_level)
    lo, hi = cover.lo, cover.hi
    nI = len(cover)
    be = kernels.get_backend("numpy")

    def locate(a, b):
        i = int(np.searchsorted(lo, a + 1e-12 * max(1.0, abs(a)), side="right")) - 1
        if 0 <= i < nI and lo[i] - 1e-12 <= a and b <= hi[i] + 1e-12:
            return i
        return None

    edges = []
    signs_of = {}
    unresolved = []
    for l in range(nI):
        for s in (PLUS, MINUS):
            box = 2 * l + (0 if s == PLUS else 1)
            ya, yb = float(lo[l]), float(hi[l])
            x = s * eps
            signs = []
            target = sink_id = r = x_entry = None
            for k in range(1, budget + 1):
                sign = 1.0 if x > 0 else -1.0
                ym = 0.5 * (ya + yb)
                nx, _, _, _, _, _ = be.step(G.theta, x, ym, sign)
                al, bt = _vertical_affine(G, sign)
                ya, yb = sorted((al * ya + bt, al * yb + bt))
                signs.append(sign)
                x = float(nx)
                if abs(x) <= eps:
                    if x == 0.0:
                        break
                    j = locate(ya, yb)
                    if j is not None:
                        target = 2 * j + (0 if x > 0 else 1)
                        r, x_entry = k, x
                    break
                hit = None
                for sid, sk in enumerate(sinks):
                    if any(math.hypot(x - px, 0.5 * (ya + yb) - py) <= sk.contraction_radius
                           for px, py in sk.orbit):
                        hit = sid
                        break
                if hit is not None:
                    sink_id, r = hit, k
                    break
            if target is None and sink_id is None:
                unresolved.append(box)
            signs_of[box] = signs
            edges.append(BoxEdge(box, s, (float(lo[l]), float(hi[l])), target, sink_id, r, x_entry))

    by_box = {e.box: e for e in edges}
    cycles = []
    state = {}
    for start in sorted(by_box):
        path = []
        b = start
        while b is not None and b not in state:
            state[b] = start
            path.append(b)
            b = by_box[b].target
        if b is not None and state.get(b) == start and b in path:
            cyc = path[path.index(b):]
            cycles.append(_cycle_record(G, cyc, by_box, signs_of))
    return BoxAbsorption(edges, cycles, unresolved, markov_level)


def _cycle_record(G: SkewMap, cyc, by_box, signs_of) -> SuperCycle:
    # rotate so the cycle starts at its smallest box id
    k = cyc.index(min(cyc))
    cyc = cyc[k:] + cyc[:k]
    period = sum(by_box[b].r for b in cyc)
    # fixed point of the composed affine y-map around the cycle
    al, bt = 1.0, 0.0
    for b in cyc:
        for sign in signs_of[b]:
            a2, b2 = _vertical_affine(G, sign)
            al, bt = a2 * al, a2 * bt + b2
    ystar = bt / (1.0 - al)
    x0 = by_box[cyc[-1]].x_entry
    xs, ys, A, _, D, stop = kernels.orbit_trace(G.theta, x0, ystar, 0.0, period)
    err = math.hypot(xs[stop] - x0, ys[stop] - ystar) if stop == period else math.inf
    return SuperCycle(tuple(cyc), int(period), (float(x0), float(ystar)),
                      float(A[stop]), float(D[stop]), float(err))
