"""Hyperbolicity diagnostics away from the critical strip.

``DF^n`` of a skew product is upper triangular::

    | A_n  B_n |     A_n = prod f_x(x_i, y_i)
    |  0   D_n |     D_n = prod K_y(y_i)
                     B_n = f_x(x_{n-1}) B_{n-1} + f_y(x_{n-1}) D_{n-1}

Everything here is built on that recurrence: cocycle states, growth and
cone checks, Pliss times, sampling of the strip-avoiding set and a census of
attracting periodic orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import HitCriticalLine
from .kernels import layout as L
from .skew import NONE, SkewMap, SkewPoint, inverse_batch

LAMBDA0_MARGIN = 1e-9
B_FLOOR = 1e-12
GAMMA0_CAP = 0.5


# -------------------------------------------------------------- cocycle

@dataclass(frozen=True)
class CocycleState:
    A: float = 1.0
    B: float = 0.0
    D: float = 1.0
    n: int = 0

    def then(self, later: "CocycleState") -> "CocycleState":
        """State of ``self`` followed by ``later`` (matrix product later @ self)."""
        return CocycleState(later.A * self.A, later.A * self.B + later.B * self.D,
                            later.D * self.D, self.n + later.n)

    @property
    def det(self) -> float:
        return self.A * self.D

    def matrix(self) -> np.ndarray:
        return np.array([[self.A, self.B], [0.0, self.D]])

    def to_json(self):
        return {"A": self.A, "B": self.B, "D": self.D, "n": self.n}


@dataclass(frozen=True)
class OrbitTrace:
    x: np.ndarray
    y: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    side0: int

    def __len__(self):
        return self.x.shape[0]


def orbit(F: SkewMap, p0: SkewPoint, n: int) -> OrbitTrace:
    """Orbit ``p_0..p_n`` with cocycle entries; raises HitCriticalLine if the
    orbit lands on ``x = 0`` (beyond the tagged start)."""
    if p0.x == 0.0 and p0.side == NONE:
        raise HitCriticalLine("start point lies on x = 0 without a side", step=0)
    xs, ys, A, B, D, stop = kernels.orbit_trace(F.theta, p0.x, p0.y, float(p0.side), int(n))
    if stop < n:
        raise HitCriticalLine(f"orbit hits x = 0 at step {stop}", step=int(stop))
    return OrbitTrace(xs, ys, A, B, D, p0.side)


def cocycle_accumulate(F: SkewMap, p0: SkewPoint, n: int) -> CocycleState:
    if n == 0:
        return CocycleState()
    tr = orbit(F, p0, n)
    return CocycleState(float(tr.A[n]), float(tr.B[n]), float(tr.D[n]), int(n))


def jacobian_product(F: SkewMap, p0: SkewPoint, n: int) -> np.ndarray:
    """``DF^n(p0)`` as an explicit product of 2x2 Jacobians."""
    tr = orbit(F, p0, n)
    be = kernels.get_backend("numpy")
    M = np.eye(2)
    side = float(p0.side)
    for k in range(n):
        _, _, fx, fy, ky, _ = be.step(F.theta, tr.x[k], tr.y[k], side)
        side = 0.0
        M = np.array([[float(fx), float(fy)], [0.0, float(ky)]]) @ M
    return M


# ---------------------------------------------------------- Pliss times

@dataclass(frozen=True)
class PlissResult:
    times: list
    hypothesis_met: bool

    def to_json(self):
        return {"times": list(self.times), "hypothesis_met": self.hypothesis_met}


def _window_holds(a: np.ndarray, j: int, gamma1: float) -> bool:
    prods = np.cumprod(a[j:])
    return bool(np.all(prods < np.power(gamma1, np.arange(prods.shape[0], dtype=float))))


def pliss_times(a: Sequence[float], gamma0: float, gamma1: float,
                a_bound: Optional[float] = None) -> PlissResult:
    """Indices ``j`` (1-based) with ``prod_{i=j}^k a_i < gamma1^(k-j)`` for
    every ``k`` in ``[j, n]``.

    Found in O(n) from the running maximum of window log-sums; indices within
    rounding of the boundary are rechecked with direct products.
    """
    a = np.asarray(a, dtype=float)
    if not 0.0 < gamma0 < gamma1 < 1.0:
        raise ValueError("need 0 < gamma0 < gamma1 < 1")
    if a.size and np.any(a <= 0.0):
        raise ValueError("the sequence must be positive")
    if a_bound is not None and a.size and (np.any(a <= 1.0 / a_bound) or np.any(a >= a_bound)):
        raise ValueError("sequence leaves (1/a_bound, a_bound)")
    n = a.shape[0]
    if n == 0:
        return PlissResult([], False)
    margins = kernels.pliss_margins(np.log(a), math.log(gamma1))
    ok = margins > 0.0
    for j in np.nonzero(np.abs(margins) < 1e-9)[0]:
        ok[j] = _window_holds(a, int(j), gamma1)
    hyp = float(np.sum(np.log(a))) < n * math.log(gamma0)
    return PlissResult([int(j) + 1 for j in np.nonzero(ok)[0]], bool(hyp))


def pliss_times_bruteforce(a, gamma1):
    """Quadratic reference scan (used by tests and the benchmark)."""
    a = np.asarray(a, dtype=float)
    return [j + 1 for j in range(a.shape[0]) if _window_holds(a, j, gamma1)]


# ---------------------------------------------------------- cone config

@dataclass(frozen=True)
class ConeConfig:
    lambda0: float
    lambda1: float
    lambda2: float
    gamma0: float
    b_bound: float
    R0: float
    n0: int
    eps: float

    def __post_init__(self):
        if not 0.0 < self.lambda0 < self.lambda1 < 1.0:
            raise ValueError("need 0 < lambda0 < lambda1 < 1")
        if not math.sqrt(self.lambda1) < self.lambda2 < 1.0:
            raise ValueError("need sqrt(lambda1) < lambda2 < 1")
        if not self.gamma0 >= 0.0:
            raise ValueError("gamma0 must be >= 0")

    @property
    def cone_margin(self) -> float:
        """``1 - gamma0 b (R0 n0 + 1)/(lambda1 - lambda0)``; must exceed 1/2."""
        return 1.0 - self.gamma0 * self.b_bound * (self.R0 * self.n0 + 1) / (self.lambda1 - self.lambda0)

    def to_json(self):
        return {
            "lambda0": self.lambda0, "lambda1": self.lambda1, "lambda2": self.lambda2,
            "gamma0": self.gamma0, "b_bound": self.b_bound, "R0": self.R0, "n0": self.n0,
            "eps": self.eps, "cone_margin": self.cone_margin,
        }


def vertical_rate(F: SkewMap) -> float:
    return max(float(F.theta[L.KP]), float(F.theta[L.KM])) + LAMBDA0_MARGIN


def cone_config(F: SkewMap, eps: float, lambda1: Optional[float] = None,
                gamma0: Optional[float] = None, samples: int = 2001) -> ConeConfig:
    """Constants derived from the family: ``lambda0`` from the vertical rate,
    ``n0`` from ``(lambda0/lambda1)^n0 < 1/4``, ``R0`` from the smallest
    ``|f_x|`` on the strip complement, ``b`` from a sample of ``|f_y|``."""
    lam0 = vertical_rate(F)
    if lambda1 is None:
        lambda1 = 0.9 if lam0 < 0.9 else 0.5 * (1.0 + lam0)
    lam2 = 0.5 * (math.sqrt(lambda1) + 1.0)
    n0 = int(math.floor(math.log(0.25) / math.log(lam0 / lambda1))) + 1
    xs = np.concatenate([np.linspace(-1.0, -eps, samples), np.linspace(eps, 1.0, samples)])
    ys = np.linspace(0.0, 1.0, 257)
    X, Y = np.meshgrid(xs, ys)
    _, fx, _ = F.f_parts(X, Y)
    min_fx = float(np.min(np.abs(fx))) if xs.size else 1.0
    R0 = max(1.0, 1.0 / min_fx if min_fx > 0 else math.inf) ** n0
    gx = np.linspace(-1.0, 1.0, 4001)
    GX, GY = np.meshgrid(gx, np.linspace(0.0, 1.0, 513))
    _, _, fy = F.f_parts(GX, GY)
    b = max(float(np.max(np.abs(fy))), B_FLOOR)
    if gamma0 is None:
        gamma0 = min(GAMMA0_CAP, 0.99 * (lambda1 - lam0) / (2.0 * b * (R0 * n0 + 1)))
    return ConeConfig(lam0, float(lambda1), lam2, float(gamma0), b, R0, n0, float(eps))


# ---------------------------------------------------- Lambda_eps sample

def persists_mask(F: SkewMap, xs, ys, eps: float, N_forward: int, N_backward: int) -> np.ndarray:
    """Points of ``U_eps`` whose next ``N_forward`` iterates and previous
    ``N_backward`` preimages all stay in ``U_eps``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.abs(xs) >= eps
    if N_forward > 0 and np.any(keep):
        idx = np.nonzero(keep)[0]
        hit = kernels.strip_entry(F.theta, xs[idx], ys[idx], np.zeros(idx.size), int(N_forward), eps)
        keep[idx[hit != -1]] = False
    bx, by = xs.copy(), ys.copy()
    for _ in range(int(N_backward)):
        idx = np.nonzero(keep)[0]
        if idx.size == 0:
            break
        px, py, ok = inverse_batch(F, bx[idx], by[idx])
        ok &= np.abs(np.where(ok, px, 0.0)) >= eps
        keep[idx[~ok]] = False
        bx[idx[ok]] = px[ok]
        by[idx[ok]] = py[ok]
    return keep


def grid_u_eps(eps: float, grid_density: int):
    """Grid on ``U_eps = ([-1,-eps] u [eps,1]) x [0,1]`` (``grid_density``
    points per axis before removing the strip)."""
    if eps > 1.0 or grid_density < 1:
        return np.empty(0), np.empty(0)
    gx = np.linspace(-1.0, 1.0, grid_density)
    gx = gx[(np.abs(gx) >= eps) & (gx != 0.0)]
    gy = np.linspace(0.0, 1.0, grid_density)
    X, Y = np.meshgrid(gx, gy)
    return X.ravel(), Y.ravel()


HEIGHT_DEPTH = 40


def _cantor_heights(F: SkewMap, count: int, depth: int = HEIGHT_DEPTH) -> np.ndarray:
    """``count`` points of the vertical Cantor set given by evenly spread
    ``depth``-symbol itineraries; each admits ``depth`` inverse steps."""
    count = max(int(count), 1)
    codes = np.unique(np.round(np.linspace(0.0, 2.0 ** depth - 1.0, count)).astype(np.int64))
    branches = F.vertical.branches
    u = np.full(codes.shape, 0.5)
    for j in range(depth):
        bit = (codes >> j) & 1
        u = np.where(bit == 0, branches[0].inverse(u), branches[1].inverse(u))
    return np.sort(u)


def sample_lambda_eps(F: SkewMap, eps: float, grid_density: int, N_forward: int,
                      N_backward: int, extra_points: Sequence = ()):
    """Outer approximation of the strip-avoiding invariant set at a finite
    budget; returns ``(xs, ys)``.

    The x-grid is uniform on ``[-1,-eps] u [eps,1]``.  Heights are taken on the
    vertical Cantor set, since only those admit many inverse steps.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    xs, _ = grid_u_eps(eps, grid_density)
    if xs.size:
        gx = np.unique(xs)
        gy = _cantor_heights(F, grid_density)
        X, Y = np.meshgrid(gx, gy)
        xs, ys = X.ravel(), Y.ravel()
    else:
        ys = xs
    if len(extra_points):
        ex = np.asarray(extra_points, dtype=float).reshape(-1, 2)
        xs = np.concatenate([xs, ex[:, 0]])
        ys = np.concatenate([ys, ex[:, 1]])
    if xs.size == 0:
        return xs, ys
    keep = persists_mask(F, xs, ys, eps, N_forward, N_backward)
    return xs[keep], ys[keep]


def fixed_point_minus_one(F: SkewMap):
    """The fixed point ``(-1, 1/(1 + K_-'))`` on the left boundary."""
    km = float(F.theta[L.KM])
    return (-1.0, 1.0 / (1.0 + km))


# ---------------------------------------------------------- cone checks

@dataclass(frozen=True)
class Violation:
    index: int
    x: float
    y: float
    n: int
    ratio: float

    def to_json(self):
        return {"index": self.index, "x": self.x, "y": self.y, "n": self.n, "ratio": self.ratio}


@dataclass(frozen=True)
class ConeReport:
    n_samples: int
    N: int
    max_slope_ratio: float
    violations: list
    config: ConeConfig

    def to_json(self):
        return {"n_samples": self.n_samples, "N": self.N, "max_slope_ratio": self.max_slope_ratio,
                "violations": [v.to_json() for v in self.violations],
                "config": self.config.to_json()}


@dataclass(frozen=True)
class GrowthReport:
    n_samples: int
    N: int
    lambda1: float
    min_growth: float
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self):
        return {"n_samples": self.n_samples, "N": self.N, "lambda1": self.lambda1,
                "min_growth": self.min_growth, "failures": [v.to_json() for v in self.failures]}


def cone_check(F: SkewMap, eps: float, config: ConeConfig, samples, N: int) -> ConeReport:
    """Check ``slope(DF^n(1, +-gamma0)) <= 2 (lambda0/lambda1)^n gamma0`` for
    ``n0 < n <= N``; the reported ratio is slope over bound."""
    xs, ys = (np.asarray(s, dtype=float) for s in samples)
    if xs.size == 0:
        return ConeReport(0, N, 0.0, [], config)
    worst, first, _, _ = kernels.cone_batch(F.theta, xs, ys, int(N), config.n0, config.gamma0,
                                            config.lambda0, config.lambda1)
    viol = [Violation(int(i), float(xs[i]), float(ys[i]), int(first[i]), float(worst[i]))
            for i in np.nonzero(first >= 0)[0]]
    finite = worst[np.isfinite(worst)]
    mx = float(np.max(finite)) if finite.size else 0.0
    if np.any(np.isinf(worst)):
        mx = math.inf
    return ConeReport(int(xs.size), int(N), mx, viol, config)


def growth_check(F: SkewMap, samples, N: int, lambda1: float, n0: int) -> GrowthReport:
    """Check ``|A_n| > lambda1^n`` for ``n0 < n <= N``."""
    xs, ys = (np.asarray(s, dtype=float) for s in samples)
    if xs.size == 0 or N <= n0:
        return GrowthReport(int(xs.size), int(N), lambda1, math.inf, [])
    lam0 = min(vertical_rate(F), lambda1 * (1 - 1e-12))
    _, _, gmin, first = kernels.cone_batch(F.theta, xs, ys, int(N), int(n0), 0.0, lam0, lambda1)
    fails = [Violation(int(i), float(xs[i]), float(ys[i]), int(first[i]), float(gmin[i]))
             for i in np.nonzero(first >= 0)[0]]
    return GrowthReport(int(xs.size), int(N), lambda1, float(np.min(gmin)), fails)


def stable_direction_check(F: SkewMap, samples, N: int, gamma0: float):
    """Worst ratio of ``|DF^n v| / |v|`` to ``|D_n| / gamma0`` over ``n <= N``
    for the finite-horizon stable direction ``v = (-B_N/A_N, 1)``."""
    xs, ys = (np.asarray(s, dtype=float) for s in samples)
    m = xs.size
    if m == 0:
        return 0.0
    be = kernels.get_backend("numpy")
    A = np.ones((N + 1, m))
    B = np.zeros((N + 1, m))
    D = np.ones((N + 1, m))
    x, y = xs.copy(), ys.copy()
    for n in range(N):
        x, y, fx, fy, ky, _ = be.step(F.theta, x, y, np.zeros(m))
        A[n + 1] = fx * A[n]
        B[n + 1] = fx * B[n] + fy * D[n]
        D[n + 1] = ky * D[n]
    with np.errstate(divide="ignore", invalid="ignore"):
        v1 = -B[N] / A[N]
        norm_v = np.hypot(v1, 1.0)
        img = np.hypot(A * v1 + B, D)
        ratio = img / norm_v / (np.abs(D) / gamma0)
    return float(np.nanmax(ratio))


# ---------------------------------------------------------- sink census

@dataclass(frozen=True)
class SinkRecord:
    period: int
    orbit: tuple
    x_multiplier: float
    y_multiplier: float
    contraction_radius: float
    basin_samples: int

    def to_json(self):
        return {"period": self.period, "orbit": [list(p) for p in self.orbit],
                "x_multiplier": self.x_multiplier, "y_multiplier": self.y_multiplier,
                "contraction_radius": self.contraction_radius,
                "basin_samples": self.basin_samples}


def _canonical(orbit_pts):
    k = min(range(len(orbit_pts)), key=lambda i: orbit_pts[i])
    return orbit_pts[k:] + orbit_pts[:k]


def _same_orbit(a, b, tol) -> bool:
    if len(a) != len(b):
        return False
    A = np.asarray(a)
    B = np.asarray(b)
    for s in range(len(b)):
        if np.max(np.abs(A - np.roll(B, -s, axis=0))) <= tol:
            return True
    return False


def _polish(F: SkewMap, x, y, p, iters=2000, damping=1.0):
    """Damped fixed-point iteration of ``F^p``."""
    for _ in range(iters):
        nx, ny, good = kernels.iterate_batch(F.theta, np.array([x]), np.array([y]), np.zeros(1), p)
        if not good[0]:
            return x, y, False
        dx, dy = float(nx[0]) - x, float(ny[0]) - y
        x, y = x + damping * dx, y + damping * dy
        if abs(dx) <= 1e-15 and abs(dy) <= 1e-15:
            break
    return x, y, True


def _contraction_radius(F: SkewMap, q, p, lam2, radii=None, ring=16) -> float:
    radii = radii if radii is not None else [10.0 ** (-k) for k in range(1, 11)]
    ang = np.linspace(0.0, 2.0 * np.pi, ring, endpoint=False)
    for r in radii:
        px = q[0] + r * np.cos(ang)
        py = np.clip(q[1] + r * np.sin(ang), 0.0, 1.0)
        nx, ny, good = kernels.iterate_batch(F.theta, px, py, np.zeros(ring), p)
        if not np.all(good):
            continue
        d = np.hypot(nx - q[0], ny - q[1])
        if np.all(d <= lam2 ** p * r):
            return r / 2.0
    return 0.0


def sink_census(F: SkewMap, region=None, max_period: int = 12, tol: float = 1e-9,
                transient: int = 2000, lambda2: float = 0.975, grid_density: int = 41,
                eps: Optional[float] = None):
    """Attracting periodic orbits reached from the sample ``region``
    (``(xs, ys)``; default a grid on ``U_eps``)."""
    if max_period < 1:
        return []
    if region is None:
        e = F.eps if eps is None else eps
        region = grid_u_eps(e if e > 0 else 1e-6, grid_density)
    xs, ys = (np.asarray(r, dtype=float) for r in region)
    if xs.size == 0:
        return []
    lam0 = vertical_rate(F)
    x, y, good = kernels.iterate_batch(F.theta, xs, ys, np.zeros(xs.size), int(transient))
    # detect the minimal period of each settled point
    period = np.zeros(xs.size, np.int64)
    cx, cy = x.copy(), y.copy()
    for p in range(1, max_period + 1):
        cx, cy, g2 = kernels.iterate_batch(F.theta, cx, cy, np.zeros(xs.size), 1)
        good &= g2
        close = good & (period == 0) & (np.abs(cx - x) <= tol) & (np.abs(cy - y) <= tol)
        period[close] = p
    records = []
    counts = []
    for i in np.nonzero(period > 0)[0]:
        p = int(period[i])
        qx, qy, ok = _polish(F, float(x[i]), float(y[i]), p)
        if not ok:
            continue
        xs_o, ys_o, A, _, D, stop = kernels.orbit_trace(F.theta, qx, qy, 0.0, p)
        if stop < p or not (abs(A[p]) < 1.0 and abs(D[p]) < lam0 ** p):
            continue
        pts = _canonical([(float(a), float(b)) for a, b in zip(xs_o[:p], ys_o[:p])])
        for k, rec in enumerate(records):
            if _same_orbit(rec[0], pts, 1e-8):
                counts[k] += 1
                break
        else:
            records.append((pts, float(A[p]), float(D[p])))
            counts.append(1)
    out = []
    for (pts, a, d), c in zip(records, counts):
        r = _contraction_radius(F, pts[0], len(pts), lambda2)
        out.append(SinkRecord(len(pts), tuple(pts), a, d, r, c))
    out.sort(key=lambda s: (s.period, s.orbit))
    return out


def in_basin(F: SkewMap, sinks, xs, ys, n_iter: int = 4000, tol: float = 1e-6) -> np.ndarray:
    """Which samples converge to one of the census sinks."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.zeros(xs.size, bool)
    if not sinks or xs.size == 0:
        return out
    x, y, good = kernels.iterate_batch(F.theta, xs, ys, np.zeros(xs.size), int(n_iter))
    for s in sinks:
        for (px, py) in s.orbit:
            out |= good & (np.abs(x - px) <= tol) & (np.abs(y - py) <= tol)
    return out
