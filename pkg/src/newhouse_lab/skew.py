"""Skew products ``F(x, y) = (f_y(x), K_sgn(x)(y))`` with a discontinuity at
``x = 0``: the explicit two-parameter family with a thick horseshoe and a
critical line, and a small user-configurable quadratic family."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .cantor import (
    CantorApproximation,
    MarkovSystem,
    refine,
    tent_domain_index,
    tent_system,
    two_branch_affine,
)
from .errors import (
    LinkingViolated,
    NotInImage,
    UndefinedAtCriticalLine,
    UnimodalityViolated,
)
from .expressions import Affine, CosConj, compose
from .kernels import _numpy as npk
from .kernels import layout as L

PLUS, MINUS, NONE = 1, -1, 0
_SIDE_NAMES = {PLUS: "+", MINUS: "-", NONE: "none"}
_SIDE_CODES = {"+": PLUS, "-": MINUS, "none": NONE, 1: PLUS, -1: MINUS, 0: NONE,
               "plus": PLUS, "minus": MINUS, None: NONE}

UNIMODAL_RATIO = 2.0 / 3.0
TRANSITION_OVERSHOOT = 0.1


def side_code(side) -> int:
    try:
        return _SIDE_CODES[side]
    except KeyError:
        raise ValueError(f"unknown side tag {side!r}") from None


def side_name(side: int) -> str:
    return _SIDE_NAMES[side]


@dataclass(frozen=True)
class SkewPoint:
    x: float
    y: float
    side: int = NONE

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "side", side_code(self.side))

    def to_json(self):
        return {"x": self.x, "y": self.y, "side": side_name(self.side)}


def linking_inequality(t: float, m: int, rho: float):
    """``(lhs, middle, rhs, holds)`` for ``1-cos(pi d) < t rho/2 < 1-cos(pi(1-d)/2^(m-1))``."""
    d = 1.0 / (2 ** m - 1)
    lhs = 1.0 - math.cos(math.pi * d)
    mid = t * rho / 2.0
    rhs = 1.0 - math.cos(math.pi * (1.0 - d) / 2 ** (m - 1))
    return lhs, mid, rhs, lhs < mid < rhs


@dataclass(frozen=True)
class BCParams:
    t: float
    m: int
    c_rho: float = 1.05
    rho_mode: str = "scaled"
    delta: float = field(init=False)
    eps: float = field(init=False)
    rho: float = field(init=False)
    mu_max: float = field(init=False)

    def __post_init__(self):
        t, m = float(self.t), int(self.m)
        if not 0.0 < t < 1.0:
            raise ValueError(f"t must lie in (0, 1), got {t}")
        if m < 4:
            raise ValueError(f"m must be >= 4, got {m}")
        if self.rho_mode not in ("scaled", "paper"):
            raise ValueError(f"rho_mode must be 'scaled' or 'paper', got {self.rho_mode!r}")
        if self.rho_mode == "scaled" and not self.c_rho > 1.0:
            raise ValueError(f"c_rho must exceed 1, got {self.c_rho}")
        d = 1.0 / (2 ** m - 1)
        if self.rho_mode == "paper":
            rho = 2.0 * (1.0 - math.cos(1.5 * math.pi * d)) / t
        else:
            rho = 2.0 * float(self.c_rho) * (1.0 - math.cos(math.pi * d)) / t
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "c_rho", float(self.c_rho))
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "eps", math.sin(math.pi * d / 2.0))
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mu_max", 1.0 - math.sqrt(1.0 - rho * t / 4.0))

    def to_json(self):
        return {
            "t": self.t, "m": self.m, "c_rho": self.c_rho, "rho_mode": self.rho_mode,
            "delta_m": self.delta, "eps_m": self.eps, "rho_m": self.rho, "mu_max": self.mu_max,
        }


@dataclass(frozen=True, eq=False)
class SkewMap:
    kind: str
    theta: np.ndarray
    vertical: MarkovSystem
    eps: float
    params: Optional[BCParams] = None
    config: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return self.vertical.branches[0].domain.hi

    @property
    def b(self) -> float:
        return self.vertical.branches[1].domain.lo

    @property
    def flat(self) -> float:
        return float(self.theta[L.FLAT])

    def f_parts(self, x, y):
        """``(f, f_x, f_y)`` of the horizontal map (flattening ignored)."""
        return npk.fx_parts(self.theta, x, y)

    def mu(self, y):
        if self.kind != "explicit_bc":
            raise ValueError("mu is defined for the explicit family only")
        return npk._mu(self.theta, np.asarray(y, dtype=float))

    def dmu(self, y):
        if self.kind != "explicit_bc":
            raise ValueError("mu is defined for the explicit family only")
        return npk._dmu(self.theta, np.asarray(y, dtype=float))

    def with_flat(self, eps: float) -> "SkewMap":
        th = self.theta.copy()
        th[L.FLAT] = float(eps)
        th.setflags(write=False)
        cfg = dict(self.config, flatten_eps=float(eps))
        return replace(self, theta=th, config=cfg)

    def to_json(self):
        return dict(self.config)


def _mu_theta(p: BCParams):
    t, rho = p.t, p.rho
    y0 = t / 2.0
    r = 1.0 - rho * y0 / 2.0
    v0 = 1.0 - math.sqrt(r)
    d1 = (rho / 4.0) / math.sqrt(r)
    d2 = (rho * rho / 16.0) / r ** 1.5
    # keep the spline's rise over the wing value small, so the plateau stays
    # close to mu_max and unimodality keeps its margin
    htr = min((1.0 - t) / 2.0, TRANSITION_OVERSHOOT * v0 / d1)
    cc = d2 * htr + 2.0 * d1
    plateau = v0 + htr * (d1 / 3.0 + cc / 12.0)
    return y0, htr, v0, d1, cc, plateau


def validate_unimodal(F: SkewMap, nx: int = 401, ny: int = 201):
    """Raise UnimodalityViolated unless ``f_x`` has the sign of ``-x`` on a grid."""
    xs = np.linspace(-1.0, 1.0, nx)
    xs = xs[xs != 0.0]
    if F.kind == "explicit_bc":
        inner = np.linspace(-F.eps, F.eps, nx)
        xs = np.unique(np.concatenate([xs, inner[inner != 0.0]]))
    ys = np.linspace(0.0, 1.0, ny)
    X, Y = np.meshgrid(xs, ys)
    _, fx, _ = F.f_parts(X, Y)
    bad = np.sign(fx) != -np.sign(X)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise UnimodalityViolated(
            f"f(., y) is not unimodal: f_x = {fx[i, j]:.6g} at (x, y) = ({X[i, j]:.6g}, {Y[i, j]:.6g})",
            x=float(X[i, j]), y=float(Y[i, j]))
    if F.kind == "explicit_bc":
        ratio = float(np.max(F.mu(ys))) / F.eps ** 2
        if not ratio < UNIMODAL_RATIO:
            k = int(np.argmax(F.mu(ys)))
            raise UnimodalityViolated(
                f"mu/eps^2 = {ratio:.6g} >= 2/3 breaks unimodality at x -> 0", x=0.0, y=float(ys[k]))


def make_bc(t: float, m: int, c_rho: float = 1.05, rho_mode: str = "scaled",
            check: bool = True) -> SkewMap:
    p = BCParams(t, m, c_rho, rho_mode)
    lhs, mid, rhs, ok = linking_inequality(p.t, p.m, p.rho)
    if not ok:
        raise LinkingViolated(
            f"linking inequality fails: {lhs:.17g} < {mid:.17g} < {rhs:.17g} is false",
            lhs=lhs, middle=mid, rhs=rhs)
    th = np.zeros(kernels.SIZE)
    th[L.CODE] = 0.0
    th[L.KP] = p.t / 2.0
    th[L.KM] = p.t / 2.0
    th[L.EPS] = p.eps
    th[L.RHO] = p.rho
    th[L.Y0], th[L.HTR], th[L.V0], th[L.D1], th[L.CC], th[L.PLATEAU] = _mu_theta(p)
    th.setflags(write=False)
    cfg = {"kind": "explicit_bc", "t": p.t, "m": p.m, "c_rho": p.c_rho, "rho_mode": p.rho_mode}
    vertical = two_branch_affine(p.t / 2.0, 1.0 - p.t / 2.0, flip_right=True)
    F = SkewMap("explicit_bc", th, vertical, p.eps, p, cfg)
    if check:
        validate_unimodal(F)
    return F


def make_user(ca: float, cb: float, a: float, b: float, eps: float = 0.0,
              check: bool = True) -> SkewMap:
    """``f_y(x) = 1 - (ca + cb*y) x^2`` over the affine vertical system on
    ``[0, a] u [b, 1]``; ``eps`` is the critical-strip half-width used by
    diagnostics."""
    lo, hi = ca + min(cb, 0.0), ca + max(cb, 0.0)
    if not (0.0 < lo and hi <= 2.0):
        raise ValueError("need 0 < ca + cb*y <= 2 on [0, 1] so [-1, 1] maps into itself")
    vertical = two_branch_affine(float(a), float(b), flip_right=True)
    th = np.zeros(kernels.SIZE)
    th[L.CODE] = 1.0
    th[L.KP] = float(a)
    th[L.KM] = 1.0 - float(b)
    th[L.CA] = float(ca)
    th[L.CB] = float(cb)
    th.setflags(write=False)
    cfg = {"kind": "user", "x_family": {"ca": float(ca), "cb": float(cb)},
           "vertical": {"a": float(a), "b": float(b)}, "eps": float(eps)}
    F = SkewMap("user", th, vertical, float(eps), None, cfg)
    if check:
        validate_unimodal(F)
    return F


def skew_from_config(cfg: dict) -> SkewMap:
    kind = cfg.get("kind", "explicit_bc")
    if kind == "explicit_bc":
        F = make_bc(float(cfg["t"]), int(cfg["m"]), float(cfg.get("c_rho", 1.05)),
                    cfg.get("rho_mode", "scaled"))
    elif kind == "user":
        xf = cfg.get("x_family", {})
        vert = cfg.get("vertical", {})
        F = make_user(float(xf["ca"]), float(xf.get("cb", 0.0)),
                      float(vert["a"]), float(vert["b"]), float(cfg.get("eps", 0.0)))
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    if cfg.get("flatten_eps"):
        F = F.with_flat(float(cfg["flatten_eps"]))
    return F


# ------------------------------------------------------------------ maps

def evaluate(F: SkewMap, p: SkewPoint) -> SkewPoint:
    """``F(p)``; a point on ``x = 0`` needs a side tag."""
    if p.x == 0.0 and p.side == NONE:
        raise UndefinedAtCriticalLine(f"F is undefined at x = 0 without a side (y = {p.y})")
    x, y, *_ = kernels.get_backend("numpy").step(F.theta, p.x, p.y, float(p.side))
    return SkewPoint(float(x), float(y), NONE)


def eval2_on_critical(F: SkewMap, y: float, side=PLUS) -> SkewPoint:
    if not 0.0 <= y <= 1.0:
        raise ValueError("y must lie in [0, 1]")
    s = side_code(side)
    if s == NONE:
        raise UndefinedAtCriticalLine("a critical point needs a side tag")
    return evaluate(F, evaluate(F, SkewPoint(0.0, y, s)))


@dataclass(frozen=True)
class LineOfTangencies:
    slope: float
    intercept: float
    second_scale: float
    y_range: tuple

    def x(self, y):
        return self.intercept + self.slope * np.asarray(y, dtype=float)

    def second(self, y):
        return self.second_scale * np.asarray(y, dtype=float)

    def endpoints(self):
        y0, y1 = self.y_range
        return (float(self.x(y0)), float(self.second(y0))), (float(self.x(y1)), float(self.second(y1)))

    def to_json(self):
        return {"slope": self.slope, "intercept": self.intercept,
                "second_scale": self.second_scale, "y_range": list(self.y_range),
                "endpoints": [list(e) for e in self.endpoints()]}


def _need_bc(F: SkewMap) -> BCParams:
    if F.kind != "explicit_bc":
        raise ValueError("this operation needs the explicit family")
    return F.params


def line_of_tangencies(F: SkewMap) -> LineOfTangencies:
    p = _need_bc(F)
    return LineOfTangencies(p.rho, -1.0, p.t * p.t / 4.0, (0.0, p.t / 2.0))


def stable_projection_map():
    """``u -> h(u/2) = -cos(pi u / 2)``: tent coordinates of ``J_2`` to the
    negative-branch ``f_2``-preimage."""
    return compose(Affine(0.5, 0.0), CosConj())


def stable_projection(F: SkewMap, g: int) -> CantorApproximation:
    p = _need_bc(F)
    system = tent_system(p.m)
    return refine(system, g, root=(tent_domain_index(p.m, 2),), transform=stable_projection_map())


def unstable_projection(F: SkewMap, g: int) -> CantorApproximation:
    p = _need_bc(F)
    return refine(F.vertical, g, root=(0,), transform=Affine(p.rho, -1.0))


def horseshoe_cover(F: SkewMap, g: int) -> CantorApproximation:
    """Generation-``g`` cover of ``h(K_m)``."""
    p = _need_bc(F)
    return refine(tent_system(p.m), g, transform=CosConj())


def vertical_cover(F: SkewMap, g: int) -> CantorApproximation:
    return refine(F.vertical, g)


# --------------------------------------------------------------- inverse

def _solve_x(F: SkewMap, xp, y, sgn, iters: int = 80):
    """Solve ``f(x, y) = xp`` with ``sgn*x`` in (0, 1]; NaN where impossible."""
    xp = np.asarray(xp, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.full(xp.shape, np.nan)
    th = F.theta
    if th[L.CODE] == 1.0:
        a = th[L.CA] + th[L.CB] * y
        ok = (xp <= 1.0) & (xp >= 1.0 - a)
        out[ok] = np.sqrt((1.0 - xp[ok]) / a[ok])
        return sgn * out
    eps = th[L.EPS]
    top = 1.0 - F.mu(y)
    ok = (xp >= -1.0) & (xp <= top)
    outer = ok & (xp <= 1.0 - 2.0 * eps * eps)
    out[outer] = np.sqrt((1.0 - xp[outer]) / 2.0)
    inner = ok & ~outer
    if np.any(inner):
        lo = np.zeros(int(inner.sum()))
        hi = np.full(lo.shape, eps)
        yi = y[inner]
        target = xp[inner]
        # f decreases in |x| on (0, eps]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            f, _, _ = npk.fx_parts(th, mid, yi)
            above = f > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[inner] = 0.5 * (lo + hi)
    return sgn * out


def inverse_batch(F: SkewMap, xs, ys):
    """Vectorized ``F^{-1}``: returns (x, y, ok)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    kp, km = F.theta[L.KP], F.theta[L.KM]
    plus = (ys >= 0.0) & (ys <= kp)
    minus = (ys >= 1.0 - km) & (ys <= 1.0) & ~plus
    y = np.where(plus, ys / kp, np.where(minus, (1.0 - ys) / km, np.nan))
    sgn = np.where(plus, 1.0, -1.0)
    valid = plus | minus
    x = np.full(xs.shape, np.nan)
    if np.any(valid):
        x[valid] = _solve_x(F, xs[valid], y[valid], sgn[valid])
    ok = valid & np.isfinite(x)
    return x, y, ok


def inverse(F: SkewMap, p: SkewPoint) -> SkewPoint:
    x, y, ok = inverse_batch(F, np.array([p.x]), np.array([p.y]))
    if not ok[0]:
        raise NotInImage(f"({p.x}, {p.y}) has no preimage")
    return SkewPoint(float(x[0]), float(y[0]), NONE)


# ------------------------------------------------------ critical points

def critical_points(F: SkewMap, g: int):
    """``(0^+, y)`` and ``(0^-, y)`` for every endpoint ``y`` of the
    generation-``g`` cover of the vertical Cantor set."""
    cover = refine(F.vertical, g)
    ys = np.unique(np.concatenate([cover.lo, cover.hi]))
    return [SkewPoint(0.0, float(y), s) for y in ys for s in (PLUS, MINUS)]


@dataclass(frozen=True)
class TangencyHit:
    y: float
    side: int
    k: int
    stable_x: float

    def to_json(self):
        return {"y": self.y, "side": side_name(self.side), "k": self.k, "stable_x": self.stable_x}


def heteroclinic_tangency_search(F: SkewMap, g: int, k_max: int, tol: float,
                                 extra_ys: Iterable[float] = ()):
    """Critical orbits whose ``k``-th iterate lands (within ``tol``) on a
    vertical stable leaf through the generation-``g`` horseshoe cover."""
    from .cantor import distance

    _need_bc(F)
    targets = [horseshoe_cover(F, g), stable_projection(F, g)]
    points = critical_points(F, g)
    points += [SkewPoint(0.0, float(y), s) for y in extra_ys for s in (PLUS, MINUS)]
    hits = []
    be = kernels.get_backend("numpy")
    for p in points:
        x, y, side = p.x, p.y, float(p.side)
        for k in range(1, k_max + 1):
            xn, yn, _, _, _, ok = be.step(F.theta, x, y, side)
            if not bool(ok):
                break
            x, y, side = float(xn), float(yn), 0.0
            if abs(x) < F.eps:
                break
            if any(distance(c, x) <= tol for c in targets):
                hits.append(TangencyHit(p.y, p.side, k, x))
                break
    return hits
