"""Dynamically defined Cantor sets: Markov systems, finite covers, gaps,
bridges and thickness.

A :class:`MarkovSystem` is a finite list of expanding monotone branches over
disjoint base intervals.  Its generation-``g`` cover is the set of points
whose first ``g`` iterates stay in the base intervals; every connected
component is a *cylinder* indexed by its itinerary ``(s_0, ..., s_g)``.

A :class:`CantorApproximation` is such a cover, optionally restricted to a
root cylinder and pushed forward through a monotone closed-form transform
(affine images, the ``h(u/2)`` coordinate of the stable projection, ...).
It keeps enough information to descend into deeper cylinders on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    DegenerateInterval,
    DegenerateScale,
    MarkovViolation,
    NoBoundedGap,
    NonExpanding,
)
from .expressions import Affine, CosConj, Expr, Quadratic, Tent, compose, expr_from_json

EXPANSION_SAMPLES = 1024
MARKOV_TOL = 1e-12
LENGTH_REL_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not lo < hi:
            raise DegenerateInterval(f"interval needs lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def as_tuple(self):
        return (self.lo, self.hi)

    def to_json(self):
        return [self.lo, self.hi]


@dataclass(frozen=True)
class Branch:
    domain: Interval
    map: Expr

    def __call__(self, u):
        return self.map(u)

    def derivative(self, u):
        return self.map.derivative(u)

    def image(self) -> tuple:
        return self.map.image(self.domain.as_tuple())

    def increasing(self) -> bool:
        return self.map.is_increasing(self.domain.as_tuple())

    def inverse(self, v):
        out = self.map.inverse(v, self.domain.as_tuple())
        return np.clip(out, self.domain.lo, self.domain.hi)

    def to_json(self):
        return {"domain": self.domain.to_json(), "map": self.map.to_json()}


@dataclass(frozen=True)
class MarkovSystem:
    """Expanding Markov map on sorted disjoint base intervals.

    ``check_expansion=False`` admits eventually-expanding systems such as
    ``1 - 2x^2`` on the quadratic partition, whose one-step derivative drops
    below 1 near the critical point.
    """

    branches: tuple
    label: str = ""
    check_expansion: bool = True
    expansion_samples: int = EXPANSION_SAMPLES
    transitions: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise MarkovViolation("a Markov system needs at least one branch")
        doms = [b.domain for b in self.branches]
        for a, b in zip(doms, doms[1:]):
            if not a.hi < b.lo:
                raise MarkovViolation(
                    f"branch domains must be disjoint and sorted: {a} then {b}")
        if self.check_expansion:
            self._check_expansion()
        object.__setattr__(self, "transitions", self._transitions())

    def _check_expansion(self):
        for i, b in enumerate(self.branches):
            u = np.linspace(b.domain.lo, b.domain.hi, self.expansion_samples + 2)
            d = np.abs(b.derivative(u))
            k = int(np.argmin(d))
            if not d[k] > 1.0:
                raise NonExpanding(
                    f"branch {i} has |derivative| = {d[k]:.6g} <= 1 at u = {u[k]:.17g}")

    def _transitions(self):
        doms = [b.domain for b in self.branches]
        out = []
        covered = [False] * len(doms)
        for i, b in enumerate(self.branches):
            lo, hi = b.image()
            cov = []
            for j, d in enumerate(doms):
                overlap = min(hi, d.hi) - max(lo, d.lo)
                if overlap <= MARKOV_TOL:
                    continue
                if lo > d.lo + MARKOV_TOL or hi < d.hi - MARKOV_TOL:
                    raise MarkovViolation(
                        f"image [{lo:.17g}, {hi:.17g}] of branch {i} meets domain {j} "
                        f"{d.as_tuple()} without covering it")
                cov.append(j)
                covered[j] = True
            if not cov:
                raise MarkovViolation(f"image of branch {i} covers no base interval")
            if cov != list(range(cov[0], cov[-1] + 1)):
                raise MarkovViolation(f"branch {i} covers a non-contiguous set of domains")
            out.append(tuple(cov))
        missing = [j for j, c in enumerate(covered) if not c]
        if missing:
            raise MarkovViolation(f"domains {missing} are covered by no branch image")
        return tuple(out)

    @property
    def domains(self):
        return [b.domain for b in self.branches]

    def to_json(self):
        out = {"label": self.label, "branches": [b.to_json() for b in self.branches]}
        if not self.check_expansion:
            out["check_expansion"] = False
        return out


def system_from_json(spec: dict) -> MarkovSystem:
    branches = tuple(
        Branch(Interval(*b["domain"]), expr_from_json(b["map"])) for b in spec["branches"])
    return MarkovSystem(branches, label=spec.get("label", ""),
                        check_expansion=bool(spec.get("check_expansion", True)))


@dataclass(frozen=True)
class ThicknessReport:
    tau: float
    witness_gap: Interval
    witness_bridge: Interval
    generation: int

    def to_json(self):
        return {
            "tau": self.tau,
            "witness_gap": self.witness_gap.to_json(),
            "witness_bridge": self.witness_bridge.to_json(),
            "generation": self.generation,
        }


# ---------------------------------------------------------------- refinement
#
# Covers are stored as left endpoints plus explicit interval and gap widths.
# Widths are pulled back with cancellation-free formulas, so deep gaps keep
# full relative accuracy even where their coordinates are O(1).

@lru_cache(maxsize=256)
def _refine_raw(system: MarkovSystem, g: int):
    """Generation-g cover in system coordinates: (lo, width, gap_width, birth)."""
    doms = system.domains
    lo = np.array([d.lo for d in doms])
    w = np.array([d.length for d in doms])
    gw = np.array([b.lo - a.hi for a, b in zip(doms, doms[1:])])
    birth = np.zeros(len(doms) - 1, np.int64)
    first = np.arange(len(doms))
    for _ in range(g):
        parts = []
        for i, b in enumerate(system.branches):
            cov = system.transitions[i]
            a = int(np.searchsorted(first, cov[0], side="left"))
            z = int(np.searchsorted(first, cov[-1], side="right"))
            piece = b.domain.as_tuple()
            plo, pw = lo[a:z], w[a:z]
            nw = b.map.inverse_width(plo, pw, piece)
            ngw = b.map.inverse_width(plo[:-1] + pw[:-1], gw[a:z - 1], piece)
            nb = birth[a:z - 1] + 1
            if b.increasing():
                nlo = b.inverse(plo)
            else:
                nlo, nw, ngw, nb = b.inverse(plo + pw)[::-1], nw[::-1], ngw[::-1], nb[::-1]
            parts.append((np.asarray(nlo, float), np.asarray(nw, float),
                          np.asarray(ngw, float), nb, i))
        los, ws, gws, births, firsts = [], [], [], [], []
        for k, (nlo, nw, ngw, nb, i) in enumerate(parts):
            if k:
                plo, pw = los[-1][-1], ws[-1][-1]
                prev, cur = doms[parts[k - 1][4]], doms[i]
                # blocks filling their domains are separated by the exact gen-0 gap
                filled = (abs(plo + pw - prev.hi) <= MARKOV_TOL * prev.length
                          and abs(nlo[0] - cur.lo) <= MARKOV_TOL * cur.length)
                gws.append(np.array([cur.lo - prev.hi if filled else nlo[0] - (plo + pw)]))
                births.append(np.zeros(1, np.int64))
            los.append(nlo)
            ws.append(nw)
            gws.append(ngw)
            births.append(nb)
            firsts.append(np.full(nlo.shape[0], i))
        lo = np.concatenate(los)
        w = np.concatenate(ws)
        gw = np.concatenate(gws)
        birth = np.concatenate(births).astype(np.int64)
        first = np.concatenate(firsts)
    for arr in (lo, w, gw, birth):
        arr.setflags(write=False)
    return lo, w, gw, birth


def cylinder(system: MarkovSystem, itinerary: Sequence[int]) -> tuple:
    """Interval (system coordinates) of points with the given itinerary."""
    last = system.branches[itinerary[-1]].domain
    lo, hi = last.lo, last.hi
    for s in reversed(itinerary[:-1]):
        b = system.branches[s]
        a, c = float(b.inverse(lo)), float(b.inverse(hi))
        lo, hi = (a, c) if a <= c else (c, a)
    return lo, hi


def _push(expr: Expr, lo, w, gw, birth):
    """Push a cover through a monotone map, keeping widths accurate."""
    hi = lo + w
    a, b = expr(lo), expr(hi)
    nw = expr.forward_width(lo, w)
    ngw = expr.forward_width(hi[:-1], gw)
    if len(lo) and float(b[-1]) < float(a[0]) or (len(lo) == 1 and float(b[0]) < float(a[0])):
        return (np.asarray(b, float)[::-1].copy(), nw[::-1].copy(),
                ngw[::-1].copy(), birth[::-1].copy())
    return np.asarray(a, float), np.asarray(nw, float), np.asarray(ngw, float), birth


class CantorApproximation:
    """Generation-``g`` closed-interval cover of a (transformed) Cantor set.

    ``lo`` holds left endpoints, ``width`` interval lengths, ``gap_width`` the
    lengths of the bounded gaps and ``birth`` the generation each gap first
    appeared at.
    """

    def __init__(self, generation, lo, width, gap_width, birth, system,
                 root=(), transform=None):
        self.generation = int(generation)
        self.lo = np.asarray(lo, dtype=float)
        self.width = np.asarray(width, dtype=float)
        self.gap_width = np.asarray(gap_width, dtype=float)
        self.birth = np.asarray(birth, dtype=np.int64)
        self.parent = system
        self.root = tuple(root)
        self.transform = transform
        n = self.lo.shape[0]
        if self.width.shape[0] != n or self.gap_width.shape[0] != max(n - 1, 0) \
                or self.birth.shape[0] != max(n - 1, 0):
            raise ValueError("inconsistent cover arrays")

    @property
    def system(self) -> MarkovSystem:
        return self.parent

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.width

    def __len__(self):
        return self.lo.shape[0]

    @property
    def intervals(self):
        return [Interval(a, b) for a, b in zip(self.lo, self.hi)]

    def gaps(self):
        return [Interval(a, b) for a, b in zip(self.hi[:-1], self.lo[1:])]

    def to_json(self):
        return {
            "generation": self.generation,
            "intervals": [[float(a), float(b)] for a, b in zip(self.lo, self.hi)],
            "label": self.parent.label,
        }

    # cylinder access used by deep descents -------------------------------
    def root_itineraries(self):
        if self.root:
            return [self.root]
        return [(i,) for i in range(len(self.parent.branches))]

    def children(self, itinerary):
        return [itinerary + (j,) for j in self.parent.transitions[itinerary[-1]]]

    def cylinder(self, itinerary) -> tuple:
        lo, hi = cylinder(self.parent, itinerary)
        if self.transform is None:
            return lo, hi
        a, b = float(self.transform(lo)), float(self.transform(hi))
        return (a, b) if a <= b else (b, a)

    def with_generation(self, g: int) -> "CantorApproximation":
        return refine(self.parent, g, root=self.root, transform=self.transform)


def refine(system: MarkovSystem, g: int, root: Sequence[int] = (),
           transform: Optional[Expr] = None) -> CantorApproximation:
    """Generation-``g`` cover of ``system``; optionally only the cylinder ``root``
    and pushed through the monotone map ``transform``."""
    if g < 0:
        raise ValueError("generation must be >= 0")
    root = tuple(int(s) for s in root)
    if root and g < len(root) - 1:
        raise ValueError("generation must be at least len(root) - 1")
    lo, w, gw, birth = _refine_raw(system, int(g))
    if root:
        clo, chi = cylinder(system, root)
        pad = 1e-12 * max(1.0, chi - clo)
        keep = np.where((lo >= clo - pad) & (lo + w <= chi + pad))[0]
        a, z = int(keep[0]), int(keep[-1]) + 1
        lo, w, gw, birth = lo[a:z], w[a:z], gw[a:z - 1], birth[a:z - 1]
    if transform is not None:
        lo, w, gw, birth = _push(transform, lo, w, gw, birth)
    return CantorApproximation(g, np.array(lo), np.array(w), np.array(gw),
                               np.array(birth), system, root, transform)


def map_image(approx: CantorApproximation, expr: Expr) -> CantorApproximation:
    """Image of the cover under a monotone closed-form map."""
    lo, w, gw, birth = _push(expr, approx.lo, approx.width, approx.gap_width, approx.birth)
    return CantorApproximation(approx.generation, lo, w, gw, birth, approx.parent,
                               approx.root, compose(approx.transform, expr))


def affine_image(approx: CantorApproximation, alpha: float, beta: float) -> CantorApproximation:
    if alpha == 0:
        raise DegenerateScale("affine image needs a nonzero scale")
    return map_image(approx, Affine(float(alpha), float(beta)))


def hull(approx: CantorApproximation) -> Interval:
    if len(approx) == 0:
        raise ValueError("empty approximation")
    return Interval(float(approx.lo[0]), float(approx.lo[-1] + approx.width[-1]))


def member(approx: CantorApproximation, x: float, tol: float) -> bool:
    """True iff ``x`` lies within ``tol`` of some interval of the cover."""
    return distance(approx, x) <= tol


def distance(approx: CantorApproximation, x: float) -> float:
    """Distance from ``x`` to the cover."""
    lo, hi = approx.lo, approx.hi
    i = int(np.searchsorted(lo, x, side="right")) - 1
    best = math.inf
    for j in (i, i + 1):
        if 0 <= j < len(approx):
            if lo[j] <= x <= hi[j]:
                return 0.0
            best = min(best, abs(x - lo[j]), abs(x - hi[j]))
    return best


def distance_batch(approx: CantorApproximation, xs) -> np.ndarray:
    """Vectorized :func:`distance`."""
    xs = np.asarray(xs, dtype=float)
    lo, hi = approx.lo, approx.hi
    n = len(approx)
    i = np.searchsorted(lo, xs, side="right") - 1
    j = np.clip(i, 0, n - 1)
    k = np.clip(i + 1, 0, n - 1)
    dj = np.maximum(np.maximum(lo[j] - xs, xs - hi[j]), 0.0)
    dk = np.maximum(np.maximum(lo[k] - xs, xs - hi[k]), 0.0)
    return np.minimum(dj, dk)


def member_at(approx: CantorApproximation, x: float, tol: float, generation: int) -> bool:
    """Membership in the generation-``generation`` cover, found by descending
    only through cylinders near ``x`` (no full enumeration)."""
    stack = list(approx.root_itineraries())
    while stack:
        it = stack.pop()
        lo, hi = approx.cylinder(it)
        if not (lo - tol <= x <= hi + tol):
            continue
        if len(it) - 1 >= generation:
            return True
        stack.extend(approx.children(it))
    return False


# ---------------------------------------------------------- gaps and bridges

def _length_keys(lengths: np.ndarray, births: np.ndarray) -> np.ndarray:
    """Integer keys such that gap j blocks gap i iff key[j] >= key[i]: longer
    gaps block, equal lengths (relative tolerance) are broken by earlier birth."""
    n = lengths.shape[0]
    order = np.argsort(lengths, kind="stable")
    srt = lengths[order]
    # a new cluster starts wherever the sorted lengths jump by more than the
    # tolerance relative to the cluster anchor
    rank_sorted = np.zeros(n, np.int64)
    r = 0
    anchor = srt[0] if n else 0.0
    for k in range(1, n):
        if srt[k] - anchor > LENGTH_REL_TOL * anchor:
            r += 1
            anchor = srt[k]
        rank_sorted[k] = r
    rank = np.empty(n, np.int64)
    rank[order] = rank_sorted
    gmax = int(births.max()) if n else 0
    return rank * (gmax + 2) + (gmax - births)


def _bridge_lengths(approx: CantorApproximation):
    """Per gap: (left blocker, right blocker, |left bridge|, |right bridge|)."""
    n = len(approx) - 1
    keys = _length_keys(approx.gap_width, approx.birth)
    left, right = kernels.bridge_blockers(keys)
    # interleaved widths: interval 0, gap 0, interval 1, ..., interval n
    seq = np.empty(2 * n + 1)
    seq[0::2] = approx.width
    seq[1::2] = approx.gap_width
    idx = np.arange(n)
    lstart = 2 * (left + 1)
    lstop = 2 * idx + 1
    rstart = 2 * (idx + 1)
    rstop = 2 * right + 1
    sums = kernels.range_sums(seq, np.concatenate([lstart, rstart]),
                              np.concatenate([lstop, rstop]))
    return left, right, sums[:n], sums[n:]


def gaps_and_bridges(approx: CantorApproximation):
    """One ``(gap, left_bridge, right_bridge)`` record per bounded gap."""
    if len(approx) == 0:
        raise ValueError("empty approximation")
    if len(approx) < 2:
        return []
    lo, hi = approx.lo, approx.hi
    left, right, _, _ = _bridge_lengths(approx)
    out = []
    for i in range(len(approx) - 1):
        out.append((Interval(hi[i], lo[i + 1]),
                    Interval(lo[left[i] + 1], hi[i]),
                    Interval(lo[i + 1], hi[right[i]])))
    return out


def thickness(approx: CantorApproximation) -> ThicknessReport:
    if len(approx) < 2:
        raise NoBoundedGap("a single interval has no bounded gap")
    lo, hi = approx.lo, approx.hi
    left, right, lbl, rbl = _bridge_lengths(approx)
    gl = approx.gap_width
    lr, rr = lbl / gl, rbl / gl
    il, ir = int(np.argmin(lr)), int(np.argmin(rr))
    if rr[ir] < lr[il] or (rr[ir] == lr[il] and ir < il):
        i, tau, bridge = ir, rr[ir], Interval(lo[ir + 1], hi[right[ir]])
    else:
        i, tau, bridge = il, lr[il], Interval(lo[left[il] + 1], hi[il])
    return ThicknessReport(float(tau), Interval(hi[i], lo[i + 1]), bridge, approx.generation)


# ------------------------------------------------------------------ presets

def middle_thirds() -> MarkovSystem:
    return MarkovSystem(
        (Branch(Interval(0.0, 1.0 / 3.0), Affine(3.0, 0.0)),
         Branch(Interval(2.0 / 3.0, 1.0), Affine(3.0, -2.0))),
        label="middle_thirds")


def kt_system(t: float) -> MarkovSystem:
    """Vertical Cantor map ``k^t``: ``2y/t`` on ``[0, t/2]`` and ``2(1-y)/t``
    on ``[1-t/2, 1]``."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    return MarkovSystem(
        (Branch(Interval(0.0, t / 2.0), Affine(2.0 / t, 0.0)),
         Branch(Interval(1.0 - t / 2.0, 1.0), Affine(-2.0 / t, 2.0 / t))),
        label=f"k^t(t={t!r})")


def two_branch_affine(a: float, b: float, flip_right: bool = True) -> MarkovSystem:
    """Cantor map on ``[0, a] u [b, 1]`` with full affine branches."""
    if not 0.0 < a < b < 1.0:
        raise ValueError("need 0 < a < b < 1")
    left = Affine(1.0 / a, 0.0)
    if flip_right:
        right = Affine(-1.0 / (1.0 - b), 1.0 / (1.0 - b))
    else:
        right = Affine(1.0 / (1.0 - b), -b / (1.0 - b))
    return MarkovSystem((Branch(Interval(0.0, a), left), Branch(Interval(b, 1.0), right)),
                        label=f"affine2(a={a!r},b={b!r})")


def tent_partition(m: int):
    """Exact Markov intervals ``J_2..J_m`` of the tent-map Cantor set ``K_m``."""
    if m < 3:
        raise ValueError("m must be >= 3")
    delta = Fraction(1, 2 ** m - 1)
    J = [(2 * delta, (1 - delta) / 2 ** (m - 2))]
    for _ in range(3, m + 1):
        lo, hi = J[-1]
        a = 2 * lo if lo <= Fraction(1, 2) else 2 - 2 * lo
        b = 2 * hi if hi <= Fraction(1, 2) else 2 - 2 * hi
        J.append((min(a, b), max(a, b)))
    return J


def tent_system(m: int) -> MarkovSystem:
    parts = sorted(tent_partition(m))
    return MarkovSystem(
        tuple(Branch(Interval(float(lo), float(hi)), Tent()) for lo, hi in parts),
        label=f"tent(m={m})")


def quadratic_system(m: int) -> MarkovSystem:
    """``1 - 2x^2`` on the images ``h(J_i)``; only eventually expanding."""
    parts = sorted(tent_partition(m))
    hh = CosConj()
    return MarkovSystem(
        tuple(Branch(Interval(float(hh(float(lo))), float(hh(float(hi)))), Quadratic())
              for lo, hi in parts),
        label=f"quadratic(m={m})", check_expansion=False)


def tent_domain_index(m: int, i: int) -> int:
    """Branch index of ``J_i`` inside :func:`tent_system`."""
    parts = tent_partition(m)
    target = parts[i - 2]
    return sorted(parts).index(target)


PRESETS = {
    "middle_thirds": lambda **kw: middle_thirds(),
    "kt": lambda t, **kw: kt_system(float(t)),
    "tent": lambda m, **kw: tent_system(int(m)),
    "quadratic": lambda m, **kw: quadratic_system(int(m)),
    "affine2": lambda a, b, flip_right=True, **kw: two_branch_affine(float(a), float(b), bool(flip_right)),
}


def system_from_config(spec: dict) -> MarkovSystem:
    """Either an explicit system ``{label, branches}`` or ``{preset, ...}``."""
    if "branches" in spec:
        return system_from_json(spec)
    name = spec["preset"]
    kwargs = {k: v for k, v in spec.items() if k != "preset"}
    return PRESETS[name](**kwargs)
