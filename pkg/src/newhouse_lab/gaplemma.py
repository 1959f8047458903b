"""Linking, the Newhouse gap-lemma decision, and constructive intersection
witnesses for pairs of Cantor approximations."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cantor import CantorApproximation, Interval, hull, thickness
from .errors import DepthExceeded, NotLinked, ThicknessCollapse


class LinkCase(str, enum.Enum):
    LINKED = "Linked"
    FIRST_IN_GAP_OF_SECOND = "FirstInGapOfSecond"
    SECOND_IN_GAP_OF_FIRST = "SecondInGapOfFirst"
    DISJOINT_HULLS = "DisjointHulls"


@dataclass(frozen=True)
class LinkVerdict:
    case: LinkCase
    generations: tuple

    @property
    def linked(self) -> bool:
        return self.case is LinkCase.LINKED

    def to_json(self):
        return {"case": self.case.value, "generations": list(self.generations)}


@dataclass(frozen=True)
class IntersectionWitness:
    point: float
    enclosure: Interval
    depth: int
    itineraries: tuple = ((), ())

    def to_json(self):
        return {"point": self.point, "enclosure": self.enclosure.to_json(), "depth": self.depth}


class Outcome(str, enum.Enum):
    INTERSECT = "intersect"
    FIRST_IN_GAP = "first_in_gap"
    SECOND_IN_GAP = "second_in_gap"
    DISJOINT_HULLS = "disjoint_hulls"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GapLemmaDecision:
    certificate: Outcome
    tau_product: float
    tau_first: float
    tau_second: float
    link: LinkVerdict
    witness: Optional[IntersectionWitness] = None

    def to_json(self):
        return {
            "case": self.certificate.value,
            "tau_product": self.tau_product,
            "taus": [self.tau_first, self.tau_second],
            "link": self.link.case.value,
            "witness": self.witness.to_json() if self.witness else None,
            "generations": list(self.link.generations),
        }


def _inside_bounded_gap(a: CantorApproximation, lo: float, hi: float) -> bool:
    """Is [lo, hi] strictly inside one bounded gap of ``a``?"""
    right_ends = a.hi
    i = int(np.searchsorted(right_ends, lo, side="right")) - 1
    if i < 0 or i + 1 >= len(a):
        return False
    return right_ends[i] < lo and hi < a.lo[i + 1]


def link_verdict(A: CantorApproximation, B: CantorApproximation) -> LinkVerdict:
    ha, hb = hull(A), hull(B)
    gens = (A.generation, B.generation)
    if ha.hi < hb.lo or hb.hi < ha.lo:
        return LinkVerdict(LinkCase.DISJOINT_HULLS, gens)
    if _inside_bounded_gap(B, ha.lo, ha.hi):
        return LinkVerdict(LinkCase.FIRST_IN_GAP_OF_SECOND, gens)
    if _inside_bounded_gap(A, hb.lo, hb.hi):
        return LinkVerdict(LinkCase.SECOND_IN_GAP_OF_FIRST, gens)
    return LinkVerdict(LinkCase.LINKED, gens)


_FROM_LINK = {
    LinkCase.LINKED: Outcome.INTERSECT,
    LinkCase.FIRST_IN_GAP_OF_SECOND: Outcome.FIRST_IN_GAP,
    LinkCase.SECOND_IN_GAP_OF_FIRST: Outcome.SECOND_IN_GAP,
    LinkCase.DISJOINT_HULLS: Outcome.DISJOINT_HULLS,
}


def gap_lemma_decide(A: CantorApproximation, B: CantorApproximation) -> GapLemmaDecision:
    """With thickness product above 1 exactly one of intersect / first in a
    gap of second / second in a gap of first holds; otherwise inconclusive."""
    ta = thickness(A).tau
    tb = thickness(B).tau
    prod = ta * tb
    link = link_verdict(A, B)
    if not prod > 1.0:
        return GapLemmaDecision(Outcome.INCONCLUSIVE, prod, ta, tb, link)
    return GapLemmaDecision(_FROM_LINK[link.case], prod, ta, tb, link)


def _local_tau(approx: CantorApproximation, kids) -> float:
    """Crude thickness of one split: adjacent child over separating gap."""
    best = np.inf
    for (a_lo, a_hi), (b_lo, b_hi) in zip(kids, kids[1:]):
        gap = b_lo - a_hi
        if gap > 0:
            best = min(best, (a_hi - a_lo) / gap, (b_hi - b_lo) / gap)
    return best


def intersect_refine(A: CantorApproximation, B: CantorApproximation, tol: float,
                     max_depth: int) -> IntersectionWitness:
    """Find a common point of the two Cantor sets to within ``tol``.

    Depth-first search over pairs of overlapping cylinders.  Each step splits
    the longer of the two current cylinders (ties split the first) and keeps
    the child pairs that still overlap.  Stops as soon as both cylinders are
    no longer than ``tol``.
    """
    link = link_verdict(A, B)
    if not link.linked:
        raise NotLinked(f"sets are not linked ({link.case.value})")

    def overlap(p, q):
        return max(p[0], q[0]) <= min(p[1], q[1])

    stack = []
    for ia in A.root_itineraries():
        pa = A.cylinder(ia)
        for ib in B.root_itineraries():
            pb = B.cylinder(ib)
            if overlap(pa, pb):
                stack.append((ia, pa, ib, pb))
    stack.reverse()
    tau_min = [np.inf, np.inf]
    deepest = 0
    capped = None
    while stack:
        ia, pa, ib, pb = stack.pop()
        ga, gb = len(ia) - 1, len(ib) - 1
        deepest = max(deepest, ga, gb)
        la, lb = pa[1] - pa[0], pb[1] - pb[0]
        if la <= tol and lb <= tol:
            lo, hi = max(pa[0], pb[0]), min(pa[1], pb[1])
            point = 0.5 * (lo + hi)
            if hi > lo:
                enc = Interval(lo, hi)
            else:
                enc = Interval(*(pa if la <= lb else pb))
            return IntersectionWitness(float(point), enc, max(ga, gb), (ia, ib))
        split_a = la >= lb
        if split_a and ga >= max_depth:
            split_a = False
        if not split_a and gb >= max_depth:
            split_a = ga < max_depth
            if not split_a:
                if capped is None:
                    lo, hi = max(pa[0], pb[0]), min(pa[1], pb[1])
                    capped = (lo, max(hi, lo))
                continue
        if split_a:
            kids = [(c, A.cylinder(c)) for c in A.children(ia)]
            tau_min[0] = min(tau_min[0], _local_tau(A, [k[1] for k in kids]))
            nxt = [(c, pc, ib, pb) for c, pc in kids if overlap(pc, pb)]
        else:
            kids = [(c, B.cylinder(c)) for c in B.children(ib)]
            tau_min[1] = min(tau_min[1], _local_tau(B, [k[1] for k in kids]))
            nxt = [(ia, pa, c, pc) for c, pc in kids if overlap(pa, pc)]
        stack.extend(reversed(nxt))
    if capped is not None:
        raise DepthExceeded(
            f"overlap persists at depth {max_depth} but is wider than tol={tol}",
            depth=max_depth, enclosure=capped)
    raise ThicknessCollapse(
        f"no overlapping cylinder pair survives past generation {deepest}",
        depth=deepest, tau_product=float(tau_min[0] * tau_min[1]))


def certificate_json(decision: GapLemmaDecision, witness: Optional[IntersectionWitness] = None):
    out = decision.to_json()
    if witness is not None:
        out["witness"] = witness.to_json()
    return out
