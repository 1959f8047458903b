"""Non-hyperbolicity certificates for the explicit family.

The pipeline measures the thickness of the stable and unstable projections
onto the line of tangencies, decides the gap lemma, refines an intersection
witness ``x*`` and converts it to the critical height ``y* = (x* + 1)/rho``.

Validation follows the orbit of ``(0^+, y*)``.  A literal floating-point
iteration of an expanding map leaves any Cantor set after a few dozen steps
(errors grow like ``4^n``), so the orbit is *shadowed* instead: the horizontal
part is rebuilt from the witness itinerary by backward (contracting)
iteration of the tent branches, and every step is checked against ``F``
through its one-step defect.  The naive escape step is recorded as a
diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .cantor import distance_batch, member, tent_system
from .errors import NewhouseLabError
from .gaplemma import (
    IntersectionWitness,
    LinkVerdict,
    gap_lemma_decide,
    intersect_refine,
)
from .kernels import _numpy as npk
from .kernels import layout as L
from .skew import (
    BCParams,
    SkewMap,
    horseshoe_cover,
    make_bc,
    stable_projection,
    unstable_projection,
    vertical_cover,
)

CERTIFIED = "Certified"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ValidationRecord:
    steps: int
    max_distance: float
    max_defect: float
    min_abs_x: float
    start_offset: float
    naive_escape_step: int
    passed: bool

    def to_json(self):
        return {
            "N": self.steps,
            "max_distance": self.max_distance,
            "max_defect": self.max_defect,
            "min_abs_x": self.min_abs_x,
            "start_offset": self.start_offset,
            "naive_escape_step": self.naive_escape_step,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class NonHyperbolicityCertificate:
    params: Optional[BCParams]
    tau_s: float
    tau_u: float
    tau_product: float
    link: Optional[LinkVerdict]
    witness: Optional[IntersectionWitness]
    witness_y: Optional[float]
    validation: Optional[ValidationRecord]
    status: str
    reason: str = ""
    tolerances: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_json(self):
        return {
            "params": self.params.to_json() if self.params else None,
            "tau_s": self.tau_s,
            "tau_u": self.tau_u,
            "tau_product": self.tau_product,
            "link": self.link.to_json() if self.link else None,
            "witness": self.witness.to_json() if self.witness else None,
            "witness_y": self.witness_y,
            "validation": self.validation.to_json() if self.validation else None,
            "status": self.status,
            "reason": self.reason,
            "tolerances": self.tolerances,
            "version": __version__,
        }


def _tail(system, itinerary, length):
    """Extend an admissible itinerary by always taking the first transition."""
    it = list(itinerary)
    while len(it) < length:
        it.append(system.transitions[it[-1]][0])
    return it


def shadow_orbit(F: SkewMap, witness: IntersectionWitness, N: int):
    """Pseudo-orbit ``(x_n, y_n)``, ``n = 0..N``, of ``(0^+, y)`` with ``y``
    read off the shadowing stable point."""
    p = F.params
    system = tent_system(p.m)
    sym = _tail(system, witness.itineraries[0], max(N, len(witness.itineraries[0])) + 1)
    # backward iteration through the tent branches contracts errors by 1/2
    u = system.branches[sym[-1]].domain.mid
    us = np.empty(len(sym))
    us[-1] = u
    for k in range(len(sym) - 2, -1, -1):
        u = float(system.branches[sym[k]].inverse(u))
        us[k] = u
    xs = np.empty(N + 1)
    ys = np.empty(N + 1)
    xhat = float(-np.cos(np.pi * us[0] / 2.0))
    y = (xhat + 1.0) / p.rho
    xs[0], ys[0] = 0.0, y
    if N >= 1:
        xs[1] = 1.0 - float(F.mu(y))
        ys[1] = F.theta[L.KP] * y
    if N >= 2:
        xs[2] = xhat
        ys[2] = F.theta[L.KP] * ys[1]
    for n in range(3, N + 1):
        xs[n] = -np.cos(np.pi * us[n - 3])
        ys[n] = F.theta[L.KP] * ys[n - 1] if xs[n - 1] > 0 else 1.0 - F.theta[L.KM] * ys[n - 1]
    return xs, ys


def _naive_escape(F: SkewMap, y: float, N: int, cover_x, cover_y, tol: float) -> int:
    """First step at which literal iteration of ``(0^+, y)`` leaves the strip
    complement or drifts more than ``tol`` from the product cover; -1 if never."""
    xs, ys, _, _, _, stop = npk.orbit_trace(F.theta, 0.0, y, 1.0, N)
    for n in range(1, stop + 1):
        if abs(xs[n]) < F.eps:
            return n
        if n >= 3 and (distance_batch(cover_x, xs[n:n + 1])[0] > tol
                       or distance_batch(cover_y, ys[n:n + 1])[0] > tol):
            return n
    return -1


def validate(F: SkewMap, witness: IntersectionWitness, witness_y: float, g: int,
             tol: float, N: int) -> ValidationRecord:
    if N <= 0:
        return ValidationRecord(0, 0.0, 0.0, float("inf"), 0.0, -1, True)
    xs, ys = shadow_orbit(F, witness, N)
    cover_x = horseshoe_cover(F, g)
    cover_s = stable_projection(F, g)
    cover_y = vertical_cover(F, g)
    dist = distance_batch(cover_y, ys)
    if N >= 2:
        dist[2] = max(dist[2], distance_batch(cover_s, xs[2:3])[0])
    if N >= 3:
        dist[3:] = np.maximum(dist[3:], distance_batch(cover_x, xs[3:]))
    side = np.where(xs[:-1] > 0, 1.0, -1.0)
    side[0] = 1.0
    fx, fy, *_ = npk.step(F.theta, xs[:-1], ys[:-1], side)
    defect = np.maximum(np.abs(fx - xs[1:]), np.abs(fy - ys[1:]))
    min_abs = float(np.min(np.abs(xs[1:])))
    max_dist = float(np.max(dist))
    max_def = float(np.max(defect))
    naive = _naive_escape(F, witness_y, N, cover_x, cover_y, tol)
    passed = max_dist <= tol and max_def <= tol and min_abs >= F.eps - tol
    return ValidationRecord(N, max_dist, max_def, min_abs, float(abs(ys[0] - witness_y)),
                            naive, bool(passed))


def certify_nonhyperbolic(t: float, m: int, c_rho: float = 1.05, g: int = 12,
                          tol: float = 1e-6, N: int = 1000, rho_mode: str = "scaled",
                          witness_tol: float = 1e-10, max_depth: int = 400
                          ) -> NonHyperbolicityCertificate:
    tols = {"tol": tol, "witness_tol": witness_tol, "max_depth": max_depth, "g": g, "N": N}

    def inconclusive(reason, **kw):
        base = dict(params=None, tau_s=float("nan"), tau_u=float("nan"),
                    tau_product=float("nan"), link=None, witness=None, witness_y=None,
                    validation=None)
        base.update(kw)
        return NonHyperbolicityCertificate(status=INCONCLUSIVE, reason=reason,
                                           tolerances=tols, **base)

    BCParams(t, m, c_rho, rho_mode)  # bad (t, m, c_rho) is a caller error, not a verdict
    try:
        F = make_bc(t, m, c_rho, rho_mode)
    except NewhouseLabError as exc:
        return inconclusive(f"{type(exc).__name__}: {exc}")
    p = F.params
    Ks = stable_projection(F, g)
    Ku = unstable_projection(F, g)
    dec = gap_lemma_decide(Ks, Ku)
    info = dict(params=p, tau_s=dec.tau_first, tau_u=dec.tau_second,
                tau_product=dec.tau_product, link=dec.link)
    if not dec.tau_product > 1.0:
        return inconclusive("ThicknessProductNotAboveOne", **info)
    if not dec.link.linked:
        return inconclusive(f"NotLinked: {dec.link.case.value}", **info)
    try:
        w = intersect_refine(Ks, Ku, witness_tol, max_depth)
    except NewhouseLabError as exc:
        return inconclusive(f"{type(exc).__name__}: {exc}", **info)
    y_star = (w.point + 1.0) / p.rho
    info.update(witness=w, witness_y=y_star)
    if not member(vertical_cover(F, g), y_star, tol):
        return inconclusive("WitnessOffCantor", **info)
    rec = validate(F, w, y_star, g, tol, N)
    info["validation"] = rec
    if not rec.passed:
        return inconclusive("ValidationFailed", **info)
    return NonHyperbolicityCertificate(status=CERTIFIED, tolerances=tols, **info)
