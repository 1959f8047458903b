"""Closed-form real maps used as Markov branches and coordinate changes.

Every map is serializable to ``{"kind": ..., "params": {...}}`` and supports
vectorized evaluation, derivative, image of an interval and inversion on a
monotone piece.  Inversion is what refinement needs: covers are built by
pulling intervals back through branch inverses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def _arr(u):
    return np.asarray(u, dtype=float)


class Expr:
    kind = "abstract"

    def __call__(self, u):
        raise NotImplementedError

    def derivative(self, u):
        raise NotImplementedError

    def inverse(self, v, piece):
        """Inverse of the restriction of this map to ``piece = (lo, hi)``."""
        raise NotImplementedError

    def image(self, piece):
        a, b = float(self(piece[0])), float(self(piece[1]))
        return (a, b) if a <= b else (b, a)

    def is_increasing(self, piece) -> bool:
        return float(self(piece[1])) > float(self(piece[0]))

    def forward_width(self, u, w):
        """Length of the image of ``[u, u + w]``, avoiding cancellation where
        a closed form allows it."""
        u, w = _arr(u), _arr(w)
        return np.abs(self(u + w) - self(u))

    def inverse_width(self, v, w, piece):
        """Length of the preimage of ``[v, v + w]`` inside ``piece``."""
        v, w = _arr(v), _arr(w)
        return np.abs(self.inverse(v + w, piece) - self.inverse(v, piece))

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Affine(Expr):
    alpha: float
    beta: float = 0.0
    kind = "affine"

    def __call__(self, u):
        return self.alpha * _arr(u) + self.beta

    def derivative(self, u):
        return np.full_like(_arr(u), self.alpha)

    def inverse(self, v, piece=None):
        return (_arr(v) - self.beta) / self.alpha

    def forward_width(self, u, w):
        return abs(self.alpha) * _arr(w)

    def inverse_width(self, v, w, piece=None):
        return _arr(w) / abs(self.alpha)

    def to_json(self):
        return {"kind": self.kind, "params": {"alpha": self.alpha, "beta": self.beta}}


@dataclass(frozen=True)
class Quadratic(Expr):
    """``u -> 1 - 2u^2``."""

    kind = "quadratic"

    def __call__(self, u):
        u = _arr(u)
        return 1.0 - 2.0 * u * u

    def derivative(self, u):
        return -4.0 * _arr(u)

    def inverse(self, v, piece):
        lo, hi = piece
        if lo < 0.0 < hi:
            raise ValueError("quadratic is not monotone on a piece containing 0")
        root = np.sqrt(np.maximum((1.0 - _arr(v)) / 2.0, 0.0))
        return root if lo >= 0.0 else -root

    def inverse_width(self, v, w, piece):
        v, w = _arr(v), _arr(w)
        a = np.sqrt(np.maximum((1.0 - v) / 2.0, 0.0))
        b = np.sqrt(np.maximum((1.0 - v - w) / 2.0, 0.0))
        return (w / 2.0) / np.where(a + b > 0.0, a + b, 1.0)

    def to_json(self):
        return {"kind": self.kind, "params": {}}


@dataclass(frozen=True)
class Tent(Expr):
    """The full tent map ``T_2``."""

    kind = "tent"

    def __call__(self, u):
        u = _arr(u)
        return np.where(u <= 0.5, 2.0 * u, 2.0 - 2.0 * u)

    def derivative(self, u):
        u = _arr(u)
        return np.where(u <= 0.5, 2.0, -2.0)

    def inverse(self, v, piece):
        lo, hi = piece
        v = _arr(v)
        if hi <= 0.5:
            return v / 2.0
        if lo >= 0.5:
            return 1.0 - v / 2.0
        raise ValueError("tent map is not monotone on a piece containing 1/2")

    def inverse_width(self, v, w, piece):
        return _arr(w) / 2.0

    def to_json(self):
        return {"kind": self.kind, "params": {}}


@dataclass(frozen=True)
class CosConj(Expr):
    """``h(u) = -cos(pi u)``, conjugating the tent map to ``1 - 2x^2``."""

    kind = "cos_conj"

    def __call__(self, u):
        return -np.cos(np.pi * _arr(u))

    def derivative(self, u):
        return np.pi * np.sin(np.pi * _arr(u))

    def inverse(self, v, piece=(0.0, 1.0)):
        lo, hi = piece
        if lo < 0.0 or hi > 1.0:
            raise ValueError("cos_conj inverse is defined on pieces of [0, 1]")
        return np.arccos(np.clip(-_arr(v), -1.0, 1.0)) / np.pi

    def forward_width(self, u, w):
        u, w = _arr(u), _arr(w)
        # cos a - cos b = 2 sin((a+b)/2) sin((b-a)/2)
        return np.abs(2.0 * np.sin(np.pi * (u + w / 2.0)) * np.sin(np.pi * w / 2.0))

    def to_json(self):
        return {"kind": self.kind, "params": {}}


@dataclass(frozen=True)
class Compose(Expr):
    """Composition applying ``maps[0]`` first."""

    maps: tuple
    kind = "compose"

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValueError("empty composition")

    def __call__(self, u):
        out = _arr(u)
        for m in self.maps:
            out = m(out)
        return out

    def derivative(self, u):
        u = _arr(u)
        d = np.ones_like(u)
        for m in self.maps:
            d = d * m.derivative(u)
            u = m(u)
        return d

    def _pieces(self, piece):
        pieces = [tuple(piece)]
        for m in self.maps[:-1]:
            pieces.append(m.image(pieces[-1]))
        return pieces

    def inverse(self, v, piece):
        pieces = self._pieces(piece)
        out = _arr(v)
        for m, p in zip(reversed(self.maps), reversed(pieces)):
            out = m.inverse(out, p)
        return out

    def image(self, piece):
        p = tuple(piece)
        for m in self.maps:
            p = m.image(p)
        return p

    def forward_width(self, u, w):
        u, w = _arr(u), _arr(w)
        for m in self.maps:
            a, b = m(u), m(u + w)
            w = m.forward_width(u, w)
            u = np.minimum(a, b)
        return w

    def inverse_width(self, v, w, piece):
        pieces = self._pieces(piece)
        v, w = _arr(v), _arr(w)
        for m, p in zip(reversed(self.maps), reversed(pieces)):
            a, b = m.inverse(v, p), m.inverse(v + w, p)
            w = m.inverse_width(v, w, p)
            v = np.minimum(a, b)
        return w

    def to_json(self):
        return {"kind": self.kind, "params": {"maps": [m.to_json() for m in self.maps]}}


@dataclass(frozen=True)
class InverseOn(Expr):
    """Inverse of ``inner`` restricted to the monotone piece ``domain``."""

    inner: Expr
    domain: tuple
    kind = "inverse"

    def __post_init__(self):
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    def __call__(self, u):
        return self.inner.inverse(u, self.domain)

    def derivative(self, u):
        return 1.0 / self.inner.derivative(self(u))

    def inverse(self, v, piece=None):
        return self.inner(v)

    def forward_width(self, u, w):
        return self.inner.inverse_width(u, w, self.domain)

    def inverse_width(self, v, w, piece=None):
        return self.inner.forward_width(v, w)

    def to_json(self):
        return {
            "kind": self.kind,
            "params": {"map": self.inner.to_json(), "domain": list(self.domain)},
        }


_SIMPLE = {"quadratic": Quadratic, "tent": Tent, "cos_conj": CosConj}


def expr_from_json(spec: dict) -> Expr:
    kind = spec["kind"]
    params = spec.get("params", {}) or {}
    if kind == "affine":
        return Affine(float(params["alpha"]), float(params.get("beta", 0.0)))
    if kind in _SIMPLE:
        return _SIMPLE[kind]()
    if kind == "compose":
        return Compose(tuple(expr_from_json(m) for m in params["maps"]))
    if kind == "inverse":
        return InverseOn(expr_from_json(params["map"]), tuple(params["domain"]))
    raise ValueError(f"unknown map kind {kind!r}")


def compose(*maps: Sequence[Expr]) -> Expr:
    flat = []
    for m in maps:
        if m is None:
            continue
        flat.extend(m.maps if isinstance(m, Compose) else [m])
    if len(flat) == 1:
        return flat[0]
    # adjacent affine maps fold into one, keeping images exact where possible
    folded = []
    for m in flat:
        if folded and isinstance(m, Affine) and isinstance(folded[-1], Affine):
            prev = folded.pop()
            folded.append(Affine(m.alpha * prev.alpha, m.alpha * prev.beta + m.beta))
        else:
            folded.append(m)
    return folded[0] if len(folded) == 1 else Compose(tuple(folded))


def h(u):
    """Conjugacy ``h(u) = -cos(pi u)`` between the tent map and ``1 - 2x^2``."""
    return -np.cos(np.pi * _arr(u))


def tent(u):
    return Tent()(u)


def f2(x):
    x = _arr(x)
    return 1.0 - 2.0 * x * x


PI = math.pi
