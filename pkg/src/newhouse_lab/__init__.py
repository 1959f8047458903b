"""Numerical toolkit for thick Cantor sets, gap-lemma intersections and
skew-product unimodal dynamics with a critical line."""

__version__ = "0.1.0"

from .errors import (
    NewhouseLabError,
    DegenerateInterval,
    MarkovViolation,
    NonExpanding,
    NoBoundedGap,
    DegenerateScale,
    NotLinked,
    ThicknessCollapse,
    DepthExceeded,
    LinkingViolated,
    UnimodalityViolated,
    UndefinedAtCriticalLine,
    NotInImage,
    HitCriticalLine,
)

__all__ = [
    "__version__",
    "NewhouseLabError",
    "DegenerateInterval",
    "MarkovViolation",
    "NonExpanding",
    "NoBoundedGap",
    "DegenerateScale",
    "NotLinked",
    "ThicknessCollapse",
    "DepthExceeded",
    "LinkingViolated",
    "UnimodalityViolated",
    "UndefinedAtCriticalLine",
    "NotInImage",
    "HitCriticalLine",
]
