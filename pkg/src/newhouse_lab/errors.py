"""Exception hierarchy shared by all modules."""


class NewhouseLabError(Exception):
    """Base class for every error raised by this package."""


class DegenerateInterval(NewhouseLabError, ValueError):
    pass


class MarkovViolation(NewhouseLabError):
    pass


class NonExpanding(NewhouseLabError):
    pass


class NoBoundedGap(NewhouseLabError):
    pass


class DegenerateScale(NewhouseLabError, ValueError):
    pass


class NotLinked(NewhouseLabError):
    pass


class ThicknessCollapse(NewhouseLabError):
    def __init__(self, message, depth=None, tau_product=None):
        super().__init__(message)
        self.depth = depth
        self.tau_product = tau_product


class DepthExceeded(NewhouseLabError):
    def __init__(self, message, depth=None, enclosure=None):
        super().__init__(message)
        self.depth = depth
        self.enclosure = enclosure


class LinkingViolated(NewhouseLabError):
    def __init__(self, message, lhs=None, middle=None, rhs=None):
        super().__init__(message)
        self.lhs = lhs
        self.middle = middle
        self.rhs = rhs


class UnimodalityViolated(NewhouseLabError):
    def __init__(self, message, x=None, y=None):
        super().__init__(message)
        self.x = x
        self.y = y


class UndefinedAtCriticalLine(NewhouseLabError):
    pass


class NotInImage(NewhouseLabError):
    pass


class HitCriticalLine(NewhouseLabError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
