"""Exception types shared across the toolkit."""


class AuctionlabError(Exception):
    """Base class for all toolkit-specific errors."""


class MalformedScenario(AuctionlabError):
    """Scenario input could not be parsed or validated."""


class NonConvergence(AuctionlabError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, residuals=None, iterations=None):
        super().__init__(message)
        self.residuals = residuals
        self.iterations = iterations


class DegenerateInput(AuctionlabError):
    """A solver precondition fails, e.g. a score function is not increasing."""


class AsymmetricScenario(AuctionlabError):
    """A symmetric-only solver was handed a non-symmetric scenario."""


class PreconditionViolation(AuctionlabError):
    """A transform precondition fails (sign, range or monotonicity)."""


class RootBracketFailure(AuctionlabError):
    """Monotone root-finding could not bracket a root.

    Carries the evaluated interval endpoints for diagnosis.
    """

    def __init__(self, message, lo=None, hi=None, f_lo=None, f_hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.f_lo = f_lo
        self.f_hi = f_hi


class CertificationFailure(AuctionlabError):
    """A mapped profile failed its outcome-preservation certification."""

    def __init__(self, message, discrepancy=None):
        super().__init__(message)
        self.discrepancy = discrepancy
