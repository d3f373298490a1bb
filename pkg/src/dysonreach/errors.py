"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or out-of-domain input (shapes, non-finite entries, bad parameters)."""


class NumericalOverflowError(ArithmeticError):
    """A propagated quantity became non-finite.

    ``order`` is the Dyson order at which the first non-finite value appeared,
    or ``None`` when the failing computation is not order-resolved.
    """

    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class CertificateUnreachableError(RuntimeError):
    """No truncation order up to the cap meets the requested error budget."""

    def __init__(self, message, achievable_bound, max_order):
        super().__init__(message)
        self.achievable_bound = achievable_bound
        self.max_order = max_order


class UncoveredPointError(ValueError):
    """Query point lies outside every delta-ball of a partition of unity."""


class NetBudgetExceededError(RuntimeError):
    """A net construction produced more centers than the caller allows."""
