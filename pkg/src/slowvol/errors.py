"""Exception types shared across the package.

Every error raised by the library derives from :class:`SlowvolError`, so
callers can catch one type at the boundary.  Budget errors carry whatever
partial result was available when the computation stopped, because a budget
hit is itself a measurement (it is how exponential growth announces itself).
"""


class SlowvolError(Exception):
    """Base class for all library errors."""


class BudgetExceeded(SlowvolError):
    """A ball or mesh outgrew its element/vertex budget.

    Attributes
    ----------
    partial : object or None
        The partial series accumulated before the abort, when available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NonInvertibleGenerator(SlowvolError):
    """A generator matrix is not invertible over the integers (det != +-1)."""


class SeriesTooShort(SlowvolError):
    """Not enough samples (or not enough abscissa span) to fit an exponent."""


class NotUnitriangular(SlowvolError):
    """An operation requiring unit upper-triangular generators got something else."""


class ZeroCovector(SlowvolError):
    """p = 0 fed to a Hamiltonian that is not smooth on the zero section."""


class EnergyDriftExceeded(SlowvolError):
    """Energy drift stayed above the cap after the maximum number of step halvings."""


class ConstraintViolation(SlowvolError):
    """A sphere-chart point violates |q| = 1 or q.p = 0 beyond tolerance."""


class GradientMismatch(SlowvolError):
    """Analytic and finite-difference gradients disagree grossly; internal bug guard."""


class NonPositiveH(SlowvolError):
    """H <= 0 at a sampled fiber direction; the level set is not starshaped there."""


class MalformedDescriptor(SlowvolError):
    """Manifold descriptor string failed to parse or has invalid parameters."""


class CatalogInvariantError(SlowvolError):
    """A catalog entry violated an internal consistency bound (implementation bug)."""


class ConfigError(SlowvolError):
    """Experiment configuration is missing keys or has invalid values."""
