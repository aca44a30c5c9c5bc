"""Exception hierarchy."""


class ZonoDppError(Exception):
    """Base class for library errors."""


class RankError(ZonoDppError, ValueError):
    """Matrix is rank deficient where full rank is required."""


class LpError(ZonoDppError, RuntimeError):
    """Simplex solver failed to terminate within its pivot budget."""


class NotInZonotopeError(ZonoDppError, ValueError):
    """A point expected to lie in the zonotope does not."""


class TieError(ZonoDppError, RuntimeError):
    """The tiling objective admits two optimal bases at some point.

    This has probability zero for a Gaussian objective; redraw it with a new
    seed.
    """


class ChainError(ZonoDppError, RuntimeError):
    """A Markov chain reached an inconsistent state."""


class NumericalBreakdownError(ZonoDppError, ArithmeticError):
    """Round-off produced a value outside its mathematical range."""


class EnumerationLimitError(ZonoDppError, ValueError):
    """Brute-force enumeration would exceed its size guard."""


class ConfigError(ZonoDppError, ValueError):
    """Invalid run configuration."""
