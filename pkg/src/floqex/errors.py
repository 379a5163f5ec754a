"""Exception types shared across the package."""


class FloqexError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(FloqexError):
    pass


class PeriodMismatch(FloqexError):
    pass


class BandwidthExceeded(FloqexError):
    """An exact series operation would exceed the configured frequency cap."""


class NotDiagonal(FloqexError):
    pass


class OrderUnavailable(FloqexError):
    """A higher perturbation order was requested than the family provides."""


class DegenerateDenominator(FloqexError):
    """A resolvent denominator vanished outside the degenerate branch.

    This signals two constant-order entries that are congruent modulo
    2*pi*i/T but were not merged into one multiplicity class by the fold
    tolerance.
    """


class PairNotDegenerate(FloqexError):
    pass


class NotMultiple(FloqexError):
    pass


class NotAClass(FloqexError):
    pass


class ConstantModulationPresent(FloqexError):
    """The first-order modulation has a nonzero constant Fourier part."""


class DegenerateConstantSystem(FloqexError):
    """The unmodulated system is itself at a defective point."""


class SeriesPeriodMismatch(FloqexError):
    pass


class NonPositiveMaterialParameter(FloqexError):
    pass


class DegeneracyCheckFailed(FloqexError):
    """The non-degeneracy precondition of the dimer classification failed."""


class StepCountTooSmall(FloqexError):
    pass


class NearDefectiveMonodromy(FloqexError):
    """Raised only if the caller asks for strict handling; normally a flag."""


class ConfigParseError(FloqexError):
    pass
