class KillingMomentumError(Exception):
    """Base class for library errors."""


class DomainError(KillingMomentumError, ValueError):
    """A parameter lies outside its mathematical domain (R <= 0, k > n, ...)."""


class DegenerateChartError(KillingMomentumError, ValueError):
    """Evaluation requested at a point where the chart degenerates."""


class NonConstantStructureError(KillingMomentumError):
    """Frame brackets do not close with constant coefficients."""


class InconsistencyError(KillingMomentumError):
    """Two representations that must agree do not."""


class InjectivityError(KillingMomentumError, ValueError):
    """Point or tangent vector beyond the injectivity radius."""


class LadderTruncation(KillingMomentumError):
    """A ladder step annihilated the state (top of the ladder reached)."""


class ConfigError(KillingMomentumError, ValueError):
    """Invalid run configuration."""
