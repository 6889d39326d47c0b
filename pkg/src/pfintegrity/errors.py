"""Exception types raised across the package."""


class AllWeightsZero(ValueError):
    """Every particle log-weight is -inf, so the set cannot be normalized."""


class DegenerateSet(ValueError):
    """Too few particles for the requested statistic."""


class DegenerateVotes(ValueError):
    """All RAIM votes underflowed for every particle."""


class LengthMismatch(ValueError):
    """Two distributions over the particle domain have different lengths."""


class ConfigError(ValueError):
    """Scenario configuration failed validation."""


class ScenarioError(RuntimeError):
    """A filter failure inside a running scenario, tagged with the epoch."""

    def __init__(self, epoch, cause):
        super().__init__(f"epoch {epoch}: {type(cause).__name__}: {cause}")
        self.epoch = epoch
        self.cause = cause
