"""Exception hierarchy shared by all ssbo modules."""


class SSBOError(ValueError):
    """Base class for all errors raised by ssbo."""


class DimensionMismatch(SSBOError):
    pass


class NonPositiveDefinite(SSBOError):
    pass


class NegativeVariance(SSBOError):
    pass


class NonPositiveStd(SSBOError):
    pass


class RateOutOfRange(SSBOError):
    pass


class LengthMismatch(SSBOError):
    pass


class DomainMismatch(SSBOError):
    pass


class OutOfRange(SSBOError):
    pass


class ConfigParse(SSBOError):
    pass


class ConfigValidation(SSBOError):
    pass


class RuntimeFailure(SSBOError):
    """A replicate run failed; ``run_id`` names the condition and replicate."""

    def __init__(self, run_id, cause):
        super().__init__(f"run {run_id} failed: {cause!r}")
        self.run_id = run_id
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.run_id, self.cause)


class MissingManifest(SSBOError):
    pass


class SchemaMismatch(SSBOError):
    pass
