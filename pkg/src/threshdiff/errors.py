"""Exception types shared across the package."""


class ThreshDiffError(Exception):
    """Base class for all package errors."""


class InvalidThresholdOrder(ThreshDiffError, ValueError):
    """Thresholds are not strictly increasing."""


class DegenerateSigma(ThreshDiffError, ValueError):
    """Diffusion coefficient is zero or negative where positivity is required."""


class NonErgodicModel(ThreshDiffError, ValueError):
    """Drift does not pull inward at both ends, so no stationary law exists."""


class IndexOutOfRange(ThreshDiffError, IndexError):
    """Threshold index outside 0..k-1."""


class NumericalBlowup(ThreshDiffError, RuntimeError):
    """Simulated state left the guard interval before the horizon."""

    def __init__(self, step: int, time: float, value: float):
        self.step = step
        self.time = time
        self.value = value
        super().__init__(
            f"state diverged at step {step} (t={time:g}): |x|={abs(value):.3g}"
        )


class EmptyBox(ThreshDiffError, ValueError):
    """No sampled value falls inside the search interval."""


class RegimeStarved(ThreshDiffError, RuntimeError):
    """A regime's occupation is too small to identify its rate."""


class ConventionViolation(ThreshDiffError, ValueError):
    """Inputs violate an ordering convention (e.g. rates passed as rho2 <= rho1)."""


class QuadratureFailure(ThreshDiffError, RuntimeError):
    """Numerical integration did not reach the requested accuracy."""


class BoundaryHit(ThreshDiffError, RuntimeError):
    """A sampled functional maximizer landed on the truncation boundary."""


class ConfigError(ThreshDiffError, ValueError):
    """Experiment configuration is malformed or inconsistent."""


class FailureRateExceeded(ThreshDiffError, RuntimeError):
    """Too many replicates of an experiment failed to produce output."""

    def __init__(self, failed: int, total: int, limit: float):
        self.failed = failed
        self.total = total
        self.limit = limit
        super().__init__(
            f"{failed}/{total} replicates failed (limit {limit:.0%})"
        )
