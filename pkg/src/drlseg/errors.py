"""Exception types shared across the package."""


class DrlsError(Exception):
    """Base class for all package errors."""


class ConfigError(DrlsError, ValueError):
    """Invalid or inconsistent configuration."""


class DegenerateRegionError(DrlsError):
    """A level-set region (inside or outside) has vanishing measure."""

    def __init__(self, region, measure, step=None):
        self.region = region
        self.measure = measure
        self.step = step
        where = "" if step is None else f" at recurrence step {step}"
        super().__init__(f"degenerate {region} region{where}: measure {measure:.3e}")

    def at_step(self, step):
        return DegenerateRegionError(self.region, self.measure, step)


class StructuralError(DrlsError, ValueError):
    """Tensor shapes do not fit a layer or network."""


class UsageError(DrlsError, RuntimeError):
    """API called out of order, e.g. backward without a matching forward trace."""


class UndefinedMetricError(DrlsError, ValueError):
    """Metric denominator is empty for this case."""


class ParseError(DrlsError, ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class DivergenceError(DrlsError, FloatingPointError):
    def __init__(self, epoch, sample, loss):
        self.epoch = epoch
        self.sample = sample
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, sample {sample}")
