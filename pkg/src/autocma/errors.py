"""Exception types shared across the toolkit."""


class AutocmaError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(AutocmaError, ValueError):
    """An argument or configuration value violates its domain."""


class SchemaError(AutocmaError, ValueError):
    """A persisted document or feature vector does not match the expected schema."""


class ParseError(AutocmaError, ValueError):
    """Malformed serialized expression tree."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class GenerationExhaustedError(AutocmaError, RuntimeError):
    """Random function generation failed to meet constraints within the retry budget."""


class DegenerateFunctionError(AutocmaError, ValueError):
    """The sampled function is constant (or nearly so) and must be rejected upstream."""


class TrainingDivergedError(AutocmaError, RuntimeError):
    """Network training produced a non-finite loss."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
