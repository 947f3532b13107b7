"""Exception types shared across the vocoder pipeline."""


class CalibrationError(RuntimeError):
    """A scale ladder produced no usable reconstruction response."""


class FilterInstabilityError(RuntimeError):
    """A spectral filter coefficient exceeded the rational-approximation bound."""


class TrainingError(RuntimeError):
    """Prototype training could not proceed (e.g. no voiced material)."""


class AlignmentError(ValueError):
    """Reference and synthesized utterances are too different to compare."""


class FormatError(ValueError):
    """A binary feature/prototype file is malformed or truncated."""
