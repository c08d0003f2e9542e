"""Exception types shared across the package."""


class DdikitError(Exception):
    """Base class for all package errors."""


class InvalidSmiles(DdikitError):
    """SMILES string could not be parsed into a valid molecule."""

    def __init__(self, smiles: str, reason: str, drug_id: str | None = None):
        self.smiles = smiles
        self.reason = reason
        self.drug_id = drug_id
        prefix = f"drug {drug_id!r}: " if drug_id else ""
        super().__init__(f"{prefix}invalid SMILES {smiles!r}: {reason}")


class LengthMismatch(DdikitError):
    """Two sequences that must share a length do not."""


class RenderFailure(DdikitError):
    """Image rendering failed."""


class ShapeMismatch(DdikitError):
    """Tensor or array has an unexpected shape."""


class AllMasked(DdikitError):
    """Every key position of a query row is masked."""


class IndexOutOfRange(DdikitError):
    """Token id outside the embedding table."""


class EmptyInput(DdikitError):
    """Operation requires a nonempty input."""


class ParseError(DdikitError):
    """Malformed dataset file."""

    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class UnknownDrugReference(DdikitError):
    """Interaction references a drug id absent from the drug table."""


class ClassTooSmall(DdikitError):
    """An event class has too few samples to stratify."""

    def __init__(self, events: list[int]):
        self.events = events
        super().__init__(f"event classes with fewer than 3 samples: {events}")


class EmptyPartition(DdikitError):
    """A split bucket received zero pairs."""


class ConfigError(DdikitError):
    """Invalid run configuration."""


class DataError(DdikitError):
    """Dataset content violates an invariant."""


class NonFiniteLoss(DdikitError):
    """Training loss became NaN or infinite."""


class VocabularyMismatch(DdikitError):
    """Checkpoint vocabulary does not match the provided one."""


class ModalityMismatch(DdikitError):
    """Operation requires a different image modality."""


class TooFewSamples(DdikitError):
    """Projection requires at least two samples."""
