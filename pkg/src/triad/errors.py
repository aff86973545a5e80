"""Exception hierarchy shared across the package.

Every error raised by triad code derives from :class:`TriadError` so callers
(CLI, service) can map failures to exit codes / HTTP statuses in one place.
"""


class TriadError(Exception):
    """Base class for all triad errors."""


class MissingMeasurement(TriadError):
    """A required raw measurement is absent."""

    def __init__(self, field: str):
        super().__init__(f"missing measurement: {field}")
        self.field = field


class SchemaError(TriadError):
    """Tabular document header does not match the expected schema."""


class ParseError(TriadError):
    """A cell or line of a tabular document could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(TriadError):
    """Invalid configuration value."""


class DataError(TriadError):
    """Dataset cannot support the requested operation (e.g. single class)."""


class ScaleFormatError(TriadError):
    """Scale definition document violates its invariants."""


class MissingItemInput(TriadError):
    """A scale item with reject policy has no input value."""

    def __init__(self, item_id: str):
        super().__init__(f"missing input for scale item: {item_id}")
        self.item_id = item_id


class DomainError(TriadError):
    """A value lies outside its declared domain."""


class RuleEvaluationError(TriadError):
    """A guideline rule referenced an absent field with no declared default."""


class SchemaMismatch(TriadError):
    """Feature vector does not conform to a model's feature schema."""


class FormatError(TriadError):
    """Malformed model or store document."""


class CoverMissing(TriadError):
    """Tree node lacks the cover count needed for conditional expectations."""


class TooManyFeatures(TriadError):
    """Exact subset enumeration requested for too wide a schema."""

    def __init__(self, d: int, limit: int):
        super().__init__(f"subset enumeration over {d} features exceeds limit {limit}")
        self.d = d
        self.limit = limit


class LengthMismatch(TriadError):
    """Paired series have different lengths."""


class InsufficientData(TriadError):
    """Too few records for the requested statistic."""

    def __init__(self, group: str):
        super().__init__(f"insufficient data for group: {group}")
        self.group = group


class RankDeficient(TriadError):
    """Regression design matrix is collinear."""

    def __init__(self, node: str):
        super().__init__(f"collinear predictors for node: {node}")
        self.node = node


class DuplicateId(TriadError):
    """Identifier already present in the registry or store."""


class DanglingParent(TriadError):
    """A stage-3 entry references a stage-2 entry that does not exist."""


class StoreError(TriadError):
    """Append-only store violation (bad sequence, malformed record)."""
