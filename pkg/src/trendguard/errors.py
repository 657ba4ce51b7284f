"""Exception types shared across the package.

Every error surface in the public API maps to one of these classes so
callers (and the HTTP layer) can branch on type instead of message text.
"""


class TrendGuardError(Exception):
    """Base class for all package errors."""


class ZeroVector(TrendGuardError):
    """Vector norm too small to normalize (<= 1e-12)."""


class DimensionMismatch(TrendGuardError):
    """Operands disagree on vector dimension."""


class EmptyStore(TrendGuardError):
    """Operation requires a non-empty vector store."""


class DuplicateItem(TrendGuardError):
    """Item id already present and replacement was not requested."""


class CorruptVectorFile(TrendGuardError):
    """Vector file failed header or per-record validation."""


class ZeroEmbedding(TrendGuardError):
    """Encoder produced a pre-normalization output with norm <= 1e-12."""


class EmptyTokens(TrendGuardError):
    """Multimodal encoder requires at least one token per modality."""


class NoPositives(TrendGuardError):
    """Some anchor in the batch has an empty positive set."""


class BadTemperature(TrendGuardError):
    """Contrastive temperature must be positive."""


class UnknownCluster(TrendGuardError):
    """Cluster id not present in the assignment."""


class EmptyWindow(TrendGuardError):
    """Seed precision undefined: no retrievals in the window."""


class UnknownItem(TrendGuardError):
    """Item id not present in the vector store."""


class UnknownTrend(TrendGuardError):
    """Trend id not registered."""


class NoSeeds(TrendGuardError):
    """Trend has no seeds to score against."""


class UnknownSeed(TrendGuardError):
    """Seed id not resolvable in the trend's embedding store."""


class MalformedTiers(TrendGuardError):
    """Action tiers violate the ordering/distinctness invariant."""


class NoPriorDecision(TrendGuardError):
    """Label refers to a (video, trend) pair with no recorded decision."""


class NoLabeledCandidates(TrendGuardError):
    """Precision@k undefined: no labeled candidates in the top k."""


class EmptyInput(TrendGuardError):
    """Metric input must be non-empty."""


class DegenerateLabels(TrendGuardError):
    """Metric requires at least one positive (and one negative for ROC)."""


class CorruptEventLog(TrendGuardError):
    """Event log failed to parse; byte offset of the bad record is reported."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class ConfigError(TrendGuardError):
    """Invalid configuration value."""
