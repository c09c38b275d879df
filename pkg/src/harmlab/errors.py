"""Exception hierarchy shared by all harmlab modules."""


class HarmlabError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(HarmlabError):
    """Objects from incompatible models were combined (e.g. family mismatch)."""


class UnsupportedFeatureError(HarmlabError):
    """A requested homomorphism, family or method is not implemented."""


class PreconditionError(HarmlabError):
    """Caller violated a documented precondition."""


class TruncationError(HarmlabError):
    """A computation left the reliable part of a truncated graph."""


class GraphParseError(HarmlabError):
    """Malformed graph or group document; message names the offending entry."""


class ConstructionError(HarmlabError):
    """An exact construction that is guaranteed to exist could not be built."""


class InternalInvariantError(HarmlabError):
    """An invariant that should hold by construction failed; indicates a bug."""


class InsufficientSamplesError(HarmlabError):
    """A Monte Carlo conditioning event was hit too rarely to report."""
