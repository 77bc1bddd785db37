"""Exception types shared across the package."""


class ReplimarketError(Exception):
    """Base class for all domain errors."""


# -- market lifecycle --------------------------------------------------------

class MarketError(ReplimarketError):
    pass


class MarketClosedError(MarketError):
    """Quote, step, or order against a market that is not open."""


class AlreadyClosedError(MarketError):
    """close requested on a market that already left the Open state."""


class SettleBeforeCloseError(MarketError):
    """settle requested before the market was closed."""


# -- agents ------------------------------------------------------------------

class DimensionMismatchError(ReplimarketError):
    """Feature vector dimension does not match the genome/schema."""


# -- dataset -----------------------------------------------------------------

class DatasetError(ReplimarketError):
    pass


class SchemaMismatchError(DatasetError):
    """CSV header names do not match the feature schema."""


class MalformedRowError(DatasetError):
    """A data row could not be parsed; carries the 1-based row number."""

    def __init__(self, row_number: int, message: str):
        super().__init__(f"row {row_number}: {message}")
        self.row_number = row_number


class EmptyDatasetError(DatasetError):
    pass


class UnfittedSchemaError(DatasetError):
    """Normalization requested before statistics were fitted."""


# -- evolution ---------------------------------------------------------------

class EmptyTrainingSetError(ReplimarketError):
    pass


class MissingOutcomeError(ReplimarketError):
    """A training/scoring step needs a ground-truth outcome the record lacks."""


# -- evaluation --------------------------------------------------------------

class UnpairedResultsError(ReplimarketError):
    """Two result sets do not cover the same market ids."""


class TooFewPairsError(ReplimarketError):
    """Wilcoxon test needs at least 5 non-zero paired differences."""


# -- pool files / service ----------------------------------------------------

class PoolFormatError(ReplimarketError):
    """Genome pool file is malformed or has an unsupported version."""


class PoolSchemaMismatchError(ReplimarketError):
    """Trained pool's feature schema does not match the event's."""


class ServiceError(ReplimarketError):
    pass


class DuplicateEventIdError(ServiceError):
    pass


class UnknownEventError(ServiceError):
    pass


class UnknownMarketError(ServiceError):
    pass


class InvalidTokenError(ServiceError):
    pass


class AlreadyRunningError(ServiceError):
    pass


class MarketsStillOpenError(ServiceError):
    pass
