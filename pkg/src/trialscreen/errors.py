"""Exception types shared across the pipeline."""


class TrialScreenError(Exception):
    """Base class for all pipeline errors."""


class NotFound(TrialScreenError):
    """The registry has no study for the requested id."""


class MissingEligibility(TrialScreenError):
    """Study exists but carries no eligibility text."""


class TransportError(TrialScreenError):
    """Network or decode failure while talking to the registry; retriable."""


class EmptyInput(TrialScreenError):
    """An operation received empty text where content is required."""


class EmptyKeywordSet(TrialScreenError):
    pass


class MissingLabel(TrialScreenError):
    """A gold label is required but absent for a criterion or trial."""


class EmptyText(TrialScreenError):
    pass


class SingleClassData(TrialScreenError):
    """Training data contains only one class."""


class NonFiniteLoss(TrialScreenError):
    pass


class BackendUnreachable(TrialScreenError):
    pass


class ProtocolViolation(TrialScreenError):
    """The remote model server broke the wire contract."""


class CorruptModelFile(TrialScreenError):
    pass


class TooFewTrials(TrialScreenError):
    pass


class UnknownTrial(TrialScreenError):
    pass


class LengthMismatch(TrialScreenError):
    pass
