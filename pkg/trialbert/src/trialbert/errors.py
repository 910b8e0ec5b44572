"""Exception types raised by the trialbert training and serving code."""


class TrialBertError(Exception):
    """Base class for all trialbert errors."""


class SingleClassData(TrialBertError):
    """Training data contains only one label class."""


class BaseModelUnavailable(TrialBertError):
    """The requested base encoder cannot be loaded."""


class EmptyCorpus(TrialBertError):
    """The pre-training corpus file has no usable text."""
