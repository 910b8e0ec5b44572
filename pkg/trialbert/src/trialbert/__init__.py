"""Transformer scoring server, fine-tuning, and MLM pre-training.

Serves fine-tuned encoders over the same line-delimited JSON protocol the
trialscreen pipeline uses for remote backends, and provides the training
side: binary sequence-classification fine-tuning and masked-language-model
continued pre-training on eligibility text.
"""

from .configs import FinetuneConfig, PretrainConfig, load_config, save_config
from .errors import (
    BaseModelUnavailable,
    EmptyCorpus,
    SingleClassData,
    TrialBertError,
)

__version__ = "0.1.0"

__all__ = [
    "FinetuneConfig",
    "PretrainConfig",
    "load_config",
    "save_config",
    "TrialBertError",
    "SingleClassData",
    "BaseModelUnavailable",
    "EmptyCorpus",
    "__version__",
]
