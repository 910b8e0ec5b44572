"""Classify cancer-trial exclusion criteria from registry eligibility text.

Pipeline: fetch trials from ClinicalTrials.gov, split eligibility sections
into section-tagged criteria, keyword-filter candidates for seven exclusion
types, classify them with the builtin linear model or a remote model server,
OR-aggregate to trial-level labels, and evaluate with trial-level k-fold
cross-validation.
"""

from .backend import BackendConfig, BackendKind, BuiltinBackend, RemoteBackend, predict
from .classifier import (
    Hyperparams,
    LabeledExample,
    LinearModel,
    Prediction,
    load_model,
    save_model,
    train,
)
from .evaluation import (
    AgreementStats,
    FoldPlan,
    TrialPrediction,
    aggregate_trial,
    cohen_kappa,
    compute_metrics,
    make_folds,
    run_cv,
)
from .keywords import (
    ExclusionType,
    KeywordMatch,
    KeywordSet,
    compile_keywords,
    default_keyword_sets,
    filter_corpus,
    keyword_metrics,
    match_criterion,
)
from .parser import Criterion, SectionKind, corpus_stats, detect_sections, parse_trial, split_criteria
from .registry import CorpusManifest, CorpusStore, RegistryClient, TrialRecord

__version__ = "0.1.0"
