"""Synthetic EEG generation, preprocessing, ERP labeling, statistics."""

from .synth import (
    SynthConfig,
    RawEeg,
    EventMarker,
    make_default_schedule,
    synth_session,
)
from .preprocess import preprocess
from .epochs import TrialRecord, epoch_trials, grand_average
from .labeling import label_erp, moving_average_centered, P2P_THRESHOLD
from .stats import pearson, permutation_test, PermutationResult
from .export import (
    session_to_csv,
    session_from_csv,
    trials_to_csv,
    trials_table_from_csv,
)

__all__ = [
    "SynthConfig",
    "RawEeg",
    "EventMarker",
    "make_default_schedule",
    "synth_session",
    "preprocess",
    "TrialRecord",
    "epoch_trials",
    "grand_average",
    "label_erp",
    "moving_average_centered",
    "P2P_THRESHOLD",
    "pearson",
    "permutation_test",
    "PermutationResult",
    "session_to_csv",
    "session_from_csv",
    "trials_to_csv",
    "trials_table_from_csv",
]
