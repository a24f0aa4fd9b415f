"""Relative complexity of detector hierarchies and emergence monitoring."""

from .codec import DescriptionAtom, decode, encode_state, gamma_length
from .complexity import (STATE_ONLY, WITH_DEVICE_COST, kd_profile, kd_shift, minimal_description_oracle,
                         reduce_redundant, relative_complexity)
from .hierarchy import Hierarchy, SystemTrace, evaluate_frame, evaluate_trace
from .monitor import EmergenceEvent, ErmPhase, check_emergence, classify_event, complexity_trace, detect_events, erm_step

__all__ = [
    "DescriptionAtom", "decode", "encode_state", "gamma_length",
    "STATE_ONLY", "WITH_DEVICE_COST", "kd_profile", "kd_shift", "minimal_description_oracle",
    "reduce_redundant", "relative_complexity",
    "Hierarchy", "SystemTrace", "evaluate_frame", "evaluate_trace",
    "EmergenceEvent", "ErmPhase", "check_emergence", "classify_event", "complexity_trace", "detect_events", "erm_step",
]
