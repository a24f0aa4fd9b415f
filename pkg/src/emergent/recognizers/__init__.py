from .automata import DFA, PDA, ab_star, an_bn, automaton_accepts, automaton_from_dict
from .conics import ConicModel, conic_flag, fit_conic
from .fractal import DimensionEstimate, DimensionShift, dimension_shift, fractal_dimension
from .periodic import HarmonicModel, autocorrelation, detect_period, fit_harmonic
from .points import PatternStats, Window, pattern_stats

__all__ = [
    "DFA", "PDA", "ab_star", "an_bn", "automaton_accepts", "automaton_from_dict",
    "ConicModel", "conic_flag", "fit_conic",
    "DimensionEstimate", "DimensionShift", "dimension_shift", "fractal_dimension",
    "HarmonicModel", "autocorrelation", "detect_period", "fit_harmonic",
    "PatternStats", "Window", "pattern_stats",
]
