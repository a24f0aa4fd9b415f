import pytest
from hypothesis import given, settings, strategies as st

from emergent.complexity import window_bits
from emergent.errors import BaselineViolation, WindowTooLong
from emergent.monitor import (EHS, ERM_SEMANTIC, ERM_SYNTACTIC, T1, T2, T3, Change, EmergenceEvent, ErmPhase,
                              check_emergence, classify_event, complexity_trace, detect_events, erm_step,
                              newly_activated)
from emergent.rules import SequenceRule, SymbolRule

from words import letters, run, with_word

WORD_STREAM = "bbbbaaaa" + "ab" * 4


def test_word_event():
    h = with_word()
    trace = run(h, WORD_STREAM)
    events = detect_events(trace, h, w=8)
    assert len(events) == 1
    e = events[0]
    assert (e.frame, e.detector_id, e.bits_before, e.bits_after, e.kind) == (9, 3, 40, 28, EHS)
    assert (e.baseline_frame, e.compare_frame) == (7, 15)


def test_check_emergence_directly():
    h = with_word()
    trace = run(h, WORD_STREAM)
    e = check_emergence(trace, h, 3, 7, 8, 8)
    assert (e.bits_before, e.bits_after) == (40, 28)


def test_detector_that_covers_nothing_brings_no_event():
    # Dc and Dd never fire; W tolerates both misses, so from frame 10 on it
    # fires on silence without explaining anything.
    h = letters(("a", "b", "c", "d"))
    h = h.register("Dc", 1, SymbolRule(1, "c")).register("Dd", 1, SymbolRule(1, "d"))
    h = h.register("W", 2, SequenceRule(((3, 1), (4, 0)), tolerance=2), since=10)
    trace = run(h, "ab" * 10)
    assert (5, 10) in newly_activated(trace, h, 8)
    t = 10 - h.detector(5).window
    assert window_bits(trace, h, t + 1, t + 8) >= window_bits(trace, h, t - 7, t, exclude=(5,))
    assert check_emergence(trace, h, 5, t, 8, 8) is None
    assert detect_events(trace, h, w=8) == []


def test_baseline_violation():
    h = with_word()
    trace = run(h, "ab" * 10)
    with pytest.raises(BaselineViolation):
        check_emergence(trace, h, 3, 9, 8, 8)
    silent = run(h, "a" * 20)
    with pytest.raises(BaselineViolation):
        check_emergence(silent, h, 3, 9, 8, 8)


def test_windows_must_fit():
    h = with_word()
    trace = run(h, WORD_STREAM)
    with pytest.raises(WindowTooLong):
        check_emergence(trace, h, 3, 7, 9, 8)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6))
def test_word_over_sorted_letters_always_emerges(half):
    w = 2 * half
    h = with_word()
    trace = run(h, "b" * half + "a" * half + "ab" * half)
    events = detect_events(trace, h, w=w)
    assert [e.detector_id for e in events] == [3]
    assert events[0].bits_after < events[0].bits_before


@settings(max_examples=60, deadline=None)
@given(st.text("ab", min_size=6, max_size=30), st.integers(2, 6))
def test_events_are_exactly_the_strict_drops(stream, w):
    h = with_word()
    trace = run(h, stream)
    events = {(e.detector_id, e.frame): e for e in detect_events(trace, h, w=w)}
    last = len(trace) - 1
    for k, f in newly_activated(trace, h, w):
        t = f - h.detector(k).window
        if t - w + 1 < 0 or t + w > last or any(k in trace[x].active for x in range(t - w + 1, t + 1)):
            assert (k, f) not in events
            continue
        before = window_bits(trace, h, t - w + 1, t, exclude=(k,))
        assert window_bits(trace, h, t - w + 1, t) == before
        after = window_bits(trace, h, t + 1, t + w)
        assert ((k, f) in events) == (after < before)
    for e in events.values():
        assert e.bits_after < e.bits_before


# ------------------------------------------------------------------ classification

def _event(frame=30, k=4):
    return EmergenceEvent(frame, k, 10, 5, frame - 8, frame + 8)


def test_classification():
    assert classify_event(_event(), [Change(0, "detector", 4)]) == EHS
    assert classify_event(_event(), []) == EHS
    assert classify_event(_event(), [Change(0, "detector", 3), Change(20, "detector", 4)]) == ERM_SYNTACTIC
    changes = [Change(0, "detector", 3), Change(12, "sensor", 2), Change(20, "detector", 4)]
    assert classify_event(_event(), changes) == ERM_SEMANTIC
    # a sensor added before the previous model was registered does not count
    changes = [Change(5, "sensor", 2), Change(8, "detector", 3), Change(20, "detector", 4)]
    assert classify_event(_event(), changes) == ERM_SYNTACTIC


# ------------------------------------------------------------------ ERM phases

def test_erm_step_examples():
    p = erm_step(ErmPhase(), 0.0, 1.0)
    assert (p.phase, p.consecutive_failures) == (T1, 0)
    for _ in range(2):
        p = erm_step(p, 5.0, 1.0, r=3)
        assert p.phase == T1
    p = erm_step(p, 5.0, 1.0, r=3)
    assert p.phase == T2
    p = erm_step(p, None, 1.0)
    assert (p.phase, p.validations) == (T2, 0)
    for _ in range(4):
        p = erm_step(p, 0.5, 1.0, v=5)
        assert p.phase == T2
    p = erm_step(p, 0.5, 1.0, v=5)
    assert p.phase == T3
    p = erm_step(p, 0.5, 1.0)
    assert (p.phase, p.consecutive_failures, p.validations) == (T1, 0, 0)


def test_failures_must_be_consecutive():
    p = ErmPhase()
    for err in (2.0, 2.0, 0.0, 2.0, 2.0):
        p = erm_step(p, err, 1.0, r=3)
    assert p.phase == T1 and p.consecutive_failures == 2


def test_a_bad_candidate_frame_resets_validation():
    p = ErmPhase(phase=T2)
    for err in (0.1, 0.1, 3.0, 0.1):
        p = erm_step(p, err, 1.0, v=3)
    assert (p.phase, p.validations) == (T2, 1)


@given(st.lists(st.one_of(st.none(), st.floats(0, 3)), max_size=60), st.integers(1, 4), st.integers(1, 4))
def test_phase_transitions_follow_the_cycle(errors, r, v):
    allowed = {(T1, T1), (T1, T2), (T2, T2), (T2, T3), (T3, T1)}
    p = ErmPhase()
    for err in errors:
        q = erm_step(p, err, 1.0, r, v)
        assert (p.phase, q.phase) in allowed
        p = q


# ------------------------------------------------------------------ complexity trace

def test_constant_regime_is_flat():
    h = with_word()
    series = complexity_trace(run(h, "a" * 12), h, w=4)
    assert series[:3] == [None] * 3
    assert set(series[3:]) == {4 * 4}


def test_trace_window_too_long():
    h = letters()
    with pytest.raises(WindowTooLong):
        complexity_trace(run(h, "abab"), h, w=5)


def test_trace_is_deterministic():
    h = with_word()
    trace = run(h, WORD_STREAM)
    assert complexity_trace(trace, h, 8) == complexity_trace(run(with_word(), WORD_STREAM), with_word(), 8)
