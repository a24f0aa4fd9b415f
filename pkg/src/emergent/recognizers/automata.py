"""Deterministic finite-state and pushdown recognizers.

Both machines are plain frozen dataclasses so they can be embedded in
detector rules and serialized canonically (the serialized size is the
device cost of the detector that uses them).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from ..errors import AlphabetViolation, DegenerateRule


@dataclass(frozen=True)
class DFA:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: Mapping[tuple[str, str], str]
    start: str
    accept: frozenset[str]

    def __post_init__(self):
        if self.start not in self.states:
            raise DegenerateRule(f"start state {self.start!r} not declared")
        if not self.accept <= set(self.states):
            raise DegenerateRule("accept states must be declared states")
        for q in self.states:
            for a in self.alphabet:
                target = self.transitions.get((q, a))
                if target is None:
                    raise DegenerateRule(f"transition function not total: missing ({q!r}, {a!r})")
                if target not in self.states:
                    raise DegenerateRule(f"transition to undeclared state {target!r}")

    kind = "finite-state"

    def accepts(self, word: Iterable[str]) -> bool:
        q = self.start
        for a in word:
            if a not in self.alphabet:
                raise AlphabetViolation(f"symbol {a!r} not in alphabet {self.alphabet}")
            q = self.transitions[(q, a)]
        return q in self.accept

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "start": self.start,
            "accept": sorted(self.accept),
            "transitions": [[q, a, t] for (q, a), t in sorted(self.transitions.items())],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DFA":
        return cls(
            states=tuple(d["states"]),
            alphabet=tuple(d["alphabet"]),
            transitions={(q, a): t for q, a, t in d["transitions"]},
            start=d["start"],
            accept=frozenset(d["accept"]),
        )


@dataclass(frozen=True)
class PDA:
    """Deterministic pushdown automaton without epsilon moves.

    ``transitions`` maps ``(state, symbol, stack_top)`` to
    ``(next_state, push)`` where ``push`` replaces the popped top (leftmost
    element ends up on top). A missing entry sends the machine to an implicit
    dead state. A word is accepted when, after the last symbol, the machine
    is in an accept state and only the bottom marker remains on the stack.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    stack_alphabet: tuple[str, ...]
    transitions: Mapping[tuple[str, str, str], tuple[str, tuple[str, ...]]]
    start: str
    accept: frozenset[str]
    bottom: str = "Z"

    kind = "pushdown"

    def __post_init__(self):
        if self.start not in self.states:
            raise DegenerateRule(f"start state {self.start!r} not declared")
        if self.bottom not in self.stack_alphabet:
            raise DegenerateRule("bottom marker must be in the stack alphabet")
        for (q, a, z), (t, push) in self.transitions.items():
            if q not in self.states or t not in self.states:
                raise DegenerateRule(f"transition uses undeclared state ({q!r} -> {t!r})")
            if a not in self.alphabet:
                raise DegenerateRule(f"transition on undeclared symbol {a!r}")
            if z not in self.stack_alphabet or any(s not in self.stack_alphabet for s in push):
                raise DegenerateRule("transition uses undeclared stack symbol")

    def accepts(self, word: Iterable[str]) -> bool:
        q = self.start
        stack: list[str] = [self.bottom]
        alive = True
        for a in word:
            if a not in self.alphabet:
                raise AlphabetViolation(f"symbol {a!r} not in alphabet {self.alphabet}")
            if not alive:
                continue
            if not stack:
                alive = False
                continue
            move = self.transitions.get((q, a, stack[-1]))
            if move is None:
                alive = False
                continue
            q, push = move
            stack.pop()
            stack.extend(reversed(push))
        return alive and q in self.accept and stack == [self.bottom]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "stack_alphabet": list(self.stack_alphabet),
            "start": self.start,
            "accept": sorted(self.accept),
            "bottom": self.bottom,
            "transitions": [
                [q, a, z, t, list(push)]
                for (q, a, z), (t, push) in sorted(self.transitions.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PDA":
        return cls(
            states=tuple(d["states"]),
            alphabet=tuple(d["alphabet"]),
            stack_alphabet=tuple(d["stack_alphabet"]),
            transitions={(q, a, z): (t, tuple(push)) for q, a, z, t, push in d["transitions"]},
            start=d["start"],
            accept=frozenset(d["accept"]),
            bottom=d.get("bottom", "Z"),
        )


Automaton = DFA | PDA


def automaton_accepts(automaton: Automaton, word: Sequence[Hashable]) -> bool:
    return automaton.accepts(word)


def automaton_from_dict(d: Mapping) -> Automaton:
    if d["kind"] == "finite-state":
        return DFA.from_dict(d)
    if d["kind"] == "pushdown":
        return PDA.from_dict(d)
    raise DegenerateRule(f"unknown automaton kind {d['kind']!r}")


def ab_star() -> DFA:
    """DFA for the regular language (ab)*."""
    t = {
        ("even", "a"): "odd",
        ("even", "b"): "dead",
        ("odd", "a"): "dead",
        ("odd", "b"): "even",
        ("dead", "a"): "dead",
        ("dead", "b"): "dead",
    }
    return DFA(("even", "odd", "dead"), ("a", "b"), t, "even", frozenset({"even"}))


def an_bn() -> PDA:
    """PDA for the context-free language a^n b^n, n >= 1."""
    t = {
        ("push", "a", "Z"): ("push", ("A", "Z")),
        ("push", "a", "A"): ("push", ("A", "A")),
        ("push", "b", "A"): ("pop", ()),
        ("pop", "b", "A"): ("pop", ()),
    }
    return PDA(("push", "pop"), ("a", "b"), ("A", "Z"), t, "push", frozenset({"pop"}))
