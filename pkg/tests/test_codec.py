import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emergent import codec
from emergent.codec import (ACTIVATION, CORRECTION, LITERAL, PARAMETER, DescriptionAtom, atom_length,
                            encode_lattice_rle, encode_state, gamma_decode, gamma_encode, gamma_length)
from emergent.complexity import reduce_redundant
from emergent.errors import EmptyLattice, LossySelection, NonPositive, UnknownId
from emergent.hierarchy import ActivationState, Hierarchy
from emergent.rules import SymbolRule

from words import letters, run, with_word


@pytest.mark.parametrize("n, bits", [(1, 1), (2, 3), (3, 3), (4, 5), (64, 13)])
def test_gamma_length(n, bits):
    assert gamma_length(n) == bits


@pytest.mark.parametrize("n", [0, -3])
def test_gamma_rejects_non_positive(n):
    with pytest.raises(NonPositive):
        gamma_length(n)


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=20))
def test_gamma_code_is_prefix_free(values):
    bits = "".join(gamma_encode(v) for v in values)
    assert len(bits) == sum(gamma_length(v) for v in values)
    pos, out = 0, []
    while pos < len(bits):
        v, pos = gamma_decode(bits, pos)
        out.append(v)
    assert out == values


def test_atom_lengths():
    h = with_word(letters(("a", "b", "B")))
    assert atom_length(DescriptionAtom(0, ACTIVATION, detector=1), h) == 1
    assert atom_length(DescriptionAtom(0, ACTIVATION, detector=3), h) == 3
    assert atom_length(DescriptionAtom(0, LITERAL, sensor=1, value="a"), h) == 2
    assert atom_length(DescriptionAtom(0, CORRECTION, detector=3, sensor=1, position=2, value="B"), h) == 3 + 2
    assert atom_length(DescriptionAtom(0, PARAMETER, detector=3, position=1), h) == 16
    assert atom_length(DescriptionAtom(0, PARAMETER, detector=3, position=1), h, param_bits=8) == 8
    binary = letters()
    assert atom_length(DescriptionAtom(0, LITERAL, sensor=1, value="a"), binary) == 1
    real = Hierarchy().register_sensor("x", precision_bits=12)
    assert atom_length(DescriptionAtom(0, LITERAL, sensor=1, value=0.25), real) == 12


def test_atom_with_unknown_id():
    with pytest.raises(UnknownId):
        atom_length(DescriptionAtom(0, ACTIVATION, detector=7), letters())
    with pytest.raises(UnknownId):
        atom_length(DescriptionAtom(0, LITERAL, sensor=4), letters())


def _silent_hierarchy():
    h = Hierarchy().register_sensor("q", ["0", "1"])
    h = h.register("D1", 1, SymbolRule(1, "1")).register("D2", 1, SymbolRule(1, "1"))
    return h


def test_empty_frame_costs_one_bit():
    h = _silent_hierarchy()
    assert encode_state(ActivationState(0, frozenset()), [], h).total_bits == 1


def test_single_and_double_activation_frames():
    h = _silent_hierarchy()
    s = ActivationState(0, frozenset({2}), {1: "1"}, {})
    assert encode_state(s, [DescriptionAtom(0, ACTIVATION, detector=2)], h).total_bits == 6
    s = ActivationState(0, frozenset({1, 2}), {1: "1"}, {})
    atoms = [DescriptionAtom(0, ACTIVATION, detector=1), DescriptionAtom(0, ACTIVATION, detector=2)]
    assert encode_state(s, atoms, h).total_bits == 7


def test_lossy_selection_is_rejected():
    trace = run(with_word(), "ab")
    with pytest.raises(LossySelection):
        encode_state(trace, [DescriptionAtom(0, ACTIVATION, detector=1)], with_word())
    with pytest.raises(LossySelection):
        encode_state(trace, [], with_word())


def test_description_is_additive_over_frames():
    h = with_word()
    trace = run(h, "ababbaab")
    desc = encode_state(trace, reduce_redundant(h, trace), h)
    assert desc.total_bits == sum(desc.per_frame_bits)
    for (frame, atoms), bits in zip(desc.frames, desc.per_frame_bits):
        assert bits == codec.frame_bits(atoms, h)


def test_atom_lengths_ignore_repertoire_size():
    h = letters()
    atoms = [DescriptionAtom(0, ACTIVATION, detector=2), DescriptionAtom(0, LITERAL, sensor=1)]
    before = [atom_length(a, h) for a in atoms]
    for k in range(20):
        h = h.register(f"extra{k}", 1, SymbolRule(1, "a"))
    assert [atom_length(a, h) for a in atoms] == before


# ------------------------------------------------------------------ lattices

def checkerboard(n=8):
    return np.indices((n, n)).sum(axis=0) % 2


def test_lattice_examples():
    assert encode_lattice_rle(np.zeros((8, 8), int)) == 14
    assert encode_lattice_rle(checkerboard()) == 65
    assert encode_lattice_rle([[1]]) == 2


def test_empty_lattice():
    with pytest.raises(EmptyLattice):
        encode_lattice_rle(np.zeros((0, 3)))
    with pytest.raises(EmptyLattice):
        encode_lattice_rle([])


grids = st.integers(1, 9).flatmap(
    lambda r: st.integers(1, 9).flatmap(
        lambda c: st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r)))


@given(grids)
def test_lattice_round_trip(g):
    arr = np.asarray(g, dtype=np.uint8)
    bits = codec.lattice_to_bits(arr)
    assert len(bits) == encode_lattice_rle(arr)
    assert np.array_equal(codec.lattice_from_bits(bits, arr.shape), arr)


@given(grids)
def test_lattice_length_bound(g):
    arr = np.asarray(g)
    bits = encode_lattice_rle(arr)
    first, runs = codec.lattice_runs(arr)
    assert sum(runs) == arr.size
    assert bits == 1 + sum(gamma_length(r) for r in runs)
    slack = [gamma_length(r) - r for r in runs]
    assert max(slack) <= 1
    assert bits == 1 + arr.size + sum(slack)
    assert bits <= 1 + arr.size * gamma_length(1) + sum(1 for r in runs if r in (2, 4))
    if all(r == 1 for r in runs):
        assert bits == 1 + arr.size

def test_compressed_bits_is_positive_and_monotone_in_redundancy():
    noisy = np.random.default_rng(0).integers(0, 256, 4096, dtype=np.uint8).tobytes()
    flat = bytes(4096)
    assert 0 < codec.compressed_bits(flat) < codec.compressed_bits(noisy)
