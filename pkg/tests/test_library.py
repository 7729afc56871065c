"""Library gates simulated against independent reimplementations."""

import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shallowprep import dists, library
from shallowprep.circuits import Builder, CircuitError, deserialize, serialize
from shallowprep.simulate import SimulationError, run


def one_gate_circuit(tag, args, **make_kwargs):
    ent = library.entry(tag)
    b = Builder()
    r = b.add_register("q", ent.width(args))
    b.append(library.make(tag, args, tuple(r), **make_kwargs))
    return b.build()


def basis_out(circuit, index_bits):
    """Run on a basis state given as a {qubit: bit} dict, return amplitudes."""
    return run(circuit, initial=index_bits).amplitudes


def local_to_init(value, width):
    """Map a local MSB-first basis index onto global qubits 0..width-1."""
    return {q: (value >> (width - 1 - q)) & 1 for q in range(width)}


def global_index(value, width):
    """Global flat index of the basis state local_to_init(value) produces."""
    idx = 0
    for q in range(width):
        if (value >> (width - 1 - q)) & 1:
            idx |= 1 << q
    return idx


def assert_basis_map(circuit, width, pairs):
    """Check the circuit maps each local input index to the local output index."""
    for before, after in pairs:
        amps = basis_out(circuit, local_to_init(before, width))
        target = global_index(after, width)
        assert abs(amps[target] - 1.0) < 1e-9, (before, after)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 5))))
def test_threshold_matches_popcount(point):
    n, k = point
    c = one_gate_circuit("threshold", (n, k))
    pairs = []
    for x in range(2**n):
        flip = 1 if bin(x).count("1") >= k else 0
        pairs.append(((x << 1) | 0, (x << 1) | flip))
        pairs.append(((x << 1) | 1, (x << 1) | (1 ^ flip)))
    assert_basis_map(c, n + 1, pairs)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 5))))
def test_exact_matches_popcount(point):
    n, k = point
    c = one_gate_circuit("exact", (n, k))
    pairs = []
    for x in range(2**n):
        flip = 1 if bin(x).count("1") == k else 0
        pairs.append(((x << 1) | 0, (x << 1) | flip))
    assert_basis_map(c, n + 1, pairs)


def test_exact_above_n_never_fires():
    c = one_gate_circuit("exact", (2, 3))
    assert_basis_map(c, 3, [(x << 1, x << 1) for x in range(4)])


def test_ham_tally_slot_is_clamped_weight():
    """The tally register gets a unit at slot min(|x|, k+1) XORed in."""
    n, k = 3, 1
    width = n + k + 1
    c = one_gate_circuit("ham", (n, k))
    pairs = []
    for x in range(2**n):
        wt = bin(x).count("1")
        before = x << (k + 1)
        after = before if wt == 0 else before | (1 << (k + 1 - min(k + 1, wt)))
        pairs.append((before, after))
    assert_basis_map(c, width, pairs)


def test_ham_is_xor_on_dirty_tally():
    c = one_gate_circuit("ham", (2, 1))
    # x = 11 targets slot 2; starting with slot 2 already set clears it
    assert_basis_map(c, 4, [(0b11_01, 0b11_00), (0b11_10, 0b11_11)])


def test_one_hot_classic_is_a_transfer():
    """Binary value i moves to slot i: the binary side is cleared."""
    count = 3
    b = library.entry("one_hot").width((count, False)) - count
    c = one_gate_circuit("one_hot", (count, False))
    pairs = [(0, 0)]
    for i in range(1, count + 1):
        pairs.append((i << count, 1 << (count - i)))
    assert_basis_map(c, b + count, pairs)


def test_one_hot_zero_based_offsets_slots():
    count = 2
    b = library.entry("one_hot").width((count, True)) - count
    c = one_gate_circuit("one_hot", (count, True))
    pairs = [(v << count, 1 << (count - (v + 1))) for v in range(count)]
    assert_basis_map(c, b + count, pairs)


def test_one_hot_rejects_out_of_domain_input():
    count = 3
    b = library.entry("one_hot").width((count, False)) - count
    c = one_gate_circuit("one_hot", (count, False))
    with pytest.raises(SimulationError):
        run(c, initial={b: 1})  # a slot bit set without its binary pattern


def test_zero_w_column():
    n = 3
    c = one_gate_circuit("zero_w", (n,))
    amps = run(c).amplitudes
    assert abs(amps[0] - math.sqrt(0.5)) < 1e-9
    for i in range(1, n + 1):
        local = 1 << (n - i)
        assert abs(amps[global_index(local, n)] - math.sqrt(0.5 / n)) < 1e-9


def test_dicke_prep_column_is_uniform_over_weight():
    ell, k = 4, 2
    c = one_gate_circuit("dicke_prep", (ell, k))
    amps = run(c).amplitudes
    expected = 1.0 / math.sqrt(comb(ell, k))
    for idx in range(2**ell):
        if bin(idx).count("1") == k:
            assert abs(amps[idx] - expected) < 1e-9
        else:
            assert abs(amps[idx]) < 1e-12


def test_ctrl_damped_columns_match_distribution():
    """Control set spreads mass s(j)/C(m, j) over each weight-j string."""
    m, k = 3, 2
    dist = dists.damped_binomial(m, k)
    width = m + 1
    c = one_gate_circuit("ctrl_damped", (m, k))
    # control clear: identity on |0...0>
    amps = run(c).amplitudes
    assert abs(amps[0] - 1.0) < 1e-12
    # control set (control is the first listed qubit, so global qubit 0)
    amps = run(c, initial={0: 1}).amplitudes
    for local in range(2**m):
        wt = bin(local).count("1")
        want = math.sqrt(float(dist.pmf(wt) / comb(m, wt))) if 1 <= wt <= k else 0.0
        got = amps[global_index((1 << m) | local, width)]
        assert abs(got - want) < 1e-9
    # the control stays set
    mass_ctrl = sum(abs(a) ** 2 for i, a in enumerate(amps) if i & 1)
    assert abs(mass_ctrl - 1.0) < 1e-12


def test_onehot_dist_column():
    p = (Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    c = one_gate_circuit("onehot_dist", (3, p))
    amps = run(c).amplitudes
    for i in range(1, 4):
        local = 1 << (3 - i)
        assert abs(amps[global_index(local, 3)] - math.sqrt(float(p[i - 1]))) < 1e-9


def test_onehot_dist_rejects_bad_probabilities():
    with pytest.raises(CircuitError):
        library.semantics("onehot_dist", (2, (0.5, 0.25)))


def test_w_swap_routes_selected_block():
    """Control e_i swaps data block i with the target block."""
    t, s = 2, 2
    width = t + s * (t + 1)
    c = one_gate_circuit("w_swap", (t, s))
    # blocks: ctrl(2) | block1(2) | block2(2) | target(2), MSB first locally
    def pack(ctrl, b1, b2, tgt):
        return (((ctrl << s) | b1) << s | b2) << s | tgt

    pairs = [
        (pack(0b00, 0b01, 0b10, 0b11), pack(0b00, 0b01, 0b10, 0b11)),
        (pack(0b10, 0b01, 0b10, 0b11), pack(0b10, 0b11, 0b10, 0b01)),
        (pack(0b01, 0b01, 0b10, 0b11), pack(0b01, 0b01, 0b11, 0b10)),
    ]
    assert_basis_map(c, width, pairs)


def test_small_state_prepares_given_amplitudes():
    amps_in = (0.5, 0.5j, -0.5, 0.5)
    c = one_gate_circuit("small_state", (amps_in,))
    amps = run(c).amplitudes
    for local, want in enumerate(amps_in):
        assert abs(amps[global_index(local, 2)] - want) < 1e-9


def test_state_vector_validation():
    with pytest.raises(CircuitError):
        library.semantics("small_state", ((0.6, 0.8, 0.0),))
    with pytest.raises(CircuitError):
        library.semantics("small_state", ((0.5, 0.5),))
    with pytest.raises(CircuitError):
        library.semantics("raw_state", ((1.0,),))


def test_marked_prep_validation():
    ok = (math.sqrt(0.5), math.sqrt(0.5), 0.0, 0.0)
    library.semantics("marked_prep", (1, ok, 0.5))
    with pytest.raises(CircuitError):
        library.semantics("marked_prep", (1, ok, 0.25))
    dirty = (math.sqrt(0.5), 0.0, math.sqrt(0.5), 0.0)
    with pytest.raises(CircuitError):
        library.semantics("marked_prep", (1, dirty, 0.0))


def test_make_checks_qubit_count():
    with pytest.raises(CircuitError):
        library.make("threshold", (3, 1), (0, 1, 2))


def test_library_args_survive_serialization():
    p = (Fraction(1, 3), Fraction(2, 3))
    b = Builder()
    r = b.add_register("q", 2)
    b.append(library.make("onehot_dist", (2, p), tuple(r)))
    c2 = deserialize(serialize(b.build()))
    gate = next(iter(c2.gates()))
    assert gate.params["tag"] == "onehot_dist"
    assert gate.params["args"] == (2, p)
    assert isinstance(gate.params["args"][1][0], Fraction)


def test_complex_args_survive_serialization():
    amps = (0.5, 0.5j, -0.5, -0.5j)
    b = Builder()
    r = b.add_register("q", 2)
    b.append(library.make("small_state", (amps,), tuple(r)))
    c2 = deserialize(serialize(b.build()))
    args = next(iter(c2.gates())).params["args"]
    assert np.allclose(np.asarray(args[0], dtype=complex), np.asarray(amps))


def test_inverse_library_gate_unprepares():
    ell, k = 3, 2
    b = Builder()
    r = b.add_register("q", ell)
    b.append(library.make("dicke_prep", (ell, k), tuple(r)))
    b.append(library.make("dicke_prep", (ell, k), tuple(r), inverse=True))
    amps = run(b.build()).amplitudes
    assert abs(amps[0] - 1.0) < 1e-9
