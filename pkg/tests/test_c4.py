import itertools

import numpy as np
import pytest

from composite_ccz import c4
from composite_ccz.c4 import C4Block, EncodingKind
from composite_ccz.circuit import CircuitBuilder, compose
from composite_ccz.execution import reference_ideals, run
from composite_ccz.gates import Gate
from composite_ccz.pauli import PauliString, conjugate_pauli
from composite_ccz.statevector import StateVector, ZeroProbabilityBranch, fidelity

A = C4Block((0, 1, 2, 3))
B = C4Block((4, 5, 6, 7))


def encoded(block, logical):
    """Run the data encoder on a two-qubit logical state."""
    circ = c4.encode_data_circuit(block)
    return run(circ, initial=logical).output_state(list(block.qubits))


def logical_input(block, rng):
    return StateVector.random(list(block.logical_qubits), rng)


def stabilizer_equivalent(P, Q, block):
    """True when P and Q differ by an element of the block's stabilizer group."""
    sx, sz = c4.stabilizers(block)
    qs = list(block.qubits)
    for a, b in itertools.product((0, 1), repeat=2):
        S = PauliString({})
        if a:
            S = S * sx
        if b:
            S = S * sz
        if np.allclose((Q * S).matrix(qs), P.matrix(qs)):
            return True
    return False


class TestCodeStructure:
    @pytest.mark.parametrize("encoding", list(EncodingKind))
    def test_logicals_commute_with_stabilizers(self, encoding):
        blk = A.relabel(encoding)
        for L in c4.logical_ops(blk).values():
            for S in c4.stabilizers(blk):
                assert L.commutes(S)

    def test_xz_logical_algebra(self):
        ops = c4.logical_ops(A)
        assert not ops["X1"].commutes(ops["Z1"])
        assert not ops["X2"].commutes(ops["Z2"])
        assert ops["X1"].commutes(ops["Z2"]) and ops["X2"].commutes(ops["Z1"])

    def test_xy_logical_algebra(self):
        ops = c4.logical_ops(A.relabel(EncodingKind.XY))
        assert not ops["X1"].commutes(ops["Y1"])
        assert ops["X1"].commutes(ops["Y2"])

    def test_block_needs_distinct_qubits(self):
        with pytest.raises(ValueError):
            C4Block((0, 0, 1, 2))


class TestEncoding:
    def test_plus_plus(self):
        sv = run(c4.encode_circuit(A, "PLUS_PLUS")).output_state(list(A.qubits))
        for P in (*c4.stabilizers(A), c4.logical_ops(A)["X1"], c4.logical_ops(A)["X2"]):
            assert sv.expectation(P) == pytest.approx(1.0)

    def test_sdg_plus_pair_is_minus_y(self):
        sv = run(c4.encode_circuit(A, "SDG_PLUS_PAIR")).output_state(list(A.qubits))
        ops = c4.logical_ops(A)
        for k in ("1", "2"):
            Y = PauliString({}, 1) * ops["X" + k] * ops["Z" + k]
            assert sv.expectation(Y) == pytest.approx(-1.0)

    def test_plus_plus_same_in_both_encodings(self):
        xy = run(c4.encode_circuit(A.relabel(EncodingKind.XY))).output_state(list(A.qubits))
        xz = run(c4.encode_circuit(A)).output_state(list(A.qubits))
        assert fidelity(xy, xz) == pytest.approx(1.0)

    def test_logical_expectations_follow_input(self, rng):
        d = logical_input(A, rng)
        sv = encoded(A, d)
        ops = c4.logical_ops(A)
        q2, q3 = A.logical_qubits
        for name, q in (("X1", q2), ("Z1", q2), ("X2", q3), ("Z2", q3)):
            bare = PauliString.single(q, name[0])
            assert sv.expectation(ops[name]) == pytest.approx(d.expectation(bare))

    def test_decode_inverts_encode(self, rng):
        d = logical_input(A, rng)
        sv = encoded(A, d)
        res = run(c4.decode_circuit(A), initial=sv)
        assert res.accepted
        assert fidelity(res.output_state(list(A.logical_qubits)), d) == pytest.approx(1.0)

    def test_decode_flags_single_x(self, rng):
        sv = encoded(A, logical_input(A, rng))
        sv.apply_gate(Gate.X, [A.qubits[0]])
        assert not run(c4.decode_circuit(A), initial=sv).accepted


class TestTransversal:
    def _run(self, gate, rng):
        da, db = logical_input(A, rng), logical_input(B, rng)
        state = encoded(A, da).tensor(encoded(B, db))
        b = CircuitBuilder("transversal", inputs=A.qubits + B.qubits)
        c4.emit_transversal(b, gate, A, B)
        for blk in (A, B):
            c4.emit_decode(b, blk)
        circ = b.build(outputs=A.logical_qubits + B.logical_qubits)
        res = run(circ, initial=state)
        assert res.accepted
        return da.tensor(db), res.output_state()

    def test_cnot_is_logical_cnot_pair(self, rng):
        start, out = self._run(Gate.CNOT, rng)
        (a1, a2), (b1, b2) = A.logical_qubits, B.logical_qubits
        start.apply_gate(Gate.CNOT, [a1, b1])
        start.apply_gate(Gate.CNOT, [a2, b2])
        assert fidelity(out, start) == pytest.approx(1.0)

    def test_cz_is_crossed_logical_cz_pair(self, rng):
        start, out = self._run(Gate.CZ, rng)
        (a1, a2), (b1, b2) = A.logical_qubits, B.logical_qubits
        start.apply_gate(Gate.CZ, [a1, b2])
        start.apply_gate(Gate.CZ, [a2, b1])
        assert fidelity(out, start) == pytest.approx(1.0)

    def test_cnot_conjugation_of_logicals(self):
        ops_a, ops_b = c4.logical_ops(A), c4.logical_ops(B)
        for k in ("1", "2"):
            P = ops_a["X" + k]
            for a, t in zip(A.qubits, B.qubits):
                P = conjugate_pauli(P, Gate.CNOT, [a, t])
            assert P == ops_a["X" + k] * ops_b["X" + k]

    def test_basis_change_maps_logicals(self):
        xy = A.relabel(EncodingKind.XY)
        ops_xy = c4.logical_ops(xy)
        ops_xz = c4.logical_ops(A)
        for src, dst in (("X1", "X1"), ("X2", "X2"), ("Y1", "Z1"), ("Y2", "Z2")):
            P = ops_xy[src]
            for q in A.qubits:
                P = conjugate_pauli(P, Gate.RxPlusHalf, [q])
            assert stabilizer_equivalent(P.without_phase(), ops_xz[dst], A)

    def test_basis_change_rejects_xz(self):
        with pytest.raises(ValueError):
            c4.basis_change(A)


class TestStabilizerMeasurement:
    def _circuit(self):
        return reference_ideals(compose(c4.encode_circuit(A), c4.stabilizer_measurement(A)))

    def test_fault_free_accepted(self):
        assert run(self._circuit()).accepted

    @pytest.mark.parametrize("pos", range(4))
    @pytest.mark.parametrize("letter,flipped_index", [("Z", 0), ("X", 1), ("Y", 0)])
    def test_single_errors_detected(self, pos, letter, flipped_index):
        circ = self._circuit()
        enc_end = len(c4.encode_circuit(A).instructions) - 1
        res = run(circ, injections={enc_end: PauliString.single(A.qubits[pos], letter)},
                  stop_on_detection=False)
        detects = [ins.cbit for _, ins in circ.measurements("DETECT")]
        assert detects[flipped_index] in res.flipped


def y_distribution(circ, initial, bits):
    """Exact probability that the XOR of ``bits`` is 1, summed over all branches."""
    names = [ins.cbit for _, ins in circ.measurements("TELEPORT")]
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(names)):
        try:
            res = run(circ, initial=initial, branches=dict(zip(names, outcome)))
        except ZeroProbabilityBranch:
            continue
        prob = float(np.prod([res.record.probabilities[n] for n in names]))
        total += prob * c4.xor_bits(res.record, bits)
    return total


class TestYMeasurement:
    def test_bare_on_sdg_plus(self):
        circ = c4.my_measurement(0, 1)
        p1 = y_distribution(circ, StateVector.product([0], "SDGPLUS"), circ.metadata["outcome_bits"])
        assert p1 == pytest.approx(1.0)

    def test_bare_on_zero_unbiased(self):
        circ = c4.my_measurement(0, 1)
        p1 = y_distribution(circ, StateVector.product([0], "ZERO"), circ.metadata["outcome_bits"])
        assert p1 == pytest.approx(0.5)

    def test_bare_matches_direct(self, rng):
        circ = c4.my_measurement(0, 1)
        for _ in range(20):
            d = StateVector.random([0], rng)
            direct = d.basis_probabilities(0, "Y")[1]
            assert y_distribution(circ, d, circ.metadata["outcome_bits"]) == pytest.approx(direct)

    def _encoded(self, rng):
        anc = C4Block((8, 9, 10, 11))
        circ = c4.my_measurement(A, anc)
        data = logical_input(A, rng)
        anc_state = run(c4.encode_circuit(anc, "SDG_PLUS_PAIR")).output_state(list(anc.qubits))
        return circ, data, encoded(A, data).tensor(anc_state)

    @pytest.mark.parametrize("k", [1, 2])
    def test_encoded_matches_logical_y(self, k, rng):
        circ, data, initial = self._encoded(rng)
        q = A.logical_qubits[k - 1]
        direct = data.basis_probabilities(q, "Y")[1]
        assert y_distribution(circ, initial, circ.metadata["logical_y"][f"Y{k}"]) == pytest.approx(direct)

    def test_encoded_parities_clean(self, rng):
        circ, _, initial = self._encoded(rng)
        for bits in circ.metadata["parities"].values():
            assert y_distribution(circ, initial, bits) == pytest.approx(0.0, abs=1e-12)

    def test_encoded_parity_flags_z_error(self, rng):
        circ, _, initial = self._encoded(rng)
        initial.apply_gate(Gate.Z, [A.qubits[2]])
        assert y_distribution(circ, initial, circ.metadata["parities"]["data_xxxx"]) == pytest.approx(1.0)

    def test_encoded_needs_block_ancilla(self):
        with pytest.raises(ValueError):
            c4.my_measurement(A, 9)
