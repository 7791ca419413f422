import numpy as np
import pytest

from composite_ccz.gates import Gate
from composite_ccz.pauli import PauliString
from composite_ccz.statevector import (
    FactoredState,
    SimulationError,
    StateVector,
    ZeroProbabilityBranch,
    fidelity,
)


class TestStateVector:
    def test_product_plus(self):
        sv = StateVector.product([0, 1], "PLUS")
        assert np.allclose(sv.vector([0, 1]), np.full(4, 0.5))

    def test_bell_via_gates(self):
        sv = StateVector.product([0, 1], "ZERO")
        sv.apply_gate(Gate.H, [0])
        sv.apply_gate(Gate.CNOT, [0, 1])
        assert np.allclose(sv.vector([0, 1]), np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_vector_order(self):
        sv = StateVector.basis([3, 7], [1, 0])
        assert np.argmax(np.abs(sv.vector([3, 7]))) == 2
        assert np.argmax(np.abs(sv.vector([7, 3]))) == 1

    @pytest.mark.parametrize("gate", [Gate.H, Gate.S, Gate.T, Gate.X, Gate.Y, Gate.RxPlusHalf])
    def test_single_gate_matches_matrix(self, gate, rng):
        sv = StateVector.random([0, 1], rng)
        before = sv.vector([0, 1])
        sv.apply_gate(gate, [1])
        assert np.allclose(sv.vector([0, 1]), np.kron(np.eye(2), gate.matrix()) @ before)

    @pytest.mark.parametrize("gate", [Gate.CNOT, Gate.CZ, Gate.SWAP])
    def test_two_qubit_fast_paths(self, gate, rng):
        sv = StateVector.random([0, 1, 2], rng)
        before = sv.vector([0, 1, 2])
        sv.apply_gate(gate, [2, 0])
        ref = StateVector([0, 1, 2], before.copy())
        ref.apply_matrix(gate.matrix(), [2, 0])
        assert np.allclose(sv.vector([0, 1, 2]), ref.vector([0, 1, 2]))

    @pytest.mark.parametrize("basis,kind,outcome", [("Z", "ZERO", 0), ("X", "PLUS", 0), ("Y", "SDGPLUS", 1)])
    def test_deterministic_measurements(self, basis, kind, outcome):
        sv = StateVector.product([0], kind)
        assert sv.basis_probabilities(0, basis)[outcome] == pytest.approx(1.0)

    def test_forced_zero_probability(self):
        sv = StateVector.product([0], "ZERO")
        with pytest.raises(ZeroProbabilityBranch):
            sv.measure(0, "Z", force=1)

    def test_measure_collapses(self):
        sv = StateVector.product([0, 1], ["PLUS", "ZERO"])
        sv.apply_gate(Gate.CNOT, [0, 1])
        out, prob = sv.measure(0, "Z", force=1)
        assert prob == pytest.approx(0.5)
        sv.discard(0)
        assert np.allclose(np.abs(sv.vector([1])), [0, 1])
        assert out == 1

    def test_discard_entangled_raises(self):
        sv = StateVector.product([0, 1], ["PLUS", "ZERO"])
        sv.apply_gate(Gate.CNOT, [0, 1])
        with pytest.raises(SimulationError):
            sv.discard(0)

    def test_cap(self):
        with pytest.raises(SimulationError):
            StateVector.product(list(range(4)), "ZERO", cap=3)

    def test_expectation(self):
        sv = StateVector.product([0, 1], "PLUS")
        assert sv.expectation(PauliString.from_label("XX")) == pytest.approx(1.0)
        assert sv.expectation(PauliString.from_label("-XI")) == pytest.approx(-1.0)
        assert sv.expectation(PauliString.from_label("ZI")) == pytest.approx(0.0)

    def test_fidelity_ignores_global_phase(self, rng):
        a = StateVector.random([0, 1], rng)
        b = StateVector([0, 1], 1j * a.vector([0, 1]))
        assert fidelity(a, b) == pytest.approx(1.0)


class TestFactoredState:
    def test_merge_on_entangling_gate(self):
        fs = FactoredState()
        for q in range(4):
            fs.init(q, "PLUS")
        fs.apply_gate(Gate.CZ, [0, 1])
        assert fs.peak_width == 2

    def test_matches_dense(self, rng):
        fs = FactoredState()
        dense = StateVector.product(list(range(4)), "ZERO")
        for q in range(4):
            fs.init(q, "ZERO")
        for _ in range(30):
            gate = [Gate.H, Gate.T, Gate.CNOT, Gate.CZ, Gate.S][int(rng.integers(5))]
            qs = [int(q) for q in rng.permutation(4)[: gate.arity]]
            fs.apply_gate(gate, qs)
            dense.apply_gate(gate, qs)
        assert fidelity(fs.to_statevector([0, 1, 2, 3]), dense) == pytest.approx(1.0)

    def test_copy_independent(self):
        fs = FactoredState()
        fs.init(0, "ZERO")
        other = fs.copy()
        other.apply_gate(Gate.X, [0])
        assert fs.probabilities(0, "Z")[0] == pytest.approx(1.0)

    def test_cap_exceeded_on_merge(self):
        fs = FactoredState(cap=3)
        for q in range(4):
            fs.init(q, "PLUS")
        fs.apply_gate(Gate.CZ, [0, 1])
        fs.apply_gate(Gate.CZ, [1, 2])
        with pytest.raises(SimulationError):
            fs.apply_gate(Gate.CZ, [2, 3])
