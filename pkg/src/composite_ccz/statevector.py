"""Dense statevector simulation over a dynamic set of live qubits.

Amplitudes are stored as an n-dimensional array of shape ``(2,) * n`` whose
axes follow the ``qubits`` list, so every gate is a slice or a small
tensor contraction on one or two axes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .gates import Gate, MATRICES

DEFAULT_QUBIT_CAP = 24
NORM_TOL = 1e-12

# basis -> (rotation taking the basis eigenstates to |0>,|1>, its inverse)
_BASIS_ROTATION = {
    "X": (MATRICES[Gate.H], MATRICES[Gate.H]),
    "Y": (MATRICES[Gate.H] @ MATRICES[Gate.Sdg], MATRICES[Gate.S] @ MATRICES[Gate.H]),
}

_INIT_VECTORS = {
    "ZERO": np.array([1.0, 0.0], dtype=complex),
    "ONE": np.array([0.0, 1.0], dtype=complex),
    "PLUS": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
    "SDGPLUS": np.array([1.0, -1j], dtype=complex) / np.sqrt(2),
}


class SimulationError(RuntimeError):
    """Raised on invalid simulator operations (dead qubits, bad discards, ...)."""


class ZeroProbabilityBranch(SimulationError):
    """A forced measurement outcome has zero probability."""


def init_vector(kind: str) -> np.ndarray:
    try:
        return _INIT_VECTORS[kind]
    except KeyError:
        raise ValueError(f"unknown initial state {kind!r}") from None


class StateVector:
    """Pure state on an ordered list of qubit ids."""

    def __init__(self, qubits: Sequence[int], amplitudes: np.ndarray, cap: int = DEFAULT_QUBIT_CAP):
        qubits = [int(q) for q in qubits]
        if len(set(qubits)) != len(qubits):
            raise SimulationError(f"duplicate qubits {qubits}")
        if len(qubits) > cap:
            raise SimulationError(f"{len(qubits)} live qubits exceeds cap {cap}")
        amps = np.asarray(amplitudes, dtype=complex).reshape((2,) * len(qubits))
        self.qubits = qubits
        self.amps = amps
        self.cap = cap
        # qubits known to sit in a Z eigenstate since their last Z measurement
        self._collapsed: dict[int, int] = {}

    # -- construction -------------------------------------------------
    @classmethod
    def empty(cls, cap: int = DEFAULT_QUBIT_CAP) -> "StateVector":
        return cls([], np.array(1.0 + 0j), cap)

    @classmethod
    def basis(cls, qubits: Sequence[int], bits: Sequence[int], cap: int = DEFAULT_QUBIT_CAP) -> "StateVector":
        amps = np.zeros((2,) * len(qubits), dtype=complex)
        amps[tuple(int(b) for b in bits)] = 1.0
        return cls(qubits, amps, cap)

    @classmethod
    def product(cls, qubits: Sequence[int], kinds: Sequence[str] | str, cap: int = DEFAULT_QUBIT_CAP) -> "StateVector":
        if isinstance(kinds, str):
            kinds = [kinds] * len(qubits)
        vec = np.array([1.0 + 0j])
        for k in kinds:
            vec = np.kron(vec, init_vector(k))
        return cls(qubits, vec, cap)

    @classmethod
    def random(cls, qubits: Sequence[int], rng: np.random.Generator, cap: int = DEFAULT_QUBIT_CAP) -> "StateVector":
        n = len(qubits)
        v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        return cls(qubits, v / np.linalg.norm(v), cap)

    def copy(self) -> "StateVector":
        out = StateVector(list(self.qubits), self.amps.copy(), self.cap)
        out._collapsed = dict(self._collapsed)
        return out

    # -- bookkeeping --------------------------------------------------
    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def axis(self, q: int) -> int:
        try:
            return self.qubits.index(q)
        except ValueError:
            raise SimulationError(f"qubit {q} is not live") from None

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def check_norm(self) -> None:
        if abs(self.norm() ** 2 - 1.0) > NORM_TOL * max(1, self.num_qubits):
            raise SimulationError(f"norm drifted to {self.norm()!r}")

    def vector(self, order: Sequence[int] | None = None) -> np.ndarray:
        """Flat copy of the amplitudes with ``order[0]`` as the most significant bit."""
        if order is None:
            return self.amps.reshape(-1).copy()
        order = list(order)
        if sorted(order) != sorted(self.qubits):
            raise SimulationError(f"order {order} does not match live qubits {self.qubits}")
        perm = [self.axis(q) for q in order]
        return np.transpose(self.amps, perm).reshape(-1).copy()

    def tensor(self, other: "StateVector") -> "StateVector":
        if set(self.qubits) & set(other.qubits):
            raise SimulationError("tensor product of overlapping states")
        amps = np.multiply.outer(self.amps, other.amps)
        return StateVector(self.qubits + other.qubits, amps, self.cap)

    def add_qubit(self, q: int, kind: str = "ZERO") -> None:
        if q in self.qubits:
            raise SimulationError(f"qubit {q} already live")
        if self.num_qubits + 1 > self.cap:
            raise SimulationError(f"adding qubit {q} exceeds cap {self.cap}")
        self.amps = np.multiply.outer(self.amps, init_vector(kind))
        self.qubits.append(int(q))

    # -- gates --------------------------------------------------------
    def apply_matrix(self, U: np.ndarray, qubits: Sequence[int]) -> None:
        for q in qubits:
            self._collapsed.pop(q, None)
        axes = [self.axis(q) for q in qubits]
        if len(set(axes)) != len(axes):
            raise SimulationError(f"duplicate qubits {list(qubits)}")
        k = len(axes)
        U = np.asarray(U).reshape((2,) * (2 * k))
        moved = np.tensordot(U, self.amps, axes=(list(range(k, 2 * k)), axes))
        self.amps = np.moveaxis(moved, list(range(k)), axes)

    def apply_gate(self, gate: Gate, qubits: Sequence[int]) -> None:
        qubits = list(qubits)
        if len(qubits) != gate.arity:
            raise SimulationError(f"{gate.value} takes {gate.arity} qubits, got {len(qubits)}")
        axes = [self.axis(q) for q in qubits]
        if len(set(axes)) != len(axes):
            raise SimulationError(f"duplicate qubits {qubits}")
        if self._collapsed and not gate.is_diagonal:
            for q in qubits:
                self._collapsed.pop(q, None)
        a = self.amps
        if gate is Gate.CNOT:
            c, t = axes
            i0 = _index(a.ndim, {c: 1, t: 0})
            i1 = _index(a.ndim, {c: 1, t: 1})
            tmp = a[i0].copy()
            a[i0] = a[i1]
            a[i1] = tmp
        elif gate is Gate.CZ:
            a[_index(a.ndim, {axes[0]: 1, axes[1]: 1})] *= -1
        elif gate is Gate.SWAP:
            self.amps = np.swapaxes(a, axes[0], axes[1]).copy()
        elif gate is Gate.X:
            self.amps = np.flip(a, axes[0]).copy()
        elif gate.is_diagonal:
            m = MATRICES[gate]
            a[_index(a.ndim, {axes[0]: 0})] *= m[0, 0]
            a[_index(a.ndim, {axes[0]: 1})] *= m[1, 1]
        else:
            self.apply_matrix(MATRICES[gate], qubits)

    # -- measurement --------------------------------------------------
    def probability(self, qubit: int, basis: str, outcome: int) -> float:
        return self.basis_probabilities(qubit, basis)[outcome]

    def basis_probabilities(self, qubit: int, basis: str) -> tuple[float, float]:
        """Outcome probabilities (p0, p1) without touching the state."""
        ax = self.axis(qubit)
        a = self.amps
        a0 = a[_index(a.ndim, {ax: 0})]
        a1 = a[_index(a.ndim, {ax: 1})]
        if basis == "Z":
            b0, b1 = a0, a1
        elif basis == "X":
            b0, b1 = a0 + a1, a0 - a1
        elif basis == "Y":
            b0, b1 = a0 - 1j * a1, a0 + 1j * a1
        else:
            raise ValueError(f"unknown basis {basis!r}")
        p0 = float(np.vdot(b0, b0).real)
        p1 = float(np.vdot(b1, b1).real)
        tot = p0 + p1
        return p0 / tot, p1 / tot

    def measure(
        self,
        qubit: int,
        basis: str = "Z",
        force: int | None = None,
        rng: np.random.Generator | None = None,
        probs: tuple[float, float] | None = None,
    ) -> tuple[int, float]:
        """Projectively measure; returns (outcome, probability of that outcome).

        Outcome 0 is the +1 eigenvalue. Exactly one of ``force`` / ``rng`` picks the
        branch; with neither, the more likely outcome is taken (ties go to 0).
        ``probs`` may pass in probabilities already computed for this state.
        """
        if probs is None:
            probs = self.basis_probabilities(qubit, basis)
        if force is not None:
            outcome = int(force)
            if probs[outcome] < NORM_TOL:
                raise ZeroProbabilityBranch(
                    f"outcome {outcome} on qubit {qubit} ({basis}) has probability {probs[outcome]:.3g}"
                )
        elif rng is not None:
            outcome = int(rng.random() < probs[1])
        else:
            outcome = int(probs[1] > probs[0])
        if basis != "Z":
            self.apply_matrix(_BASIS_ROTATION[basis][0], [qubit])
        ax = self.axis(qubit)
        a = self.amps
        a[_index(a.ndim, {ax: 1 - outcome})] = 0.0
        kept = a[_index(a.ndim, {ax: outcome})]
        kept /= np.sqrt(float(np.vdot(kept, kept).real))
        if basis != "Z":
            self.apply_matrix(_BASIS_ROTATION[basis][1], [qubit])
        else:
            self._collapsed[qubit] = outcome
        return outcome, probs[outcome]

    def discard(self, qubit: int) -> None:
        """Remove a qubit that is in a computational basis state."""
        ax = self.axis(qubit)
        a = self.amps
        if qubit in self._collapsed:
            self.amps = np.ascontiguousarray(np.take(a, self._collapsed.pop(qubit), axis=ax))
            self.qubits.pop(ax)
            return
        w0 = float(np.vdot(a[_index(a.ndim, {ax: 0})], a[_index(a.ndim, {ax: 0})]).real)
        w1 = float(np.vdot(a[_index(a.ndim, {ax: 1})], a[_index(a.ndim, {ax: 1})]).real)
        if min(w0, w1) > NORM_TOL:
            raise SimulationError(
                f"qubit {qubit} is not in a basis state (weights {w0:.3g}, {w1:.3g})"
            )
        keep = 0 if w0 >= w1 else 1
        self.amps = np.ascontiguousarray(np.take(a, keep, axis=ax))
        self.qubits.pop(ax)

    # -- comparisons --------------------------------------------------
    def expectation(self, pauli) -> float:
        """Real expectation value of a Hermitian PauliString."""
        probe = self.copy()
        for q, p in pauli.ops.items():
            probe.apply_gate(Gate(p), [q])
        return float((pauli.sign * np.vdot(self.amps, probe.amps)).real)


def _index(ndim: int, fixed: dict[int, int]) -> tuple:
    idx = [slice(None)] * ndim
    for ax, v in fixed.items():
        idx[ax] = v
    return tuple(idx)


def fidelity(a: StateVector, b: StateVector) -> float:
    """Phase-insensitive overlap |<a|b>|^2 after aligning qubit order."""
    if sorted(a.qubits) != sorted(b.qubits):
        raise SimulationError(f"qubit sets differ: {a.qubits} vs {b.qubits}")
    va = a.vector(sorted(a.qubits))
    vb = b.vector(sorted(b.qubits))
    return float(min(1.0, abs(np.vdot(va, vb)) ** 2))


def apply_gate(state: StateVector, gate: Gate, qubits: Sequence[int]) -> StateVector:
    """Functional wrapper: returns a new state with ``gate`` applied."""
    out = state.copy()
    out.apply_gate(gate, qubits)
    return out


def measure(
    state: StateVector,
    qubit: int,
    basis: str = "Z",
    force: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[StateVector, int, float]:
    out = state.copy()
    outcome, prob = out.measure(qubit, basis, force=force, rng=rng)
    return out, outcome, prob


def discard_qubit(state: StateVector, qubit: int) -> StateVector:
    out = state.copy()
    out.discard(qubit)
    return out


class FactoredState:
    """A product of independent StateVector factors.

    Multi-qubit gates merge the factors they touch, so fresh ancilla blocks are
    simulated on their own until they interact with the rest of the register.
    The qubit cap applies to each dense factor.
    """

    def __init__(self, cap: int = DEFAULT_QUBIT_CAP):
        self.cap = cap
        self.factors: list[StateVector] = []
        self._owner: dict[int, StateVector] = {}

    @property
    def qubits(self) -> list[int]:
        return list(self._owner)

    @property
    def peak_width(self) -> int:
        return max((f.num_qubits for f in self.factors), default=0)

    def add_state(self, sv: StateVector) -> None:
        for q in sv.qubits:
            if q in self._owner:
                raise SimulationError(f"qubit {q} already live")
        sv.cap = self.cap
        self.factors.append(sv)
        for q in sv.qubits:
            self._owner[q] = sv

    def init(self, qubit: int, kind: str) -> None:
        self.add_state(StateVector.product([qubit], [kind], self.cap))

    def factor(self, q: int) -> StateVector:
        try:
            return self._owner[q]
        except KeyError:
            raise SimulationError(f"qubit {q} is not live") from None

    def merge(self, qubits: Iterable[int]) -> StateVector:
        fs = []
        for q in qubits:
            f = self.factor(q)
            if not any(f is g for g in fs):
                fs.append(f)
        if len(fs) == 1:
            return fs[0]
        if sum(f.num_qubits for f in fs) > self.cap:
            raise SimulationError(f"merged width exceeds cap {self.cap}")
        merged = fs[0]
        for f in fs[1:]:
            merged = merged.tensor(f)
        merged.cap = self.cap
        self.factors = [f for f in self.factors if not any(f is g for g in fs)] + [merged]
        for q in merged.qubits:
            self._owner[q] = merged
        return merged

    def apply_gate(self, gate: Gate, qubits: Sequence[int]) -> None:
        if len(set(qubits)) != len(qubits):
            raise SimulationError(f"duplicate qubits {list(qubits)}")
        self.merge(qubits).apply_gate(gate, qubits)

    def measure(self, qubit: int, basis: str = "Z", force=None, rng=None, probs=None) -> tuple[int, float]:
        return self.factor(qubit).measure(qubit, basis, force=force, rng=rng, probs=probs)

    def probabilities(self, qubit: int, basis: str) -> tuple[float, float]:
        return self.factor(qubit).basis_probabilities(qubit, basis)

    def copy(self) -> "FactoredState":
        out = FactoredState(self.cap)
        for f in self.factors:
            out.add_state(f.copy())
        return out

    def discard(self, qubit: int) -> None:
        f = self.factor(qubit)
        f.discard(qubit)
        del self._owner[qubit]
        if f.num_qubits == 0:
            # fold the leftover global phase into another factor
            phase = complex(f.amps.reshape(-1)[0])
            self.factors = [g for g in self.factors if g is not f]
            if self.factors:
                self.factors[0].amps *= phase

    def to_statevector(self, order: Sequence[int]) -> StateVector:
        order = list(order)
        if sorted(order) != sorted(self._owner):
            raise SimulationError(f"requested {order} but live qubits are {sorted(self._owner)}")
        out = StateVector.empty(cap=max(self.cap, len(order)))
        for f in self.factors:
            out = out.tensor(f)
        perm = [out.axis(q) for q in order]
        return StateVector(order, np.transpose(out.amps, perm), out.cap)
