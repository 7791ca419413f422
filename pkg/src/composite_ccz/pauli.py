"""Exact Pauli algebra with phases in {+1, +i, -1, -i}."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .gates import Gate, PAULI_MATRICES

PAULI_OPS = ("I", "X", "Y", "Z")

# single-qubit products: (a, b) -> (power of i, result)
_MUL: dict[tuple[str, str], tuple[int, str]] = {}
for _a, _b in itertools.product(PAULI_OPS, repeat=2):
    _prod = PAULI_MATRICES[_a] @ PAULI_MATRICES[_b]
    for _c in PAULI_OPS:
        for _k in range(4):
            if np.allclose(_prod, (1j**_k) * PAULI_MATRICES[_c]):
                _MUL[_a, _b] = (_k, _c)


class NonCliffordConjugationError(ValueError):
    """An X- or Y-type component reached a T/T-dagger gate."""


@dataclass(frozen=True)
class PauliString:
    """Signed Pauli operator; ``phase`` is k for a prefactor of i**k."""

    ops: Mapping[int, str] = field(default_factory=dict)
    phase: int = 0

    def __post_init__(self):
        clean = {}
        for q, p in dict(self.ops).items():
            if p not in PAULI_OPS:
                raise ValueError(f"bad Pauli {p!r}")
            if p != "I":
                clean[int(q)] = p
        object.__setattr__(self, "ops", dict(sorted(clean.items())))
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, qubits: Sequence[int] | None = None) -> "PauliString":
        """Parse ``"-iXZ.Y"``-style labels; ``.`` and ``I`` are identity."""
        phase = 0
        s = label
        if s.startswith("-"):
            phase += 2
            s = s[1:]
        elif s.startswith("+"):
            s = s[1:]
        if s.startswith("i"):
            phase += 1
            s = s[1:]
        qubits = list(range(len(s))) if qubits is None else list(qubits)
        if len(qubits) != len(s):
            raise ValueError("label length does not match qubit list")
        ops = {q: ("I" if c == "." else c) for q, c in zip(qubits, s)}
        return cls(ops, phase)

    @classmethod
    def single(cls, qubit: int, op: str) -> "PauliString":
        return cls({qubit: op})

    @classmethod
    def on(cls, op: str, qubits: Iterable[int]) -> "PauliString":
        return cls({q: op for q in qubits})

    def __getitem__(self, q: int) -> str:
        return self.ops.get(q, "I")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.ops)

    @property
    def weight(self) -> int:
        return len(self.ops)

    @property
    def sign(self) -> complex:
        return 1j**self.phase

    def is_identity(self) -> bool:
        return not self.ops

    def is_z_type(self) -> bool:
        return all(p == "Z" for p in self.ops.values())

    def __mul__(self, other: "PauliString") -> "PauliString":
        phase = self.phase + other.phase
        ops = dict(self.ops)
        for q, b in other.ops.items():
            k, c = _MUL[ops.get(q, "I"), b]
            phase += k
            ops[q] = c
        return PauliString(ops, phase)

    def commutes(self, other: "PauliString") -> bool:
        anti = 0
        for q, a in self.ops.items():
            b = other.ops.get(q, "I")
            if b != "I" and a != b:
                anti ^= 1
        return anti == 0

    def restrict(self, qubits: Iterable[int]) -> "PauliString":
        keep = set(qubits)
        return PauliString({q: p for q, p in self.ops.items() if q in keep})

    def drop(self, qubits: Iterable[int]) -> "PauliString":
        gone = set(qubits)
        return PauliString({q: p for q, p in self.ops.items() if q not in gone}, self.phase)

    def without_phase(self) -> "PauliString":
        return PauliString(self.ops)

    def label(self, qubits: Sequence[int]) -> str:
        """Phase-free label over ``qubits`` with ``.`` for identity."""
        return "".join(self[q] if self[q] != "I" else "." for q in qubits)

    def matrix(self, qubits: Sequence[int]) -> np.ndarray:
        m = np.array([[1.0 + 0j]])
        for q in qubits:
            m = np.kron(m, PAULI_MATRICES[self[q]])
        return self.sign * m

    def __str__(self) -> str:
        pre = ["+", "+i", "-", "-i"][self.phase]
        body = " ".join(f"{p}{q}" for q, p in self.ops.items()) or "I"
        return f"{pre}{body}"


def _build_conjugation_table(gate: Gate) -> dict[tuple[str, ...], tuple[int, tuple[str, ...]]]:
    n = gate.arity
    U = gate.matrix()
    table = {}
    for labels in itertools.product(PAULI_OPS, repeat=n):
        P = np.array([[1.0 + 0j]])
        for p in labels:
            P = np.kron(P, PAULI_MATRICES[p])
        M = U @ P @ U.conj().T
        for out in itertools.product(PAULI_OPS, repeat=n):
            Q = np.array([[1.0 + 0j]])
            for p in out:
                Q = np.kron(Q, PAULI_MATRICES[p])
            for k in range(4):
                if np.allclose(M, (1j**k) * Q, atol=1e-12):
                    table[labels] = (k, out)
        if labels not in table:
            raise AssertionError(f"{gate} is not Clifford on {labels}")
    return table


CONJUGATION_TABLES = {g: _build_conjugation_table(g) for g in Gate if g.is_clifford}


def conjugate_pauli(P: PauliString, gate: Gate, qubits: Sequence[int]) -> PauliString:
    """Return G P G^dagger with the exact phase.

    T and T-dagger are accepted only when every component of ``P`` on the gate's
    qubit commutes with Z (I or Z), in which case ``P`` passes through unchanged.
    """
    qubits = list(qubits)
    if len(qubits) != gate.arity or len(set(qubits)) != len(qubits):
        raise ValueError(f"{gate.value} needs {gate.arity} distinct qubits, got {qubits}")
    if not gate.is_clifford:
        if P[qubits[0]] in ("X", "Y"):
            raise NonCliffordConjugationError(
                f"{P[qubits[0]]} on qubit {qubits[0]} does not commute with {gate.value}"
            )
        return P
    k, out = CONJUGATION_TABLES[gate][tuple(P[q] for q in qubits)]
    ops = dict(P.ops)
    for q, p in zip(qubits, out):
        ops[q] = p
    return PauliString(ops, P.phase + k)
