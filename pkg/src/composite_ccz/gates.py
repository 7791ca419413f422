"""Primitive gate set and the literal matrices behind it."""

from __future__ import annotations

from enum import Enum

import numpy as np

_SQ2 = np.sqrt(2.0)


class Gate(str, Enum):
    H = "H"
    S = "S"
    Sdg = "Sdg"
    T = "T"
    Tdg = "Tdg"
    X = "X"
    Y = "Y"
    Z = "Z"
    CNOT = "CNOT"
    CZ = "CZ"
    SWAP = "SWAP"
    RxPlusHalf = "RxPlusHalf"
    RxMinusHalf = "RxMinusHalf"

    @property
    def arity(self) -> int:
        return 2 if self in _TWO_QUBIT else 1

    @property
    def is_clifford(self) -> bool:
        return self not in (Gate.T, Gate.Tdg)

    @property
    def is_diagonal(self) -> bool:
        return self in _DIAGONAL

    def matrix(self) -> np.ndarray:
        return MATRICES[self]

    def inverse(self) -> "Gate":
        return _INVERSE.get(self, self)


_TWO_QUBIT = {Gate.CNOT, Gate.CZ, Gate.SWAP}
_DIAGONAL = {Gate.S, Gate.Sdg, Gate.T, Gate.Tdg, Gate.Z, Gate.CZ}
_INVERSE = {
    Gate.S: Gate.Sdg,
    Gate.Sdg: Gate.S,
    Gate.T: Gate.Tdg,
    Gate.Tdg: Gate.T,
    Gate.RxPlusHalf: Gate.RxMinusHalf,
    Gate.RxMinusHalf: Gate.RxPlusHalf,
}

I2 = np.eye(2, dtype=complex)
PAULI_MATRICES = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# T = exp[i pi (I - Z)/8], S = exp[i pi (I - Z)/4], Rx(pi/2) = exp[i pi (I - X)/4]
_T = np.diag([1.0, np.exp(1j * np.pi / 4)])
_S = np.diag([1.0, 1j])
_RX = np.exp(1j * np.pi / 4) * (I2 - 1j * PAULI_MATRICES["X"]) / _SQ2

MATRICES: dict[Gate, np.ndarray] = {
    Gate.H: np.array([[1, 1], [1, -1]], dtype=complex) / _SQ2,
    Gate.S: _S.astype(complex),
    Gate.Sdg: _S.conj().astype(complex),
    Gate.T: _T.astype(complex),
    Gate.Tdg: _T.conj().astype(complex),
    Gate.X: PAULI_MATRICES["X"],
    Gate.Y: PAULI_MATRICES["Y"],
    Gate.Z: PAULI_MATRICES["Z"],
    # two-qubit matrices use (first, second) qubit order, first most significant
    Gate.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    Gate.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    Gate.SWAP: np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
    Gate.RxPlusHalf: _RX,
    Gate.RxMinusHalf: _RX.conj().T,
}

for _m in MATRICES.values():
    _m.setflags(write=False)


def gate_from_name(name: str) -> Gate:
    try:
        return Gate(name)
    except ValueError:
        raise ValueError(f"unknown gate {name!r}") from None
