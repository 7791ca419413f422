"""Pauli-frame propagation of single faults through the Clifford remainder of a circuit.

Every gate after a fault site is Clifford as far as a Z error is concerned (T
gates only ever see Z or I here, which commute), so a fault's effect reduces
to two bit vectors: which measurement outcomes it flips, and which Pauli it
leaves on the output qubits. Effects of a fault set are the XOR of the
single-fault effects, so any weight can be classified without re-simulating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, Discard, Init, Measure, Unitary
from .gates import Gate
from .pauli import NonCliffordConjugationError, PauliString, conjugate_pauli

_BASIS_PAULI = {"X": "X", "Y": "Y", "Z": "Z"}


class TeleportFlipError(RuntimeError):
    """A propagated fault flipped a teleport measurement (outside the Z-only model)."""


class PatternClosureError(RuntimeError):
    """An accepted residual error was not Z-type on the outputs."""


def propagate(
    circuit: Circuit,
    start: int,
    pauli: PauliString,
    branches: Mapping[str, int] | None = None,
) -> tuple[list[str], PauliString]:
    """Push ``pauli`` (present right after instruction ``start``) to the end of the circuit.

    Returns the measurement bits it flips (detection and teleport alike) and
    the residual Pauli on live qubits. Conditional gates use ``branches``
    (missing bits read as 0). Propagation past a flipped teleport outcome is
    only meaningful when no such flip survives in the final combination.
    """
    bits = dict(branches or {})
    flips: list[str] = []
    P = pauli
    for ins in circuit.instructions[start + 1:]:
        if isinstance(ins, Unitary):
            if ins.condition is not None:
                if not ins.condition.evaluate(_Default(bits)):
                    continue
            if not P.restrict(ins.qubits).is_identity():
                try:
                    P = conjugate_pauli(P, ins.gate, ins.qubits)
                except NonCliffordConjugationError as exc:
                    raise NonCliffordConjugationError(f"{exc} while propagating {pauli}") from None
        elif isinstance(ins, Measure):
            comp = P[ins.qubit]
            if comp != "I" and comp != _BASIS_PAULI[ins.basis]:
                flips.append(ins.cbit)
            P = P.drop([ins.qubit])
        elif isinstance(ins, Discard):
            if P[ins.qubit] != "I":
                P = P.drop([ins.qubit])
        elif isinstance(ins, Init):
            continue
    return flips, P


class _Default(dict):
    def __missing__(self, key):
        return 0


@dataclass
class FrameModel:
    """Per-location effect vectors of one circuit.

    ``effects`` has one row per fault location; columns are every measurement
    bit (in circuit order) followed by X then Z components on each output.

    A fault set is classified from the XOR of its rows. Up to the first
    flipped measurement the circuit acts on the fault linearly, so the first
    flipped column decides: a detection means Detected, a teleport outcome
    means the set leaves the Z-fault model and raises TeleportFlipError.
    """

    circuit: Circuit
    measurement_bits: tuple[str, ...]
    is_teleport: np.ndarray
    outputs: tuple[int, ...]
    effects: np.ndarray

    @classmethod
    def build(cls, circuit: Circuit, branches: Mapping[str, int] | None = None) -> "FrameModel":
        meas = circuit.measurements()
        bits = tuple(ins.cbit for _, ins in meas)
        tele = np.array([ins.kind == "TELEPORT" for _, ins in meas], dtype=bool)
        col = {b: i for i, b in enumerate(bits)}
        outs = tuple(circuit.outputs)
        n_out = len(outs)
        rows = []
        for loc in circuit.fault_locations:
            q = circuit.instructions[loc].qubits[0]
            flips, P = propagate(circuit, loc, PauliString.single(q, "Z"), branches)
            stray = set(P.support) - set(outs)
            if stray:
                raise RuntimeError(f"fault at {loc} leaves support on non-output qubits {sorted(stray)}")
            row = np.zeros(len(bits) + 2 * n_out, dtype=np.uint8)
            for b in flips:
                row[col[b]] ^= 1
            for k, oq in enumerate(outs):
                p = P[oq]
                if p in ("X", "Y"):
                    row[len(bits) + k] = 1
                if p in ("Z", "Y"):
                    row[len(bits) + n_out + k] = 1
            rows.append(row)
        effects = np.array(rows, dtype=np.uint8).reshape(len(rows), len(bits) + 2 * n_out)
        return cls(circuit, bits, tele, outs, effects)

    @property
    def detection_bits(self) -> tuple[str, ...]:
        return tuple(b for b, t in zip(self.measurement_bits, self.is_teleport) if not t)

    @property
    def num_locations(self) -> int:
        return self.effects.shape[0]

    @property
    def num_measurements(self) -> int:
        return len(self.measurement_bits)

    def combine(self, fault_indices: Iterable[int]) -> np.ndarray:
        """XOR of the effect rows of faults given as positions in ``fault_locations``."""
        v = np.zeros(self.effects.shape[1], dtype=np.uint8)
        for k in fault_indices:
            v ^= self.effects[k]
        return v

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        nm, no = self.num_measurements, len(self.outputs)
        return v[..., :nm], v[..., nm:nm + no], v[..., nm + no:]

    def classify_vector(self, v: np.ndarray) -> tuple[str, str | None]:
        flips, xs, zs = self.split(v)
        if flips.any():
            first = int(np.argmax(flips))
            if self.is_teleport[first]:
                raise TeleportFlipError(
                    f"fault combination flips teleport outcome {self.measurement_bits[first]} first"
                )
            return "detected", None
        if xs.any():
            raise PatternClosureError(f"accepted residual has X/Y support: {pattern_label(xs, zs)}")
        if not zs.any():
            return "accepted_correct", None
        return "accepted_error", pattern_label(xs, zs)

    def classify_batch(self, V: np.ndarray) -> np.ndarray:
        """Vectorized verdicts: 0 detected, 1 accepted-correct, 2 accepted-error."""
        flips, xs, zs = self.split(V)
        any_flip = flips.any(axis=1)
        first = np.argmax(flips, axis=1)
        bad = any_flip & self.is_teleport[first]
        if bad.any():
            raise TeleportFlipError(f"{int(bad.sum())} fault sets flip a teleport outcome first")
        accepted = ~any_flip
        if (accepted & xs.any(axis=1)).any():
            raise PatternClosureError("accepted residual with X/Y support")
        verdict = np.where(accepted, 1, 0)
        verdict[accepted & zs.any(axis=1)] = 2
        return verdict

    def classify(self, fault_indices: Iterable[int]) -> tuple[str, str | None]:
        return self.classify_vector(self.combine(fault_indices))

    def output_pauli(self, v: np.ndarray) -> PauliString:
        _, xs, zs = self.split(v)
        ops = {}
        for q, x, z in zip(self.outputs, xs, zs):
            ops[q] = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(int(x), int(z))]
        return PauliString(ops)

    def position_of(self, instruction_index: int) -> int:
        return self.circuit.fault_locations.index(instruction_index)


def pattern_label(xs: Sequence[int], zs: Sequence[int]) -> str:
    """Pauli string like ``Z.ZZ....`` with ``.`` for identity."""
    out = []
    for x, z in zip(xs, zs):
        out.append({(0, 0): ".", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(int(x), int(z))])
    return "".join(out)


def z_label(pauli: PauliString, order: Sequence[int]) -> str:
    return pauli.label(order)
