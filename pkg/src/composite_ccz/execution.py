"""Run circuits on the statevector backend with fault insertion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, Discard, Init, Measure, Unitary
from .gates import Gate
from .pauli import PauliString
from . import statevector as _sv
from .statevector import (
    FactoredState,
    StateVector,
    ZeroProbabilityBranch,
)

DETECTION_TOL = 1e-9


class NondeterministicDetection(RuntimeError):
    """A detection measurement had no (near-)deterministic outcome."""


@dataclass
class MeasurementRecord:
    outcomes: dict[str, int] = field(default_factory=dict)
    probabilities: dict[str, float] = field(default_factory=dict)
    forced: dict[str, bool] = field(default_factory=dict)

    def add(self, cbit: str, outcome: int, prob: float, forced: bool) -> None:
        self.outcomes[cbit] = outcome
        self.probabilities[cbit] = prob
        self.forced[cbit] = forced

    def __getitem__(self, cbit: str) -> int:
        return self.outcomes[cbit]

    def copy(self) -> "MeasurementRecord":
        return MeasurementRecord(dict(self.outcomes), dict(self.probabilities), dict(self.forced))


@dataclass
class Snapshot:
    """State and record right after instruction ``index``."""

    index: int
    state: FactoredState
    record: MeasurementRecord
    flipped: list[str]


@dataclass
class RunResult:
    state: FactoredState
    record: MeasurementRecord
    flipped: list[str]
    completed: bool
    circuit: Circuit
    snapshots: dict[int, "Snapshot"] = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return not self.flipped

    def output_state(self, order: Sequence[int] | None = None) -> StateVector:
        order = self.circuit.outputs if order is None else order
        return self.state.to_statevector(order)


def _apply_pauli(state: FactoredState, pauli: PauliString) -> None:
    for q, p in pauli.ops.items():
        state.apply_gate(Gate(p), [q])


def run(
    circuit: Circuit,
    faults: Iterable[int] = (),
    injections: Mapping[int, PauliString] | None = None,
    initial: StateVector | FactoredState | None = None,
    branches: Mapping[str, int] | None = None,
    rng: np.random.Generator | None = None,
    default_branch: int = 0,
    stop_on_detection: bool = True,
    cap: int | None = None,
    snapshots: Iterable[int] = (),
    resume: "Snapshot | None" = None,
) -> RunResult:
    """Execute ``circuit``.

    ``faults`` are instruction indices of T/Tdg gates followed by an inserted Z.
    ``injections`` maps an instruction index to a Pauli applied right after it
    (index -1 applies before the first instruction).

    Teleport outcomes come from ``branches`` if listed, else from ``rng`` if
    given, else ``default_branch`` (falling back to the other outcome when the
    default has zero probability). Detection outcomes are compared with their
    ideal values; an outcome whose ideal value has probability below 1e-9
    counts as flipped, and anything in between raises.

    ``snapshots`` lists instruction indices after which a copy of the state and
    record is kept (in ``RunResult.snapshots``); ``resume`` continues from
    such a copy instead of starting from scratch.

    ``cap`` bounds the width of any merged state factor (default: the module
    setting ``statevector.DEFAULT_QUBIT_CAP`` at call time).
    """
    cap = _sv.DEFAULT_QUBIT_CAP if cap is None else cap
    injections = dict(injections or {})
    fault_set = set(faults)
    for f in fault_set:
        ins = circuit.instructions[f]
        if not (isinstance(ins, Unitary) and ins.is_fault_location):
            raise ValueError(f"instruction {f} is not a fault location")
    branches = dict(branches or {})

    if resume is not None:
        state = resume.state.copy()
    elif isinstance(initial, FactoredState):
        state = initial
    else:
        state = FactoredState(cap)
        if initial is not None:
            state.add_state(initial.copy())
    missing = set(circuit.inputs) - set(state.qubits)
    if missing:
        raise ValueError(f"no initial state supplied for input qubits {sorted(missing)}")

    record = MeasurementRecord()
    flipped: list[str] = []
    start = 0
    if resume is not None:
        record = resume.record.copy()
        flipped = list(resume.flipped)
        start = resume.index + 1
    if -1 in injections and start == 0:
        _apply_pauli(state, injections[-1])
    snapshots = set(snapshots)
    kept: dict[int, Snapshot] = {}

    for idx in range(start, len(circuit.instructions)):
        ins = circuit.instructions[idx]
        if isinstance(ins, Init):
            state.init(ins.qubit, ins.state)
        elif isinstance(ins, Unitary):
            if ins.condition is None or ins.condition.evaluate(record.outcomes):
                state.apply_gate(ins.gate, ins.qubits)
            if idx in fault_set:
                state.apply_gate(Gate.Z, [ins.qubits[0]])
        elif isinstance(ins, Measure):
            p0, p1 = state.probabilities(ins.qubit, ins.basis)
            probs = (p0, p1)
            if ins.kind == "DETECT":
                ideal = ins.ideal
                if probs[ideal] < DETECTION_TOL:
                    flipped.append(ins.cbit)
                    if stop_on_detection:
                        record.add(ins.cbit, 1 - ideal, probs[1 - ideal], False)
                        return RunResult(state, record, flipped, False, circuit, kept)
                    outcome = 1 - ideal
                elif probs[ideal] < 1 - DETECTION_TOL:
                    raise NondeterministicDetection(
                        f"detection {ins.cbit} at instruction {idx} has P(ideal)={probs[ideal]:.6f}"
                    )
                else:
                    outcome = ideal
                forced = True
            elif ins.cbit in branches:
                outcome = int(branches[ins.cbit])
                if probs[outcome] < 1e-12:
                    raise ZeroProbabilityBranch(
                        f"forced outcome {outcome} for {ins.cbit} has zero probability"
                    )
                forced = True
            elif rng is not None:
                outcome = int(rng.random() < p1)
                forced = False
            else:
                outcome = default_branch if probs[default_branch] > 1e-12 else 1 - default_branch
                forced = True
            _, prob = state.measure(ins.qubit, ins.basis, force=outcome, probs=probs)
            record.add(ins.cbit, outcome, prob, forced)
        elif isinstance(ins, Discard):
            state.discard(ins.qubit)
        if idx in injections:
            _apply_pauli(state, injections[idx])
        if idx in snapshots:
            kept[idx] = Snapshot(idx, state.copy(), record.copy(), list(flipped))
    return RunResult(state, record, flipped, True, circuit, kept)


def reference_ideals(circuit: Circuit, initial: StateVector | None = None) -> Circuit:
    """Fill in detection ideal outcomes from one fault-free reference run."""
    from dataclasses import replace

    state = FactoredState(_sv.DEFAULT_QUBIT_CAP)
    if initial is not None:
        state.add_state(initial.copy())
    else:
        for q in circuit.inputs:
            state.init(q, "PLUS")
    record: dict[str, int] = {}
    new = []
    for ins in circuit.instructions:
        if isinstance(ins, Init):
            state.init(ins.qubit, ins.state)
        elif isinstance(ins, Unitary):
            if ins.condition is None or ins.condition.evaluate(record):
                state.apply_gate(ins.gate, ins.qubits)
        elif isinstance(ins, Measure):
            p0, p1 = state.probabilities(ins.qubit, ins.basis)
            if ins.kind == "DETECT":
                if min(p0, p1) > DETECTION_TOL:
                    raise NondeterministicDetection(
                        f"detection {ins.cbit} is not deterministic (p0={p0:.6f})"
                    )
                outcome = 0 if p0 > p1 else 1
                ins = replace(ins, ideal=outcome)
            else:
                outcome = 0 if p0 > 1e-12 else 1
            state.measure(ins.qubit, ins.basis, force=outcome)
            record[ins.cbit] = outcome
        elif isinstance(ins, Discard):
            state.discard(ins.qubit)
        new.append(ins)
    return circuit.with_instructions(new)
