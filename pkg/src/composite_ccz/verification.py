"""Fault-free checks of every gadget against its dense oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import Circuit
from .constructions import (
    COMPOSITE_TRIPLES,
    FIDELITY_TOL,
    all_branches,
    apply_ccz_oracle,
    ccz_magic_vector,
    ccz_teleport_circuit,
    composite_ccz_circuit,
    controlled,
    controlled_k,
    controlled_s_pair_circuit,
    coupled_ccz_circuit,
    coupled_ccz_triples,
    coupled_cs_matrix,
    k_matrix,
    magic_state_vector,
    plus_state,
    round1_circuit,
    sample_branches,
    teleport_composite,
    two_ccz_variant,
    variant_resource_via_zero_inputs,
)
from .execution import run
from .statevector import StateVector, fidelity


@dataclass
class GadgetCheck:
    name: str
    cases: int = 0
    min_fidelity: float = 1.0
    rejected: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and self.rejected == 0 and self.min_fidelity >= 1 - FIDELITY_TOL

    def record(self, f: float, accepted: bool = True) -> None:
        self.cases += 1
        if not accepted:
            self.rejected += 1
        self.min_fidelity = min(self.min_fidelity, f)

    def to_dict(self) -> dict:
        return {"name": self.name, "cases": self.cases, "min_fidelity": self.min_fidelity,
                "rejected": self.rejected, "passed": self.passed}


def spanning_inputs(qubits: Sequence[int], rng: np.random.Generator, n_random: int) -> list[StateVector]:
    """All computational basis states, |+...+>, and ``n_random`` Haar-random states."""
    qubits = list(qubits)
    out = [StateVector.basis(qubits, bits) for bits in itertools.product((0, 1), repeat=len(qubits))]
    out.append(plus_state(qubits))
    out.extend(StateVector.random(qubits, rng) for _ in range(n_random))
    return out


def _branch_sets(circuit: Circuit, rng: np.random.Generator, max_exhaustive: int, n_sampled: int):
    n_bits = len(circuit.measurements("TELEPORT"))
    if n_bits <= max_exhaustive:
        return list(all_branches(circuit)), True
    return [sample_branches(circuit, rng) for _ in range(n_sampled)], False


def _check(check: GadgetCheck, circuit: Circuit, initial: StateVector | None,
           expected: StateVector, branches: Iterable) -> None:
    for br in branches:
        res = run(circuit, initial=initial, branches=br)
        check.record(fidelity(res.output_state(), expected) if res.accepted else 0.0, res.accepted)


def check_round1() -> list[GadgetCheck]:
    out = []
    for frame, vec, name in ((False, magic_state_vector(), "round1-ch"),
                             (True, ccz_magic_vector(), "round1-ccz-frame")):
        circ, triple = round1_circuit(ccz_frame=frame)
        check = GadgetCheck(name)
        _check(check, circ, None, StateVector(list(triple.qubits), vec), [{}])
        out.append(check)
    return out


def check_controlled_k(rng: np.random.Generator, n_random: int = 4) -> GadgetCheck:
    circ = controlled_k(0, 1)
    U = controlled(k_matrix())
    check = GadgetCheck("controlled-k")
    for d in spanning_inputs([0, 1], rng, n_random):
        _check(check, circ, d, StateVector([0, 1], U @ d.vector([0, 1])), [{}])
    return check


def _teleport_check(name: str, circ: Circuit, data: list[int], resource: StateVector | None,
                    oracle: Callable[[StateVector], StateVector], inputs: Iterable[StateVector],
                    rng: np.random.Generator, max_exhaustive: int, n_sampled: int) -> GadgetCheck:
    check = GadgetCheck(name)
    branches, exhaustive = _branch_sets(circ, rng, max_exhaustive, n_sampled)
    if not exhaustive:
        check.notes.append(f"{n_sampled} sampled branch assignments per input")
    for d in inputs:
        _check(check, circ, d if resource is None else d.tensor(resource), oracle(d), branches)
    return check


def check_ccz_teleport(rng: np.random.Generator, n_random: int = 4) -> GadgetCheck:
    data, res = [0, 1, 2], [3, 4, 5]
    return _teleport_check(
        "ccz-teleport", ccz_teleport_circuit(data), data, StateVector(res, ccz_magic_vector()),
        lambda d: apply_ccz_oracle(d, data, [(1, 2, 3)]), spanning_inputs(data, rng, n_random),
        rng, 3, 0,
    )


def check_controlled_s_pair(rng: np.random.Generator, n_random: int = 4) -> GadgetCheck:
    circ, _ = controlled_s_pair_circuit()
    data, magic = [0, 1, 2], [3, 4, 5]
    U = coupled_cs_matrix()
    return _teleport_check(
        "controlled-s-pair", circ, data, StateVector(magic, magic_state_vector()),
        lambda d: StateVector(data, U @ d.vector(data)), spanning_inputs(data, rng, n_random),
        rng, 3, 0,
    )


def check_composite_teleport(rng: np.random.Generator, n_random: int = 3, n_branches: int = 32) -> GadgetCheck:
    data, res = list(range(8)), list(range(8, 16))
    resource = apply_ccz_oracle(plus_state(res), res, COMPOSITE_TRIPLES)
    inputs = [plus_state(data)] + [StateVector.random(data, rng) for _ in range(n_random)]
    return _teleport_check(
        "composite-teleport", teleport_composite(res, data), data, resource,
        lambda d: apply_ccz_oracle(d, data, COMPOSITE_TRIPLES), inputs, rng, 8, n_branches,
    )


def check_variant(rng: np.random.Generator, n_inputs: int = 100) -> GadgetCheck:
    """Two-CCZ variant on seeded random inputs, one random branch assignment each."""
    circ = two_ccz_variant()
    data, res = list(range(6)), list(range(6, 12))
    resource = variant_resource_via_zero_inputs(res)
    triples = circ.metadata["triples"]
    check = GadgetCheck("two-ccz-variant")
    for _ in range(n_inputs):
        d = StateVector.random(data, rng)
        _check(check, circ, d.tensor(resource), apply_ccz_oracle(d, data, triples),
               [sample_branches(circ, rng)])
    return check


def check_coupled_ccz(rng: np.random.Generator, n_random: int = 2) -> GadgetCheck:
    circ = coupled_ccz_circuit()
    lines = [0, 1, 2, 3, 4]
    inputs = [plus_state(lines)] + [StateVector.random(lines, rng) for _ in range(n_random)]
    return _teleport_check(
        "coupled-ccz", circ, lines, None,
        lambda d: apply_ccz_oracle(d, lines, coupled_ccz_triples()), inputs, rng, 6, 0,
    )


def check_composite(rng: np.random.Generator, n_branches: int = 8) -> GadgetCheck:
    circ = composite_ccz_circuit()
    lines = list(circ.outputs)
    expected = apply_ccz_oracle(plus_state(lines), lines, COMPOSITE_TRIPLES)
    check = GadgetCheck("composite-ccz")
    check.notes.append(f"{len(circ.fault_locations)} fault locations; "
                       f"{n_branches} sampled branch assignments")
    if len(circ.fault_locations) != 64:
        check.rejected += 1
    branches = [{}] + [sample_branches(circ, rng) for _ in range(n_branches)]
    _check(check, circ, None, expected, branches)
    return check


def verify_gadgets(seed: int = 0, quick: bool = False) -> list[GadgetCheck]:
    """Run every fault-free gadget check; ``quick`` trims the random samples."""
    rng = np.random.default_rng(seed)
    n = 1 if quick else 4
    return [
        *check_round1(),
        check_controlled_k(rng, n),
        check_ccz_teleport(rng, n),
        check_controlled_s_pair(rng, n),
        check_coupled_ccz(rng, 1 if quick else 2),
        check_composite_teleport(rng, 1 if quick else 3, 8 if quick else 32),
        check_variant(rng, 10 if quick else 100),
        check_composite(rng, 2 if quick else 8),
    ]
