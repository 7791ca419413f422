"""Builders for the magic-state, teleportation and composite-CCZ circuits, and their oracles."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import c4
from .c4 import C4Block, EncodingKind
from .circuit import (
    Circuit,
    CircuitBuilder,
    ClassicalExpr,
    Unitary,
    anf,
)
from .execution import reference_ideals, run
from .gates import Gate, MATRICES
from .statevector import StateVector, ZeroProbabilityBranch, fidelity

FIDELITY_TOL = 1e-9

# CCZ triples of the eight-line composite gate, lines numbered from 1.
COMPOSITE_TRIPLES: tuple[tuple[int, int, int], ...] = ((1, 4, 5), (1, 3, 6), (2, 4, 7), (2, 3, 8))
VARIANT_DELETED_LINES = (6, 7)


# ---------------------------------------------------------------------------
# dense oracles


def ccz_phases(num_lines: int, triples: Iterable[Sequence[int]]) -> np.ndarray:
    """Diagonal of a product of CCZ gates; ``triples`` index lines from 1, line 1 most significant."""
    x = (np.arange(2**num_lines)[:, None] >> (num_lines - 1 - np.arange(num_lines))) & 1
    parity = np.zeros(2**num_lines, dtype=int)
    for t in triples:
        a, b, c = (i - 1 for i in t)
        parity ^= x[:, a] & x[:, b] & x[:, c]
    return 1 - 2 * parity


def apply_ccz_oracle(state: StateVector, lines: Sequence[int], triples: Iterable[Sequence[int]]) -> StateVector:
    """Return a copy of ``state`` with the CCZ product applied; ``lines[k]`` is line k+1."""
    lines = list(lines)
    vec = state.vector(lines) * ccz_phases(len(lines), triples)
    return StateVector(lines, vec, max(state.cap, len(lines)))


def composite_ccz_oracle() -> Callable[[StateVector, Sequence[int]], StateVector]:
    """Applier for the four-CCZ composite gate on eight lines."""

    def apply(state: StateVector, lines: Sequence[int]) -> StateVector:
        if len(lines) != 8:
            raise ValueError("the composite gate acts on eight lines")
        return apply_ccz_oracle(state, lines, COMPOSITE_TRIPLES)

    apply.triples = COMPOSITE_TRIPLES
    return apply


def variant_triples() -> tuple[tuple[int, int, int], ...]:
    return tuple(t for t in COMPOSITE_TRIPLES if not set(t) & set(VARIANT_DELETED_LINES))


def toffoli_oracle(bits: Sequence[int]) -> tuple[int, int, int]:
    """Classical action of Toffoli on a basis state: (a, b, c) -> (a, b, c ^ ab)."""
    a, b, c = (int(v) & 1 for v in bits)
    return a, b, c ^ (a & b)


def toffoli_via_ccz(state: StateVector, lines: Sequence[int]) -> StateVector:
    """Toffoli targeting the last line, built as H . CCZ . H on that line."""
    out = state.copy()
    out.apply_gate(Gate.H, [lines[2]])
    out = apply_ccz_oracle(out, lines, [(1, 2, 3)])
    out.apply_gate(Gate.H, [lines[2]])
    return out


def controlled(U: np.ndarray) -> np.ndarray:
    n = U.shape[0]
    out = np.eye(2 * n, dtype=complex)
    out[n:, n:] = U
    return out


def k_matrix() -> np.ndarray:
    T = MATRICES[Gate.T]
    return T @ MATRICES[Gate.X] @ T.conj().T


def magic_state_vector() -> np.ndarray:
    """(controlled-H)^2 with a common control applied to |+++>, control most significant."""
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    zero = np.array([1, 0], dtype=complex)
    pp = np.kron(plus, plus)
    return np.concatenate([pp, np.kron(zero, zero)]) / np.sqrt(2)


def ccz_magic_vector() -> np.ndarray:
    return ccz_phases(3, [(1, 2, 3)]) / np.sqrt(8)


def coupled_cs_matrix() -> np.ndarray:
    """CS(x, d1) CS(x, d2) on (x, d1, d2)."""
    return np.diag([1, 1, 1, 1, 1, 1j, 1j, -1]).astype(complex)


# ---------------------------------------------------------------------------
# round one: the three-qubit magic state


@dataclass(frozen=True)
class MagicStateTriple:
    """Common control plus two targets of a verified round-one output.

    ``frame`` is ``"CH"`` for the controlled-H form and ``"CCZ"`` once the
    two-qubit Clifford that maps it to CCZ|+++> has been applied to the targets.
    """

    control: int
    target1: int
    target2: int
    frame: str = "CH"

    @property
    def qubits(self) -> tuple[int, int, int]:
        return self.control, self.target1, self.target2


def emit_controlled_k(b: CircuitBuilder, control: int, target: int) -> None:
    b.gate(Gate.Tdg, target)
    b.gate(Gate.CNOT, control, target)
    b.gate(Gate.T, target)


def controlled_k(control: int, target: int) -> Circuit:
    b = CircuitBuilder("controlled-k", inputs=(control, target))
    emit_controlled_k(b, control, target)
    return b.build(outputs=(control, target))


def emit_ccz_frame(b: CircuitBuilder, t1: int, t2: int) -> None:
    """CZ . (H x H) . CZ on the targets: turns the controlled-H pair state into CCZ|+++>."""
    b.gate(Gate.CZ, t1, t2)
    b.gate(Gate.H, t1)
    b.gate(Gate.H, t2)
    b.gate(Gate.CZ, t1, t2)


def emit_round1(b: CircuitBuilder, ccz_frame: bool = False, stabilizer_rounds: int = 2) -> MagicStateTriple:
    """Bare |+> control, XY-encoded |++>, four controlled-K, checks, Rx(pi/2), checks, decode."""
    if stabilizer_rounds not in (1, 2):
        raise ValueError("stabilizer_rounds must be 1 or 2")
    c = b.init("PLUS")
    block = C4Block(tuple(b.fresh_qubit() for _ in range(4)), EncodingKind.XY)
    c4.emit_encode(b, block, "PLUS_PLUS")
    for q in block.qubits:
        emit_controlled_k(b, c, q)
    if stabilizer_rounds == 2:
        c4.emit_stabilizer_measurement(b, block)
    block = c4.emit_basis_change(b, block)
    c4.emit_stabilizer_measurement(b, block)
    t1, t2 = c4.emit_decode(b, block)
    if ccz_frame:
        emit_ccz_frame(b, t1, t2)
        return MagicStateTriple(c, t1, t2, "CCZ")
    return MagicStateTriple(c, t1, t2, "CH")


def round1_circuit(ccz_frame: bool = False, stabilizer_rounds: int = 2) -> tuple[Circuit, MagicStateTriple]:
    b = CircuitBuilder("round1")
    triple = emit_round1(b, ccz_frame, stabilizer_rounds)
    return b.build(outputs=triple.qubits), triple


# ---------------------------------------------------------------------------
# corrections


@dataclass(frozen=True)
class Correction:
    gate: Gate
    qubits: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.gate.value}(" + ",".join(str(q) for q in self.qubits) + ")"


@dataclass
class CorrectionTable:
    """Measurement outcome tuple (ordered by ``bits``) -> Clifford corrections."""

    bits: tuple[str, ...]
    entries: dict[tuple[int, ...], tuple[Correction, ...]]

    def __getitem__(self, outcome: Sequence[int]) -> tuple[Correction, ...]:
        return self.entries[tuple(outcome)]

    def __len__(self) -> int:
        return len(self.entries)

    def gates_used(self) -> set[Gate]:
        return {c.gate for corr in self.entries.values() for c in corr}

    def as_strings(self) -> dict[str, list[str]]:
        return {"".join(map(str, k)): [str(c) for c in v] for k, v in sorted(self.entries.items())}

    def conditions(self) -> list[tuple[Correction, ClassicalExpr | None]]:
        """One conditional gate per correction, with condition in algebraic normal form."""
        out = []
        tokens = sorted({c for v in self.entries.values() for c in v}, key=_token_key)
        n = len(self.bits)
        for tok in tokens:
            truth = np.array(
                [int(tok in self.entries.get(tuple((i >> (n - 1 - k)) & 1 for k in range(n)), ()))
                 for i in range(2**n)]
            )
            coeffs = _mobius(truth, n)
            monos = [[self.bits[k] for k in range(n) if (m >> (n - 1 - k)) & 1] for m in range(2**n) if coeffs[m]]
            out.append((tok, anf(monos)))
        return out


def _mobius(truth: np.ndarray, n: int) -> np.ndarray:
    c = truth.copy() % 2
    for k in range(n):
        bit = 1 << (n - 1 - k)
        for m in range(2**n):
            if m & bit:
                c[m] ^= c[m ^ bit]
    return c


_GATE_ORDER = {Gate.X: 0, Gate.Z: 1, Gate.S: 2, Gate.Sdg: 3, Gate.CZ: 4}


def _token_key(c: Correction):
    return (_GATE_ORDER.get(c.gate, 9), c.qubits)


def candidate_corrections(qubits: Sequence[int], gates: Iterable[Gate]) -> list[Correction]:
    gates = sorted(set(gates), key=lambda g: _GATE_ORDER.get(g, 9))
    out = []
    for g in gates:
        if g.arity == 1:
            out.extend(Correction(g, (q,)) for q in qubits)
        else:
            out.extend(Correction(g, pair) for pair in itertools.combinations(qubits, 2))
    return out


def _apply_corrections(sv: StateVector, corrections: Sequence[Correction]) -> StateVector:
    out = sv.copy()
    # X corrections act first so that diagonal conditions read the corrected basis
    for c in sorted(corrections, key=lambda c: c.gate is not Gate.X):
        out.apply_gate(c.gate, c.qubits)
    return out


def derive_corrections(
    gadget: Circuit,
    target: np.ndarray,
    data_qubits: Sequence[int],
    output_qubits: Sequence[int],
    candidate_gates: Iterable[Gate] = (Gate.X, Gate.Z, Gate.S, Gate.Sdg, Gate.CZ),
    max_terms: int = 3,
    resource: StateVector | None = None,
) -> CorrectionTable:
    """Search per-branch Clifford corrections that turn ``gadget`` into ``target``.

    Each data qubit is maximally entangled with a reference qubit, so one run per
    teleport branch checks the action on a full basis of inputs. The search runs
    over subsets of candidate corrections in order of size, then lexicographic
    order of (gate, qubits); the first subset reaching fidelity 1 - 1e-9 with
    ``target`` applied to the reference-entangled input wins.
    """
    data_qubits = list(data_qubits)
    output_qubits = list(output_qubits)
    n = len(data_qubits)
    refs = list(range(max(gadget.qubits) + 1000, max(gadget.qubits) + 1000 + n))
    bell = np.zeros((2,) * (2 * n), dtype=complex)
    for idx in itertools.product((0, 1), repeat=n):
        bell[idx + idx] = 1.0
    choi = StateVector(data_qubits + refs, bell / np.sqrt(2**n))
    if resource is not None:
        choi = choi.tensor(resource)
    ideal_vec = np.tensordot(target.reshape((2,) * (2 * n)), bell / np.sqrt(2**n),
                             axes=(list(range(n, 2 * n)), list(range(n))))
    ideal = StateVector(output_qubits + refs, ideal_vec)

    tele = [ins.cbit for _, ins in gadget.measurements("TELEPORT")]
    cands = candidate_corrections(output_qubits, candidate_gates)
    entries = {}
    for outcome in itertools.product((0, 1), repeat=len(tele)):
        try:
            res = run(gadget, initial=choi, branches=dict(zip(tele, outcome)))
        except ZeroProbabilityBranch:
            continue
        if not res.accepted:
            raise RuntimeError(f"fault-free gadget flagged a detection on branch {outcome}")
        out = res.state.to_statevector(output_qubits + refs)
        found = None
        for size in range(max_terms + 1):
            for combo in itertools.combinations(cands, size):
                if fidelity(_apply_corrections(out, combo), ideal) >= 1 - FIDELITY_TOL:
                    found = combo
                    break
            if found is not None:
                break
        if found is None:
            raise RuntimeError(f"no correction with <= {max_terms} terms for branch {outcome}")
        entries[outcome] = tuple(found)
    return CorrectionTable(tuple(tele), entries)


def emit_correction_table(b: CircuitBuilder, table: CorrectionTable) -> None:
    for corr, cond in table.conditions():
        if cond is None:
            continue
        b.gate(corr.gate, *corr.qubits, condition=cond)


# ---------------------------------------------------------------------------
# teleportation of diagonal (CCZ-type) gates


def diagonal_teleport_corrections(
    triples: Sequence[Sequence[int]], bits: Sequence[str]
) -> list[tuple[Gate, tuple[int, ...], list[list[str]]]]:
    """Symbolic corrections for teleporting prod CCZ(triple) through Z-measured resource lines.

    With resource lines measured as ``r``, the data acquires the phase
    f(d ^ r) instead of f(d). Expanding the cubic f gives, for each pair of
    lines a CZ and for each line a Z, conditioned on an XOR of products of
    measurement bits. Lines are 0-based positions into ``bits``. Returns
    (gate, positions, monomials) with cancelling monomials removed.
    """
    terms: dict[tuple[int, ...], set[tuple[int, ...]]] = {}
    for t in triples:
        t = tuple(t)
        for k in range(3):
            for keep in itertools.combinations(t, k):
                flip = tuple(sorted(set(t) - set(keep)))
                key = tuple(sorted(keep))
                mono = terms.setdefault(key, set())
                mono ^= {flip}
    out = []
    for key in sorted(terms, key=lambda k: (-len(k), k)):
        if len(key) == 0 or not terms[key]:
            continue
        gate = Gate.CZ if len(key) == 2 else Gate.Z
        monos = [[bits[i] for i in m] for m in sorted(terms[key])]
        out.append((gate, key, monos))
    return out


def emit_diagonal_teleport(
    b: CircuitBuilder,
    resource: Sequence[int],
    data: Sequence[int],
    triples: Sequence[Sequence[int]],
    prefix: str = "r",
) -> list[str]:
    """Teleport the CCZ product held by ``resource`` onto ``data``; triples are 0-based."""
    bits = []
    for r, d in zip(resource, data):
        b.gate(Gate.CNOT, d, r)
    for r in resource:
        bits.append(b.measure(r, "Z", prefix=prefix))
        b.discard(r)
    for gate, key, monos in diagonal_teleport_corrections(triples, bits):
        b.gate(gate, *(data[i] for i in key), condition=anf(monos))
    return bits


def ccz_teleport_circuit(data: Sequence[int] = (0, 1, 2)) -> Circuit:
    """Consumes a CCZ|+++> resource (inputs after the data) to apply CCZ to the data."""
    data = list(data)
    res = [max(data) + 1 + i for i in range(3)]
    b = CircuitBuilder("ccz-teleport", inputs=data + res)
    emit_diagonal_teleport(b, res, data, [(0, 1, 2)])
    return b.build(outputs=data)


def teleport_composite(resource: Sequence[int] | None = None, data: Sequence[int] | None = None,
                       triples: Sequence[Sequence[int]] = COMPOSITE_TRIPLES) -> Circuit:
    """Teleport a CCZ-product resource state onto data lines; triples index lines from 1."""
    n = max(max(t) for t in triples)
    data = list(range(n)) if data is None else list(data)
    resource = list(range(max(data) + 1, max(data) + 1 + n)) if resource is None else list(resource)
    if len(data) != n or len(resource) != n:
        raise ValueError(f"expected {n} data and {n} resource qubits")
    b = CircuitBuilder("composite-teleport", inputs=data + resource)
    zero_based = [tuple(i - 1 for i in t) for t in triples]
    emit_diagonal_teleport(b, resource, data, zero_based)
    return b.build(outputs=data)


def two_ccz_variant(resource: Sequence[int] | None = None, data: Sequence[int] | None = None) -> Circuit:
    """Composite teleportation with lines 6 and 7 and every gate touching them removed."""
    kept = [k for k in range(1, 9) if k not in VARIANT_DELETED_LINES]
    renum = {line: i + 1 for i, line in enumerate(kept)}
    triples = [tuple(renum[i] for i in t) for t in variant_triples()]
    data = list(range(len(kept))) if data is None else list(data)
    resource = list(range(len(kept), 2 * len(kept))) if resource is None else list(resource)
    circ = teleport_composite(resource, data, triples)
    circ.metadata["kept_lines"] = kept
    circ.metadata["triples"] = triples
    return circ


def variant_resource_via_zero_inputs(qubits: Sequence[int] | None = None) -> StateVector:
    """Composite gate on |+> inputs except lines 6 and 7 in |0>, with those two lines removed.

    ``qubits`` names the six kept lines (1, 2, 3, 4, 5, 8) in order.
    """
    kept = list(range(6)) if qubits is None else list(qubits)
    if len(kept) != 6:
        raise ValueError("the variant resource has six lines")
    spare = iter(range(max(kept) + 1, max(kept) + 3))
    it = iter(kept)
    lines = [next(spare) if k in VARIANT_DELETED_LINES else next(it) for k in range(1, 9)]
    kinds = ["ZERO" if k in VARIANT_DELETED_LINES else "PLUS" for k in range(1, 9)]
    sv = apply_ccz_oracle(StateVector.product(lines, kinds), lines, COMPOSITE_TRIPLES)
    for k in VARIANT_DELETED_LINES:
        sv.measure(lines[k - 1], "Z", force=0)
        sv.discard(lines[k - 1])
    return StateVector(kept, sv.vector(kept))


def composite_teleport_table(triples: Sequence[Sequence[int]] = COMPOSITE_TRIPLES) -> CorrectionTable:
    """Enumerate the symbolic corrections into a per-branch table (lines as 0-based positions)."""
    n = max(max(t) for t in triples)
    bits = tuple(f"r{i}" for i in range(n))
    zero_based = [tuple(i - 1 for i in t) for t in triples]
    terms = diagonal_teleport_corrections(zero_based, bits)
    entries = {}
    for outcome in itertools.product((0, 1), repeat=n):
        vals = dict(zip(bits, outcome))
        corr = []
        for gate, key, monos in terms:
            if anf(monos).evaluate(vals):
                corr.append(Correction(gate, key))
        entries[outcome] = tuple(corr)
    return CorrectionTable(bits, entries)


# ---------------------------------------------------------------------------
# coupled controlled-S teleportation through Y measurements


def controlled_s_pair_gadget() -> tuple[Circuit, dict[str, object]]:
    """Raw gadget (no corrections) consuming a controlled-H pair magic state.

    Data (x, d1, d2) are inputs; the magic state (c, a1, a2) is the second input
    group. CNOT(x -> c) and a Z measurement of c select whether the targets of
    the magic state are |++> or |00>; CNOT(d_i -> a_i) with a Y measurement of
    a_i then imprints S or S-dagger on d_i only in the |00> case.
    """
    x, d1, d2, c, a1, a2 = range(6)
    b = CircuitBuilder("controlled-s-pair", inputs=(x, d1, d2, c, a1, a2))
    b.gate(Gate.CNOT, x, c)
    m3 = b.measure(c, "Z", prefix="m")
    b.discard(c)
    bits = []
    for d, a in ((d1, a1), (d2, a2)):
        b.gate(Gate.CNOT, d, a)
        bits.append(b.measure(a, "Y", prefix="m"))
        b.gate(Gate.Sdg, a)
        b.gate(Gate.H, a)
        b.discard(a)
    info = {"data": (x, d1, d2), "magic": (c, a1, a2), "bits": (bits[0], bits[1], m3)}
    return b.build(outputs=(x, d1, d2)), info


def controlled_s_pair_circuit() -> tuple[Circuit, CorrectionTable]:
    """Gadget plus derived corrections realizing CS(x, d1) CS(x, d2)."""
    raw, info = controlled_s_pair_gadget()
    c, a1, a2 = info["magic"]
    magic = StateVector([c, a1, a2], magic_state_vector())
    table = derive_corrections(
        raw, coupled_cs_matrix(), info["data"], info["data"],
        candidate_gates=(Gate.Z, Gate.S, Gate.Sdg, Gate.CZ), max_terms=6, resource=magic,
    )
    b = CircuitBuilder("controlled-s-pair", inputs=raw.inputs)
    b.instructions.extend(raw.instructions)
    emit_correction_table(b, table)
    return b.build(outputs=info["data"]), table


# ---------------------------------------------------------------------------
# coupled CCZ gadget and the composite circuit


@dataclass(frozen=True)
class SlotWiring:
    """One magic-state slot: which block qubit each magic line lands on.

    ``shift`` names the bare line XORed into one position while the CCZ is
    teleported, as ``(position, bare_line)`` with position 1 or 2 (B or C).
    """

    gadget: int
    slot: int
    shift: tuple[int, int]


@dataclass(frozen=True)
class CompositeSpec:
    """Wiring of the eight logical lines, the blocks, and the magic-state slots."""

    bare_lines: tuple[int, int] = (1, 2)
    block_lines: tuple[tuple[int, int], ...] = ((3, 4), (5, 6), (7, 8))
    slots: tuple[SlotWiring, ...] = tuple(
        SlotWiring(g, s, (2, 0) if s == 0 else (1, 1)) for g in range(4) for s in range(2)
    )
    stabilizer_rounds_per_slot: int = 2

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if len(self.slots) != 8:
            raise ValueError("eight slots are required")
        for g in range(4):
            own = [s for s in self.slots if s.gadget == g]
            if len(own) != 2:
                raise ValueError(f"gadget {g} needs exactly two slots")
            if {s.shift for s in own} != {(2, 0), (1, 1)}:
                raise ValueError(f"gadget {g} must shift C by the first bare line and B by the second")


def emit_coupled_ccz(
    b: CircuitBuilder,
    control: int,
    targets: Sequence[int],
    slots: Sequence[MagicStateTriple | None] = (None, None),
    wiring: Sequence[SlotWiring] | None = None,
    records: list | None = None,
    stabilizer_rounds: int = 2,
) -> None:
    """CCZ(control, t_B, bare1) . CCZ(control, t_C, bare2) from two CCZ-state teleports.

    ``targets`` = (t_B, t_C, bare1, bare2). The first slot teleports
    CCZ(control, t_B, t_C ^ bare1) and the second CCZ(control, t_B ^ bare2, t_C);
    their product is the pair of CCZ gates sharing ``control``. Every magic line
    lands on the control block or on a target block, so a Z error on any magic
    line leaves at least one Z inside a code block.
    """
    tB, tC, bare1, bare2 = targets
    wiring = list(wiring) if wiring is not None else [
        SlotWiring(0, 0, (2, 0)), SlotWiring(0, 1, (1, 1))
    ]
    for k, (slot, wire) in enumerate(zip(slots, wiring)):
        first_ins = len(b.instructions)
        if slot is None:
            slot = emit_round1(b, ccz_frame=True, stabilizer_rounds=stabilizer_rounds)
        elif slot.frame != "CCZ":
            emit_ccz_frame(b, slot.target1, slot.target2)
            slot = MagicStateTriple(slot.control, slot.target1, slot.target2, "CCZ")
        output_index = len(b.instructions) - 1
        pos, bare_idx = wire.shift
        shifted = (tB, tC)[pos - 1]
        bare = (bare1, bare2)[bare_idx]
        b.gate(Gate.CNOT, bare, shifted)
        emit_diagonal_teleport(b, slot.qubits, (control, tB, tC), [(0, 1, 2)], prefix="r")
        b.gate(Gate.CNOT, bare, shifted)
        if records is not None:
            locs = [i for i in range(first_ins, output_index + 1)
                    if isinstance(b.instructions[i], Unitary) and b.instructions[i].is_fault_location]
            records.append({
                "gadget": wire.gadget,
                "slot": wire.slot,
                "triple": list(slot.qubits),
                "data": [control, tB, tC],
                "output_index": output_index,
                "instruction_range": [first_ins, output_index],
                "t_instructions": locs,
            })


def coupled_ccz_circuit(
    slot_a: MagicStateTriple | None = None,
    slot_b: MagicStateTriple | None = None,
    control: int = 0,
    targets: Sequence[int] = (1, 2, 3, 4),
) -> Circuit:
    """Stand-alone coupled-CCZ gadget; the two round-one preparations are built inline.

    Pre-built triples may be passed instead, in which case their qubits are
    additional circuit inputs.
    """
    inputs = [control, *targets]
    for s in (slot_a, slot_b):
        if s is not None:
            inputs.extend(s.qubits)
    b = CircuitBuilder("coupled-ccz", inputs=inputs)
    records: list = []
    emit_coupled_ccz(b, control, targets, (slot_a, slot_b), records=records)
    b.metadata["slots"] = records
    circ = b.build(outputs=(control, *targets))
    if slot_a is None and slot_b is None:
        circ = reference_ideals(circ)
        circ.metadata["slots"] = records
    return circ


def coupled_ccz_triples() -> tuple[tuple[int, int, int], ...]:
    """The gadget's oracle on lines (control, t_B, t_C, bare1, bare2), numbered from 1."""
    return ((1, 2, 4), (1, 3, 5))


def composite_ccz_circuit(spec: CompositeSpec | None = None) -> Circuit:
    """Full second-round circuit: 64 T gates, output lines 1..8 as ``outputs``."""
    spec = spec or CompositeSpec()
    spec.validate()
    b = CircuitBuilder("composite-ccz")
    bare = [b.init("PLUS"), b.init("PLUS")]
    blocks = []
    for _ in range(3):
        blk = C4Block(tuple(b.fresh_qubit() for _ in range(4)), EncodingKind.XZ)
        c4.emit_encode(b, blk, "PLUS_PLUS")
        blocks.append(blk)
    A, B, C = blocks
    records: list = []
    for g in range(4):
        wiring = sorted((s for s in spec.slots if s.gadget == g), key=lambda s: s.slot)
        emit_coupled_ccz(
            b, A.qubits[g], (B.qubits[g], C.qubits[g], bare[0], bare[1]),
            wiring=wiring, records=records,
            stabilizer_rounds=spec.stabilizer_rounds_per_slot,
        )
    for blk in blocks:
        c4.emit_stabilizer_measurement(b, blk)
    outputs = list(bare)
    for blk in blocks:
        outputs.extend(c4.emit_decode(b, blk))
    circ = reference_ideals(b.build(outputs=outputs))
    circ.metadata.update(slots=records, spec=spec.to_dict(),
                         blocks=[list(blk.qubits) for blk in blocks], bare=bare)
    return circ


# ---------------------------------------------------------------------------
# fault-free verification helpers


def plus_state(qubits: Sequence[int]) -> StateVector:
    return StateVector.product(list(qubits), "PLUS")


def sample_branches(circuit: Circuit, rng: np.random.Generator) -> dict[str, int]:
    return {ins.cbit: int(rng.integers(2)) for _, ins in circuit.measurements("TELEPORT")}


def all_branches(circuit: Circuit) -> Iterable[dict[str, int]]:
    bits = [ins.cbit for _, ins in circuit.measurements("TELEPORT")]
    for outcome in itertools.product((0, 1), repeat=len(bits)):
        yield dict(zip(bits, outcome))


def output_fidelity(circuit: Circuit, expected: StateVector, initial: StateVector | None = None,
                    branches: Mapping[str, int] | None = None,
                    rng: np.random.Generator | None = None) -> float:
    res = run(circuit, initial=initial, branches=branches, rng=rng)
    if not res.accepted:
        return 0.0
    return fidelity(res.output_state(), expected)
