"""The [[4,2,2]] error-detecting code with its two logical-operator conventions."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .circuit import Circuit, CircuitBuilder
from .gates import Gate
from .pauli import PauliString


class EncodingKind(str, Enum):
    XY = "XY"
    XZ = "XZ"


# logical operator -> (Pauli letter, 0-based code positions)
_TABLES = {
    EncodingKind.XY: {
        "X1": ("X", (0, 1)),
        "X2": ("X", (0, 2)),
        "Y1": ("Y", (0, 2)),
        "Y2": ("Y", (0, 1)),
    },
    EncodingKind.XZ: {
        "X1": ("X", (0, 1)),
        "X2": ("X", (0, 2)),
        "Z1": ("Z", (0, 2)),
        "Z2": ("Z", (0, 1)),
    },
}

LOGICAL_STATES = ("PLUS_PLUS", "SDG_PLUS_PAIR")


@dataclass(frozen=True)
class C4Block:
    """Four physical qubits in code order plus the active encoding."""

    qubits: tuple[int, int, int, int]
    encoding: EncodingKind = EncodingKind.XZ

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "encoding", EncodingKind(self.encoding))
        if len(self.qubits) != 4 or len(set(self.qubits)) != 4:
            raise ValueError("a C4 block needs four distinct qubits")

    @property
    def logical_qubits(self) -> tuple[int, int]:
        """Physical qubits that carry logical 1 and 2 after decoding."""
        return self.qubits[1], self.qubits[2]

    def relabel(self, encoding: EncodingKind) -> "C4Block":
        return C4Block(self.qubits, encoding)


def stabilizers(block: C4Block) -> tuple[PauliString, PauliString]:
    return PauliString.on("X", block.qubits), PauliString.on("Z", block.qubits)


def logical_ops(block: C4Block) -> dict[str, PauliString]:
    return {
        name: PauliString.on(p, [block.qubits[i] for i in pos])
        for name, (p, pos) in _TABLES[block.encoding].items()
    }


def _emit_encoder_tail(b: CircuitBuilder, q: Sequence[int]) -> None:
    q1, q2, q3, q4 = q
    b.gate(Gate.CNOT, q2, q1)
    b.gate(Gate.CNOT, q3, q1)
    b.gate(Gate.H, q4)
    b.gate(Gate.CNOT, q4, q1)
    b.gate(Gate.CNOT, q4, q2)
    b.gate(Gate.CNOT, q4, q3)


def emit_encode(b: CircuitBuilder, block: C4Block, logical_state: str = "PLUS_PLUS") -> None:
    """Initialize and encode the block's four qubits.

    The two logical qubits start on code positions 2 and 3; positions 1 and 4
    start in |0>. ``PLUS_PLUS`` is the same physical state in both encodings,
    since the X-type logical operators coincide.
    """
    if logical_state == "PLUS_PLUS":
        bare = "PLUS"
    elif logical_state == "SDG_PLUS_PAIR":
        if block.encoding is not EncodingKind.XZ:
            raise ValueError("S-dagger |+> pairs are encoded in the XZ convention only")
        bare = "SDGPLUS"
    else:
        raise ValueError(f"unsupported logical state {logical_state!r}")
    q1, q2, q3, q4 = block.qubits
    b.init("ZERO", q1)
    b.init(bare, q2)
    b.init(bare, q3)
    b.init("ZERO", q4)
    _emit_encoder_tail(b, block.qubits)


def encode_circuit(block: C4Block, logical_state: str = "PLUS_PLUS") -> Circuit:
    b = CircuitBuilder("c4-encode", first_qubit=max(block.qubits) + 1)
    emit_encode(b, block, logical_state)
    return b.build(outputs=block.qubits)


def encode_data_circuit(block: C4Block) -> Circuit:
    """Encoder that takes arbitrary logical inputs on code positions 2 and 3."""
    q1, q2, q3, q4 = block.qubits
    b = CircuitBuilder("c4-encode-data", inputs=(q2, q3))
    b.init("ZERO", q1)
    b.init("ZERO", q4)
    _emit_encoder_tail(b, block.qubits)
    return b.build(outputs=block.qubits)


def emit_transversal(b: CircuitBuilder, gate: Gate, first: C4Block, second: C4Block) -> None:
    """Apply a two-qubit gate position by position between two blocks."""
    for a, c in zip(first.qubits, second.qubits):
        b.gate(gate, a, c)


def emit_decode(b: CircuitBuilder, block: C4Block) -> tuple[int, int]:
    """Undo the encoder, check that positions 1 and 4 returned to |0>, drop them."""
    if block.encoding is not EncodingKind.XZ:
        raise ValueError("decoding expects the XZ encoding")
    q1, q2, q3, q4 = block.qubits
    b.gate(Gate.CNOT, q4, q3)
    b.gate(Gate.CNOT, q4, q2)
    b.gate(Gate.CNOT, q4, q1)
    b.gate(Gate.H, q4)
    b.gate(Gate.CNOT, q3, q1)
    b.gate(Gate.CNOT, q2, q1)
    for q in (q1, q4):
        b.detect(q, "Z", 0)
        b.discard(q)
    return q2, q3


def decode_circuit(block: C4Block) -> Circuit:
    b = CircuitBuilder("c4-decode", inputs=block.qubits)
    outs = emit_decode(b, block)
    return b.build(outputs=outs)


def emit_stabilizer_measurement(b: CircuitBuilder, block: C4Block) -> tuple[str, str]:
    """Measure XXXX then ZZZZ, each through one fresh |+> ancilla read out in X."""
    bits = []
    for controlled in (Gate.CNOT, Gate.CZ):
        anc = b.init("PLUS")
        for q in block.qubits:
            b.gate(controlled, anc, q)
        bits.append(b.detect(anc, "X", 0))
        # the ancilla was read in X; one Hadamard returns it to a Z eigenstate
        b.gate(Gate.H, anc)
        b.discard(anc)
    return bits[0], bits[1]


def stabilizer_measurement(block: C4Block) -> Circuit:
    b = CircuitBuilder("c4-stabilizers", inputs=block.qubits)
    emit_stabilizer_measurement(b, block)
    return b.build(outputs=block.qubits)


def emit_basis_change(b: CircuitBuilder, block: C4Block) -> C4Block:
    """Transversal Rx(pi/2): XY-encoded block becomes XZ-encoded."""
    if block.encoding is not EncodingKind.XY:
        raise ValueError("basis change applies to XY-encoded blocks only")
    for q in block.qubits:
        b.gate(Gate.RxPlusHalf, q)
    return block.relabel(EncodingKind.XZ)


def basis_change(block: C4Block) -> tuple[Circuit, C4Block]:
    b = CircuitBuilder("c4-basis-change", inputs=block.qubits)
    new = emit_basis_change(b, block)
    return b.build(outputs=block.qubits), new


def emit_bare_my(b: CircuitBuilder, data: int, ancilla: int | None = None) -> tuple[str, str]:
    """Y measurement via an S-dagger|+> ancilla: returns (x-bit, z-bit); Y = x ^ z."""
    if ancilla is None:
        ancilla = b.init("SDGPLUS")
    b.gate(Gate.CNOT, data, ancilla)
    m1 = b.measure(data, "X")
    m2 = b.measure(ancilla, "Z")
    b.gate(Gate.H, data)
    b.discard(data)
    b.discard(ancilla)
    return m1, m2


def my_measurement(data: int | C4Block, ancilla: int | C4Block | None = None) -> Circuit:
    """Y-basis measurement, bare (one qubit) or encoded (one XZ block).

    The bare form records bits ``(x, z)`` with outcome ``x ^ z``. The encoded
    form takes an ancilla block holding two encoded S-dagger|+> qubits, applies
    a transversal CNOT, reads the data in X and the ancilla in Z, and stores in
    ``metadata`` which bits XOR to each logical Y outcome and to each
    stabilizer parity.
    """
    if isinstance(data, C4Block):
        if not isinstance(ancilla, C4Block):
            raise ValueError("encoded Y measurement needs an ancilla C4 block")
        if data.encoding is not EncodingKind.XZ or ancilla.encoding is not EncodingKind.XZ:
            raise ValueError("encoded Y measurement uses XZ-encoded blocks")
        b = CircuitBuilder("c4-my", inputs=data.qubits + ancilla.qubits)
        for d, a in zip(data.qubits, ancilla.qubits):
            b.gate(Gate.CNOT, d, a)
        xb = [b.measure(d, "X", prefix="x") for d in data.qubits]
        zb = [b.measure(a, "Z", prefix="z") for a in ancilla.qubits]
        for d in data.qubits:
            b.gate(Gate.H, d)
            b.discard(d)
        for a in ancilla.qubits:
            b.discard(a)
        b.metadata.update(
            logical_y={
                "Y1": [xb[0], xb[1], zb[0], zb[2]],
                "Y2": [xb[0], xb[2], zb[0], zb[1]],
            },
            parities={"data_xxxx": list(xb), "ancilla_zzzz": list(zb)},
        )
        return b.build()
    if ancilla is None:
        raise ValueError("bare Y measurement needs an ancilla qubit")
    if isinstance(ancilla, C4Block):
        raise ValueError("bare Y measurement needs a bare ancilla qubit")
    b = CircuitBuilder("my-bare", inputs=(data,))
    b.init("SDGPLUS", ancilla)
    m1, m2 = emit_bare_my(b, data, ancilla)
    b.metadata["outcome_bits"] = [m1, m2]
    return b.build()


def xor_bits(record, bits: Sequence[str]) -> int:
    v = 0
    for name in bits:
        v ^= record[name]
    return v
