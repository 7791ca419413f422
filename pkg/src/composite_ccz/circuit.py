"""Circuit intermediate representation with classical control."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, Union

from .gates import Gate

INIT_STATES = ("ZERO", "PLUS", "SDGPLUS")
BASES = ("X", "Y", "Z")


class CircuitError(ValueError):
    """Structural problem in a circuit (use-after-discard, unwritten cbit, ...)."""


# ---------------------------------------------------------------------------
# classical expressions


@dataclass(frozen=True)
class Const:
    value: int

    def evaluate(self, bits: Mapping[str, int]) -> int:
        return self.value & 1

    def bits(self) -> set[str]:
        return set()

    def __str__(self) -> str:
        return str(self.value & 1)


@dataclass(frozen=True)
class Bit:
    name: str

    def evaluate(self, bits: Mapping[str, int]) -> int:
        return int(bits[self.name]) & 1

    def bits(self) -> set[str]:
        return {self.name}

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    arg: "ClassicalExpr"

    def evaluate(self, bits: Mapping[str, int]) -> int:
        return 1 - self.arg.evaluate(bits)

    def bits(self) -> set[str]:
        return self.arg.bits()

    def __str__(self) -> str:
        inner = str(self.arg)
        if isinstance(self.arg, (Bit, Const, Not)):
            return "!" + inner
        return f"!({inner})"


@dataclass(frozen=True)
class Xor:
    args: tuple["ClassicalExpr", ...]

    def evaluate(self, bits: Mapping[str, int]) -> int:
        v = 0
        for a in self.args:
            v ^= a.evaluate(bits)
        return v

    def bits(self) -> set[str]:
        return set().union(*(a.bits() for a in self.args))

    def __str__(self) -> str:
        return "^".join(str(a) for a in self.args)


@dataclass(frozen=True)
class And:
    args: tuple["ClassicalExpr", ...]

    def evaluate(self, bits: Mapping[str, int]) -> int:
        return int(all(a.evaluate(bits) for a in self.args))

    def bits(self) -> set[str]:
        return set().union(*(a.bits() for a in self.args))

    def __str__(self) -> str:
        return "&".join(f"({a})" if isinstance(a, Xor) else str(a) for a in self.args)


ClassicalExpr = Union[Const, Bit, Not, Xor, And]


def xor(*args: ClassicalExpr | str) -> ClassicalExpr:
    items = tuple(Bit(a) if isinstance(a, str) else a for a in args)
    return items[0] if len(items) == 1 else Xor(items)


def conj(*args: ClassicalExpr | str) -> ClassicalExpr:
    items = tuple(Bit(a) if isinstance(a, str) else a for a in args)
    return items[0] if len(items) == 1 else And(items)


def anf(monomials: Iterable[Sequence[str]]) -> ClassicalExpr | None:
    """XOR of AND-monomials over bit names; the empty monomial is constant 1."""
    terms = []
    for mono in monomials:
        mono = list(mono)
        terms.append(Const(1) if not mono else conj(*mono))
    if not terms:
        return None
    return xor(*terms)


def parse_expr(text: str) -> ClassicalExpr:
    """Parse ``^`` (xor), ``&`` (and), ``!`` (not), parentheses, names and 0/1."""
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ValueError(f"malformed condition {text!r}")
        pos += 1
        return tok

    def parse_xor():
        items = [parse_and()]
        while peek() == "^":
            take()
            items.append(parse_and())
        return items[0] if len(items) == 1 else Xor(tuple(items))

    def parse_and():
        items = [parse_unary()]
        while peek() == "&":
            take()
            items.append(parse_unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_unary():
        tok = peek()
        if tok == "!":
            take()
            return Not(parse_unary())
        if tok == "(":
            take()
            e = parse_xor()
            take(")")
            return e
        tok = take()
        if tok in ("0", "1"):
            return Const(int(tok))
        if not (tok[0].isalpha() or tok[0] == "_"):
            raise ValueError(f"malformed condition {text!r}")
        return Bit(tok)

    expr = parse_xor()
    if pos != len(tokens):
        raise ValueError(f"malformed condition {text!r}")
    return expr


def _tokenize(text: str) -> list[str]:
    out, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "^&!()":
            out.append(ch)
            i += 1
        elif ch.isalnum() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(text[i:j])
            i = j
        else:
            raise ValueError(f"malformed condition {text!r}: unexpected {ch!r}")
    if not out:
        raise ValueError("empty condition")
    return out


# ---------------------------------------------------------------------------
# instructions


@dataclass(frozen=True)
class Init:
    qubit: int
    state: str = "ZERO"

    def __post_init__(self):
        if self.state not in INIT_STATES:
            raise CircuitError(f"unknown initial state {self.state!r}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Unitary:
    gate: Gate
    qubits: tuple[int, ...]
    condition: ClassicalExpr | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.gate.arity:
            raise CircuitError(f"{self.gate.value} takes {self.gate.arity} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.gate.value} on repeated qubit {self.qubits}")

    @property
    def is_fault_location(self) -> bool:
        return self.gate in (Gate.T, Gate.Tdg)


@dataclass(frozen=True)
class Measure:
    qubit: int
    basis: str
    cbit: str
    kind: str = "TELEPORT"
    ideal: int | None = None

    def __post_init__(self):
        if self.basis not in BASES:
            raise CircuitError(f"unknown basis {self.basis!r}")
        if self.kind not in ("DETECT", "TELEPORT"):
            raise CircuitError(f"unknown measurement kind {self.kind!r}")
        if self.kind == "TELEPORT" and self.ideal is not None:
            raise CircuitError("teleport measurements carry no ideal outcome")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Discard:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


Instruction = Union[Init, Unitary, Measure, Discard]


# ---------------------------------------------------------------------------
# circuit


@dataclass(frozen=True)
class Circuit:
    """Immutable, validated instruction list.

    ``inputs`` are qubits assumed live (in some supplied state) before the
    first instruction; ``outputs`` names the logical output qubits in order.
    """

    instructions: tuple[Instruction, ...] = ()
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    name: str = ""
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "inputs", tuple(int(q) for q in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(q) for q in self.outputs))
        self.validate()

    # -- structure ----------------------------------------------------
    def validate(self) -> None:
        live = set(self.inputs)
        if len(live) != len(self.inputs):
            raise CircuitError("duplicate input qubits")
        seen = set(live)
        written: set[str] = set()
        for i, ins in enumerate(self.instructions):
            where = f"instruction {i} ({type(ins).__name__})"
            if isinstance(ins, Init):
                if ins.qubit in seen:
                    raise CircuitError(f"{where}: qubit {ins.qubit} reused")
                live.add(ins.qubit)
                seen.add(ins.qubit)
                continue
            for q in ins.qubits:
                if q not in live:
                    state = "discarded" if q in seen else "never initialized"
                    raise CircuitError(f"{where}: qubit {q} is {state}")
            if isinstance(ins, Unitary) and ins.condition is not None:
                missing = ins.condition.bits() - written
                if missing:
                    raise CircuitError(f"{where}: reads unwritten bits {sorted(missing)}")
            elif isinstance(ins, Measure):
                if ins.cbit in written:
                    raise CircuitError(f"{where}: bit {ins.cbit} written twice")
                written.add(ins.cbit)
            elif isinstance(ins, Discard):
                live.discard(ins.qubit)
        for q in self.outputs:
            if q not in live:
                raise CircuitError(f"output qubit {q} is not live at the end")

    @property
    def fault_locations(self) -> tuple[int, ...]:
        return tuple(
            i for i, ins in enumerate(self.instructions)
            if isinstance(ins, Unitary) and ins.is_fault_location
        )

    @property
    def qubits(self) -> tuple[int, ...]:
        qs = list(self.inputs)
        for ins in self.instructions:
            if isinstance(ins, Init):
                qs.append(ins.qubit)
        return tuple(qs)

    @property
    def cbits(self) -> tuple[str, ...]:
        return tuple(ins.cbit for ins in self.instructions if isinstance(ins, Measure))

    def final_live(self) -> tuple[int, ...]:
        live = list(self.inputs)
        for ins in self.instructions:
            if isinstance(ins, Init):
                live.append(ins.qubit)
            elif isinstance(ins, Discard):
                live.remove(ins.qubit)
        return tuple(live)

    def measurements(self, kind: str | None = None) -> list[tuple[int, Measure]]:
        return [
            (i, ins) for i, ins in enumerate(self.instructions)
            if isinstance(ins, Measure) and (kind is None or ins.kind == kind)
        ]

    def count(self, gate: Gate) -> int:
        return sum(1 for ins in self.instructions if isinstance(ins, Unitary) and ins.gate is gate)

    def __len__(self) -> int:
        return len(self.instructions)

    def content_hash(self) -> str:
        from .textio import serialize

        return hashlib.sha256(serialize(self).encode()).hexdigest()

    # -- transformations ----------------------------------------------
    def with_outputs(self, outputs: Sequence[int]) -> "Circuit":
        return replace(self, outputs=tuple(outputs))

    def with_instructions(self, instructions: Sequence[Instruction]) -> "Circuit":
        return replace(self, instructions=tuple(instructions))


def compose(first: Circuit, second: Circuit, outputs: Sequence[int] | None = None) -> Circuit:
    """Run ``first`` then ``second``; inputs of ``second`` not produced by ``first`` become inputs."""
    live_after = set(first.final_live())
    produced = set(first.qubits)
    extra_inputs = []
    for q in second.inputs:
        if q in live_after:
            continue
        if q in produced:
            raise CircuitError(f"qubit {q} was discarded by the first circuit")
        extra_inputs.append(q)
    for q in second.qubits:
        if q not in second.inputs and q in produced:
            raise CircuitError(f"qubit {q} is initialized in both circuits")
    clash = set(first.cbits) & set(second.cbits)
    if clash:
        raise CircuitError(f"classical bits written by both circuits: {sorted(clash)}")
    if outputs is None:
        outputs = second.outputs or first.outputs
    return Circuit(
        first.instructions + second.instructions,
        inputs=first.inputs + tuple(extra_inputs),
        outputs=tuple(outputs),
        name=first.name or second.name,
    )


def remap(
    circuit: Circuit,
    qubit_map: Mapping[int, int] | None = None,
    cbit_prefix: str = "",
) -> Circuit:
    """Rename qubits through an injective map and prefix all classical bits."""
    qubit_map = dict(qubit_map or {})
    images = [qubit_map.get(q, q) for q in circuit.qubits]
    if len(set(images)) != len(images):
        raise CircuitError("qubit remapping is not injective on the circuit's qubits")

    def mq(q):
        return qubit_map.get(q, q)

    def mexpr(e):
        if e is None:
            return None
        if isinstance(e, Bit):
            return Bit(cbit_prefix + e.name)
        if isinstance(e, Const):
            return e
        if isinstance(e, Not):
            return Not(mexpr(e.arg))
        return type(e)(tuple(mexpr(a) for a in e.args))

    out = []
    for ins in circuit.instructions:
        if isinstance(ins, Init):
            out.append(Init(mq(ins.qubit), ins.state))
        elif isinstance(ins, Unitary):
            out.append(Unitary(ins.gate, tuple(mq(q) for q in ins.qubits), mexpr(ins.condition)))
        elif isinstance(ins, Measure):
            out.append(Measure(mq(ins.qubit), ins.basis, cbit_prefix + ins.cbit, ins.kind, ins.ideal))
        else:
            out.append(Discard(mq(ins.qubit)))
    return Circuit(
        tuple(out),
        inputs=tuple(mq(q) for q in circuit.inputs),
        outputs=tuple(mq(q) for q in circuit.outputs),
        name=circuit.name,
    )


class CircuitBuilder:
    """Incremental builder that hands out fresh qubit ids and bit names."""

    def __init__(self, name: str = "", inputs: Sequence[int] = (), first_qubit: int | None = None):
        self.name = name
        self.inputs = list(inputs)
        self.instructions: list[Instruction] = []
        self._next_qubit = first_qubit if first_qubit is not None else (max(self.inputs, default=-1) + 1)
        self._counters: dict[str, int] = {}
        self.metadata: dict[str, object] = {}

    def fresh_qubit(self) -> int:
        q = self._next_qubit
        self._next_qubit += 1
        return q

    def fresh_bit(self, prefix: str = "m") -> str:
        n = self._counters.get(prefix, 0)
        self._counters[prefix] = n + 1
        return f"{prefix}{n}"

    def init(self, state: str = "ZERO", qubit: int | None = None) -> int:
        q = self.fresh_qubit() if qubit is None else qubit
        self.instructions.append(Init(q, state))
        return q

    def gate(self, gate: Gate | str, *qubits: int, condition: ClassicalExpr | str | None = None) -> None:
        if isinstance(gate, str):
            gate = Gate(gate)
        if isinstance(condition, str):
            condition = parse_expr(condition)
        self.instructions.append(Unitary(gate, tuple(qubits), condition))

    def measure(self, qubit: int, basis: str = "Z", kind: str = "TELEPORT",
                ideal: int | None = None, prefix: str | None = None) -> str:
        bit = self.fresh_bit(prefix or ("d" if kind == "DETECT" else "m"))
        self.instructions.append(Measure(qubit, basis, bit, kind, ideal))
        return bit

    def detect(self, qubit: int, basis: str = "Z", ideal: int | None = 0) -> str:
        return self.measure(qubit, basis, "DETECT", ideal)

    def discard(self, qubit: int) -> None:
        self.instructions.append(Discard(qubit))

    def extend(self, circuit: Circuit) -> None:
        """Append another circuit's instructions (ids must already be consistent)."""
        self.instructions.extend(circuit.instructions)
        self._next_qubit = max(self._next_qubit, max(circuit.qubits, default=-1) + 1)

    def build(self, outputs: Sequence[int] = ()) -> Circuit:
        return Circuit(tuple(self.instructions), tuple(self.inputs), tuple(outputs), self.name,
                       dict(self.metadata))
