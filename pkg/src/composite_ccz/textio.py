"""Line-oriented text format for circuits.

One instruction per line::

    INPUT q0 q1
    INIT q3 PLUS
    U CNOT q0 q1 IF m1^m2
    M q2 Y -> m3 TELEPORT
    M q4 Z -> d0 DETECT 0
    DISCARD q2
    OUTPUT q0 q1

``#`` starts a comment. ``Ybar`` is accepted as an alias of ``Y``.
"""

from __future__ import annotations

from .circuit import (
    Circuit,
    CircuitError,
    Discard,
    Init,
    Measure,
    Unitary,
    parse_expr,
)
from .gates import gate_from_name


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _q(q: int) -> str:
    return f"q{q}"


def serialize(circuit: Circuit) -> str:
    lines = []
    if circuit.name:
        lines.append(f"# {circuit.name}")
    if circuit.inputs:
        lines.append("INPUT " + " ".join(_q(q) for q in circuit.inputs))
    for ins in circuit.instructions:
        if isinstance(ins, Init):
            lines.append(f"INIT {_q(ins.qubit)} {ins.state}")
        elif isinstance(ins, Unitary):
            s = f"U {ins.gate.value} " + " ".join(_q(q) for q in ins.qubits)
            if ins.condition is not None:
                s += f" IF {ins.condition}"
            lines.append(s)
        elif isinstance(ins, Measure):
            s = f"M {_q(ins.qubit)} {ins.basis} -> {ins.cbit} {ins.kind}"
            if ins.kind == "DETECT":
                if ins.ideal is None:
                    raise CircuitError(f"detection {ins.cbit} has no ideal outcome")
                s += f" {ins.ideal}"
            lines.append(s)
        else:
            lines.append(f"DISCARD {_q(ins.qubit)}")
    if circuit.outputs:
        lines.append("OUTPUT " + " ".join(_q(q) for q in circuit.outputs))
    return "\n".join(lines) + "\n"


def _parse_qubit(tok: str, lineno: int) -> int:
    if len(tok) < 2 or tok[0] != "q" or not tok[1:].isdigit():
        raise ParseError(lineno, f"bad qubit {tok!r}")
    return int(tok[1:])


def parse(text: str, name: str = "") -> Circuit:
    inputs: list[int] = []
    outputs: list[int] = []
    instructions = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if not name and raw.strip().startswith("#") and not instructions and not inputs:
                name = raw.strip()[1:].strip()
            continue
        toks = line.split()
        op = toks[0]
        try:
            if op == "INPUT":
                inputs.extend(_parse_qubit(t, lineno) for t in toks[1:])
            elif op == "OUTPUT":
                outputs.extend(_parse_qubit(t, lineno) for t in toks[1:])
            elif op == "INIT":
                if len(toks) != 3:
                    raise ParseError(lineno, "INIT takes a qubit and a state")
                instructions.append(Init(_parse_qubit(toks[1], lineno), toks[2]))
            elif op == "U":
                if len(toks) < 3:
                    raise ParseError(lineno, "U needs a gate and qubits")
                try:
                    gate = gate_from_name(toks[1])
                except ValueError as exc:
                    raise ParseError(lineno, str(exc)) from None
                rest = toks[2:]
                cond = None
                if "IF" in rest:
                    k = rest.index("IF")
                    cond_text = " ".join(rest[k + 1:])
                    try:
                        cond = parse_expr(cond_text)
                    except ValueError as exc:
                        raise ParseError(lineno, str(exc)) from None
                    rest = rest[:k]
                qubits = tuple(_parse_qubit(t, lineno) for t in rest)
                instructions.append(Unitary(gate, qubits, cond))
            elif op == "M":
                # M q BASIS -> bit KIND [ideal]
                if len(toks) not in (6, 7) or toks[3] != "->":
                    raise ParseError(lineno, "expected 'M q BASIS -> bit KIND [ideal]'")
                basis = "Y" if toks[2] == "Ybar" else toks[2]
                bit, kind = toks[4], toks[5]
                ideal = None
                if kind == "DETECT":
                    if len(toks) != 7 or toks[6] not in ("0", "1"):
                        raise ParseError(lineno, "DETECT needs an ideal outcome 0 or 1")
                    ideal = int(toks[6])
                elif len(toks) != 6:
                    raise ParseError(lineno, "unexpected token after TELEPORT")
                instructions.append(Measure(_parse_qubit(toks[1], lineno), basis, bit, kind, ideal))
            elif op == "DISCARD":
                if len(toks) != 2:
                    raise ParseError(lineno, "DISCARD takes one qubit")
                instructions.append(Discard(_parse_qubit(toks[1], lineno)))
            else:
                raise ParseError(lineno, f"unknown instruction {op!r}")
        except CircuitError as exc:
            raise ParseError(lineno, str(exc)) from None
    try:
        return Circuit(tuple(instructions), tuple(inputs), tuple(outputs), name)
    except CircuitError as exc:
        raise ParseError(0, str(exc)) from None
