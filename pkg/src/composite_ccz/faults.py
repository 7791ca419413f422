"""Fault injection, run classification, enumeration, error polynomials and Monte Carlo."""

from __future__ import annotations

import itertools
import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit
from .constructions import (
    COMPOSITE_TRIPLES,
    CompositeSpec,
    apply_ccz_oracle,
    ccz_magic_vector,
    composite_ccz_circuit,
    magic_state_vector,
    plus_state,
    round1_circuit,
)
from .execution import reference_ideals, run
from .frame import FrameModel, PatternClosureError
from .gates import Gate
from .pauli import PauliString
from .statevector import StateVector, fidelity

FIDELITY_TOL = 1e-9
NUM_LOCATIONS = 64

DETECTED = "Detected"
ACCEPTED_CORRECT = "AcceptedCorrect"
ACCEPTED_ERROR = "AcceptedError"

__all__ = [
    "FaultSet",
    "RunClassification",
    "classify_run",
    "EnumerationReport",
    "WeightSummary",
    "enumerate_round1",
    "Round2Result",
    "compose_round2",
    "enumerate_full",
    "project_to_pattern_configs",
    "ErrorPolynomial",
    "pfail_bound",
    "acceptance_estimate",
    "MonteCarloResult",
    "monte_carlo",
    "PatternClosureError",
    "CheckpointError",
]


class CheckpointError(RuntimeError):
    """Checkpoint file unreadable or written for a different job."""


# ---------------------------------------------------------------------------
# single runs


@dataclass(frozen=True)
class FaultSet:
    """Sorted instruction indices of T/Tdg gates followed by an injected Z."""

    locations: tuple[int, ...]

    def __post_init__(self):
        locs = tuple(sorted(set(int(i) for i in self.locations)))
        object.__setattr__(self, "locations", locs)

    @classmethod
    def from_positions(cls, circuit: Circuit, positions: Iterable[int]) -> "FaultSet":
        """Build from 0-based positions into ``circuit.fault_locations``."""
        fl = circuit.fault_locations
        return cls(tuple(fl[p] for p in positions))

    @property
    def weight(self) -> int:
        return len(self.locations)

    def validate(self, circuit: Circuit) -> None:
        bad = set(self.locations) - set(circuit.fault_locations)
        if bad:
            raise ValueError(f"not fault locations: {sorted(bad)}")


@dataclass(frozen=True)
class RunClassification:
    kind: str
    pattern: str | None = None

    @property
    def detected(self) -> bool:
        return self.kind == DETECTED

    @property
    def malignant(self) -> bool:
        return self.kind == ACCEPTED_ERROR

    def __str__(self) -> str:
        return self.kind if self.pattern is None else f"{self.kind}({self.pattern})"


def _pattern_candidates(n: int, letters: str) -> list[str]:
    out = []
    for combo in itertools.product(letters, repeat=n):
        if any(c != "." for c in combo):
            out.append("".join(combo))
    # canonical order: lower weight first, then lexicographic
    return sorted(out, key=lambda s: (sum(c != "." for c in s), s))


def apply_label(state: StateVector, label: str, order: Sequence[int]) -> StateVector:
    out = state.copy()
    for q, c in zip(order, label):
        if c != ".":
            out.apply_gate(Gate(c), [q])
    return out


def match_pattern(actual: StateVector, ideal: StateVector, order: Sequence[int],
                  letters: str = ".Z") -> str | None:
    for label in _pattern_candidates(len(order), letters):
        if fidelity(actual, apply_label(ideal, label, order)) >= 1 - FIDELITY_TOL:
            return label
    return None


def classify_run(
    circuit: Circuit,
    faults: FaultSet | Iterable[int],
    ideal: StateVector,
    injections: Mapping[int, PauliString] | None = None,
    branches: Mapping[str, int] | None = None,
    pauli_letters: str = ".Z",
    verify_branches: int = 0,
    seed: int = 0,
    resume=None,
) -> RunClassification:
    """Run with Z faults and classify against the fault-free output ``ideal``.

    Teleport outcomes are forced to ``branches`` (default all zeros). With
    ``verify_branches`` > 0 the run is repeated on that many random branch
    assignments and must give the same verdict. ``pauli_letters`` restricts the
    error patterns searched (Z-type by default); failing to match raises
    PatternClosureError.
    """
    locs = faults.locations if isinstance(faults, FaultSet) else tuple(faults)
    verdict = _classify_once(circuit, locs, ideal, injections, branches, pauli_letters, None, resume)
    if verify_branches:
        rng = np.random.default_rng(seed)
        for _ in range(verify_branches):
            other = _classify_once(circuit, locs, ideal, injections, None, pauli_letters, rng, None)
            if other != verdict:
                raise AssertionError(f"verdict depends on teleport branch: {verdict} vs {other}")
    return verdict


def _classify_once(circuit, locs, ideal, injections, branches, letters, rng, resume):
    res = run(circuit, faults=locs, injections=injections, branches=branches, rng=rng, resume=resume)
    if not res.accepted:
        return RunClassification(DETECTED)
    order = list(circuit.outputs)
    actual = res.output_state(order)
    if fidelity(actual, ideal) >= 1 - FIDELITY_TOL:
        return RunClassification(ACCEPTED_CORRECT)
    label = match_pattern(actual, ideal, order, letters)
    if label is None:
        raise PatternClosureError(f"faults {locs} leave an output matching no {letters!r} pattern")
    return RunClassification(ACCEPTED_ERROR, label)


# ---------------------------------------------------------------------------
# enumeration reports


@dataclass
class WeightSummary:
    weight: int
    total: int = 0
    detected: int = 0
    accepted_correct: int = 0
    accepted_error: int = 0
    patterns: Counter = field(default_factory=Counter)
    # accepted-error sets as positions into fault_locations, with their pattern
    malignant: dict[tuple[int, ...], str] = field(default_factory=dict)

    def add(self, positions: tuple[int, ...], verdict: RunClassification) -> None:
        self.total += 1
        if verdict.kind == DETECTED:
            self.detected += 1
        elif verdict.kind == ACCEPTED_CORRECT:
            self.accepted_correct += 1
        else:
            self.accepted_error += 1
            self.patterns[verdict.pattern] += 1
            self.malignant[tuple(positions)] = verdict.pattern

    def merge(self, other: "WeightSummary") -> None:
        self.total += other.total
        self.detected += other.detected
        self.accepted_correct += other.accepted_correct
        self.accepted_error += other.accepted_error
        self.patterns.update(other.patterns)
        self.malignant.update(other.malignant)

    @property
    def accepted(self) -> int:
        return self.accepted_correct + self.accepted_error

    def to_dict(self, include_sets: bool = True) -> dict:
        d = {
            "weight": self.weight,
            "total": self.total,
            "detected": self.detected,
            "accepted_correct": self.accepted_correct,
            "accepted_error": self.accepted_error,
            "patterns": dict(sorted(self.patterns.items())),
        }
        if include_sets:
            d["malignant_sets"] = [[list(k), v] for k, v in sorted(self.malignant.items())]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "WeightSummary":
        ws = cls(int(d["weight"]), int(d["total"]), int(d["detected"]),
                 int(d["accepted_correct"]), int(d["accepted_error"]), Counter(d.get("patterns", {})))
        for k, v in d.get("malignant_sets", []):
            ws.malignant[tuple(k)] = v
        return ws


@dataclass
class EnumerationReport:
    circuit_hash: str
    mode: str
    engine: str
    num_locations: int
    output_qubits: tuple[int, ...]
    weights: dict[int, WeightSummary] = field(default_factory=dict)

    def summary(self, k: int) -> WeightSummary:
        return self.weights[k]

    def check_totals(self) -> None:
        for k, ws in self.weights.items():
            if ws.total != math.comb(self.num_locations, k):
                raise AssertionError(f"weight {k}: {ws.total} sets, expected C({self.num_locations},{k})")

    def polynomial(self) -> "ErrorPolynomial":
        N = {k: ws.accepted_error for k, ws in self.weights.items()}
        A = {k: ws.accepted for k, ws in self.weights.items()}
        return ErrorPolynomial(N, A, self.num_locations)

    def to_dict(self, include_sets: bool = True) -> dict:
        return {
            "circuit_hash": self.circuit_hash,
            "mode": self.mode,
            "engine": self.engine,
            "num_locations": self.num_locations,
            "output_qubits": list(self.output_qubits),
            "weights": {str(k): ws.to_dict(include_sets) for k, ws in sorted(self.weights.items())},
        }


# ---------------------------------------------------------------------------
# round one


@lru_cache(maxsize=4)
def _round1(ccz_frame: bool, stabilizer_rounds: int):
    circ, triple = round1_circuit(ccz_frame=ccz_frame, stabilizer_rounds=stabilizer_rounds)
    circ = reference_ideals(circ)
    vec = ccz_magic_vector() if ccz_frame else magic_state_vector()
    return circ, triple, StateVector(list(triple.qubits), vec)


def enumerate_round1(
    max_weight: int = 2,
    frame: str = "CCZ",
    stabilizer_rounds: int = 2,
    engine: str = "statevector",
) -> EnumerationReport:
    """Classify every fault set of weight 1..max_weight on the round-one circuit.

    ``frame="CCZ"`` appends the two-qubit Clifford that turns the output into
    CCZ|+++>, where residual errors are Z-type; ``frame="CH"`` keeps the
    controlled-H form and searches all Pauli patterns.
    """
    if frame not in ("CCZ", "CH"):
        raise ValueError("frame must be 'CCZ' or 'CH'")
    circ, triple, ideal = _round1(frame == "CCZ", stabilizer_rounds)
    letters = ".Z" if frame == "CCZ" else ".XYZ"
    fl = circ.fault_locations
    report = EnumerationReport(circ.content_hash(), "direct", engine, len(fl), triple.qubits)
    model = FrameModel.build(circ) if engine == "frame" else None
    for k in range(1, max_weight + 1):
        ws = WeightSummary(k)
        for pos in itertools.combinations(range(len(fl)), k):
            if model is not None:
                kind, label = model.classify(pos)
                verdict = RunClassification(_KIND[kind], label)
            else:
                verdict = classify_run(circ, [fl[p] for p in pos], ideal, pauli_letters=letters)
            ws.add(pos, verdict)
        report.weights[k] = ws
    return report


_KIND = {"detected": DETECTED, "accepted_correct": ACCEPTED_CORRECT, "accepted_error": ACCEPTED_ERROR}


def round1_pattern_multiplicity(report: EnumerationReport) -> dict[str, int]:
    return dict(report.weights[2].patterns)


# ---------------------------------------------------------------------------
# round two from round-one patterns


@dataclass
class Round2Result:
    single_slot_total: int = 0
    single_slot_detected: int = 0
    mismatched_total: int = 0
    mismatched_detected: int = 0
    matched_total: int = 0
    matched_malignant: int = 0
    self_cancelling: list[tuple[int, int, str]] = field(default_factory=list)
    malignant_configs: list[tuple[int, int, str, str]] = field(default_factory=list)
    pattern_multiplicity: int = 0
    output_patterns: Counter = field(default_factory=Counter)
    runs: int = 0

    @property
    def malignant_count(self) -> int:
        return len(self.malignant_configs)

    @property
    def leading_coefficient(self) -> int:
        return self.malignant_count * self.pattern_multiplicity**2

    def to_dict(self) -> dict:
        return {
            "single_slot_total": self.single_slot_total,
            "single_slot_detected": self.single_slot_detected,
            "mismatched_total": self.mismatched_total,
            "mismatched_detected": self.mismatched_detected,
            "matched_total": self.matched_total,
            "matched_malignant": self.matched_malignant,
            "self_cancelling": [list(x) for x in self.self_cancelling],
            "malignant_configs": self.malignant_count,
            "pattern_multiplicity": self.pattern_multiplicity,
            "leading_term_coeff": self.leading_coefficient,
            "leading_term_power": 4,
            "runs": self.runs,
        }


def _slot_injection(slot: Mapping, label: str) -> tuple[int, PauliString]:
    ops = {q: c for q, c in zip(slot["triple"], label) if c != "."}
    return slot["output_index"], PauliString(ops)


def compose_round2(
    round1: EnumerationReport,
    spec: CompositeSpec | None = None,
    circuit: Circuit | None = None,
    progress=None,
) -> Round2Result:
    """Inject round-one residual patterns at magic-state outputs of the composite circuit.

    Every single-slot pattern, and every ordered pair of distinct slots with
    every pair of patterns, is classified by statevector simulation with no T
    faults. Each pattern is represented by the Z-type label found for it in
    the round-one report.
    """
    circuit = circuit or composite_ccz_circuit(spec)
    slots = circuit.metadata["slots"]
    mult = Counter(round1.weights[2].patterns.values())
    if len(mult) != 1:
        raise AssertionError(f"round-one patterns have unequal multiplicities {dict(mult)}")
    patterns = sorted(round1.weights[2].patterns, key=lambda s: (sum(c != "." for c in s), s))
    lines = list(circuit.outputs)
    ideal = apply_ccz_oracle(plus_state(lines), lines, COMPOSITE_TRIPLES)

    out_idx = sorted({s["output_index"] for s in slots})
    base = run(circuit, snapshots=out_idx)
    result = Round2Result(pattern_multiplicity=next(iter(mult)))

    for si, slot in enumerate(slots):
        for pat in patterns:
            idx, P = _slot_injection(slot, pat)
            v = classify_run(circuit, (), ideal, injections={idx: P}, resume=_resume(base, idx, P))
            result.runs += 1
            result.single_slot_total += 1
            result.single_slot_detected += v.detected
    for (sa, slot_a), (sb, slot_b) in itertools.combinations(enumerate(slots), 2):
        for pa, pb in itertools.product(patterns, repeat=2):
            (ia, Pa), (ib, Pb) = sorted([_slot_injection(slot_a, pa), _slot_injection(slot_b, pb)],
                                        key=lambda t: t[0])
            v = classify_run(circuit, (), ideal, injections={ib: Pb}, resume=_resume(base, ia, Pa))
            result.runs += 1
            if pa == pb:
                result.matched_total += 1
                if v.malignant:
                    result.matched_malignant += 1
                    result.malignant_configs.append((sa, sb, pa, pb))
                    result.output_patterns[v.pattern] += 1
                elif v.kind == ACCEPTED_CORRECT:
                    result.self_cancelling.append((sa, sb, pa))
            else:
                result.mismatched_total += 1
                result.mismatched_detected += v.detected
                if v.malignant:
                    result.malignant_configs.append((sa, sb, pa, pb))
        if progress is not None:
            progress(result.runs)
    return result


def _resume(base, index: int, pauli: PauliString):
    """Snapshot after ``index`` with ``pauli`` applied on top."""
    from .execution import Snapshot

    snap = base.snapshots[index]
    state = snap.state.copy()
    for q, p in pauli.ops.items():
        state.apply_gate(Gate(p), [q])
    return Snapshot(snap.index, state, snap.record.copy(), list(snap.flipped))


# ---------------------------------------------------------------------------
# direct enumeration over the full circuit


def _combination_chunks(n: int, k: int, chunk: int):
    total = math.comb(n, k)
    for start in range(0, total, chunk):
        yield start, min(total, start + chunk)


def _frame_chunk(model: FrameModel, n: int, k: int, start: int, stop: int) -> WeightSummary:
    combos = np.array(list(itertools.islice(itertools.combinations(range(n), k), start, stop)),
                      dtype=np.int64).reshape(-1, k)
    V = np.bitwise_xor.reduce(model.effects[combos], axis=1)
    verdict = model.classify_batch(V)
    ws = WeightSummary(k, total=len(combos))
    ws.detected = int((verdict == 0).sum())
    ws.accepted_correct = int((verdict == 1).sum())
    ws.accepted_error = int((verdict == 2).sum())
    nm = model.num_measurements
    no = len(model.outputs)
    for i in np.nonzero(verdict == 2)[0]:
        label = "".join("Z" if z else "." for z in V[i, nm + no:])
        ws.patterns[label] += 1
        ws.malignant[tuple(int(x) for x in combos[i])] = label
    return ws


def _statevector_chunk(circuit: Circuit, k: int, start: int, stop: int) -> WeightSummary:
    lines = list(circuit.outputs)
    ideal = apply_ccz_oracle(plus_state(lines), lines, COMPOSITE_TRIPLES)
    fl = circuit.fault_locations
    ws = WeightSummary(k)
    for pos in itertools.islice(itertools.combinations(range(len(fl)), k), start, stop):
        ws.add(pos, classify_run(circuit, [fl[p] for p in pos], ideal))
    return ws


def _worker(args):
    engine, circuit, k, start, stop = args
    if engine == "frame":
        model = _model_for(circuit)
        return _frame_chunk(model, len(circuit.fault_locations), k, start, stop)
    return _statevector_chunk(circuit, k, start, stop)


_MODEL_CACHE: dict[str, FrameModel] = {}


def _model_for(circuit: Circuit) -> FrameModel:
    key = circuit.content_hash()
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = FrameModel.build(circuit)
    return _MODEL_CACHE[key]


def _load_checkpoint(path: Path, header: dict) -> dict[tuple[int, int], WeightSummary]:
    done: dict[tuple[int, int], WeightSummary] = {}
    if not path.exists():
        return done
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        return done
    try:
        first = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: unreadable header") from exc
    if first.get("header") != header:
        raise CheckpointError(f"{path}: written for a different job ({first.get('header')})")
    for n, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            ws = WeightSummary.from_dict(rec["summary"])
            done[(int(rec["weight"]), int(rec["start"]))] = ws
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"{path}: corrupt record on line {n}") from exc
    return done


def enumerate_full(
    circuit: Circuit | None = None,
    max_weight: int = 3,
    min_weight: int = 1,
    engine: str = "frame",
    workers: int = 1,
    checkpoint: str | os.PathLike | None = None,
    chunk_size: int = 20000,
    progress=None,
) -> EnumerationReport:
    """Classify every fault set of weight min_weight..max_weight on the full circuit.

    ``engine="frame"`` combines per-location Pauli-frame effects;
    ``engine="statevector"`` simulates each set. Work is cut into fixed chunks
    of the lexicographic combination order, so results do not depend on
    ``workers``; finished chunks are appended to ``checkpoint`` (JSON lines)
    and skipped on restart.
    """
    if not 1 <= min_weight <= max_weight <= 4:
        raise ValueError("weights must satisfy 1 <= min_weight <= max_weight <= 4")
    if engine not in ("frame", "statevector"):
        raise ValueError(f"unknown engine {engine!r}")
    circuit = circuit or composite_ccz_circuit()
    n = len(circuit.fault_locations)
    chash = circuit.content_hash()
    header = {"circuit_hash": chash, "engine": engine, "chunk_size": chunk_size}
    ckpt = Path(checkpoint) if checkpoint is not None else None
    done = _load_checkpoint(ckpt, header) if ckpt is not None else {}
    if ckpt is not None and not ckpt.exists():
        with ckpt.open("w") as fh:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")

    jobs = []
    for k in range(min_weight, max_weight + 1):
        for start, stop in _combination_chunks(n, k, chunk_size):
            if (k, start) not in done:
                jobs.append((engine, circuit, k, start, stop))

    def record(job, ws):
        done[(job[2], job[3])] = ws
        if ckpt is not None:
            with ckpt.open("a") as fh:
                fh.write(json.dumps({"weight": job[2], "start": job[3], "stop": job[4],
                                     "summary": ws.to_dict()}, sort_keys=True) + "\n")
        if progress is not None:
            progress(job[2], job[4])

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for job, ws in zip(jobs, pool.map(_worker, jobs)):
                record(job, ws)
    else:
        for job in jobs:
            record(job, _worker(job))

    report = EnumerationReport(chash, "direct", engine, n, tuple(circuit.outputs))
    for k in range(min_weight, max_weight + 1):
        ws = WeightSummary(k)
        for start, _ in _combination_chunks(n, k, chunk_size):
            ws.merge(done[(k, start)])
        report.weights[k] = ws
    return report


def project_to_pattern_configs(
    report: EnumerationReport,
    circuit: Circuit,
    round1: EnumerationReport,
    weight: int = 4,
) -> set[tuple[int, int, str, str]]:
    """Map weight-4 malignant sets to (slot, slot, round-one pattern, pattern) configurations.

    Sets that are not two faults in each of two slots, or whose per-slot pairs
    are not round-one accepted errors, are reported with pattern ``"?"``.
    """
    slots = circuit.metadata["slots"]
    fl = circuit.fault_locations
    where = {}
    for si, slot in enumerate(slots):
        for local, ins_idx in enumerate(slot["t_instructions"]):
            where[fl.index(ins_idx)] = (si, local)
    r1 = round1.weights[2].malignant
    configs = set()
    for positions in report.weights[weight].malignant:
        groups: dict[int, list[int]] = {}
        for p in positions:
            si, local = where[p]
            groups.setdefault(si, []).append(local)
        if len(groups) != 2 or any(len(v) != 2 for v in groups.values()):
            configs.add((-1, -1, "?", "?"))
            continue
        (sa, la), (sb, lb) = sorted(groups.items())
        configs.add((sa, sb, r1.get(tuple(sorted(la)), "?"), r1.get(tuple(sorted(lb)), "?")))
    return configs


# ---------------------------------------------------------------------------
# polynomials and bounds


@dataclass
class ErrorPolynomial:
    """Postselected logical error rate from malignant (N) and accepted (A) counts."""

    N: dict[int, int]
    A: dict[int, int]
    num_locations: int = NUM_LOCATIONS

    def __post_init__(self):
        self.N = {int(k): int(v) for k, v in self.N.items()}
        self.A = {int(k): int(v) for k, v in self.A.items()}
        self.A.setdefault(0, 1)
        self.N.setdefault(0, 0)
        for k in self.N:
            if not self.N[k] <= self.A.get(k, 0) <= math.comb(self.num_locations, k):
                raise ValueError(f"inconsistent counts at weight {k}")

    @property
    def max_weight(self) -> int:
        return max(self.A)

    @property
    def distance(self) -> int | None:
        nz = [k for k, v in sorted(self.N.items()) if v]
        return nz[0] if nz else None

    def leading_term(self) -> tuple[int, int] | None:
        d = self.distance
        return None if d is None else (d, self.N[d])

    def _sum(self, coeffs: Mapping[int, int], p: float) -> float:
        L = self.num_locations
        return sum(c * p**k * (1 - p) ** (L - k) for k, c in coeffs.items())

    def evaluate(self, p: float) -> float:
        _check_p(p)
        acc = self._sum(self.A, p)
        return self._sum(self.N, p) / acc if acc > 0 else float("nan")

    def truncation_bound(self, p: float) -> float:
        """Total weight of the fault sets beyond the enumerated weights."""
        _check_p(p)
        L = self.num_locations
        return sum(math.comb(L, k) * p**k for k in range(self.max_weight + 1, L + 1))

    def to_dict(self) -> dict:
        return {"N": {str(k): v for k, v in sorted(self.N.items())},
                "A": {str(k): v for k, v in sorted(self.A.items())},
                "num_locations": self.num_locations,
                "distance": self.distance}


def _check_p(p: float) -> None:
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"probability {p} outside [0, 1]")


def pfail_bound(p: float, num_locations: int = NUM_LOCATIONS) -> tuple[float, float]:
    """Probability that at least one T gate fails, and its linear cap L*p."""
    _check_p(p)
    return 1.0 - (1.0 - p) ** num_locations, num_locations * p


def acceptance_estimate(report: EnumerationReport | ErrorPolynomial, p: float) -> float:
    """Lower estimate of the acceptance probability from enumerated accepted counts."""
    poly = report.polynomial() if isinstance(report, EnumerationReport) else report
    _check_p(p)
    return poly._sum(poly.A, p)


# ---------------------------------------------------------------------------
# Monte Carlo over the frame model


@dataclass
class MonteCarloResult:
    mode: str
    p: float | None
    weight: int | None
    shots: int
    seed: int
    detected: int
    accepted: int
    malignant: int

    @staticmethod
    def _rate(k: int, n: int) -> tuple[float, float]:
        r = k / n if n else float("nan")
        return r, math.sqrt(r * (1 - r) / n) if n else float("nan")

    @property
    def detected_rate(self) -> float:
        return self._rate(self.detected, self.shots)[0]

    @property
    def detected_sigma(self) -> float:
        return self._rate(self.detected, self.shots)[1]

    @property
    def malignant_fraction(self) -> float:
        """Malignant runs over all shots (fixed-weight estimate of N_k / C(L, k))."""
        return self._rate(self.malignant, self.shots)[0]

    @property
    def malignant_sigma(self) -> float:
        return self._rate(self.malignant, self.shots)[1]

    @property
    def postselected_error_rate(self) -> float:
        return self._rate(self.malignant, self.accepted)[0]

    def interval(self, what: str = "malignant", z: float = 3.0) -> tuple[float, float]:
        rate, sig = {
            "malignant": (self.malignant_fraction, self.malignant_sigma),
            "detected": (self.detected_rate, self.detected_sigma),
        }[what]
        return rate - z * sig, rate + z * sig

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "p": self.p, "weight": self.weight, "shots": self.shots,
            "seed": self.seed, "detected": self.detected, "accepted": self.accepted,
            "malignant": self.malignant, "detected_rate": self.detected_rate,
            "detected_sigma": self.detected_sigma, "malignant_fraction": self.malignant_fraction,
            "malignant_sigma": self.malignant_sigma,
            "postselected_error_rate": self.postselected_error_rate,
        }


def _mc_chunk(args):
    effects, is_tele, n_meas, n_out, mode, p, k, shots, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    L = effects.shape[0]
    if mode == "iid":
        F = (rng.random((shots, L)) < p).astype(np.int32)
        V = (F @ effects.astype(np.int32)) & 1
    else:
        idx = np.argsort(rng.random((shots, L)), axis=1)[:, :k]
        V = np.bitwise_xor.reduce(effects[idx], axis=1) if k > 0 else np.zeros((shots, effects.shape[1]), np.uint8)
    flips = V[:, :n_meas]
    any_flip = flips.any(axis=1)
    first = np.argmax(flips, axis=1)
    if (any_flip & is_tele[first]).any():
        from .frame import TeleportFlipError

        raise TeleportFlipError("sampled fault set flips a teleport outcome first")
    accepted = ~any_flip
    xs = V[:, n_meas:n_meas + n_out]
    zs = V[:, n_meas + n_out:]
    if (accepted & xs.any(axis=1)).any():
        raise PatternClosureError("sampled accepted residual with X/Y support")
    malignant = accepted & zs.any(axis=1)
    return int(any_flip.sum()), int(accepted.sum()), int(malignant.sum())


def monte_carlo(
    circuit: Circuit | FrameModel | None = None,
    p: float | None = None,
    shots: int = 100_000,
    seed: int = 0,
    fixed_weight: int | None = None,
    workers: int = 1,
    chunk_size: int = 10_000,
) -> MonteCarloResult:
    """Sample fault sets (iid with rate ``p``, or uniform of size ``fixed_weight``).

    Shots are split into fixed chunks, each with its own child of
    ``SeedSequence(seed)``, so the result is identical for any ``workers``.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    if fixed_weight is None:
        if p is None:
            raise ValueError("give p for iid sampling or fixed_weight")
        _check_p(p)
        mode = "iid"
    else:
        mode = "fixed-weight"
    model = circuit if isinstance(circuit, FrameModel) else _model_for(circuit or composite_ccz_circuit())
    if fixed_weight is not None and not 0 <= fixed_weight <= model.num_locations:
        raise ValueError("fixed_weight out of range")
    n_chunks = -(-shots // chunk_size)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    args = []
    for i, child in enumerate(children):
        m = min(chunk_size, shots - i * chunk_size)
        args.append((model.effects, model.is_teleport, model.num_measurements, len(model.outputs),
                     mode, p, fixed_weight, m, child))
    if workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_mc_chunk, args))
    else:
        parts = [_mc_chunk(a) for a in args]
    det, acc, mal = (sum(x) for x in zip(*parts))
    return MonteCarloResult(mode, p, fixed_weight, shots, seed, det, acc, mal)
