import itertools
import json
import math

import numpy as np
import pytest

from composite_ccz.constructions import COMPOSITE_TRIPLES, apply_ccz_oracle, plus_state, round1_circuit
from composite_ccz.execution import reference_ideals
from composite_ccz.faults import (
    ACCEPTED_CORRECT,
    ACCEPTED_ERROR,
    DETECTED,
    CheckpointError,
    ErrorPolynomial,
    FaultSet,
    PatternClosureError,
    acceptance_estimate,
    classify_run,
    enumerate_full,
    enumerate_round1,
    monte_carlo,
    pfail_bound,
    project_to_pattern_configs,
)
from composite_ccz.frame import FrameModel
from composite_ccz.pauli import PauliString
from composite_ccz.statevector import StateVector
from composite_ccz.constructions import ccz_magic_vector

# counts from a frame-engine sweep, cross-checked below against statevector runs
FULL_COUNTS = {
    1: (64, 0, 0),
    2: (2016, 0, 0),
    3: (41664, 0, 0),
    4: (632128, 176, 3072),
}
ROUND1_PATTERNS = {"Z..", ".Z.", "..Z", "ZZ.", "Z.Z", ".ZZ", "ZZZ"}


@pytest.fixture(scope="module")
def round1_ccz():
    circ, triple = round1_circuit(ccz_frame=True)
    circ = reference_ideals(circ)
    return circ, StateVector(list(triple.qubits), ccz_magic_vector())


@pytest.fixture(scope="module")
def composite_ideal(composite):
    lines = list(composite.outputs)
    return apply_ccz_oracle(plus_state(lines), lines, COMPOSITE_TRIPLES)


@pytest.fixture(scope="module")
def frame_model(composite):
    return FrameModel.build(composite)


class TestFaultSet:
    def test_sorted_unique(self):
        assert FaultSet((5, 2, 5)).locations == (2, 5)
        assert FaultSet((5, 2, 5)).weight == 2

    def test_validate(self, round1_ccz):
        circ, _ = round1_ccz
        with pytest.raises(ValueError):
            FaultSet((0,)).validate(circ)
        FaultSet.from_positions(circ, [0, 1]).validate(circ)


class TestClassifyRun:
    def test_fault_free(self, round1_ccz):
        circ, ideal = round1_ccz
        assert classify_run(circ, FaultSet(()), ideal).kind == ACCEPTED_CORRECT

    @pytest.mark.parametrize("pos", range(8))
    def test_single_fault_detected(self, round1_ccz, pos):
        circ, ideal = round1_ccz
        assert classify_run(circ, FaultSet.from_positions(circ, [pos]), ideal).kind == DETECTED

    def test_pair_gives_z_pattern(self, round1_ccz):
        circ, ideal = round1_ccz
        v = classify_run(circ, FaultSet.from_positions(circ, [0, 1]), ideal)
        assert v.kind == ACCEPTED_ERROR and v.pattern in ROUND1_PATTERNS

    def test_non_z_residual_halts(self, round1_ccz):
        circ, ideal = round1_ccz
        last = len(circ.instructions) - 1
        inj = {last: PauliString.single(circ.outputs[1], "X")}
        with pytest.raises(PatternClosureError):
            classify_run(circ, (), ideal, injections=inj)
        v = classify_run(circ, (), ideal, injections=inj, pauli_letters=".XYZ")
        assert v.pattern == ".X."

    def test_branch_independent_on_composite(self, composite, composite_ideal, frame_model):
        fl = composite.fault_locations
        malignant = next(s for s in itertools.combinations(range(16), 4)
                         if frame_model.classify(s)[0] == "accepted_error")
        v = classify_run(composite, [fl[p] for p in malignant], composite_ideal, verify_branches=2)
        assert v.kind == ACCEPTED_ERROR
        assert v.pattern == frame_model.classify(malignant)[1]


class TestRound1:
    def test_counts(self, round1_report):
        w1, w2 = round1_report.weights[1], round1_report.weights[2]
        assert (w1.total, w1.detected) == (8, 8)
        assert (w2.total, w2.accepted_error) == (28, 28)
        assert set(w2.patterns) == ROUND1_PATTERNS
        assert set(w2.patterns.values()) == {4}

    def test_frame_engine_agrees(self, round1_report):
        fr = enumerate_round1(2, engine="frame")
        assert fr.weights[2].malignant == round1_report.weights[2].malignant

    def test_controlled_h_frame(self):
        rep = enumerate_round1(2, frame="CH")
        assert rep.weights[2].accepted_error == 28
        assert len(rep.weights[2].patterns) == 7
        assert set(rep.weights[2].patterns.values()) == {4}

    def test_one_stabilizer_round_same_counts(self, round1_report):
        rep = enumerate_round1(2, stabilizer_rounds=1)
        assert rep.weights[2].patterns == round1_report.weights[2].patterns

    def test_odd_weight_three_detected(self):
        rep = enumerate_round1(3, engine="frame")
        assert rep.weights[3].detected == math.comb(8, 3)

    def test_bad_frame(self):
        with pytest.raises(ValueError):
            enumerate_round1(frame="XY")


class TestRound2:
    def test_counts(self, round2_result):
        r = round2_result
        assert r.single_slot_total == 56 and r.single_slot_detected == 56
        assert r.mismatched_total == 28 * 42 and r.mismatched_detected == r.mismatched_total
        assert r.matched_total == 28 * 7
        assert r.malignant_count == 192
        assert len(r.self_cancelling) == 4
        assert r.leading_coefficient == 3072

    def test_self_cancelling_pattern(self, round2_result):
        pats = {p for _, _, p in round2_result.self_cancelling}
        assert len(pats) == 1
        slots = sorted((a, b) for a, b, _ in round2_result.self_cancelling)
        assert slots == [(0, 1), (2, 3), (4, 5), (6, 7)]


class TestFullEnumeration:
    def test_counts(self, full_report):
        full_report.check_totals()
        for k, (det, ok, bad) in FULL_COUNTS.items():
            ws = full_report.weights[k]
            assert (ws.detected, ws.accepted_correct, ws.accepted_error) == (det, ok, bad)

    def test_projection_matches_round2(self, full_report, composite, round1_report, round2_result):
        configs = project_to_pattern_configs(full_report, composite, round1_report)
        assert configs == set(round2_result.malignant_configs)

    def test_parallel_and_chunking_deterministic(self, composite):
        a = enumerate_full(composite, max_weight=2, chunk_size=500)
        b = enumerate_full(composite, max_weight=2, chunk_size=500, workers=2)
        assert a.to_dict() == b.to_dict()

    def test_checkpoint_resume(self, composite, tmp_path):
        path = tmp_path / "ck.jsonl"
        first = enumerate_full(composite, max_weight=3, chunk_size=5000, checkpoint=path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:4]) + "\n")
        calls = []
        again = enumerate_full(composite, max_weight=3, chunk_size=5000, checkpoint=path,
                               progress=lambda k, stop: calls.append((k, stop)))
        assert again.to_dict() == first.to_dict()
        assert len(calls) == len(lines) - 4

    def test_checkpoint_wrong_job(self, composite, tmp_path):
        path = tmp_path / "ck.jsonl"
        enumerate_full(composite, max_weight=1, chunk_size=100, checkpoint=path)
        with pytest.raises(CheckpointError):
            enumerate_full(composite, max_weight=1, chunk_size=50, checkpoint=path)

    def test_checkpoint_corrupt(self, composite, tmp_path):
        path = tmp_path / "ck.jsonl"
        enumerate_full(composite, max_weight=1, chunk_size=100, checkpoint=path)
        with path.open("a") as fh:
            fh.write("{not json\n")
        with pytest.raises(CheckpointError):
            enumerate_full(composite, max_weight=1, chunk_size=100, checkpoint=path)

    @pytest.mark.parametrize("bad", [0, 5])
    def test_weight_range(self, composite, bad):
        with pytest.raises(ValueError):
            enumerate_full(composite, max_weight=bad)


class TestFrameAgainstStatevector:
    """The frame engine's verdicts reproduced by direct simulation."""

    def _compare(self, composite, ideal, model, positions):
        kind, label = model.classify(positions)
        v = classify_run(composite, [composite.fault_locations[p] for p in positions], ideal)
        expected = {"detected": DETECTED, "accepted_correct": ACCEPTED_CORRECT,
                    "accepted_error": ACCEPTED_ERROR}[kind]
        assert (v.kind, v.pattern) == (expected, label), positions

    def test_all_weight_one(self, composite, composite_ideal, frame_model):
        for p in range(64):
            self._compare(composite, composite_ideal, frame_model, (p,))

    def test_weight_two_sample(self, composite, composite_ideal, frame_model):
        rng = np.random.default_rng(2)
        for _ in range(150):
            self._compare(composite, composite_ideal, frame_model,
                          tuple(sorted(rng.choice(64, 2, replace=False).tolist())))

    def test_weight_three_sample(self, composite, composite_ideal, frame_model):
        rng = np.random.default_rng(3)
        for _ in range(100):
            self._compare(composite, composite_ideal, frame_model,
                          tuple(sorted(rng.choice(64, 3, replace=False).tolist())))

    def test_weight_four_accepted_sample(self, composite, composite_ideal, frame_model, full_report):
        rng = np.random.default_rng(4)
        sets = sorted(full_report.weights[4].malignant)
        for i in rng.choice(len(sets), 40, replace=False):
            self._compare(composite, composite_ideal, frame_model, sets[i])


class TestPolynomial:
    def test_leading_term(self, full_report):
        poly = full_report.polynomial()
        assert poly.distance == 4
        assert poly.leading_term() == (4, 3072)

    def test_evaluate_small_p(self, full_report):
        poly = full_report.polynomial()
        p = 1e-4
        assert poly.evaluate(p) == pytest.approx(3072 * p**4, rel=0.01)

    def test_inconsistent_counts(self):
        with pytest.raises(ValueError):
            ErrorPolynomial({2: 5}, {2: 3})

    def test_truncation_bound(self):
        poly = ErrorPolynomial({4: 3072}, {1: 0, 2: 0, 3: 0, 4: 3248})
        assert poly.truncation_bound(1e-3) == pytest.approx(
            sum(math.comb(64, k) * 1e-3**k for k in range(5, 65)))

    def test_acceptance_estimate_zero_p(self, full_report):
        assert acceptance_estimate(full_report, 0.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("p,expected", [(0.0, 0.0), (1.0, 1.0), (0.01, 1 - 0.99**64)])
    def test_pfail_bound(self, p, expected):
        upper, cap = pfail_bound(p)
        assert upper == pytest.approx(expected)
        assert cap == pytest.approx(64 * p) and upper <= cap + 1e-15

    @pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
    def test_pfail_bound_range(self, p):
        with pytest.raises(ValueError):
            pfail_bound(p)


class TestMonteCarlo:
    def test_zero_p(self, frame_model):
        r = monte_carlo(frame_model, p=0.0, shots=1000)
        assert r.detected == 0 and r.malignant == 0 and r.accepted == 1000

    def test_deterministic_across_workers(self, frame_model):
        a = monte_carlo(frame_model, p=0.03, shots=25_000, seed=9, chunk_size=5000)
        b = monte_carlo(frame_model, p=0.03, shots=25_000, seed=9, chunk_size=5000, workers=3)
        assert a.to_dict() == b.to_dict()

    def test_seed_changes_result(self, frame_model):
        a = monte_carlo(frame_model, fixed_weight=4, shots=20_000, seed=1)
        b = monte_carlo(frame_model, fixed_weight=4, shots=20_000, seed=2)
        assert a.to_dict() != b.to_dict()

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_low_weight_never_malignant(self, frame_model, k):
        r = monte_carlo(frame_model, fixed_weight=k, shots=5000)
        assert r.malignant == 0 and r.detected == 5000

    def test_fixed_weight_zero(self, frame_model):
        r = monte_carlo(frame_model, fixed_weight=0, shots=100)
        assert r.accepted == 100 and r.malignant == 0

    @pytest.mark.parametrize("kwargs", [{"shots": 0, "p": 0.1}, {"shots": 10}, {"shots": 10, "p": 2.0},
                                        {"shots": 10, "fixed_weight": 65}])
    def test_bad_arguments(self, frame_model, kwargs):
        with pytest.raises(ValueError):
            monte_carlo(frame_model, **kwargs)

    def test_report_roundtrip(self, frame_model):
        r = monte_carlo(frame_model, p=0.01, shots=1000)
        assert json.loads(json.dumps(r.to_dict()))["shots"] == 1000
