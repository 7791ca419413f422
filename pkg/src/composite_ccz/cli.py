"""Command-line entry point: ``composite-ccz <command> [options]``.

Exit status is 0 when the computed structure matches the expected counts, 1
when it deviates, and 2 on usage or input errors. Results go to standard
output (or ``--output``) as JSON or CSV; progress goes to standard error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Callable

from . import __version__
from . import statevector as _sv
from .constructions import (
    composite_ccz_circuit,
    controlled_s_pair_circuit,
    ccz_teleport_circuit,
    coupled_ccz_circuit,
    round1_circuit,
    teleport_composite,
    two_ccz_variant,
)
from .faults import (
    CheckpointError,
    compose_round2,
    enumerate_full,
    enumerate_round1,
    monte_carlo,
    pfail_bound,
)
from .reports import make_report, to_csv, to_json
from .textio import serialize

EXIT_OK = 0
EXIT_DEVIATION = 1
EXIT_USAGE = 2

ENV_WORKERS = "COMPOSITE_CCZ_WORKERS"
ENV_CHECKPOINT_DIR = "COMPOSITE_CCZ_CHECKPOINT_DIR"

# expected structure, checked by every counting command
ROUND1_DETECTED = 8
ROUND1_PAIRS = 28
ROUND1_PATTERNS = 7
ROUND1_MULTIPLICITY = 4
MALIGNANT_CONFIGS = 192
SELF_CANCELLING = 4
LEADING_COEFF = 3072
DISTANCE = 4
NUM_LOCATIONS = 64

CIRCUITS: dict[str, Callable] = {
    "round1": lambda: round1_circuit()[0],
    "round1-ccz": lambda: round1_circuit(ccz_frame=True)[0],
    "coupled-ccz": coupled_ccz_circuit,
    "composite-ccz": composite_ccz_circuit,
    "ccz-teleport": ccz_teleport_circuit,
    "composite-teleport": teleport_composite,
    "two-ccz-variant": two_ccz_variant,
    "controlled-s-pair": lambda: controlled_s_pair_circuit()[0],
}


class UsageError(ValueError):
    pass


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"probability {p} outside [0, 1]")
    return p


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of standard output")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=_positive,
                        default=int(os.environ.get(ENV_WORKERS, "1") or 1),
                        help=f"worker processes (default ${ENV_WORKERS} or 1)")
    common.add_argument("--cap", type=_positive, default=_sv.DEFAULT_QUBIT_CAP,
                        help="largest state factor, in qubits")
    common.add_argument("--quiet", "-q", action="store_true", help="no progress on standard error")

    parser = argparse.ArgumentParser(prog="composite-ccz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="fault-free oracle checks of every gadget")
    p.add_argument("--quick", action="store_true", help="fewer random inputs and branches")

    p = sub.add_parser("enumerate-round1", parents=[common], help="all weight-1 and weight-2 faults of round one")
    p.add_argument("--frame", choices=("CCZ", "CH"), default="CCZ")
    p.add_argument("--stabilizer-rounds", type=int, choices=(1, 2), default=2)

    sub.add_parser("compose-round2", parents=[common], help="inject round-one patterns into the composite")

    p = sub.add_parser("enumerate-full", parents=[common], help="direct enumeration on the 64-T circuit")
    p.add_argument("--max-weight", type=int, choices=(1, 2, 3, 4), default=3)
    p.add_argument("--engine", choices=("frame", "statevector"), default="frame")
    p.add_argument("--checkpoint", help="JSON-lines checkpoint file "
                   f"(relative names resolve under ${ENV_CHECKPOINT_DIR})")
    p.add_argument("--chunk-size", type=_positive, default=20000)

    p = sub.add_parser("montecarlo", parents=[common], help="sampled fault sets on the composite")
    p.add_argument("--p", type=_probability, dest="p")
    p.add_argument("--shots", type=_positive, default=100_000)
    p.add_argument("--fixed-weight", type=int)

    p = sub.add_parser("poly", parents=[common], help="postselected error polynomial")
    p.add_argument("--p", type=_probability, nargs="+", dest="p", required=True)
    p.add_argument("--max-weight", type=int, choices=(1, 2, 3, 4), default=4)

    p = sub.add_parser("export-circuit", parents=[common], help="print a circuit in the text format")
    p.add_argument("name", choices=sorted(CIRCUITS))

    p = sub.add_parser("bound", parents=[common], help="probability that any T gate fails")
    p.add_argument("--p", type=_probability, dest="p", required=True)
    return parser


def _config(args: argparse.Namespace) -> dict:
    skip = {"output", "quiet", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, report: dict, rows=None) -> None:
    text = to_json(report) if args.format == "json" else to_csv(report, rows)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _deviations(checks: dict[str, tuple]) -> list[str]:
    return [f"{name}: got {got}, expected {want}" for name, (got, want) in checks.items() if got != want]


def cmd_verify(args, log):
    from .verification import verify_gadgets

    checks = verify_gadgets(seed=args.seed, quick=args.quick)
    for c in checks:
        log(f"{c.name}: {c.cases} cases, min fidelity {c.min_fidelity:.12f}")
    results = {"gadgets": [dict(c.to_dict(), notes=c.notes) for c in checks]}
    failed = [f"{c.name} failed" for c in checks if not c.passed]
    return results, None, failed, [c.to_dict() for c in checks]


def cmd_enumerate_round1(args, log):
    rep = enumerate_round1(2, frame=args.frame, stabilizer_rounds=args.stabilizer_rounds)
    w1, w2 = rep.weights[1], rep.weights[2]
    mult = sorted(set(w2.patterns.values()))
    results = {
        "w1_detected": w1.detected,
        "w2_accepted_error": w2.accepted_error,
        "patterns": len(w2.patterns),
        "multiplicity": mult[0] if len(mult) == 1 else mult,
        "leading_term_coeff": w2.accepted_error,
        "leading_term_power": 2,
        "weights": {str(k): ws.to_dict() for k, ws in rep.weights.items()},
    }
    dev = _deviations({
        "w1_detected": (w1.detected, ROUND1_DETECTED),
        "w2_accepted_error": (w2.accepted_error, ROUND1_PAIRS),
        "patterns": (len(w2.patterns), ROUND1_PATTERNS),
        "multiplicity": (results["multiplicity"], ROUND1_MULTIPLICITY),
    })
    rows = [rep.weights[k].to_dict(include_sets=False) for k in sorted(rep.weights)]
    return results, rep.circuit_hash, dev, rows


def cmd_compose_round2(args, log):
    r1 = enumerate_round1(2)
    circ = composite_ccz_circuit()
    log("classifying single-slot and slot-pair pattern injections")
    res = compose_round2(r1, circuit=circ, progress=lambda n: log(f"  {n} runs"))
    results = res.to_dict()
    dev = _deviations({
        "single_slot_detected": (res.single_slot_detected, res.single_slot_total),
        "mismatched_detected": (res.mismatched_detected, res.mismatched_total),
        "malignant_configs": (res.malignant_count, MALIGNANT_CONFIGS),
        "self_cancelling": (len(res.self_cancelling), SELF_CANCELLING),
        "leading_term_coeff": (res.leading_coefficient, LEADING_COEFF),
    })
    return results, circ.content_hash(), dev, None


def _checkpoint_path(arg: str | None) -> Path | None:
    if arg is None:
        return None
    path = Path(arg)
    base = os.environ.get(ENV_CHECKPOINT_DIR)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def cmd_enumerate_full(args, log):
    circ = composite_ccz_circuit()
    rep = enumerate_full(
        circ, max_weight=args.max_weight, engine=args.engine, workers=args.workers,
        checkpoint=_checkpoint_path(args.checkpoint), chunk_size=args.chunk_size,
        progress=lambda k, stop: log(f"  weight {k}: {stop}/{math.comb(NUM_LOCATIONS, k)}"),
    )
    poly = rep.polynomial()
    results = {
        "num_locations": rep.num_locations,
        "malignant": {str(k): ws.accepted_error for k, ws in rep.weights.items()},
        "distance": poly.distance,
        "weights": {str(k): ws.to_dict(include_sets=False) for k, ws in rep.weights.items()},
    }
    checks = {"num_locations": (rep.num_locations, NUM_LOCATIONS)}
    for k, ws in rep.weights.items():
        checks[f"w{k}_total"] = (ws.total, math.comb(NUM_LOCATIONS, k))
        checks[f"w{k}_malignant"] = (ws.accepted_error, LEADING_COEFF if k == DISTANCE else 0)
    rows = [rep.weights[k].to_dict(include_sets=False) for k in sorted(rep.weights)]
    return results, rep.circuit_hash, _deviations(checks), rows


def cmd_montecarlo(args, log):
    if (args.p is None) == (args.fixed_weight is None):
        raise UsageError("give exactly one of --p or --fixed-weight")
    if args.fixed_weight is not None and not 0 <= args.fixed_weight <= NUM_LOCATIONS:
        raise UsageError(f"--fixed-weight must lie in [0, {NUM_LOCATIONS}]")
    circ = composite_ccz_circuit()
    res = monte_carlo(circ, p=args.p, shots=args.shots, seed=args.seed,
                      fixed_weight=args.fixed_weight, workers=args.workers)
    results = res.to_dict()
    dev = []
    if res.mode == "iid":
        bound = pfail_bound(args.p)[0]
        results["pfail_upper"] = bound
        if res.detected_rate > bound + 3 * res.detected_sigma:
            dev.append(f"detected rate {res.detected_rate} exceeds {bound} by more than 3 sigma")
    else:
        k = args.fixed_weight
        expected = LEADING_COEFF / math.comb(NUM_LOCATIONS, k) if k == DISTANCE else 0.0
        results["expected_malignant_fraction"] = expected
        if k == DISTANCE:
            lo, hi = res.interval("malignant")
            if not lo <= expected <= hi:
                dev.append(f"malignant fraction {res.malignant_fraction} not within 3 sigma of {expected}")
        elif k < DISTANCE and res.malignant:
            dev.append(f"{res.malignant} malignant sets below weight {DISTANCE}")
    return results, circ.content_hash(), dev, None


def cmd_poly(args, log):
    circ = composite_ccz_circuit()
    rep = enumerate_full(circ, max_weight=args.max_weight, workers=args.workers)
    poly = rep.polynomial()
    rows = []
    for p in args.p:
        rows.append({"p": p, "p_err": poly.evaluate(p), "acceptance": poly._sum(poly.A, p),
                     "truncation_bound": poly.truncation_bound(p),
                     "leading_order": LEADING_COEFF * p**4})
    results = {"polynomial": poly.to_dict(), "evaluations": rows}
    dev = []
    if args.max_weight >= DISTANCE:
        dev = _deviations({"distance": (poly.distance, DISTANCE),
                           "leading_term": (poly.leading_term(), (DISTANCE, LEADING_COEFF))})
    return results, rep.circuit_hash, dev, rows


def cmd_bound(args, log):
    upper, cap = pfail_bound(args.p)
    return {"p": args.p, "pfail_upper": upper, "linear_cap": cap}, None, [], None


COMMANDS = {
    "verify": cmd_verify,
    "enumerate-round1": cmd_enumerate_round1,
    "compose-round2": cmd_compose_round2,
    "enumerate-full": cmd_enumerate_full,
    "montecarlo": cmd_montecarlo,
    "poly": cmd_poly,
    "bound": cmd_bound,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    log = (lambda msg: None) if args.quiet else _progress
    _sv.DEFAULT_QUBIT_CAP = args.cap

    if args.command == "export-circuit":
        text = serialize(CIRCUITS[args.name]())
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    try:
        results, chash, deviations, rows = COMMANDS[args.command](args, log)
    except (UsageError, CheckpointError, OSError) as exc:
        print(f"composite-ccz {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = "deviation" if deviations else "ok"
    if deviations:
        results = dict(results, deviations=deviations)
    _emit(args, make_report(args.command, _config(args), results, chash, status), rows)
    for d in deviations:
        print(f"DEVIATION {d}", file=sys.stderr)
    return EXIT_DEVIATION if deviations else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
