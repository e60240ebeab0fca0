"""Command line: ``qutritcd {encode,evolve,sweep,spectrum}``.

Exit codes: 0 success, 1 numerical failure, 2 bad input (schema, arguments,
degenerate instance), 3 resource cap exceeded. The dense-matrix cap is read
from ``QUTRITCD_MAX_DENSE_DIM``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from .bench import DESK_INSTANCES, FULL_INSTANCES, SWEEP_TIMES, PROBLEMS, SweepConfig, default_workers
from .bench import prepare, simulate, sweep_to_files
from .dynamics import BACKENDS, EvolutionConfig, spectrum_trace
from .encodings import ENCODINGS, brute_force, encode, initial_hamiltonian, register_shape
from .errors import DegenerateGapError, DegenerateInputError, InstanceFormatError, NumericalFailure
from .errors import ResourceLimitError
from .instances import DEFAULT_ALPHA, DEFAULT_BUDGET, DEFAULT_THETAS, instance_from_dict, instance_to_dict
from .instances import load_instance, random_instance, reference_instance

log = logging.getLogger("qutritcd")

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


# --- instance selection --------------------------------------------------------


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("instance", nargs="?", help="instance JSON file")
    src.add_argument("--reference", help="named instance: fig1 fig5 fig8 wheel6 portfolio6 portfolio3g2")
    src.add_argument("--problem", choices=PROBLEMS, help="draw a random instance of this problem")
    p.add_argument("--size", type=int, default=6, help="numbers, vertices or assets for --problem")
    p.add_argument("--seed", type=int, default=0)
    _add_model_args(p)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="max 3-cut penalty weight")
    p.add_argument("--theta1", type=float, help="portfolio return weight")
    p.add_argument("--theta2", type=float, help="portfolio risk weight")
    p.add_argument("--theta3", type=float, help="portfolio budget penalty")
    p.add_argument("--budget", type=float, help="portfolio budget")
    p.add_argument("--digits", type=int, help="trinary digits per asset")


def _apply_overrides(inst, args):
    data = instance_to_dict(inst)
    if data["problem"] == "max3cut" and args.alpha is not None:
        data["alpha"] = args.alpha
    if data["problem"] == "portfolio":
        thetas = list(data["thetas"])
        for k, name in enumerate(("theta1", "theta2", "theta3")):
            if getattr(args, name) is not None:
                thetas[k] = getattr(args, name)
        data["thetas"] = thetas
        if args.budget is not None:
            data["budget"] = args.budget
        if args.digits is not None:
            data["digits"] = args.digits
    return instance_from_dict(data)


def _load(args):
    if args.instance:
        inst = load_instance(args.instance)
    elif args.reference:
        inst = reference_instance(args.reference)
    else:
        inst = random_instance(args.problem, args.size, args.seed)
    return _apply_overrides(inst, args)


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- subcommands ---------------------------------------------------------------


def cmd_encode(args) -> int:
    inst = _load(args)
    prepared_terms = encode(inst, args.encoding)
    n_sites, d = register_shape(inst, args.encoding)
    gt = brute_force(inst, args.encoding)
    payload = {
        "instance": instance_to_dict(inst),
        "encoding": args.encoding,
        "n_sites": n_sites,
        "local_dim": d,
        "dim": prepared_terms.dim,
        "diagonal": prepared_terms.is_diagonal,
        "hamiltonian": prepared_terms.to_dict(),
        "ground_energy": gt.ground_energy,
        "gap": gt.gap,
        "degeneracy": gt.degeneracy,
        "ground_states": gt.ground_states.tolist(),
    }
    _write_json(payload, args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    inst = _load(args)
    prepared = prepare(inst, args.encoding)
    config = EvolutionConfig(args.T, backend=args.backend, steps=args.steps, agp_enabled=args.agp == "on")
    start = time.perf_counter()
    result = simulate(prepared, config)
    wall_ms = 1e3 * (time.perf_counter() - start)
    try:
        r = result.energy_error
    except DegenerateGapError:
        r = None
    payload = {
        "encoding": args.encoding,
        "T": args.T,
        "backend": args.backend,
        "agp": args.agp,
        "steps": result.steps,
        "R": r,
        "P_success": result.success_probability,
        "E_final": result.final_energy,
        "E_ground": prepared.ground_truth.ground_energy,
        "gap": prepared.ground_truth.gap,
        "norm_drift": result.norm_drift,
        "wall_ms": wall_ms,
    }
    _write_json(payload, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    n = FULL_INSTANCES if args.full else args.instances
    if n > DESK_INSTANCES and not args.full:
        log.warning("%d instances requested; the desk-scale default is %d", n, DESK_INSTANCES)
    config = SweepConfig(
        problem=args.problem,
        n_instances=n,
        size=args.size,
        times=tuple(args.T) if args.T else SWEEP_TIMES,
        seed_base=args.seed,
        backend=args.backend,
        steps=args.steps,
        workers=args.workers or default_workers(),
        alpha=DEFAULT_ALPHA if args.alpha is None else args.alpha,
        thetas=tuple(
            DEFAULT_THETAS[k] if getattr(args, name) is None else getattr(args, name)
            for k, name in enumerate(("theta1", "theta2", "theta3"))
        ),
        budget=DEFAULT_BUDGET if args.budget is None else args.budget,
        digits=1 if args.digits is None else args.digits,
    )

    def progress(i):
        log.info("instance %d/%d done", i + 1, config.n_instances)

    summary = sweep_to_files(config, args.out, progress if args.verbose else None)
    for row in summary["times"]:
        print(
            f"{config.problem} T={row['T']:g}: mean ratio {row['mean_ratio']}, "
            f"ratio>1 {row['fraction_ratio_gt_1']}, undefined {row['undefined_ratios']}, failed {row['failed']}"
        )
    return EXIT_OK


def cmd_spectrum(args) -> int:
    inst = _load(args)
    n_sites, d = register_shape(inst, args.encoding)
    trace = spectrum_trace(initial_hamiltonian(n_sites, d), encode(inst, args.encoding), args.grid)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda"] + [f"level{k}" for k in range(trace.levels.shape[1])])
        for lam, row in zip(trace.lambdas, trace.levels):
            writer.writerow([repr(float(lam))] + [repr(float(x)) for x in row])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qutritcd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="problem Hamiltonian and brute-force ground truth as JSON")
    _add_instance_args(p)
    p.add_argument("--encoding", choices=ENCODINGS, default="qutrit")
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("evolve", help="one counterdiabatic evolution, metrics as JSON")
    _add_instance_args(p)
    p.add_argument("--encoding", choices=ENCODINGS, default="qutrit")
    p.add_argument("--T", type=float, required=True, help="total time in units of 1/omega0")
    p.add_argument("--backend", choices=BACKENDS, default="ode")
    p.add_argument("--steps", type=int)
    p.add_argument("--agp", choices=("on", "off"), default="on")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="random-instance qutrit vs qubit sweep")
    p.add_argument("--problem", choices=PROBLEMS, required=True)
    p.add_argument("--instances", type=int, default=DESK_INSTANCES)
    p.add_argument("--full", action="store_true", help=f"run {FULL_INSTANCES} instances (slow)")
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--T", type=float, nargs="+", help="total times (default 0.1 1 10)")
    p.add_argument("--seed", type=int, default=0, help="seed base")
    p.add_argument("--backend", choices=BACKENDS, default="ode")
    p.add_argument("--steps", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    p.add_argument("--out", required=True, help="records CSV; summary and timings go next to it")
    _add_model_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="adiabatic spectrum on a lambda grid as CSV")
    _add_instance_args(p)
    p.add_argument("--encoding", choices=ENCODINGS, default="qutrit")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InstanceFormatError, DegenerateInputError, DegenerateGapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
