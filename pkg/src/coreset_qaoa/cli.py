"""
Command line interface: ``coreset-qaoa <group> <command> [options]``.

Results go to the file named by ``--out`` or, without it, to stdout as JSON.
Diagnostics go to stderr. Exit codes: 0 success, 2 invalid arguments,
65 input file error, 66 computation error, 67 output error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional

from . import __version__
from .bench import (
    ExperimentConfig,
    QaoaExperimentConfig,
    ResultRecord,
    default_workers,
    run_pipeline,
    run_qaoa_experiment,
    write_results,
)
from .circuit import compile_direct, compile_swap_network, export_qasm, gate_counts, verify_equivalence
from .clustering import evaluate_on_full, lloyd_2means, weighted_cost
from .coreset import DEFAULT_VARIANT, VARIANTS, WeightedPointSet, build_coreset, uniform_sample
from .dataio import SyntheticSpec, generate_synthetic, load_csv, read_json, validate_csv, write_csv, write_json
from .errors import CoresetQaoaError, InvalidArgumentError, OutputError
from .hamiltonian import IsingPolynomial, build_order0, build_order1, format_order, parse_order, polynomial_energy_table
from .qaoa import DEFAULT_RESTARTS, DEFAULT_SHOTS, QaoaParams, modal_partition, optimize, prepare, sample
from .solver import brute_force_table, qaoa_bound, solve_order
from .seeding import derive_seed

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbosity: int = 0, level: Optional[str] = None) -> None:
    """One stderr handler; WARNING by default, INFO with -v, DEBUG with -vv."""
    if level is None:
        level = {0: "WARNING", 1: "INFO"}.get(verbosity, "DEBUG")
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level.upper())


def emit(document: Any, out: Optional[str]) -> None:
    if out:
        write_json(document, out)
        logger.info("wrote %s", out)
    else:
        json.dump(document, sys.stdout, indent=2)
        sys.stdout.write("\n")


def _load_points(path: str) -> WeightedPointSet:
    return WeightedPointSet.from_dict(read_json(path))


def _load_polynomial(path: str) -> IsingPolynomial:
    return IsingPolynomial.from_dict(read_json(path))


def _load_params(path: str) -> QaoaParams:
    document = read_json(path)
    if isinstance(document, dict) and isinstance(document.get("params"), dict):
        document = document["params"]
    return QaoaParams.from_dict(document)


def cmd_data_gen(args) -> int:
    if args.config:
        spec = SyntheticSpec.from_dict(read_json(args.config))
    else:
        spec = SyntheticSpec(
            n_total=args.n, dim=args.dim, n_rare_clusters=args.n_rare,
            points_per_rare_cluster=args.per_rare, cluster_spread=args.spread,
            center_scale=args.scale, seed=args.seed,
        )
    data = generate_synthetic(spec)
    write_csv(data, args.out)
    logger.info("wrote %d points to %s", data.n, args.out)
    return 0


def cmd_data_validate(args) -> int:
    emit(validate_csv(args.path, has_header=args.header), None)
    return 0


def cmd_coreset_build(args) -> int:
    data = load_csv(args.data, has_header=args.header)
    if args.method == "uniform":
        pts = uniform_sample(data, args.m, args.seed)
    else:
        pts = build_coreset(data, args.m, args.variant, args.seed)
    emit(pts.to_dict(), args.out)
    return 0


def cmd_cluster_run(args) -> int:
    data = load_csv(args.data, has_header=args.header) if args.data else None
    if args.coreset:
        pts = _load_points(args.coreset)
    elif data is not None:
        pts = data
    else:
        raise InvalidArgumentError("cluster run needs --data or --coreset")
    result = lloyd_2means(pts, trials=args.trials, seed=args.seed)
    document = result.to_dict()
    if args.coreset and data is not None:
        document["full_cost"] = weighted_cost(data, result.model)
    emit(document, args.out)
    return 0


def cmd_ham_build(args) -> int:
    order = parse_order(args.order)
    pts = _load_points(args.coreset)
    if order == 0:
        h = build_order0(pts)
    elif order == 1:
        h = build_order1(pts)
    else:
        raise InvalidArgumentError(
            f"order {format_order(order)} is not quadratic; use 'solve --order' for higher orders"
        )
    emit(h.to_dict(), args.out)
    return 0


def cmd_solve(args) -> int:
    if args.ham:
        h = _load_polynomial(args.ham)
        result = brute_force_table(polynomial_energy_table(h), symmetric=False)
        emit(result.to_dict(), args.out)
        return 0
    if not args.coreset:
        raise InvalidArgumentError("solve needs --ham or --coreset")
    pts = _load_points(args.coreset)
    order = parse_order(args.order)
    solved = solve_order(pts, order, workers=args.workers)
    document = solved.to_dict()
    document["order"] = format_order(order)
    if args.data:
        data = load_csv(args.data, has_header=args.header)
        document["bound"] = qaoa_bound(data, pts, order, solved=solved).to_dict()
    emit(document, args.out)
    return 0


def cmd_qaoa_run(args) -> int:
    h = _load_polynomial(args.ham)
    table = polynomial_energy_table(h)
    result = optimize(table, p=args.p, restarts=args.restarts, seed=args.seed,
                      normalize=not args.raw_energies)
    state = prepare(table, result.params)
    histogram = sample(state, args.shots, derive_seed(args.seed, "shots"))
    modal = modal_partition(histogram)
    optimum = brute_force_table(table)
    document = result.to_dict()
    document.update({
        "histogram": histogram,
        "modal": str(modal),
        "modal_energy": float(table[modal.index]),
        "modal_in_argmax": modal.index in optimum.indices,
        "argmax_mass": state.mass_on(optimum.indices),
    })
    if args.coreset and args.data:
        pts = _load_points(args.coreset)
        data = load_csv(args.data, has_header=args.header)
        document["full_cost"] = evaluate_on_full(data, pts, modal)
    emit(document, args.out)
    return 0


def cmd_circuit_compile(args) -> int:
    h = _load_polynomial(args.ham)
    params = _load_params(args.params)
    circ = compile_direct(h, params) if args.direct else compile_swap_network(h, params)
    text = export_qasm(circ)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise OutputError(f"{args.out}: cannot write circuit: {exc.strerror}") from exc
    else:
        sys.stdout.write(text)
    counts = gate_counts(circ).to_dict()
    counts["final_bit_permutation"] = list(circ.final_bit_permutation)
    if args.verify:
        counts["max_amplitude_error"] = verify_equivalence(circ, h, params)
    if args.counts:
        write_json(counts, args.counts)
    return 0


def cmd_bench_run(args) -> int:
    cfg = ExperimentConfig.from_dict(read_json(args.config))
    raw: List[ResultRecord] = []
    try:
        records = run_pipeline(cfg, workers=args.workers, on_record=raw.append)
    except CoresetQaoaError:
        if raw:
            logger.warning("run failed; writing %d partial records to %s", len(raw), args.out)
            write_results(args.out, cfg, [], raw, partial=True)
        raise
    write_results(args.out, cfg, records, raw)
    logger.info("wrote %d records to %s", len(records), args.out)
    return 0


def cmd_bench_qaoa(args) -> int:
    cfg = QaoaExperimentConfig.from_dict(read_json(args.config))
    record = run_qaoa_experiment(cfg)
    document = {"version": __version__, "config": cfg.to_dict(), "record": record.to_dict()}
    emit(document, args.out)
    return 0


def _add_data_args(parser, required: bool = True) -> None:
    parser.add_argument("--data", required=required, help="CSV file, one point per row")
    parser.add_argument("--header", action="store_true", help="skip the first CSV row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coreset-qaoa",
        description="2-means clustering on coresets with exact and QAOA-style optimization",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    groups = parser.add_subparsers(dest="group", required=True)

    data = groups.add_parser("data", help="generate or check data sets").add_subparsers(
        dest="command", required=True
    )
    gen = data.add_parser("gen", help="write a synthetic rare-cluster data set")
    gen.add_argument("--config", help="JSON synthetic spec (overrides the flags below)")
    gen.add_argument("--n", type=int, default=SyntheticSpec.n_total)
    gen.add_argument("--dim", type=int, default=SyntheticSpec.dim)
    gen.add_argument("--n-rare", type=int, default=SyntheticSpec.n_rare_clusters)
    gen.add_argument("--per-rare", type=int, default=SyntheticSpec.points_per_rare_cluster)
    gen.add_argument("--spread", type=float, default=SyntheticSpec.cluster_spread)
    gen.add_argument("--scale", type=float, default=SyntheticSpec.center_scale)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_data_gen)
    validate = data.add_parser("validate", help="check a CSV data file")
    validate.add_argument("path")
    validate.add_argument("--header", action="store_true")
    validate.set_defaults(handler=cmd_data_validate)

    coreset = groups.add_parser("coreset", help="weighted summaries").add_subparsers(
        dest="command", required=True
    )
    build = coreset.add_parser("build", help="draw a coreset or uniform sample")
    _add_data_args(build)
    build.add_argument("--m", type=int, required=True)
    build.add_argument("--method", choices=["coreset", "uniform"], default="coreset")
    build.add_argument("--variant", choices=VARIANTS, default=DEFAULT_VARIANT)
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--out")
    build.set_defaults(handler=cmd_coreset_build)

    cluster = groups.add_parser("cluster", help="weighted 2-means").add_subparsers(
        dest="command", required=True
    )
    run = cluster.add_parser("run", help="run best-of-trials Lloyd")
    _add_data_args(run, required=False)
    run.add_argument("--coreset", help="cluster this weighted point set instead of the data")
    run.add_argument("--trials", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out")
    run.set_defaults(handler=cmd_cluster_run)

    ham = groups.add_parser("ham", help="Ising polynomials").add_subparsers(dest="command", required=True)
    ham_build = ham.add_parser("build", help="order-0 or order-1 polynomial of a coreset")
    ham_build.add_argument("--coreset", required=True)
    ham_build.add_argument("--order", default="0")
    ham_build.add_argument("--out")
    ham_build.set_defaults(handler=cmd_ham_build)

    solve = groups.add_parser("solve", help="brute-force maximization")
    solve.add_argument("--ham", help="polynomial JSON")
    solve.add_argument("--coreset", help="weighted point set JSON")
    solve.add_argument("--order", default="inf")
    _add_data_args(solve, required=False)
    solve.add_argument("--workers", type=int, default=1)
    solve.add_argument("--out")
    solve.set_defaults(handler=cmd_solve)

    qaoa = groups.add_parser("qaoa", help="statevector QAOA").add_subparsers(dest="command", required=True)
    qaoa_run = qaoa.add_parser("run", help="optimize and sample")
    qaoa_run.add_argument("--ham", required=True)
    qaoa_run.add_argument("--p", type=int, default=1)
    qaoa_run.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    qaoa_run.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    qaoa_run.add_argument("--seed", type=int, default=0)
    qaoa_run.add_argument("--raw-energies", action="store_true",
                          help="search the angles on the unscaled energies")
    qaoa_run.add_argument("--coreset", help="score the modal bitstring on --data through this coreset")
    _add_data_args(qaoa_run, required=False)
    qaoa_run.add_argument("--out")
    qaoa_run.set_defaults(handler=cmd_qaoa_run)

    circuit = groups.add_parser("circuit", help="gate-level circuits").add_subparsers(
        dest="command", required=True
    )
    compile_cmd = circuit.add_parser("compile", help="compile to OpenQASM 2.0")
    compile_cmd.add_argument("--ham", required=True)
    compile_cmd.add_argument("--params", required=True, help="QAOA parameters or a 'qaoa run' result")
    compile_cmd.add_argument("--direct", action="store_true", help="all-to-all compilation without SWAPs")
    compile_cmd.add_argument("--verify", action="store_true", help="report the simulated amplitude error")
    compile_cmd.add_argument("--out")
    compile_cmd.add_argument("--counts", help="write gate counts JSON here")
    compile_cmd.set_defaults(handler=cmd_circuit_compile)

    bench = groups.add_parser("bench", help="experiments").add_subparsers(dest="command", required=True)
    bench_run = bench.add_parser("run", help="run the clustering grid")
    bench_run.add_argument("--config", required=True)
    bench_run.add_argument("--out", required=True, help="output directory")
    bench_run.add_argument("--workers", type=int, default=None)
    bench_run.set_defaults(handler=cmd_bench_run)
    bench_qaoa = bench.add_parser("qaoa", help="run QAOA on the best coreset")
    bench_qaoa.add_argument("--config", required=True)
    bench_qaoa.add_argument("--out")
    bench_qaoa.set_defaults(handler=cmd_bench_qaoa)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.log_level)
    try:
        if getattr(args, "workers", None) is None and args.group == "bench":
            args.workers = default_workers()
        return args.handler(args)
    except CoresetQaoaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
