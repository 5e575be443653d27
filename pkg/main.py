"""
Rateless Toolkit - Command Line Entry Point
Capacity tables, graph construction, end-to-end round trips, EXIT curves,
thresholds, degree optimization and Monte Carlo sweeps.
"""

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from config import Config
from logger import RatelessLogger, get_logger

logger = get_logger(__name__)


def _open_out(path):
    """Writable text stream for --out (stdout when unset or '-')."""
    if not path or path == "-":
        return sys.stdout
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def _close_out(stream):
    if stream is not sys.stdout:
        stream.close()


def _code_spec(args):
    from construct import CodeSpec
    from degdist import parse_distribution

    if getattr(args, "spec", None):
        spec = CodeSpec.load(args.spec)
        return spec.replace(seed=args.seed) if args.seed is not None else spec
    return CodeSpec(
        K=args.K,
        delta=args.delta,
        omega=parse_distribution(args.omega),
        seed=Config.DEFAULT_SEED if args.seed is None else args.seed,
        d_max=args.d_max,
        L_total=args.L_total or 0,
    )


def cmd_capacity(args):
    from channel import capacity, ebn0_db, shannon_table, sigma_for_rate

    if args.table:
        rows = shannon_table()
    elif args.rate is not None:
        sigma = sigma_for_rate(args.rate)
        rows = [(args.rate, sigma, ebn0_db(args.rate, sigma))]
    else:
        rate = capacity(args.sigma)
        rows = [(rate, args.sigma, ebn0_db(rate, args.sigma))]

    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["rate", "sigma", "ebn0_db"])
    for rate, sigma, db in rows:
        writer.writerow([f"{rate:.6f}", f"{sigma:.6f}", f"{db:.4f}"])
    _close_out(out)
    return 0


def cmd_construct(args):
    from construct import build_graph, check_structure, degree_histogram
    from gf2 import dump_matrix, rank

    spec = _code_spec(args)
    graph = build_graph(spec)
    problems = check_structure(graph)
    head_rank = rank(graph.truncate(spec.K).H.take_cols(range(spec.K))) if graph.L >= spec.K else None

    logger.info(f"Graph K={graph.K} L={graph.L}: variable degrees {degree_histogram(graph)}")
    logger.info(f"Check degrees {degree_histogram(graph, 'check')}; message rank of first K checks: {head_rank}")
    for problem in problems:
        logger.warning(f"Structure: {problem}")

    if args.dump_matrix:
        dump_matrix(graph.H, args.dump_matrix, header=(graph.K, graph.L))

    out = _open_out(args.out)
    out.write(json.dumps(spec.to_dict(), indent=2) + "\n")
    _close_out(out)
    return 0 if not problems else 1


def cmd_roundtrip(args):
    from channel import ChannelParams, channel_llr, modulate, symbols_for_overhead, transmit
    from codec import (ReceptionState, bp_decode, encode_all, encoded_in_prefix, read_symbol_stream,
                       receive_many, schedule, write_symbol_stream)
    from construct import build_graph, make_rng

    spec = _code_spec(args)
    M = args.M or symbols_for_overhead(spec.K, args.sigma, args.overhead)
    needed = encoded_in_prefix(spec.K, spec.boundary, M)
    if needed > spec.L_total:
        spec = spec.replace(L_total=needed)
    graph = build_graph(spec)
    plan = schedule(spec)
    params = ChannelParams(args.sigma)

    message = make_rng(spec.seed, 2).integers(0, 2, spec.K, dtype=np.uint8)
    if args.stream_in:
        records = read_symbol_stream(args.stream_in)
    else:
        word = np.concatenate([message, encode_all(graph, message)])
        indices = plan.first(M)
        y = transmit(modulate(word[indices]), params, make_rng(spec.seed, 1))
        records = [(int(v), plan.subcode_of(int(v)), float(s)) for v, s in zip(indices, y)]
        if args.stream_out:
            write_symbol_stream(args.stream_out, records)

    indices = [r[0] for r in records]
    llr = channel_llr([r[2] for r in records], params)
    state = receive_many(ReceptionState(spec.K, graph.L), indices, llr)
    result = bp_decode(graph, state, args.max_iters)
    errors = int(np.count_nonzero(result.bits != message))

    logger.info(f"Round trip M={len(records)} rho0={state.rho0:.3f}: {errors} bit errors, "
                f"converged={result.converged} after {result.iterations} iterations")
    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["M", "bit_errors", "converged", "iterations"])
    writer.writerow([len(records), errors, int(result.converged), result.iterations])
    _close_out(out)
    return 0


def cmd_exit(args):
    from degdist import parse_distribution, variable_dist_for
    from exitchart import cnd_inverted_curve, default_grid, tunnel_gap, vnd_curve

    omega = parse_distribution(args.omega)
    L = args.L or math.floor(args.K * (1 + args.delta) + 1e-9)
    lam = variable_dist_for(omega, args.K, L, model=args.model, seed=args.seed)
    grid = default_grid()
    vnd = vnd_curve(lam, 2.0 / args.sigma, args.rho0, grid)
    cnd = cnd_inverted_curve(omega, grid)
    is_open, gap = tunnel_gap(vnd, cnd)
    logger.info(f"Tunnel {'open' if is_open else 'closed'}, min gap {gap:.5f}")

    out = _open_out(args.out)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["I_in", "vnd", "cnd_inverted"])
    for i, v, c in zip(grid, vnd.values, cnd.values):
        writer.writerow([f"{i:.6f}", f"{v:.8f}", f"{c:.8f}"])
    _close_out(out)
    return 0


def cmd_threshold(args):
    from degdist import parse_distribution
    from exitchart import threshold

    sigma_th = threshold(parse_distribution(args.omega), args.rate, args.delta, K=args.K, model=args.model,
                         seed=args.seed)
    out = _open_out(args.out)
    out.write(f"{sigma_th:.4f}\n")
    _close_out(out)
    return 0


def cmd_optimize(args):
    from optimizer import OptProblem, optimize

    problem = OptProblem.load(args.config)
    result = optimize(problem)
    out = _open_out(args.out)
    out.write(json.dumps(result.to_dict(), indent=2) + "\n")
    _close_out(out)
    return 0


def _experiment(args):
    from harness import ExperimentConfig

    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.trials:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    return cfg


def cmd_sweep(args):
    from harness import SWEEP_COLUMNS, sweep, write_results

    rows = sweep(_experiment(args), threads=args.threads)
    if args.out == "-":
        write_results(rows, columns=SWEEP_COLUMNS, stream=sys.stdout)
    else:
        write_results(rows, args.out or Path(Config.RESULTS_DIR) / "sweep.csv", SWEEP_COLUMNS)
    return 0


def cmd_waterfall(args):
    from harness import WATERFALL_COLUMNS, waterfall, write_results

    rows = waterfall(_experiment(args), args.rate, args.sigmas, threads=args.threads)
    if args.out == "-":
        write_results(rows, columns=WATERFALL_COLUMNS, stream=sys.stdout)
    else:
        write_results(rows, args.out or Path(Config.RESULTS_DIR) / "waterfall.csv", WATERFALL_COLUMNS)
    return 0


def _add_spec_args(p):
    p.add_argument("--spec", help="CodeSpec JSON (overrides the options below)")
    p.add_argument("--K", type=int, default=500, help="Message length")
    p.add_argument("--delta", type=float, default=Config.DEFAULT_DELTA, help="Sub-code B sizing")
    p.add_argument("--omega", default=Config.DEFAULT_OMEGA, help="Check degree polynomial")
    p.add_argument("--d-max", dest="d_max", type=int, default=Config.DEFAULT_D_MAX)
    p.add_argument("--L-total", dest="L_total", type=int, default=0, help="Encoded symbols to build")


def build_parser():
    parser = argparse.ArgumentParser(prog="rateless", description="Rateless code toolkit")
    parser.add_argument("--seed", type=int, default=None, help="Master seed")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default: physical cores)")
    parser.add_argument("--out", default=None, help="Output path ('-' for stdout)")
    parser.add_argument("--debug", action="store_true", help="Verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="Shannon limits")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--rate", type=float)
    group.add_argument("--sigma", type=float)
    group.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("construct", help="Build a graph and write its CodeSpec")
    _add_spec_args(p)
    p.add_argument("--dump-matrix", dest="dump_matrix", help="Write the parity-check matrix dump")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("roundtrip", help="Encode, transmit and decode one message")
    _add_spec_args(p)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--overhead", type=float, default=0.1)
    p.add_argument("--M", type=int, default=0, help="Received symbols (overrides --overhead)")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=Config.BP_MAX_ITERS)
    p.add_argument("--stream-out", dest="stream_out", help="Write the received symbol stream CSV")
    p.add_argument("--stream-in", dest="stream_in", help="Decode a symbol stream CSV instead")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("exit", help="EXIT curves as CSV")
    p.add_argument("--omega", default=Config.DEFAULT_OMEGA)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--rho0", type=float, default=0.0)
    p.add_argument("--K", type=int, default=Config.DESIGN_K)
    p.add_argument("--delta", type=float, default=Config.DEFAULT_DELTA)
    p.add_argument("--L", type=int, default=0, help="Encoded symbols behind lambda")
    p.add_argument("--model", choices=["empirical", "regular"], default=None)
    p.set_defaults(func=cmd_exit)

    p = sub.add_parser("threshold", help="EXIT threshold at a code rate")
    p.add_argument("--omega", default=Config.DEFAULT_OMEGA)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--delta", type=float, default=Config.DEFAULT_DELTA)
    p.add_argument("--K", type=int, default=Config.DESIGN_K)
    p.add_argument("--model", choices=["empirical", "regular"], default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("optimize", help="Search a robust check degree distribution")
    p.add_argument("--config", required=True, help="Problem JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="BER vs overhead")
    p.add_argument("--config", required=True, help="Experiment JSON")
    p.add_argument("--trials", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("waterfall", help="BER vs noise level at a fixed rate")
    p.add_argument("--config", required=True, help="Experiment JSON")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--sigmas", type=float, nargs="+", required=True)
    p.add_argument("--trials", type=int, default=0)
    p.set_defaults(func=cmd_waterfall)

    return parser


def main(argv=None):
    from errors import RatelessError

    args = build_parser().parse_args(argv)
    if args.debug:
        Config.DEBUG_MODE = True
        RatelessLogger.initialize(log_level="DEBUG", log_to_file=Config.LOG_TO_FILE, debug_mode=True, force=True)

    config_errors = Config.validate_config()
    if config_errors:
        for error in config_errors:
            logger.error(f"Config: {error}")
        return 2

    if Config.LOG_TO_FILE:
        RatelessLogger.cleanup_old_logs(Config.LOG_RETENTION_DAYS)

    try:
        return args.func(args)
    except RatelessError as e:
        RatelessLogger.log_exception(logger, f"{args.command} failed: {e}", exc_info=Config.DEBUG_MODE)
        return e.exit_code
    except ValueError as e:
        RatelessLogger.log_exception(logger, f"{args.command}: invalid input: {e}", exc_info=args.debug)
        return 2
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
