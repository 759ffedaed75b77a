#!/usr/bin/env python3
"""
QBC4 Simulator - Main Entry Point
=================================

Usage:
    python -m qbc4sim run --n 3 --bit 1 --ensemble mub2 --seed 7
    python -m qbc4sim conceal --seed 1 --purify
    python -m qbc4sim bind --ensemble mub2 --seed 3 --n-rounds 4
    python -m qbc4sim babe-attack --n 10 --fraction 0.5 --seed 5

Exit codes:
    0   claims hold
    1   claims violated
    2   numerical flag (non-convergence, oracle disagreement, ...)
    64  usage or configuration error
    65  malformed ensemble or attack file
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import ValidationError

from qbc4sim.core.errors import AttackSpecError, ConfigError, EnsembleError, QBCError
from qbc4sim.core.reports import (
    AttackReport,
    Command,
    OutputFormat,
    ReportBase,
    RunConfig,
    report_frame,
    write_csv,
    write_json,
)
from qbc4sim.core.syslogger import syslog
from qbc4sim.version import VERSION

logger = logging.getLogger("qbc4sim.main")

EXIT_OK = 0
EXIT_CLAIMS_VIOLATED = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64
EXIT_DATA = 65


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with EXIT_USAGE on bad arguments"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _delta_list(raw: str) -> List[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {raw!r}")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments"""
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, required=True,
                        help="RNG seed (required; never taken from the environment)")
    common.add_argument("--ensemble", default="mub2",
                        help="Preset (computational, hadamard, mub2, mub3, haar-M) or JSON file")
    common.add_argument("--output", "-o", help="Write the report to this path")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default="json",
                        help="Report format")
    common.add_argument("--debug", action="store_true", help="Debug logging on the console")

    parser = _Parser(
        prog="qbc4sim",
        description="QBC4 bit-commitment simulator: protocol runs, concealing and binding analysis",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Execute the honest N-instance protocol")
    run.add_argument("--n", type=int, default=1, help="Number of instances")
    run.add_argument("--bit", type=int, choices=[0, 1], default=0, help="Committed bit")
    run.add_argument("--mode", choices=["quantum", "classical"], default="quantum",
                     help="Ancilla in superposition, or classically chosen Pauli labels")

    conceal = sub.add_parser("conceal", parents=[common], help="Concealing sweep")
    conceal.add_argument("--samples", type=int, default=100, help="Haar-random basis pairs")
    conceal.add_argument("--purify", action="store_true", help="Include the purified (B, C) comparison")
    conceal.add_argument("--corrupt-transform", action="store_true",
                         help="Debug: omit the controlled Pauli in the commit")
    conceal.add_argument("--mode", choices=["quantum", "classical"], default="quantum",
                         help="Average over classically chosen Pauli labels instead of the quantum ancilla")

    bind = sub.add_parser("bind", parents=[common], help="Optimal cheating probability for Adam")
    bind.add_argument("--restarts", type=int, default=None, help="Seesaw restarts")
    bind.add_argument("--max-iter", type=int, default=None, help="Seesaw iteration cap")
    bind.add_argument("--tol", type=float, default=None, help="Seesaw convergence tolerance")
    bind.add_argument("--oracle-budget", type=int, default=None, help="Oracle iterations per start")
    bind.add_argument("--oracle-starts", type=int, default=None, help="Oracle starting points")
    bind.add_argument("--n-rounds", type=int, default=1, help="N for the p_A^N bound")
    bind.add_argument("--joint-check", action="store_true",
                      help="Run the joint seesaw over N instances (N >= 2)")
    bind.add_argument("--delta-grid", type=_delta_list, default=None,
                      help="Comma-separated delta values for the relaxed-opening curve")
    bind.add_argument("--ancilla-factor", type=int, choices=[1, 2, 4], default=None,
                      help="Ancilla size factor in the relaxed-opening model")
    bind.add_argument("--with-history", action="store_true", help="Include the objective history")

    attack = sub.add_parser("babe-attack", parents=[common], help="Dishonest Babe and cut-and-choose")
    attack.add_argument("--n", type=int, default=10, help="Number of instances")
    attack.add_argument("--fraction", type=float, default=0.5, help="Fraction of instances Adam checks")
    attack.add_argument("--honest", action="store_true", help="Babe follows the protocol")
    attack.add_argument("--attack-file", help="JSON attack description")
    attack.add_argument("--attacked", type=int, default=None,
                        help="Number of attacked instances (default: all)")
    attack.add_argument("--trials", type=int, default=0, help="Monte Carlo trials for the abort rate")

    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from parsed arguments; unset options keep the configured defaults."""
    from qbc4sim.core.settings import get_settings

    opt = get_settings().optimizer
    values = {k: v for k, v in vars(args).items() if v is not None and k in RunConfig.model_fields}
    values.setdefault("restarts", opt.restarts)
    values.setdefault("max_iter", opt.max_iter)
    values.setdefault("tol", opt.tol)
    values.setdefault("oracle_budget", opt.oracle_budget)
    values.setdefault("oracle_starts", opt.oracle_starts)
    values.setdefault("ancilla_factor", opt.ancilla_factor)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


# =============================================================================
# Commands
# =============================================================================

def cmd_run(config: RunConfig) -> Tuple[ReportBase, int]:
    from qbc4sim.core.ensembles import resolve_ensemble
    from qbc4sim.core.protocol import CommitMode, run_protocol

    ensemble = resolve_ensemble(config.ensemble, config.seed)
    transcript = run_protocol(config.n, ensemble, config.bit, config.seed, CommitMode(config.mode))

    for o in transcript.outcomes:
        print(f"instance {o.instance}: draw {tuple(o.draw)}  "
              f"p_accept={o.acceptance_probability:.12f}  {'ACCEPT' if o.accepted else 'REJECT'}")
    verdict = "ACCEPTED" if transcript.accepted else "REJECTED"
    print(f"verdict: {verdict} ({sum(o.accepted for o in transcript.outcomes)}/{config.n})")
    return transcript, EXIT_OK if transcript.accepted else EXIT_CLAIMS_VIOLATED


def cmd_conceal(config: RunConfig) -> Tuple[ReportBase, int]:
    from qbc4sim.core.concealing import concealing_sweep
    from qbc4sim.core.ensembles import resolve_ensemble
    from qbc4sim.core.protocol import CommitMode

    ensemble = resolve_ensemble(config.ensemble, config.seed)
    report = concealing_sweep([ensemble], config.seed, samples=config.samples,
                              purify=config.purify, corrupt=config.corrupt_transform,
                              mode=CommitMode(config.mode))

    print(f"{'ensemble':<20} {'D(rho0,rho1)':>14} {'D(rho,I/16)':>14} {'D_BC':>12} {'residual':>12}")
    for row in report.ensembles[:10]:
        bc = "-" if row.purified_distance is None else f"{row.purified_distance:.3e}"
        res = "-" if row.product_residual is None else f"{row.product_residual:.3e}"
        print(f"{row.name:<20} {row.distance_b:>14.3e} {row.distance_to_mixed:>14.3e} {bc:>12} {res:>12}")
    if len(report.ensembles) > 10:
        print(f"... {len(report.ensembles) - 10} more")
    print(f"max D(rho0,rho1) = {report.max_distance_b:.3e}")
    if report.purified:
        print(f"max D_BC = {report.max_purified_distance:.3e}, max residual = {report.max_product_residual:.3e}")
    print(f"concealing claims {'hold' if report.claims_hold else 'VIOLATED'}")
    return report, EXIT_OK if report.claims_hold else EXIT_CLAIMS_VIOLATED


def cmd_bind(config: RunConfig) -> Tuple[ReportBase, int]:
    from qbc4sim.core.binding import analyze_binding
    from qbc4sim.core.ensembles import resolve_ensemble

    ensemble = resolve_ensemble(config.ensemble, config.seed)
    report = analyze_binding(
        ensemble,
        config.seed,
        restarts=config.restarts,
        tol=config.tol,
        max_iter=config.max_iter,
        oracle_budget=config.oracle_budget,
        oracle_starts=config.oracle_starts,
        n_rounds=config.n_rounds,
        joint_check=config.joint_check,
        deltas=config.delta_grid,
        ancilla_factor=config.ancilla_factor,
        record_history=config.with_history,
    )

    print(f"ensemble {ensemble.name}: p_A = {report.p_A:.12f}")
    if report.oracle_value is not None:
        print(f"oracle = {report.oracle_value:.12f}  gap = {report.oracle_gap:.3e}")
    print(f"best baseline = {report.baseline:.12f}")
    print(f"p_A^{report.n_rounds} = {report.n_round_bound:.12g}")
    if report.joint_value is not None:
        print(f"joint optimum over {max(report.n_rounds, 2)} instances = {report.joint_value:.12f}")
    print(f"classical-choice cheat = {report.classical_choice:.12f}")
    for point in report.tradeoff or []:
        print(f"  delta={point.delta:.3f}  b0>={point.b0_success:.6f}  b1={point.b1_success:.6f}")
    for name, ok in report.claims.items():
        print(f"claim {name}: {'holds' if ok else 'VIOLATED'}")
    if report.flags:
        print(f"flags: {', '.join(report.flags)}")

    if report.flags:
        return report, EXIT_NUMERICAL
    return report, EXIT_OK if all(report.claims.values()) else EXIT_CLAIMS_VIOLATED


def cmd_babe_attack(config: RunConfig) -> Tuple[ReportBase, int]:
    from qbc4sim.core.adversary import (
        abort_probability,
        bit_distinguishability,
        cut_and_choose,
        honest_attack,
        load_attack,
        orthogonal_product_attack,
        simulate_abort_rate,
    )
    from qbc4sim.core.quantum import spawn_seeds

    honest = honest_attack()
    if config.honest:
        attack = None
    elif config.attack_file:
        attack = load_attack(config.attack_file)
    else:
        attack = orthogonal_product_attack()

    attacked = 0 if attack is None else (config.n if config.attacked is None else config.attacked)
    check_seed, mc_seed = spawn_seeds(config.seed, 2)
    honest_value = bit_distinguishability(honest)
    value = honest_value if attack is None else bit_distinguishability(attack)
    result = cut_and_choose(config.n, config.fraction, attack, check_seed, attacked)
    p_abort = abort_probability(config.n, config.fraction, attacked)

    claims = {"honest_concealing": abs(honest_value - 0.5) <= 1e-12}
    rate = None
    if config.trials and attack is not None:
        rate = simulate_abort_rate(config.n, config.fraction, attack, attacked, config.trials, mc_seed)
        stderr = (p_abort * (1 - p_abort) / config.trials) ** 0.5
        claims["monte_carlo_matches_formula"] = abs(rate - p_abort) <= max(3 * stderr, 1e-12)

    report = AttackReport(
        attack="honest" if attack is None else attack.description,
        entangled_with_reference=(attack or honest).entangled,
        distinguishability=value,
        honest_distinguishability=honest_value,
        cut_and_choose=result,
        attacked_instances=attacked,
        abort_probability=p_abort,
        monte_carlo_abort_rate=rate,
        monte_carlo_trials=config.trials if rate is not None else 0,
        seed=config.seed,
        claims=claims,
    )

    print(f"attack: {report.attack}")
    print(f"bit distinguishability = {value:.12f} (honest {honest_value:.12f})")
    print(f"checked {result.checked} -> {'ABORT' if result.aborted else 'proceed'}"
          f" with {len(result.surviving)} instance(s)")
    print(f"abort probability = {p_abort:.6f}")
    if rate is not None:
        print(f"Monte Carlo abort rate over {config.trials} trials = {rate:.6f}")
    return report, EXIT_OK if all(claims.values()) else EXIT_CLAIMS_VIOLATED


COMMANDS = {
    Command.RUN: cmd_run,
    Command.CONCEAL: cmd_conceal,
    Command.BIND: cmd_bind,
    Command.BABE_ATTACK: cmd_babe_attack,
}


def write_report(report: ReportBase, config: RunConfig):
    path = Path(config.output)
    if config.format is OutputFormat.CSV:
        write_csv(report_frame(report), path)
    else:
        write_json(report.stamped(config), path)
    logger.info(f"Report written to {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = parse_args(argv)
    syslog.set_console_level("DEBUG" if args.debug else "INFO")

    try:
        config = build_config(args)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    logger.info(f"qbc4sim {VERSION}: {config.command.value} (seed {config.seed})")
    try:
        report, code = COMMANDS[config.command](config)
        if config.output:
            write_report(report, config)
    except (EnsembleError, AttackSpecError) as e:
        logger.error(str(e))
        return EXIT_DATA
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except QBCError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=args.debug)
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
