"""Main CLI entry point for the TransNN toolkit"""

import argparse
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import (
    binary_dynamics,
    boolean_compiler,
    certificates,
    error_handler,
    limit_model,
    markov_oracle,
    mean_field,
    network_model,
    reporter,
)
from .error_handler import DomainError, TransNNError

COMMANDS = ('simulate', 'oracle', 'meanfield', 'limit', 'certify', 'compile', 'compare')

OUT_DIR_ENV = 'TRANSNN_OUT_DIR'
DEFAULT_OUT_DIR = 'results'
DEFAULT_COUNTS = (16, 32, 64)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _parse_clamp(text: str) -> Dict[int, int]:
    """'1=1,3=0' -> {0: 1, 2: 0} (1-based node labels on the command line)"""
    clamp = {}
    for item in filter(None, text.split(',')):
        try:
            node, bit = item.split('=')
            node, bit = int(node), int(bit)
        except ValueError:
            raise argparse.ArgumentTypeError(f"clamp entries must look like NODE=BIT, got '{item}'")
        if node < 1 or bit not in (0, 1):
            raise argparse.ArgumentTypeError(f"invalid clamp entry '{item}'")
        clamp[node - 1] = bit
    return clamp


def _parse_counts(text: str) -> List[int]:
    try:
        counts = [int(v) for v in text.split(',') if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"counts must be comma-separated integers, got '{text}'")
    if not counts or min(counts) < 1:
        raise argparse.ArgumentTypeError("counts must be positive")
    return counts


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser"""
    parser = argparse.ArgumentParser(
        prog='transnn',
        description='Simulate, analyze and certify transmission neural networks',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
  %(prog)s simulate --spec net.json --trials 10000 --seed 1
  %(prog)s oracle --spec net.json --horizon 5
  %(prog)s meanfield --spec net.json --mode info --format json
  %(prog)s certify --spec loop.json --norm inf
  %(prog)s compile --table 0111 --out or/
  %(prog)s compare --spec net.json --seed 7 --counts 16,32,64

The default output directory is $TRANSNN_OUT_DIR, or ./results when unset.
        '''
    )
    parser.add_argument('command', choices=COMMANDS, help='Command to run')
    parser.add_argument('--spec', metavar='FILE', help='Network specification document (JSON)')
    parser.add_argument('--seed', type=int, default=0, help='Master seed for sampling (default: 0)')
    parser.add_argument('--trials', type=int, default=1000, help='Monte Carlo trials (default: 1000)')
    parser.add_argument('--horizon', type=int, default=None, help='Number of steps (default: from spec)')
    parser.add_argument('--norm', choices=('1', 'inf'), default='inf',
                        help='Induced norm for the contraction certificate (default: inf)')
    parser.add_argument('--population', action='store_true',
                        help='Use the neurotransmitter population model')
    parser.add_argument('--mode', choices=('prob', 'info'), default='prob',
                        help='Trajectory representation for meanfield/limit (default: prob)')
    parser.add_argument('--out', metavar='DIR', default=None, help='Output directory')
    parser.add_argument('--format', choices=reporter.TABLE_FORMATS, default='csv',
                        help='Table file format (default: csv)')
    parser.add_argument('--tol', type=float, default=certificates.BOUND_SLACK,
                        help=f'Upper-bound violation slack (default: {certificates.BOUND_SLACK})')
    parser.add_argument('--power-tol', type=float, default=certificates.POWER_TOL,
                        help=f'Spectral radius bracket width (default: {certificates.POWER_TOL})')
    parser.add_argument('--workers', type=int, default=1, help='Monte Carlo worker threads (default: 1)')
    parser.add_argument('--table', metavar='BITS', help='Truth table output column for compile, e.g. 0111')
    parser.add_argument('--counts', type=_parse_counts, default=list(DEFAULT_COUNTS),
                        help='Neurotransmitter counts for compare (default: 16,32,64)')
    parser.add_argument('--clamp', type=_parse_clamp, default=None, metavar='NODE=BIT,...',
                        help='Hold nodes at fixed values during simulate')
    parser.add_argument('--version', action='version', version='%(prog)s 1.0.0')
    return parser


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse and validate command line arguments"""
    return build_parser().parse_args(argv)


def resolve_out_dir(out: Optional[str]) -> Path:
    """--out, then $TRANSNN_OUT_DIR, then ./results"""
    return Path(out or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def _horizon(args: argparse.Namespace, spec: network_model.NetworkSpec) -> int:
    return spec.horizon if args.horizon is None else args.horizon


def simulate_phase(args: argparse.Namespace, spec: network_model.NetworkSpec) -> reporter.RunResult:
    """Monte Carlo marginals and their standard errors"""
    reporter.print_info(f"Sampling {args.trials} trials on {args.workers} worker(s)")
    estimate = binary_dynamics.monte_carlo_marginals(
        spec, _horizon(args, spec), trials=args.trials, seed=args.seed,
        population=args.population, workers=args.workers, clamp=args.clamp)
    result = reporter.RunResult('simulate', network_model.spec_digest(spec), seed=args.seed)
    result.add_table('marginals', estimate.p_hat)
    result.add_table('stderr', estimate.stderr)
    result.metadata.update({'trials': args.trials, 'population': args.population})
    if args.clamp:
        result.metadata['clamp'] = {str(node + 1): bit for node, bit in sorted(args.clamp.items())}
    return result


def oracle_phase(args: argparse.Namespace, spec: network_model.NetworkSpec) -> reporter.RunResult:
    exact = markov_oracle.exact_marginals(spec, _horizon(args, spec), args.population)
    result = reporter.RunResult('oracle', network_model.spec_digest(spec))
    result.add_table('exact_marginals', exact)
    result.metadata['population'] = args.population
    return result


def meanfield_phase(args: argparse.Namespace, spec: network_model.NetworkSpec) -> reporter.RunResult:
    result = reporter.RunResult('meanfield', network_model.spec_digest(spec))
    horizon = _horizon(args, spec)
    if args.mode == 'info':
        states = mean_field.info_trajectory(spec, horizon, args.population)
        result.add_table('s', np.vstack([state.s for state in states]))
        result.add_table('o', np.vstack([state.o for state in states]))
        result.add_table('meanfield', mean_field.recovered_probabilities(states))
    else:
        result.add_table('meanfield', mean_field.prob_trajectory(spec, horizon, args.population))
    result.metadata.update({'mode': args.mode, 'population': args.population})
    return result


def limit_phase(args: argparse.Namespace, spec: network_model.NetworkSpec) -> reporter.RunResult:
    result = reporter.RunResult('limit', network_model.spec_digest(spec))
    horizon = _horizon(args, spec)
    if args.mode == 'info':
        states = limit_model.limit_info_trajectory(spec, horizon)
        result.add_table('s_bar', np.vstack([state.s_bar for state in states]))
        result.add_table('o_bar', np.vstack([state.o_bar for state in states]))
        result.add_table('limit', np.vstack([limit_model.phi(state) for state in states]))
    else:
        result.add_table('limit', limit_model.limit_prob_trajectory(spec, horizon))
    result.metadata['mode'] = args.mode
    return result


def certify_phase(args: argparse.Namespace, spec: network_model.NetworkSpec) -> reporter.RunResult:
    """
    Contraction, stability and upper-bound certificates

    Certificates whose preconditions fail are skipped with a logged warning.
    """
    result = reporter.RunResult('certify', network_model.spec_digest(spec))
    horizon = _horizon(args, spec)
    tracker = error_handler.error_tracker

    result.reports.append(certificates.contraction_certificate(spec, args.norm))
    try:
        result.reports.append(certificates.stability_certificate(spec, tol=args.power_tol))
    except TransNNError as e:
        tracker.log_error('certify', e)
        reporter.print_warning(f"stability certificate skipped: {e}")

    for mode in ('info', 'limit'):
        try:
            report = certificates.upper_bound_certificate(
                spec, horizon=horizon, mode=mode, population=args.population, tol=args.tol)
        except TransNNError as e:
            tracker.log_error('certify', e)
            reporter.print_warning(f"upper-bound-{mode} certificate skipped: {e}")
            continue
        result.reports.append(report)
        bound = certificates.upper_bound_info(
            spec, mean_field.initial_info_state(spec.initial_p).s, horizon, mode, args.population)
        result.add_table(f"bound_s_{mode}", bound.s_bound)
        result.add_table(f"bound_o_{mode}", bound.o_bound)

    for report in result.reports:
        reporter.print_certificate(report)
    return result


def compile_phase(args: argparse.Namespace, out_dir: Path) -> reporter.RunResult:
    """Compile a truth table and write the network plus its metadata"""
    logic = boolean_compiler.compile(boolean_compiler.parse_truth_table(args.table))
    result = reporter.RunResult('compile', network_model.spec_digest(logic.spec))
    reporter.print_info(f"Compiled {logic.arity}-input function with latency {logic.latency}")
    m = logic.arity
    rows = []
    for r, bit in enumerate(boolean_compiler.truth_table(logic)):
        rows.append([int(ch) for ch in f'{r:0{m}b}'] + [bit])
    result.add_table('truth_table', np.array(rows), [f"input_{i + 1}" for i in range(m)] + ['output'],
                     index_name='row')
    result.metadata.update(logic.metadata())
    network_model.write_spec(logic.spec, out_dir / "network.json")
    reporter.write_json(logic.metadata(), out_dir / "logic.json")
    return result


def compare_phase(args: argparse.Namespace, spec: network_model.NetworkSpec) -> reporter.RunResult:
    """Per-step max gaps: Monte Carlo vs oracle vs mean-field vs limit"""
    horizon = _horizon(args, spec)
    result = reporter.RunResult('compare', network_model.spec_digest(spec), seed=args.seed)
    exact = markov_oracle.exact_marginals(spec, horizon, args.population)
    estimate = binary_dynamics.monte_carlo_marginals(
        spec, horizon, trials=args.trials, seed=args.seed,
        population=args.population, workers=args.workers)
    result.add_table('mc_vs_oracle', np.max(np.abs(estimate.p_hat - exact), axis=1)[:, None], ['max_gap'])

    approx = mean_field.prob_trajectory(spec, horizon, args.population)
    result.add_table('oracle_vs_meanfield', np.max(np.abs(approx - exact), axis=1)[:, None], ['max_gap'])

    columns, gaps = [], []
    for count in args.counts:
        try:
            gap = limit_model.population_limit_gap(spec, [count], horizon)[count]
        except DomainError as e:
            error_handler.error_tracker.log_error('compare', e)
            reporter.print_warning(f"count {count} skipped: {e}")
            continue
        columns.append(f"a_{count}")
        gaps.append(gap)
    if gaps:
        result.add_table('meanfield_vs_limit', np.column_stack(gaps), columns)
    result.metadata.update({'trials': args.trials, 'population': args.population,
                            'counts': list(args.counts)})
    return result


PHASES = {
    'simulate': simulate_phase,
    'oracle': oracle_phase,
    'meanfield': meanfield_phase,
    'limit': limit_phase,
    'certify': certify_phase,
    'compare': compare_phase,
}


def load_checked_spec(path: str) -> Optional[network_model.NetworkSpec]:
    """
    Read and validate a spec; violations are logged and None is returned

    Raises:
        SpecFormatError: If the document is malformed
        FileNotFoundError: If the file does not exist
    """
    spec = network_model.read_spec(path)
    violations = network_model.validate(spec)
    if violations:
        for violation in violations:
            error_handler.error_tracker.log_violation('validate', violation)
        reporter.print_violations(violations)
        return None
    return spec


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command

    Args:
        argv: Command line arguments (sys.argv[1:] by default)

    Returns:
        Exit status: 0 on success, 1 on validation or computation failure, 2 on usage errors
    """
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    tracker = error_handler.error_tracker
    tracker.reset()

    if args.command == 'compile':
        if not args.table:
            reporter.print_error("compile requires --table")
            return EXIT_USAGE
    elif not args.spec:
        reporter.print_error(f"{args.command} requires --spec")
        return EXIT_USAGE
    if args.trials < 1 or args.workers < 1 or (args.horizon is not None and args.horizon < 0):
        reporter.print_error("--trials and --workers must be positive and --horizon nonnegative")
        return EXIT_USAGE

    out_dir = resolve_out_dir(args.out)
    try:
        if args.command == 'compile':
            try:
                boolean_compiler.parse_truth_table(args.table)
            except TransNNError as e:
                reporter.print_error(str(e))
                return EXIT_USAGE
            out_dir.mkdir(parents=True, exist_ok=True)
            reporter.print_run_header('compile', f"table {args.table}", None, out_dir)
            result = compile_phase(args, out_dir)
            written = [out_dir / "network.json", out_dir / "logic.json"]
        else:
            try:
                spec = load_checked_spec(args.spec)
            except FileNotFoundError:
                reporter.print_error(f"spec file not found: {args.spec}")
                return EXIT_USAGE
            if spec is None:
                return EXIT_FAILURE
            out_dir.mkdir(parents=True, exist_ok=True)
            reporter.print_run_header(args.command, args.spec, network_model.spec_digest(spec), out_dir)
            result = PHASES[args.command](args, spec)
            written = []

        written += reporter.write_tables(result, out_dir, args.format)
        if result.reports:
            written.append(reporter.write_report(result.reports, out_dir))
        written.append(reporter.write_manifest(result, out_dir, written))
        for path in written:
            reporter.print_file_written(path)

    except TransNNError as e:
        tracker.log_error(args.command, e)
        reporter.print_error(str(e))
        return EXIT_FAILURE

    reporter.print_run_summary(result, written, tracker.get_error_summary())
    return EXIT_OK


def main():
    """Main entry point for the CLI"""
    try:
        sys.exit(run())

    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user")
        sys.exit(130)

    except SystemExit:
        raise

    except Exception as e:
        reporter.print_error(f"Unexpected error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == '__main__':
    main()
