#!/usr/bin/env python3
"""
Hardness Lab Runner
===================

Command-line entry point. Every experiment is a subcommand:

    python lab.py landscape --seed 0 --out output/landscape
    python lab.py variance-scan --config scan.json --seed 1 --workers 4
    python lab.py trajectory --seed 7 --strict
    python lab.py invariance --seed 3
    python lab.py reduction-check --seed 5

Settings are merged as: command-line flags > --config file (json or yaml)
> the experiment's block in project_config.yaml. Exit codes: 0 success,
1 usage or configuration error, 2 failed verdict under --strict, 3 numeric
divergence.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from hardness_lab.config import (
    DEFAULT_WORKERS,
    EXIT_OK,
    EXIT_USAGE,
    LOG_LEVEL,
    get_experiment_defaults,
    get_output_path,
    merge_config,
)
from hardness_lab.errors import ConfigError
from hardness_lab.experiments import EXPERIMENTS
from hardness_lab.tools import ConfigReaderTool

# Subcommand -> experiment registry key
COMMANDS = {
    'landscape': 'landscape',
    'variance-scan': 'variance_scan',
    'trajectory': 'trajectory',
    'invariance': 'invariance',
    'reduction-check': 'reduction_check',
}


class LabArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ============================================================================
# Argument parsing
# ============================================================================

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument('--config', help='json or yaml file with experiment settings')
    p.add_argument('--seed', type=int, help='master seed (required here or in --config)')
    p.add_argument('--out', help='output directory')
    p.add_argument('--strict', action='store_true', help='exit 2 when a verdict fails')
    p.add_argument('--workers', type=int, help='worker threads (results do not depend on it)')


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog='lab', description='Hardness lab experiment runner')
    sub = parser.add_subparsers(dest='command', parser_class=LabArgumentParser)
    sub.required = True

    p = sub.add_parser('landscape', help='objective heatmap over a 2-D grid')
    _common(p)
    p.add_argument('--w-star', type=float, nargs=2, metavar=('W1', 'W2'))
    p.add_argument('--bounds', type=float, nargs=4, metavar=('LO1', 'HI1', 'LO2', 'HI2'))
    p.add_argument('--resolution', type=int)
    p.add_argument('--scale', choices=['log', 'linear'])
    p.add_argument('--no-anchors', action='store_true', help='plain linspace axes')

    p = sub.add_parser('variance-scan', help='gradient variance over random targets')
    _common(p)
    p.add_argument('--dims', type=int, nargs='+')
    p.add_argument('--radii', type=float, nargs='+')
    p.add_argument('--n-wstar', type=int)
    p.add_argument('--n-x', type=int)
    p.add_argument('--probe-scale', type=float)

    p = sub.add_parser('trajectory', help='training runs against random targets')
    _common(p)
    p.add_argument('--dim', type=int)
    p.add_argument('--r', type=float, help='targets have norm 2r')
    p.add_argument('--steps', type=int, help='number of training steps T')
    p.add_argument('--n-targets', type=int)
    p.add_argument('--epsilon', type=float, help='oracle accuracy (default: bound recipe)')
    p.add_argument('--honest', action='store_true', help='use true gradients, no oracle')
    p.add_argument('--trainer', choices=['gd', 'normalized_gd', 'sgd'])
    p.add_argument('--step-size', type=float)

    p = sub.add_parser('invariance', help='invariance, transport and span checks')
    _common(p)
    p.add_argument('--dim', type=int)
    p.add_argument('--m', type=int, help='number of training instances')
    p.add_argument('--n-trials', type=int)
    p.add_argument('--algorithms', nargs='+')
    p.add_argument('--dataset', help='csv file: feature columns then label')

    p = sub.add_parser('reduction-check', help='halfspace-intersection reduction checks')
    _common(p)
    p.add_argument('--n-instances', type=int)
    p.add_argument('--d-minus-1', type=int, help='largest Boolean input dimension')
    p.add_argument('--n', type=int, help='largest number of halfspaces')
    p.add_argument('--instance', help='json file with one instance')
    return parser


def flag_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Settings given on the command line; unset flags stay None and are ignored."""
    cmd = args.command
    out: Dict[str, Any] = {'seed': args.seed}
    if cmd == 'landscape':
        out.update({'w_star': args.w_star, 'resolution': args.resolution, 'scale': args.scale})
        if args.bounds:
            out['bounds'] = [args.bounds[:2], args.bounds[2:]]
        if args.no_anchors:
            out['anchors'] = False
    elif cmd == 'variance-scan':
        out.update({'dims': args.dims, 'radii': args.radii, 'n_wstar': args.n_wstar,
                    'n_x': args.n_x, 'probe_scale': args.probe_scale})
    elif cmd == 'trajectory':
        out.update({'dim': args.dim, 'r': args.r, 'T': args.steps, 'n_targets': args.n_targets,
                    'trainer': {'kind': args.trainer, 'step_size': args.step_size},
                    'oracle': {'epsilon': args.epsilon}})
        if args.honest:
            out['oracle']['enabled'] = False
    elif cmd == 'invariance':
        out.update({'dim': args.dim, 'm': args.m, 'n_trials': args.n_trials,
                    'algorithms': args.algorithms, 'dataset': args.dataset})
    elif cmd == 'reduction-check':
        out.update({'n_instances': args.n_instances, 'd_minus_1': args.d_minus_1,
                    'n': args.n, 'instance': args.instance})
    return out


def effective_config(args: argparse.Namespace, file_config: Dict[str, Any]) -> Dict[str, Any]:
    name = COMMANDS[args.command]
    config = merge_config(get_experiment_defaults(name), file_config, flag_overrides(args))
    # run-placement settings never enter result files
    for key in ('workers', 'out'):
        config.pop(key, None)
    return config


# ============================================================================
# Main
# ============================================================================

def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    name = COMMANDS[args.command]

    try:
        file_config = ConfigReaderTool().read_mapping(args.config) if args.config else {}
        config = effective_config(args, file_config)
    except ConfigError as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE

    workers = args.workers or file_config.get('workers') or DEFAULT_WORKERS
    out_dir = args.out or file_config.get('out') or get_output_path(name)

    print("=" * 70)
    print(f"Hardness Lab: {args.command}")
    print("=" * 70)
    print(f"  seed: {config.get('seed')}  workers: {workers}")
    print(f"  output: {out_dir}")

    experiment = EXPERIMENTS[name](out_dir, workers=workers, strict=args.strict)
    result = experiment.run(config)

    print("\n" + "=" * 70)
    if result['success']:
        verdict = result.get('passed')
        mark = '✓' if verdict is not False else '✗'
        label = 'PASS' if verdict else ('FAIL' if verdict is False else 'done')
        print(f"{mark} {args.command}: {label}")
    else:
        print(f"✗ {args.command}: {result['error']}")
    print("=" * 70)
    if result['files']:
        print("\nOutput files:")
        for path in result['files']:
            print(f"  {path}")
    return result['exit_code']


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return run(argv)
    except SystemExit as e:
        if e.code is None:
            return EXIT_OK
        return e.code if isinstance(e.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
