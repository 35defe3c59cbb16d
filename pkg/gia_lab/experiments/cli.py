"""Command-line verbs of the laboratory."""
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from gia_lab.core.config import get_settings
from gia_lab.core.exceptions import ConfigError, GiaLabError, NumericalError, PreconditionError
from gia_lab.core.models import SharingSetting, StatSource
from gia_lab.experiments.commands import cmd_attack, cmd_client, cmd_search
from gia_lab.experiments.config import apply_overrides, load_experiment_config, parse_overrides
from gia_lab.experiments.matrix import cmd_matrix
from gia_lab.experiments.selftest import cmd_selftest
from gia_lab.experiments.sweep import cmd_batchsweep
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_PRECONDITION = 2


def _seed(value: str) -> int:
    seed = int(value, 0)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return seed


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _csv_ints(value: str) -> tuple:
    try:
        return tuple(int(v) for v in value.split(',') if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value}") from None


def _common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=Path, help='key = value configuration file')
    parser.add_argument('--seed', type=_seed, help='master seed (unsigned 64-bit)')
    parser.add_argument('--out', type=Path, dest='out_dir', help='output directory')
    parser.add_argument('--jobs', type=_positive, help='worker threads')
    parser.add_argument('--preset', help='model preset')
    parser.add_argument('--setting', choices=[s.value for s in SharingSetting], help='client sharing setting')
    parser.add_argument('--batch-size', type=_positive, dest='batch_size')
    parser.add_argument('--iterations', type=_positive)
    parser.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', dest='extra',
                        help='any configuration key; repeatable')
    parser.add_argument('--debug', action='store_true', help='log at DEBUG level')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='gia-lab', description='Gradient inversion attack laboratory')
    verbs = parser.add_subparsers(dest='verb', required=True)

    client = verbs.add_parser('client', help='run one client step and write its update')
    _common(client)
    client.add_argument('--pretrain-steps', type=int, dest='pretrain_steps')

    attack = verbs.add_parser('attack', help='reconstruct a batch from a stored update')
    _common(attack)
    attack.add_argument('--update', type=Path, required=True, help='update container written by client')
    attack.add_argument('--truth', type=Path, help='ground-truth container for scoring')
    attack.add_argument('--stat-source', choices=[s.value for s in StatSource], dest='stat_source')

    search = verbs.add_parser('search', help='search attack hyperparameters and candidate batches')
    _common(search)
    search.add_argument('--n-trials', type=_positive, dest='n_trials')
    search.add_argument('--prune', action='store_true', default=None, help='median-stopping pruning')

    matrix = verbs.add_parser('matrix', help='presets x sharing settings success matrix')
    _common(matrix)
    matrix.add_argument('--n-trials', type=_positive, dest='n_trials')
    matrix.add_argument('--presets', type=lambda v: tuple(p for p in v.split(',') if p))

    sweep = verbs.add_parser('batchsweep', help='no-stats attack across batch sizes')
    _common(sweep)
    sweep.add_argument('--sizes', type=_csv_ints)

    selftest = verbs.add_parser('selftest', help='numerical self-checks on a tiny model')
    _common(selftest)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    malformed = [item for item in args.extra if '=' not in item]
    if malformed:
        raise ConfigError(f"Expected KEY=VALUE, got {', '.join(malformed)}")
    overrides = parse_overrides(dict(item.split('=', 1) for item in args.extra))
    for key in ('seed', 'out_dir', 'jobs', 'preset', 'setting', 'batch_size', 'iterations', 'pretrain_steps',
                'stat_source', 'n_trials', 'prune', 'presets', 'sizes'):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if 'jobs' not in overrides and get_settings().jobs > 1:
        overrides['jobs'] = get_settings().jobs
    return overrides


def run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    config = apply_overrides(config, _overrides(args))
    logger.debug("Resolved configuration", extra={'context': config.to_dict()})

    if args.verb == 'client':
        print(cmd_client(config))
    elif args.verb == 'attack':
        path, _ = cmd_attack(config, args.update, args.truth)
        print(path)
    elif args.verb == 'search':
        print(cmd_search(config).report_path)
    elif args.verb == 'matrix':
        json_path, md_path = cmd_matrix(config)
        print(json_path)
        print(md_path)
    elif args.verb == 'batchsweep':
        json_path, svg_path = cmd_batchsweep(config)
        print(json_path)
        print(svg_path)
    elif args.verb == 'selftest':
        path, passed = cmd_selftest(config)
        print(path)
        return EXIT_OK if passed else EXIT_RUNTIME
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the verb and map package errors to exit codes."""
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    if args.debug:
        LogManager.set_log_level(logging.DEBUG)
    try:
        return run(args)
    except PreconditionError as e:
        logger.error(f"{args.verb}: {e}")
        return EXIT_PRECONDITION
    except NumericalError as e:
        logger.error(f"{args.verb}: {e}")
        return EXIT_RUNTIME
    except GiaLabError as e:
        logger.error(f"{args.verb}: {e}", exc_info=True)
        return EXIT_RUNTIME
