'''
Command line entry point: `python -m cab gen|run|sweep|diagnose`.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
invariant violation or unexpected failure.
'''

import argparse
import json
import sys
from typing import Optional, Sequence

from cab.domain import CabError, ConfigError
from cab.harness import (
    ExperimentConfig,
    diagnose,
    load_config,
    run_experiment,
    sweep_config,
)
from cab.ingest import Format, export_examples
from cab.synth import SynthConfig, gen_pool
from cab.utils import Debug

debug = Debug(__name__)

VERBS = ('gen', 'run', 'sweep', 'diagnose')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='cab',
        description='Conformal alignment edge-cloud cascading experiments.',
    )
    parser.add_argument('verb', choices=VERBS)
    parser.add_argument('--config', help='INI experiment description')
    parser.add_argument('--seed', type=int, help='base seed (u64)')
    parser.add_argument('--trials', type=int)
    parser.add_argument('--out', help='output path')
    parser.add_argument(
        '--format', choices=(Format.CSV, Format.JSON, Format.JSONL), dest='output_format'
    )
    parser.add_argument('--workers', type=int)
    parser.add_argument('--debug', action='store_true')
    return parser


def resolve_config(args) -> tuple:
    if args.config:
        config, explicit = load_config(args.config)
    else:
        config, explicit = ExperimentConfig(), ()

    changes = {}
    if args.seed is not None:
        changes['base_seed'] = args.seed
    if args.trials is not None:
        changes['trials'] = args.trials
    if args.out is not None:
        changes['output'] = args.out
    if args.workers is not None:
        changes['workers'] = args.workers
    if args.output_format is not None and args.verb != 'gen':
        if args.output_format == Format.JSONL:
            raise ConfigError('results are written as csv or json, not jsonl')
        changes['output_format'] = args.output_format
    return config._replace(**changes), explicit


def cmd_gen(args, config: ExperimentConfig) -> int:
    source = config.source
    if not isinstance(source, SynthConfig):
        raise ConfigError('gen needs a synthetic data source')
    if args.seed is not None:
        source = source._replace(seed=args.seed)
    if not config.output:
        raise ConfigError('gen needs --out')
    fmt = args.output_format or Format.JSONL
    if fmt == Format.JSON:
        raise ConfigError('pools are written as jsonl or csv, not json')
    pool = gen_pool(source.check())
    export_examples(pool, config.output, fmt)
    print(f'wrote {len(pool)} examples to {config.output}')
    return 0


def _print_summary(result) -> None:
    for cell in result.tradeoff:
        print(
            f"{cell['edge_set']:>14} {cell['cascade']:>10} "
            f"alpha={cell['alpha']:g} delta={cell['delta']:g} "
            f"satisfaction={cell['satisfaction_rate']:.3f} "
            f"deferral={cell['deferral_rate']:.3f} "
            f"ni={cell['normalized_inefficiency']:.3f}"
        )


def cmd_run(args, config: ExperimentConfig) -> int:
    _print_summary(run_experiment(config))
    return 0


def cmd_sweep(args, config: ExperimentConfig, explicit) -> int:
    _print_summary(run_experiment(sweep_config(config, explicit)))
    return 0


def cmd_diagnose(args, config: ExperimentConfig) -> int:
    report = diagnose(config)
    print(json.dumps(report.summary, indent=2, sort_keys=True))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.debug:
        debug.enabled = True

    try:
        config, explicit = resolve_config(args)
        if args.verb == 'gen':
            return cmd_gen(args, config)
        config.check()
        if args.verb == 'run':
            return cmd_run(args, config)
        if args.verb == 'sweep':
            return cmd_sweep(args, config, explicit)
        return cmd_diagnose(args, config)
    except CabError as err:
        print(f'cab {args.verb}: {err.__class__.__name__}: {err}', file=sys.stderr)
        return err.exit_code
    except Exception as err:
        import traceback

        traceback.print_exception(type(err), err, err.__traceback__)
        return 3
