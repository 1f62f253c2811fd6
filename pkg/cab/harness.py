'''
Experiment runner: resplit a fixed pool per trial, build edge sets, fit the
alignment predictor offline, route the test batch and score the result.

Information flow per trial:
    cal  -> edge-set calibration only
    tr   -> alignment predictor fit only
    val  -> screening reference (ids, C*, C_hat)
    te   -> routing sees ids, C_hat and edge distributions; labels and C*
            are read by `Trial.evaluate` only
'''

import configparser
import zlib
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from cab import metrics
from cab.alignment import (
    AlignmentPredictor,
    AlignmentSample,
    edge_coverage_feature,
    fit_predictor,
    true_alignment,
)
from cab.cascade import assemble_prediction, reveal_test_alignments
from cab.domain import (
    Categorical,
    ConfigError,
    DataError,
    Example,
    InvariantViolation,
    PartitionSizes,
    PredictionSet,
    RiskSpec,
    check_alpha,
    random_partition,
)
from cab.edgesets import make_edge_set_method
from cab.ingest import (
    Format,
    load_examples,
    trial_row,
    write_results,
    write_table,
)
from cab.predsets import KernelKind, oracle_set
from cab.routers import Router, make_router
from cab.synth import SynthConfig, gen_pool
from cab.utils import Debug

debug = Debug(__name__)

EDGE_SET_KINDS = ('hms', 'cp', 'lcp')
CASCADES = ('cloud_only', 'edge_only', 'cbd', 'cab')
DEFAULT_ALPHAS = (0.2,)
DEFAULT_DELTAS = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4)
SWEEP_CASCADES = ('cbd', 'cab')

TRADEOFF_COLUMNS = (
    'edge_set',
    'cascade',
    'alpha',
    'delta',
    'target_satisfaction',
    'satisfaction_rate',
    'satisfaction_rate_se',
    'deferral_rate',
    'deferral_rate_se',
    'normalized_inefficiency',
    'normalized_inefficiency_se',
)
LONG_COLUMNS = ('edge_set', 'cascade', 'alpha', 'delta', 'metric', 'mean', 'se')


class EdgeSetSpec(NamedTuple):
    kind: str = 'hms'
    bandwidth: Optional[float] = None
    kernel: str = KernelKind.GAUSSIAN

    @property
    def label(self) -> str:
        if self.kind != 'lcp':
            return self.kind
        if self.kernel == KernelKind.CONSTANT:
            return 'lcp(constant)'
        if self.bandwidth is None:
            return 'lcp(auto)'
        return f'lcp(h={self.bandwidth:g})'


class FileSource(NamedTuple):
    path: str
    format: str = Format.JSONL


class Cell(NamedTuple):
    edge_set: EdgeSetSpec
    cascade: str
    alpha: float
    delta: float

    def keys(self) -> dict:
        return {
            'edge_set': self.edge_set.label,
            'cascade': self.cascade,
            'alpha': self.alpha,
            'delta': self.delta,
        }


class ExperimentConfig(NamedTuple):
    source: Union[SynthConfig, FileSource] = SynthConfig()
    edge_sets: Tuple[EdgeSetSpec, ...] = (EdgeSetSpec(),)
    cascades: Tuple[str, ...] = ('cab',)
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    deltas: Tuple[float, ...] = (0.2,)
    partition: PartitionSizes = PartitionSizes()
    trials: int = 200
    base_seed: int = 0
    output: Optional[str] = None
    output_format: str = Format.CSV
    workers: int = 1
    gamma: Optional[float] = None
    predictor: str = 'isotonic'
    n_bins: int = 10

    def cells(self) -> List[Cell]:
        return [
            Cell(edge_set, cascade, alpha, delta)
            for edge_set in self.edge_sets
            for cascade in self.cascades
            for alpha in self.alphas
            for delta in self.deltas
        ]

    def check(self) -> 'ExperimentConfig':
        for name in ('edge_sets', 'cascades', 'alphas', 'deltas'):
            if not getattr(self, name):
                raise ConfigError(f'{name} must not be empty')
        for spec in self.edge_sets:
            if spec.kind not in EDGE_SET_KINDS:
                raise ConfigError(f'unknown edge set method {spec.kind!r}')
        for cascade in self.cascades:
            if cascade not in CASCADES:
                raise ConfigError(f'unknown cascade method {cascade!r}')
        for alpha in self.alphas:
            for delta in self.deltas:
                RiskSpec(alpha, delta).check()
        if self.trials < 0:
            raise ConfigError(f'trials must be >= 0, got {self.trials}')
        if self.workers < 1:
            raise ConfigError(f'workers must be >= 1, got {self.workers}')
        if self.base_seed < 0:
            raise ConfigError(f'seed must be >= 0, got {self.base_seed}')
        if self.gamma is not None and not 0 <= self.gamma <= 1:
            raise ConfigError(f'gamma must lie in [0, 1], got {self.gamma}')
        if self.output_format not in (Format.CSV, Format.JSON):
            raise ConfigError(f'unknown output format {self.output_format!r}')
        if self.n_bins < 1:
            raise ConfigError('n_bins must be >= 1')
        if min(self.partition) < 1:
            raise ConfigError(f'every split needs at least one example: {self.partition}')
        parse_predictor(self.predictor)
        if isinstance(self.source, SynthConfig):
            self.source.check(self.partition)
        return self


def parse_predictor(text: str):
    kind, _, arg = text.strip().partition(':')
    if kind == 'isotonic' and not arg:
        return fit_predictor
    if kind == 'constant':
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f'constant predictor needs a value, got {text!r}') from None
        if not 0 <= value <= 1:
            raise ConfigError(f'constant predictor value must lie in [0, 1], got {value}')
        return lambda samples: AlignmentPredictor.constant(value)
    raise ConfigError(f'unknown predictor {text!r}')


class RoutingView(NamedTuple):
    ids: Tuple[str, ...]
    predicted: Tuple[float, ...]
    edge_dists: Tuple[Categorical, ...]
    validation: Tuple[Tuple[str, float, float], ...]
    seed: np.random.SeedSequence


class Prepared(NamedTuple):
    edge_sets: Tuple[PredictionSet, ...]
    predicted: Tuple[float, ...]
    truth: Tuple[float, ...]
    validation: Tuple[Tuple[str, float, float], ...]
    predictor: AlignmentPredictor


def _key_word(key) -> int:
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool) and key >= 0:
        return int(key)
    return zlib.crc32(repr(key).encode())


class Trial:
    '''
    One resplit of the pool. Random streams are keyed by (base_seed, trial
    index, purpose) so results do not depend on execution order.
    '''

    def __init__(self, pool: Sequence[Example], config: ExperimentConfig, index: int):
        self.pool = pool
        self.config = config
        self.index = index
        self.partition = random_partition(len(pool), config.partition, self.stream('split'))
        self.cal = [pool[i] for i in self.partition.cal]
        self.tr = [pool[i] for i in self.partition.tr]
        self.val = [pool[i] for i in self.partition.val]
        self.te = [pool[i] for i in self.partition.te]
        self._prepared = {}
        self._make_predictor = parse_predictor(config.predictor)

    def seed(self, *key) -> np.random.SeedSequence:
        words = [self.config.base_seed, self.index] + [_key_word(k) for k in key]
        return np.random.SeedSequence(words)

    def stream(self, *key) -> np.random.Generator:
        return np.random.default_rng(self.seed(*key))

    def prepare(self, edge_set: EdgeSetSpec, alpha: float) -> Prepared:
        cached = self._prepared.get((edge_set, alpha))
        if cached is not None:
            return cached

        method = make_edge_set_method(edge_set)
        method.calibrate(self, alpha)
        tr_sets = [method.build(self, x) for x in self.tr]
        val_sets = [method.build(self, x) for x in self.val]
        te_sets = tuple(method.build(self, x) for x in self.te)

        samples = [
            AlignmentSample(
                x.id,
                edge_coverage_feature(x.edge_dist, s),
                true_alignment(x.cloud_dist, s),
            )
            for x, s in zip(self.tr, tr_sets)
        ]
        predictor = self._make_predictor(samples)

        val_predicted = predictor.predict_many(
            [edge_coverage_feature(x.edge_dist, s) for x, s in zip(self.val, val_sets)]
        ).tolist()
        validation = tuple(
            (x.id, true_alignment(x.cloud_dist, s), c_hat)
            for x, s, c_hat in zip(self.val, val_sets, val_predicted)
        )
        predicted = tuple(
            predictor.predict_many(
                [edge_coverage_feature(x.edge_dist, s) for x, s in zip(self.te, te_sets)]
            ).tolist()
        )
        truth = tuple(true_alignment(x.cloud_dist, s) for x, s in zip(self.te, te_sets))

        prepared = Prepared(te_sets, predicted, truth, validation, predictor)
        self._prepared[(edge_set, alpha)] = prepared
        if debug.enabled:
            debug('trial ', self.index, ' prepared ', edge_set.label, ' alpha=', alpha)
        return prepared

    def routing_view(self, prepared: Prepared, cell: Cell) -> RoutingView:
        return RoutingView(
            ids=tuple(x.id for x in self.te),
            predicted=prepared.predicted,
            edge_dists=tuple(x.edge_dist for x in self.te),
            validation=prepared.validation,
            # shared across deltas so stricter levels only stop later
            seed=self.seed('screen', cell.edge_set.label, cell.alpha),
        )

    def route(self, prepared: Prepared, cell: Cell) -> Tuple[Router, frozenset]:
        router = make_router(cell.cascade, self.config.gamma)
        risk = RiskSpec(cell.alpha, cell.delta).check()
        selected = router.route(self.routing_view(prepared, cell), risk)
        return router, selected

    def evaluate(
        self, prepared: Prepared, router: Router, selected: frozenset, alpha: float
    ) -> metrics.TrialMetrics:
        mask = [x.id in selected for x in self.te]
        finals = [
            assemble_prediction(x, keep, s, alpha)
            for x, keep, s in zip(self.te, mask, prepared.edge_sets)
        ]
        oracles = [oracle_set(x.cloud_dist, alpha) for x in self.te]
        chosen = [c for c, keep in zip(prepared.truth, mask) if keep]

        if router.scores_all_inputs:
            covered = [true_alignment(x.cloud_dist, s) for x, s in zip(self.te, finals)]
            satisfaction = metrics.satisfaction_rate(covered, alpha)
        else:
            satisfaction = metrics.satisfaction_rate(chosen, alpha)
        fdp = metrics.fdp(chosen, alpha)

        labels = [x.label for x in self.te]
        coverage = None
        if all(y is not None for y in labels):
            coverage = metrics.marginal_coverage(finals, labels)

        result = metrics.TrialMetrics(
            satisfaction_rate=satisfaction,
            deferral_rate=metrics.deferral_rate(len(chosen), len(self.te)),
            normalized_inefficiency=metrics.normalized_inefficiency(finals, oracles),
            fdp=fdp,
            marginal_coverage=coverage,
            n_selected=len(chosen),
            empty_selection=not chosen,
        )
        if chosen and abs(result.fdp + result.satisfaction_rate - 1.0) > 1e-12:
            raise InvariantViolation(f'fdp and satisfaction disagree: {result}')
        return result

    def run(self, cell: Cell) -> metrics.TrialMetrics:
        prepared = self.prepare(cell.edge_set, cell.alpha)
        router, selected = self.route(prepared, cell)
        return self.evaluate(prepared, router, selected, cell.alpha)


def load_pool(config: ExperimentConfig) -> List[Example]:
    source = config.source
    if isinstance(source, SynthConfig):
        pool = gen_pool(source.check(config.partition))
    else:
        pool = load_examples(source.path, source.format).examples
    if len(pool) < config.partition.total:
        raise DataError(
            f'pool has {len(pool)} examples, partition needs {config.partition.total}'
        )
    return pool


def run_trial(
    config: ExperimentConfig,
    trial_index: int,
    cell: Optional[Cell] = None,
    pool: Optional[Sequence[Example]] = None,
) -> metrics.TrialMetrics:
    '''Metrics of one trial for `cell` (default: the first grid cell).'''
    config.check()
    if pool is None:
        pool = load_pool(config)
    if cell is None:
        cell = config.cells()[0]
    return Trial(pool, config, trial_index).run(cell)


def run_trial_grid(
    config: ExperimentConfig, trial_index: int, pool: Sequence[Example]
) -> List[Tuple[Cell, metrics.TrialMetrics]]:
    trial = Trial(pool, config, trial_index)
    return [(cell, trial.run(cell)) for cell in config.cells()]


_worker_state = None


def _init_worker(config: ExperimentConfig, pool: Sequence[Example]) -> None:
    global _worker_state
    _worker_state = (config, pool)


def _grid_worker(trial_index: int):
    config, pool = _worker_state
    return run_trial_grid(config, trial_index, pool)


def _run_grid(config: ExperimentConfig, pool: Sequence[Example]):
    indices = range(config.trials)
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(
            max_workers=config.workers,
            initializer=_init_worker,
            initargs=(config, pool),
        ) as executor:
            return list(executor.map(_grid_worker, indices))
    return [run_trial_grid(config, i, pool) for i in indices]


class ExperimentResult(NamedTuple):
    rows: List[dict]
    aggregate: List[dict]
    tradeoff: List[dict]
    long: List[dict]


def tradeoff_rows(aggregate: Sequence[dict]) -> List[dict]:
    rows = []
    for cell in aggregate:
        row = {k: cell[k] for k in ('edge_set', 'cascade', 'alpha', 'delta')}
        row['target_satisfaction'] = 1.0 - cell['delta']
        for name in ('satisfaction_rate', 'deferral_rate', 'normalized_inefficiency'):
            row[name] = cell[f'{name}_mean']
            row[f'{name}_se'] = cell[f'{name}_se']
        rows.append(row)
    return rows


def long_rows(aggregate: Sequence[dict]) -> List[dict]:
    rows = []
    for cell in aggregate:
        for name in metrics.METRIC_FIELDS + ('satisfaction_rate_nonempty',):
            rows.append(
                {
                    'edge_set': cell['edge_set'],
                    'cascade': cell['cascade'],
                    'alpha': cell['alpha'],
                    'delta': cell['delta'],
                    'metric': name,
                    'mean': cell[f'{name}_mean'],
                    'se': cell[f'{name}_se'],
                }
            )
    return rows


def sibling_path(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(f'{path.stem}.{suffix}.csv')


def run_experiment(
    config: ExperimentConfig,
    pool: Optional[Sequence[Example]] = None,
    timestamp: Optional[str] = None,
) -> ExperimentResult:
    config.check()
    if pool is None:
        pool = load_pool(config)
    cells = config.cells()
    if debug.enabled:
        debug(len(cells), ' cells x ', config.trials, ' trials, workers=', config.workers)

    per_cell: Dict[Cell, List[metrics.TrialMetrics]] = {cell: [] for cell in cells}
    for grid in _run_grid(config, pool):
        for cell, result in grid:
            per_cell[cell].append(result)

    rows = [
        trial_row(result, trial=i, **cell.keys())
        for cell in cells
        for i, result in enumerate(per_cell[cell])
    ]
    aggregate = []
    if config.trials:
        aggregate = [dict(cell.keys(), **metrics.aggregate(per_cell[cell])) for cell in cells]
    result = ExperimentResult(rows, aggregate, tradeoff_rows(aggregate), long_rows(aggregate))

    if config.output:
        if timestamp is None and config.output_format == Format.JSON:
            timestamp = datetime.now(timezone.utc).isoformat()
        write_results(rows, aggregate, config.output, config.output_format, timestamp)
        write_table(result.tradeoff, TRADEOFF_COLUMNS, sibling_path(config.output, 'tradeoff'))
        write_table(result.long, LONG_COLUMNS, sibling_path(config.output, 'long'))
    return result


def sweep_config(config: ExperimentConfig, explicit: Sequence[str] = ()) -> ExperimentConfig:
    '''
    Fill the full comparison grid for every axis not set explicitly: all three
    edge-set methods, both deferral schemes, delta in 0.05..0.4.
    '''
    changes = {}
    if 'edge_sets' not in explicit:
        changes['edge_sets'] = tuple(EdgeSetSpec(kind) for kind in EDGE_SET_KINDS)
    if 'cascades' not in explicit:
        changes['cascades'] = SWEEP_CASCADES
    if 'deltas' not in explicit:
        changes['deltas'] = DEFAULT_DELTAS
    return config._replace(**changes)


class Diagnostics(NamedTuple):
    reliability: metrics.ReliabilityDiagram
    martingale: List[dict]
    summary: dict


MARTINGALE_COLUMNS = ('trial', 'stop_step', 'm0', 'stopped', 'n_selected')
RELIABILITY_COLUMNS = ('bin_low', 'bin_high', 'confidence_mean', 'accuracy', 'count')


def edge_reliability(pool: Sequence[Example], n_bins: int) -> metrics.ReliabilityDiagram:
    labelled = [x for x in pool if x.label is not None]
    confidences = [float(x.edge_dist.probs.max()) for x in labelled]
    correct = [int(np.argmax(x.edge_dist.probs)) == x.label for x in labelled]
    return metrics.reliability_diagram(confidences, correct, n_bins)


def martingale_record(trial: Trial, cell: Cell) -> dict:
    '''Screening run with held-out test C* revealed afterwards.'''
    prepared = trial.prepare(cell.edge_set, cell.alpha)
    router = make_router('cab')
    selected = router.route(
        trial.routing_view(prepared, cell), RiskSpec(cell.alpha, cell.delta).check()
    )
    selection = router.last_result
    truth = {x.id: c for x, c in zip(trial.te, prepared.truth)}
    order = reveal_test_alignments(selection.order, truth)
    trajectory = metrics.martingale_trajectory(order, cell.alpha)
    return {
        'trial': trial.index,
        'stop_step': selection.stop_step,
        'm0': trajectory[0],
        'stopped': metrics.stopped_value(trajectory, selection.stop_step),
        'n_selected': len(selected),
    }


def diagnose(
    config: ExperimentConfig, pool: Optional[Sequence[Example]] = None
) -> Diagnostics:
    '''
    Edge reliability diagram over the pool and martingale statistics of the
    screening procedure for the first grid cell, one record per trial.
    '''
    config.check()
    if pool is None:
        pool = load_pool(config)
    cell = config.cells()[0]._replace(cascade='cab')

    reliability = edge_reliability(pool, config.n_bins)
    records = [martingale_record(Trial(pool, config, i), cell) for i in range(config.trials)]
    m0_mean, m0_se = metrics.summarize([r['m0'] for r in records])
    stopped_mean, stopped_se = metrics.summarize([r['stopped'] for r in records])
    summary = {
        'trials': len(records),
        'm0_mean': m0_mean,
        'm0_se': m0_se,
        'stopped_mean': stopped_mean,
        'stopped_se': stopped_se,
        'm0_expected': config.partition.te / (1 + config.partition.val),
    }

    if config.output:
        bins = [
            {
                'bin_low': lo,
                'bin_high': hi,
                'confidence_mean': c,
                'accuracy': a,
                'count': n,
            }
            for lo, hi, c, a, n in zip(
                reliability.bin_edges[:-1],
                reliability.bin_edges[1:],
                reliability.confidence_mean,
                reliability.accuracy,
                reliability.count,
            )
        ]
        write_table(bins, RELIABILITY_COLUMNS, sibling_path(config.output, 'reliability'))
        write_table(records, MARTINGALE_COLUMNS, sibling_path(config.output, 'martingale'))
    if debug.enabled:
        debug('diagnose summary=', summary)
    return Diagnostics(reliability, records, summary)


# Configuration files ########################################################

_SECTIONS = {
    'data': ('source', 'path', 'format'),
    'synthetic': SynthConfig._fields,
    'partition': PartitionSizes._fields,
    'edge_set': ('methods', 'bandwidth', 'kernel'),
    'cascade': ('methods', 'gamma', 'predictor'),
    'risk': ('alpha', 'delta'),
    'run': ('trials', 'base_seed', 'workers', 'n_bins'),
    'output': ('path', 'format'),
}


def _split(text: str) -> List[str]:
    return [part.strip() for part in text.split(',') if part.strip()]


def _number(section: str, key: str, text: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f'[{section}] {key}: not a number: {text!r}') from None


def parse_edge_sets(text: str, bandwidth: str = 'auto', kernel: str = KernelKind.GAUSSIAN):
    if kernel not in (KernelKind.GAUSSIAN, KernelKind.CONSTANT):
        raise ConfigError(f'[edge_set] kernel: unknown kernel {kernel!r}')
    default_h = None
    if bandwidth.strip() not in ('', 'auto'):
        default_h = _number('edge_set', 'bandwidth', bandwidth)
        if not default_h > 0:
            raise ConfigError(f'[edge_set] bandwidth must be > 0, got {default_h}')

    specs = []
    for item in _split(text):
        kind, _, arg = item.partition(':')
        kind = kind.strip()
        if kind not in EDGE_SET_KINDS:
            raise ConfigError(f'[edge_set] methods: unknown method {kind!r}')
        h = default_h
        if arg:
            if kind != 'lcp':
                raise ConfigError(f'[edge_set] methods: {kind} takes no bandwidth')
            h = _number('edge_set', 'methods', arg)
            if not h > 0:
                raise ConfigError(f'[edge_set] bandwidth must be > 0, got {h}')
        if kind == 'lcp':
            specs.append(EdgeSetSpec(kind, h, kernel))
        else:
            specs.append(EdgeSetSpec(kind))
    return tuple(specs)


def load_config(path) -> Tuple[ExperimentConfig, Tuple[str, ...]]:
    '''
    Returns the config and the names of the grid axes the file sets
    explicitly (used by `sweep_config`).
    '''
    parser = configparser.ConfigParser(inline_comment_prefixes=(';', '#'))
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            parser.read_file(fh)
    except OSError as err:
        raise ConfigError(f'cannot read config {path}: {err}') from err
    except configparser.Error as err:
        raise ConfigError(f'malformed config {path}: {err}') from err

    unknown = []
    for section in parser.sections():
        if section not in _SECTIONS:
            unknown.append(f'[{section}]')
            continue
        unknown.extend(
            f'[{section}] {key}'
            for key in parser[section]
            if key not in _SECTIONS[section]
        )
    if unknown:
        raise ConfigError(f'unknown config option(s): {", ".join(unknown)}')

    def get(section, key, default=None):
        if parser.has_option(section, key):
            value = parser.get(section, key).strip()
            return value if value != '' else default
        return default

    explicit = []
    changes = {}

    source = get('data', 'source', 'synthetic')
    if source == 'synthetic':
        synth = {}
        for key in SynthConfig._fields:
            value = get('synthetic', key)
            if value is None:
                continue
            kind = int if key in ('num_labels', 'feature_dim', 'pool_size', 'seed') else float
            synth[key] = _number('synthetic', key, value, kind)
        changes['source'] = SynthConfig(**synth)
    elif source == 'file':
        data_path = get('data', 'path')
        if data_path is None:
            raise ConfigError('[data] path is required for source = file')
        fmt = get('data', 'format', Format.JSONL)
        if fmt not in (Format.JSONL, Format.CSV):
            raise ConfigError(f'[data] format: unknown format {fmt!r}')
        changes['source'] = FileSource(data_path, fmt)
    else:
        raise ConfigError(f'[data] source: expected synthetic or file, got {source!r}')

    sizes = {
        key: _number('partition', key, get('partition', key), int)
        for key in PartitionSizes._fields
        if get('partition', key) is not None
    }
    changes['partition'] = PartitionSizes(**sizes)

    methods = get('edge_set', 'methods')
    if methods is not None:
        changes['edge_sets'] = parse_edge_sets(
            methods,
            get('edge_set', 'bandwidth', 'auto'),
            get('edge_set', 'kernel', KernelKind.GAUSSIAN),
        )
        explicit.append('edge_sets')

    cascades = get('cascade', 'methods')
    if cascades is not None:
        changes['cascades'] = tuple(_split(cascades))
        explicit.append('cascades')
    gamma = get('cascade', 'gamma')
    if gamma is not None:
        changes['gamma'] = _number('cascade', 'gamma', gamma)
    predictor = get('cascade', 'predictor')
    if predictor is not None:
        changes['predictor'] = predictor

    alphas = get('risk', 'alpha')
    if alphas is not None:
        changes['alphas'] = tuple(_number('risk', 'alpha', a) for a in _split(alphas))
        explicit.append('alphas')
    deltas = get('risk', 'delta')
    if deltas is not None:
        changes['deltas'] = tuple(_number('risk', 'delta', d) for d in _split(deltas))
        explicit.append('deltas')

    for key in ('trials', 'base_seed', 'workers', 'n_bins'):
        value = get('run', key)
        if value is not None:
            changes[key] = _number('run', key, value, int)

    output = get('output', 'path')
    if output is not None:
        changes['output'] = output
    output_format = get('output', 'format')
    if output_format is not None:
        changes['output_format'] = output_format

    for alpha in changes.get('alphas', ()):
        check_alpha(alpha)
    config = ExperimentConfig()._replace(**changes)
    if debug.enabled:
        debug('loaded config ', path, ': ', config)
    return config, tuple(explicit)
