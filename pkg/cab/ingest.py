'''
Reading externally computed predictive distributions and writing run
artifacts.

JSONL records:
    {"id": "q1", "cloud_probs": [...], "edge_probs": [...],
     "label": 2 | "B" | null, "features": [...]}

CSV columns: id, label (optional), cloud_0..cloud_{K-1}, edge_0..edge_{K-1},
feature_0..feature_{d-1} (optional).

Results CSV columns are RESULT_COLUMNS; `row_type` is `trial` for per-trial
rows and `mean` / `se` for the aggregate block of each cell.
'''

import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from cab.domain import CabError, DataError, Example, make_example
from cab.metrics import METRIC_FIELDS, TrialMetrics
from cab.utils import Debug

debug = Debug(__name__)

SCHEMA_VERSION = 1

KEY_COLUMNS = ('edge_set', 'cascade', 'alpha', 'delta', 'trial')
RESULT_COLUMNS = ('row_type',) + KEY_COLUMNS + METRIC_FIELDS


class ParseError(DataError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class InconsistentK(ParseError):
    pass


class ValidationError(ParseError):
    pass


class IoError(DataError):
    pass


class Format:
    JSONL = 'jsonl'
    CSV = 'csv'
    JSON = 'json'


class Dataset(NamedTuple):
    examples: List[Example]
    label_names: Dict[str, int]

    @property
    def num_labels(self) -> int:
        return self.examples[0].num_labels if self.examples else 0


class _LabelMapper:
    '''Integers pass through; strings get indices in first-seen order.'''

    def __init__(self):
        self.names = {}
        self.kind = None

    def __call__(self, value, line: int) -> Optional[int]:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return None
        if isinstance(value, bool):
            raise ParseError(f'label {value!r} is not an integer or a name', line)
        if isinstance(value, (int, np.integer)) or (
            isinstance(value, float) and value.is_integer()
        ):
            kind, index = 'index', int(value)
        elif isinstance(value, str):
            kind = 'name'
            index = self.names.setdefault(value, len(self.names))
        else:
            raise ParseError(f'label {value!r} is not an integer or a name', line)
        if self.kind is None:
            self.kind = kind
        elif self.kind != kind:
            raise ParseError('labels mix integer indices and names', line)
        return index


class _Builder:
    def __init__(self):
        self.examples = []
        self.seen = set()
        self.k = None
        self.labels = _LabelMapper()

    def add(self, line: int, id, cloud, edge, label, features) -> None:
        if id is None or (isinstance(id, float) and math.isnan(id)):
            raise ParseError('missing id', line)
        id = str(id)
        if id in self.seen:
            raise ValidationError(f'duplicate id {id!r}', line)
        if not isinstance(cloud, (list, tuple)) or not isinstance(edge, (list, tuple)):
            raise ParseError('cloud_probs and edge_probs must be arrays', line)
        if self.k is None:
            self.k = len(cloud)
        if len(cloud) != self.k or len(edge) != self.k:
            raise InconsistentK(
                f'expected K={self.k}, got {len(cloud)} cloud / {len(edge)} edge probabilities',
                line,
            )
        label = self.labels(label, line)
        try:
            example = make_example(id, cloud, edge, label, features)
        except (CabError, ValueError, TypeError) as err:
            raise ValidationError(str(err), line) from err
        self.seen.add(id)
        self.examples.append(example)

    def dataset(self) -> Dataset:
        return Dataset(self.examples, dict(self.labels.names))


def _load_jsonl(path: Path) -> Dataset:
    builder = _Builder()
    with path.open('rb') as fh:
        for line, raw in enumerate(fh, start=1):
            try:
                text = raw.decode('utf-8')
            except UnicodeDecodeError as err:
                raise ParseError(f'invalid UTF-8: {err.reason} at byte {err.start}', line) from err
            if not text.strip():
                continue
            try:
                record = json.loads(text)
            except json.JSONDecodeError as err:
                raise ParseError(f'invalid JSON: {err.msg}', line) from err
            if not isinstance(record, dict):
                raise ParseError('record is not an object', line)
            for key in ('cloud_probs', 'edge_probs'):
                if key not in record:
                    raise ParseError(f'missing {key}', line)
            builder.add(
                line,
                record.get('id'),
                record['cloud_probs'],
                record['edge_probs'],
                record.get('label'),
                record.get('features'),
            )
    return builder.dataset()


def _prefixed(columns: Iterable[str], prefix: str) -> List[str]:
    found = {}
    for col in columns:
        if col.startswith(prefix) and col[len(prefix) :].isdigit():
            found[int(col[len(prefix) :])] = col
    if sorted(found) != list(range(len(found))):
        raise ParseError(f'{prefix}* columns are not numbered 0..n-1', 1)
    return [found[i] for i in range(len(found))]


def _load_csv(path: Path) -> Dataset:
    try:
        frame = pd.read_csv(path, dtype={'id': str}, float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise ParseError(f'unreadable CSV: {err}') from err

    if 'id' not in frame.columns:
        raise ParseError('missing id column', 1)
    cloud_cols = _prefixed(frame.columns, 'cloud_')
    edge_cols = _prefixed(frame.columns, 'edge_')
    feature_cols = _prefixed(frame.columns, 'feature_')
    if len(cloud_cols) != len(edge_cols):
        raise InconsistentK(f'{len(cloud_cols)} cloud_ vs {len(edge_cols)} edge_ columns', 1)

    builder = _Builder()
    has_label = 'label' in frame.columns
    for row_no, values in enumerate(frame.to_dict('records'), start=2):
        cloud = [values[c] for c in cloud_cols]
        edge = [values[c] for c in edge_cols]
        if any(pd.isna(v) for v in cloud + edge):
            raise ParseError('empty probability cell', row_no)
        feats = [values[c] for c in feature_cols] if feature_cols else None
        if feats is not None and any(pd.isna(v) for v in feats):
            raise ParseError('empty feature cell', row_no)
        label = values['label'] if has_label else None
        if label is not None and pd.isna(label):
            label = None
        if isinstance(label, str) and label.lstrip('-').isdigit():
            label = int(label)
        builder.add(row_no, values['id'], cloud, edge, label, feats)
    return builder.dataset()


def load_examples(path, format: str = Format.JSONL) -> Dataset:
    path = Path(path)
    if debug.enabled:
        debug('loading ', path, ' as ', format)
    try:
        if format == Format.JSONL:
            dataset = _load_jsonl(path)
        elif format == Format.CSV:
            dataset = _load_csv(path)
        else:
            raise ParseError(f'unknown input format {format!r}')
    except OSError as err:
        raise IoError(f'cannot read {path}: {err}') from err
    if debug.enabled:
        debug('loaded ', len(dataset.examples), ' examples, K=', dataset.num_labels)
    return dataset


def _example_record(example: Example) -> dict:
    return {
        'id': example.id,
        'features': example.features.tolist(),
        'cloud_probs': example.cloud_dist.probs.tolist(),
        'edge_probs': example.edge_dist.probs.tolist(),
        'label': example.label,
    }


def export_examples(examples: Sequence[Example], path, format: str = Format.JSONL) -> None:
    path = Path(path)
    try:
        if format == Format.JSONL:
            with path.open('w', encoding='utf-8') as fh:
                for example in examples:
                    fh.write(json.dumps(_example_record(example)) + '\n')
        elif format == Format.CSV:
            rows = []
            for example in examples:
                row = {'id': example.id, 'label': example.label}
                row.update(
                    (f'cloud_{i}', p) for i, p in enumerate(example.cloud_dist.probs)
                )
                row.update((f'edge_{i}', p) for i, p in enumerate(example.edge_dist.probs))
                row.update((f'feature_{i}', f) for i, f in enumerate(example.features))
                rows.append(row)
            pd.DataFrame(rows).to_csv(path, index=False, float_format='%.17g')
        else:
            raise ParseError(f'unknown export format {format!r}')
    except OSError as err:
        raise IoError(f'cannot write {path}: {err}') from err


def trial_row(metrics: TrialMetrics, **keys) -> dict:
    row = {'row_type': 'trial'}
    row.update({k: keys.get(k) for k in KEY_COLUMNS})
    row.update(metrics._asdict())
    return row


def _aggregate_rows(aggregate: Sequence[dict]) -> List[dict]:
    rows = []
    for cell in aggregate:
        for stat in ('mean', 'se'):
            row = {'row_type': stat}
            row.update({k: cell.get(k) for k in KEY_COLUMNS if k != 'trial'})
            row.update({m: cell.get(f'{m}_{stat}') for m in METRIC_FIELDS})
            rows.append(row)
    return rows


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return _json_safe(value.item())
    return value


def write_results(
    trials: Sequence,
    aggregate: Optional[Sequence[dict]],
    path,
    format: str = Format.CSV,
    timestamp: Optional[str] = None,
) -> None:
    '''
    trials: TrialMetrics or rows built by `trial_row`; aggregate: one dict
    per cell (key columns plus `<metric>_mean` / `<metric>_se`). The
    aggregate is omitted when there are no trials.
    '''
    rows = [t if isinstance(t, dict) else trial_row(t, trial=i) for i, t in enumerate(trials)]
    if not rows:
        aggregate = None
    path = Path(path)
    try:
        if format == Format.CSV:
            all_rows = rows + (_aggregate_rows(aggregate) if aggregate else [])
            frame = pd.DataFrame(all_rows, columns=list(RESULT_COLUMNS))
            frame.to_csv(path, index=False, float_format='%.17g')
        elif format == Format.JSON:
            document = {'schema_version': SCHEMA_VERSION}
            if timestamp is not None:
                document['generated_at'] = timestamp
            document['trials'] = [
                {k: _json_safe(v) for k, v in row.items()} for row in rows
            ]
            if aggregate:
                document['aggregate'] = [
                    {k: _json_safe(v) for k, v in cell.items()} for cell in aggregate
                ]
            with path.open('w', encoding='utf-8') as fh:
                json.dump(document, fh, indent=2, sort_keys=True)
                fh.write('\n')
        else:
            raise ParseError(f'unknown results format {format!r}')
    except OSError as err:
        raise IoError(f'cannot write {path}: {err}') from err
    if debug.enabled:
        debug('wrote ', len(rows), ' trial rows to ', path)


def read_results(path) -> dict:
    path = Path(path)
    try:
        with path.open('r', encoding='utf-8') as fh:
            document = json.load(fh)
    except OSError as err:
        raise IoError(f'cannot read {path}: {err}') from err
    except json.JSONDecodeError as err:
        raise ParseError(f'invalid results JSON: {err.msg}', err.lineno) from err
    if document.get('schema_version') != SCHEMA_VERSION:
        raise ParseError(f'unsupported schema_version {document.get("schema_version")!r}')
    return document


def write_table(rows: Sequence[dict], columns: Sequence[str], path) -> None:
    try:
        pd.DataFrame(list(rows), columns=list(columns)).to_csv(
            path, index=False, float_format='%.17g'
        )
    except OSError as err:
        raise IoError(f'cannot write {path}: {err}') from err
