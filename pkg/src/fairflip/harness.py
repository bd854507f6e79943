"""Data ingestion, synthetic data, experiment sweeps and report emission."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import (
    Dataset,
    DegenerateDataError,
    EmptyDatasetError,
    LabelVector,
    NonBinaryLabelError,
    ParseError,
    RepairConfig,
    RepairReport,
    SimilarityGraph,
)
from .metrics import consistency_score, data_consistency, total_error
from .pipeline import repair
from .similarity import SimilarityConfig, build_graph

_MISSING_TOKENS = {"", "na", "n/a", "nan", "none", "null", "?"}


def load_csv(path, label_col: str, excluded_cols: Sequence[str] = ()) -> Dataset:
    """Parse a numeric CSV with a header into a Dataset.

    Rows with missing values are dropped. Raises ParseError (with row and
    column) on non-numeric cells, NonBinaryLabelError when the label column
    holds anything but 0/1, and EmptyDatasetError when nothing survives.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path} is empty")
        header = [h.strip() for h in header]
        if label_col not in header:
            raise ParseError(f"label column {label_col!r} not in header {header}")
        label_idx = header.index(label_col)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        missing_cols = [c for c in excluded_cols if c not in feature_names]
        if missing_cols:
            raise ParseError(f"excluded columns {missing_cols} not in header")

        rows, labels, kept_ids = [], [], []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if len(cells) != len(header):
                raise ParseError(f"row {row_no} has {len(cells)} cells, expected {len(header)}",
                                 row=row_no)
            if any(c.lower() in _MISSING_TOKENS for c in cells):
                continue
            parsed = []
            for col_no, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"row {row_no}, column {header[col_no]!r}: cannot parse {cell!r}",
                        row=row_no, column=header[col_no])
            label = parsed.pop(label_idx)
            if label not in (0.0, 1.0):
                raise NonBinaryLabelError(
                    f"row {row_no}: label {label} is not 0 or 1")
            rows.append(parsed)
            labels.append(int(label))
            kept_ids.append(row_no - 2)
    if not rows:
        raise EmptyDatasetError(f"{path} has no complete data rows")
    excluded_idx = frozenset(feature_names.index(c) for c in excluded_cols)
    return Dataset(
        features=np.asarray(rows, dtype=float),
        labels=np.asarray(labels, dtype=np.int8),
        excluded_cols=excluded_idx,
        ids=kept_ids,
        column_names=tuple(feature_names),
    )


def save_csv(dataset: Dataset, path, label_col: str = "label",
             labels=None, flipped=None) -> None:
    """Write the dataset (optionally with repaired labels and a flipped column)."""
    names = list(dataset.column_names or (f"x{i}" for i in range(dataset.d)))
    labels = dataset.labels if labels is None else np.asarray(labels)
    header = names + [label_col] + (["flipped"] if flipped is not None else [])
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(v) for v in dataset.features[i]] + [int(labels[i])]
            if flipped is not None:
                row.append(int(flipped[i]))
            writer.writerow(row)


_DEFAULT_CLASS_PARAMS = {
    "mean_pos": (2.0, 2.0),
    "mean_neg": (-2.0, -2.0),
    "cov_pos": ((1.0, 0.3), (0.3, 1.2)),
    "cov_neg": ((1.2, -0.2), (-0.2, 0.8)),
}


def generate_synthetic(n: int, seed: int = 0, class_params: Optional[dict] = None) -> Dataset:
    """Two-Gaussian binary dataset: n/2 positive and n/2 negative rows, shuffled."""
    if n < 2:
        raise ValueError("n must be at least 2")
    params = dict(_DEFAULT_CLASS_PARAMS)
    if class_params:
        params.update(class_params)
    rng = np.random.default_rng(seed)
    n_pos = n // 2 + (n % 2)
    n_neg = n // 2
    pos = rng.multivariate_normal(params["mean_pos"], params["cov_pos"], size=n_pos)
    neg = rng.multivariate_normal(params["mean_neg"], params["cov_neg"], size=n_neg)
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos, dtype=np.int8), np.zeros(n_neg, dtype=np.int8)])
    order = rng.permutation(n)
    return Dataset(features=X[order], labels=y[order], column_names=("x1", "x2"))


def split_dataset(dataset: Dataset, fractions: Tuple[float, ...] = (0.6, 0.3, 0.1),
                  seed: int = 0) -> tuple:
    """Deterministic row split; returns one (dataset, row-index array) per fraction."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(dataset.n)
    cuts = np.cumsum([int(round(f * dataset.n)) for f in fractions[:-1]])
    parts = np.split(order, cuts)
    out = []
    for idx in parts:
        idx = np.sort(idx)
        sub = Dataset(
            features=dataset.features[idx],
            labels=dataset.labels[idx],
            excluded_cols=dataset.excluded_cols,
            ids=None if dataset.ids is None else [dataset.ids[i] for i in idx],
            column_names=dataset.column_names,
        )
        out.append((sub, idx))
    return tuple(out)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_and_score(train: Dataset, test: Dataset, test_graph: SimilarityGraph,
                    model_config: Optional[dict] = None,
                    train_labels=None) -> Tuple[float, float]:
    """Fit a logistic model by full-batch gradient descent; score the test split.

    Returns (accuracy, consistency) on the test set. A single-class training
    set degenerates to a constant classifier, which is still scored.
    """
    cfg = {"learning_rate": 0.5, "iters": 400}
    if model_config:
        cfg.update(model_config)
    y = train.labels if train_labels is None else np.asarray(train_labels).reshape(-1)
    if train.n == 0 or test.n == 0:
        raise DegenerateDataError("train and test splits must be non-empty")

    mu = train.features.mean(axis=0)
    sd = train.features.std(axis=0)
    sd[sd == 0] = 1.0
    Xtr = (train.features - mu) / sd
    Xte = (test.features - mu) / sd

    if len(np.unique(y)) < 2:
        preds = np.full(test.n, int(y[0]), dtype=np.int8)
    else:
        X1 = np.hstack([Xtr, np.ones((train.n, 1))])
        w = np.zeros(X1.shape[1])
        lr = cfg["learning_rate"]
        for _ in range(cfg["iters"]):
            p = _sigmoid(X1 @ w)
            w -= lr * (X1.T @ (p - y)) / train.n
        preds = (_sigmoid(np.hstack([Xte, np.ones((test.n, 1))]) @ w) >= 0.5).astype(np.int8)

    accuracy = float((preds == test.labels).mean())
    consistency = consistency_score(preds, test_graph)
    return accuracy, consistency


def binary_search_m(dataset: Dataset, graph: SimilarityGraph,
                    target_consistency: float, tolerance: float = 0.01,
                    max_steps: int = 20, *, config: Optional[RepairConfig] = None,
                    train_fraction: float = 0.7, seed: int = 0,
                    model_config: Optional[dict] = None) -> float:
    """Search the error budget whose trained-model consistency hits a target.

    Splits the data internally (the graph is restricted to each side), runs
    the configured repair at each probed m, trains the evaluator model and
    walks m by bisection on [0, initial total error]. Best-effort: returns
    the closest m found when the tolerance or step limit is exhausted.
    """
    if not 0 < target_consistency <= 1:
        raise ValueError("target_consistency must be in (0, 1]")
    config = config or RepairConfig()
    (train, train_idx), (test, test_idx) = split_dataset(
        dataset, (train_fraction, 1.0 - train_fraction), seed=seed)
    train_graph = graph.subgraph(train_idx)
    test_graph = graph.subgraph(test_idx)
    if test_graph.num_edges == 0:
        raise DegenerateDataError("test split has no edges to evaluate consistency on")

    lo, hi = 0.0, total_error(train.labels, train_graph)
    best_m, best_gap = hi, float("inf")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        repaired, _report = repair(train, train_graph, mid,
                                   RepairConfig(m=mid, method=config.method,
                                                seed=config.seed))
        _, achieved = train_and_score(train, test, test_graph,
                                      model_config, train_labels=repaired.current)
        gap = abs(achieved - target_consistency)
        if gap < best_gap:
            best_gap, best_m = gap, mid
        if gap <= tolerance:
            return mid
        if achieved > target_consistency:
            lo = mid  # fairer than required; allow more error
        else:
            hi = mid
    return best_m


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to run a sweep: data source, graph, budgets, methods."""

    csv_path: Optional[str] = None
    synthetic_n: Optional[int] = None
    label_col: str = "label"
    excluded_cols: tuple = ()
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    m_values: Optional[tuple] = None
    target_consistency: Optional[float] = None
    methods: tuple = ("iflipper",)
    split: tuple = (0.6, 0.3, 0.1)
    seed: int = 0
    output_path: Optional[str] = None
    report_path: Optional[str] = None

    def __post_init__(self):
        if (self.csv_path is None) == (self.synthetic_n is None):
            raise ValueError("exactly one of csv_path and synthetic_n is required")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if self.m_values is not None and any(m < 0 for m in self.m_values):
            raise ValueError("m values must be >= 0")
        if self.m_values is None and self.target_consistency is None:
            raise ValueError("either m_values or target_consistency is required")

    def load(self) -> Dataset:
        if self.csv_path is not None:
            return load_csv(self.csv_path, self.label_col, self.excluded_cols)
        return generate_synthetic(self.synthetic_n, seed=self.seed)


def run_experiment(spec: ExperimentSpec) -> list:
    """Repair sweep over methods and budgets with model-based scoring.

    Returns one RepairReport per (method, m) with accuracy/consistency in
    the report extras; writes the report file when spec.report_path is set,
    and the repaired training CSV when a single repair ran and
    spec.output_path is set.
    """
    dataset = spec.load()
    (train, train_idx), (test, test_idx), (_valid, _valid_idx) = split_dataset(
        dataset, spec.split, seed=spec.seed)
    sim = spec.similarity
    train_graph = build_graph(train, sim)
    test_graph = build_graph(test, sim)

    m_values = spec.m_values
    if m_values is None:
        m = binary_search_m(train, train_graph, spec.target_consistency,
                            seed=spec.seed)
        m_values = (m,)

    reports = []
    last = None
    for method in spec.methods:
        for m in m_values:
            config = RepairConfig(m=float(m), method=method, seed=spec.seed)
            repaired, report = repair(train, train_graph, float(m), config)
            accuracy, consistency = train_and_score(
                train, test, test_graph, train_labels=repaired.current)
            report = RepairReport(
                **{**report.__dict__,
                   "extra": {**report.extra,
                             "accuracy": round(accuracy, 6),
                             "consistency": round(consistency, 6),
                             "data_consistency": round(
                                 data_consistency(repaired.current, train_graph), 6)}})
            reports.append(report)
            last = (train, repaired)
    if spec.report_path:
        emit_report(reports, spec.report_path)
    if spec.output_path and len(reports) == 1 and last is not None:
        train_ds, repaired = last
        save_csv(train_ds, spec.output_path, label_col=spec.label_col,
                 labels=repaired.current,
                 flipped=(repaired.current != repaired.original).astype(int))
    return reports


def emit_report(reports, path) -> None:
    """Write repair reports as a JSON array, sorted ascending by m.

    Field order inside each record is fixed so repeated runs diff cleanly.
    """
    records = [r.as_record() if isinstance(r, RepairReport) else dict(r)
               for r in reports]
    records.sort(key=lambda r: (r.get("m", 0.0), r.get("method", "")))
    try:
        with open(path, "w") as f:
            json.dump(records, f, indent=2)
            f.write("\n")
    except OSError as exc:
        raise IOError(f"cannot write report to {path}: {exc}") from exc
