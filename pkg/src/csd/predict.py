"""Citation-prediction harness.

Assembles per-paper feature rows (reference count, early citations, and
optionally a diversity value), splits them deterministically, fits the
two native regressors (ordinary least squares and a Manhattan-distance
KNN), scores with R^2 / MSE, and exports the feature table as CSV so
external regressors can run on identical data.

No feature scaling is applied anywhere; the KNN operates on raw counts.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from csd.graph import CitationGraph, citation_series

if TYPE_CHECKING:
    from csd.corpus import Corpus
    from csd.diversity import DiversityResult, DiversityVariant

logger = logging.getLogger(__name__)

HORIZONS = (1, 5, 10)
EARLY_WINDOW_YEARS = 3


class PredictionError(Exception):
    """Unusable prediction input or configuration."""


@dataclass(frozen=True)
class FeatureRow:
    """One paper's predictor features and its citation target."""

    id: str
    n_references: int
    citations_3yr: int
    sd_value: float | None
    target: float
    horizon: int

    def __post_init__(self) -> None:
        if self.horizon not in HORIZONS:
            raise PredictionError(f"horizon must be one of {HORIZONS}, got {self.horizon}")
        if self.n_references < 0 or self.citations_3yr < 0:
            raise PredictionError("feature counts must be non-negative")


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    train_fraction: float = 0.8

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise PredictionError("train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class RegressionMetrics:
    r_squared: float | None
    mse: float


def assemble_features(
    corpus: "Corpus",
    graph: CitationGraph,
    results: Mapping[int, "DiversityResult"],
    horizon: int,
    variant: "DiversityVariant | None" = None,
) -> list[FeatureRow]:
    """One feature row per paper with complete data, in id order.

    The early-citation feature counts citers within three calendar years
    of publication; the target counts citers within the horizon. Papers
    without a publication year are excluded, as are papers lacking a
    diversity value when a variant is requested (baseline mode omits the
    diversity feature entirely). Exclusions are logged per reason.
    """
    if horizon not in HORIZONS:
        raise PredictionError(f"horizon must be one of {HORIZONS}, got {horizon}")
    rows = []
    excluded = {"missing_year": 0, "missing_sd": 0}
    for rec in corpus:
        node = graph.node_of(rec.id)
        if rec.year is None:
            excluded["missing_year"] += 1
            continue
        sd_value: float | None = None
        if variant is not None:
            res = results.get(node)
            if res is None or res.counts.get(variant) is None:
                excluded["missing_sd"] += 1
                continue
            sd_value = float(res.counts[variant])
        early = sum(citation_series(graph, node, rec.year, EARLY_WINDOW_YEARS).counts)
        target = float(sum(citation_series(graph, node, rec.year, horizon).counts))
        rows.append(
            FeatureRow(rec.id, len(graph.out_adj[node]), early, sd_value, target, horizon)
        )
    for reason, count in excluded.items():
        if count:
            logger.info("feature assembly: excluded %d papers (%s)", count, reason)
    return rows


def split(rows: Sequence[FeatureRow], spec: SplitSpec) -> tuple[list[FeatureRow], list[FeatureRow]]:
    """Deterministic seeded shuffle into train/test partitions."""
    if len(rows) < 5:
        raise PredictionError(f"need at least 5 rows to split, got {len(rows)}")
    order = np.random.default_rng(spec.seed).permutation(len(rows))
    n_train = int(len(rows) * spec.train_fraction)
    train = [rows[i] for i in order[:n_train]]
    test = [rows[i] for i in order[n_train:]]
    return train, test


def _design(rows: Sequence[FeatureRow]) -> np.ndarray:
    """Feature matrix: reference count, early citations, then diversity if present."""
    with_sd = rows[0].sd_value is not None
    for row in rows:
        if (row.sd_value is not None) != with_sd:
            raise PredictionError("rows mix baseline and diversity feature modes")
    cols = [
        [float(r.n_references) for r in rows],
        [float(r.citations_3yr) for r in rows],
    ]
    if with_sd:
        cols.append([float(r.sd_value) for r in rows])  # type: ignore[arg-type]
    return np.array(cols, dtype=np.float64).T


def _targets(rows: Sequence[FeatureRow]) -> np.ndarray:
    return np.array([r.target for r in rows], dtype=np.float64)


# ---------------------------------------------------------------------------
# Ordinary least squares
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearModel:
    coef: np.ndarray
    intercept: float
    rank_deficient: bool


def fit_linear(train: Sequence[FeatureRow]) -> LinearModel:
    """Least-squares fit with intercept.

    A rank-deficient design matrix falls back to the minimum-norm
    solution and is flagged on the model.
    """
    if not train:
        raise PredictionError("empty training set")
    x = _design(train)
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    solution, _, rank, _ = np.linalg.lstsq(design, _targets(train), rcond=None)
    deficient = rank < design.shape[1]
    if deficient:
        logger.warning("linear fit: rank-deficient design (rank %d of %d)", rank, design.shape[1])
    return LinearModel(solution[1:], float(solution[0]), deficient)


def predict_linear(model: LinearModel, rows: Sequence[FeatureRow]) -> np.ndarray:
    return _design(rows) @ model.coef + model.intercept


# ---------------------------------------------------------------------------
# K-nearest neighbours (Manhattan distance, uniform weights)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KnnModel:
    features: np.ndarray
    targets: np.ndarray
    k: int


def fit_knn(train: Sequence[FeatureRow], k: int = 7) -> KnnModel:
    if len(train) < k:
        raise PredictionError(f"training set of {len(train)} rows is smaller than k={k}")
    return KnnModel(_design(train), _targets(train), k)


def predict_knn(model: KnnModel, rows: Sequence[FeatureRow]) -> np.ndarray:
    """Mean target of the k nearest training rows under Manhattan distance.

    Distance ties are broken toward the lower training-row index.
    """
    queries = _design(rows)
    out = np.empty(len(rows), dtype=np.float64)
    for i, q in enumerate(queries):
        dists = np.abs(model.features - q).sum(axis=1)
        nearest = np.argsort(dists, kind="stable")[: model.k]
        out[i] = model.targets[nearest].mean()
    return out


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def mse(pred: Sequence[float], actual: Sequence[float]) -> float:
    if len(pred) != len(actual) or len(pred) == 0:
        raise PredictionError("pred and actual must be equal-length and non-empty")
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(actual, dtype=np.float64)
    return float(np.mean(diff * diff))


def r_squared(pred: Sequence[float], actual: Sequence[float]) -> float:
    """Coefficient of determination; undefined for a constant actual series."""
    if len(pred) != len(actual) or len(pred) == 0:
        raise PredictionError("pred and actual must be equal-length and non-empty")
    y = np.asarray(actual, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise PredictionError("r_squared undefined for a constant actual series")
    ss_res = float(np.sum((y - p) ** 2))
    return 1.0 - ss_res / ss_tot


def evaluate(pred: Sequence[float], actual: Sequence[float]) -> RegressionMetrics:
    """R^2 and MSE together; an undefined R^2 is reported as None."""
    try:
        r2: float | None = r_squared(pred, actual)
    except PredictionError as exc:
        logger.warning("%s", exc)
        r2 = None
    return RegressionMetrics(r2, mse(pred, actual))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_features(rows: Sequence[FeatureRow], path: str | Path) -> None:
    """Write the feature table as CSV, ordered by id.

    The diversity column appears only when the rows carry one; the target
    column is named for the horizon so exports are self-describing.
    """
    if not rows:
        raise PredictionError("nothing to export")
    with_sd = rows[0].sd_value is not None
    horizon = rows[0].horizon
    header = ["id", "n_references", "citations_3yr"]
    if with_sd:
        header.append("sd_value")
    header.append(f"target_h{horizon}")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in sorted(rows, key=lambda r: r.id):
            values = [row.id, str(row.n_references), str(row.citations_3yr)]
            if with_sd:
                values.append(format(row.sd_value, ".10g"))  # type: ignore[arg-type]
            values.append(format(row.target, ".10g"))
            writer.writerow(values)
