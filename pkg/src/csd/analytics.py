"""Statistical experiments over diversity results.

Covers the diversity-binned citation statistics, Pearson correlation in
grouped and per-paper modes, normalized ten-year citation trend curves,
and the topic-count interdisciplinarity correlation.

Quartiles follow a single nearest-rank convention shared with the
threshold rules: on the ascending sort of n values, the lower quartile
sits at 1-based index ceil(n/4) and the upper at ceil(3n/4); the IQR mean
averages that inclusive slice. Lists shorter than 4 fall back to the
plain mean.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from csd.corpus import PaperRecord
    from csd.diversity import DiversityResult, DiversityVariant

logger = logging.getLogger(__name__)

TREND_YEARS = 10


class AnalyticsError(Exception):
    """Undefined statistic or unusable input."""


class StatKind(str, Enum):
    MEDIAN = "median"
    IQR_MEAN = "iqr_mean"


class DiversityBin(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @staticmethod
    def classify(sd_value: int) -> "DiversityBin | None":
        """low: 1-3, medium: 4-6, high: >= 7; None for non-positive values."""
        if sd_value <= 0:
            return None
        if sd_value <= 3:
            return DiversityBin.LOW
        if sd_value <= 6:
            return DiversityBin.MEDIUM
        return DiversityBin.HIGH


# ---------------------------------------------------------------------------
# Scalar statistics
# ---------------------------------------------------------------------------


def mean(values: Sequence[float]) -> float:
    if not values:
        raise AnalyticsError("mean of empty list")
    return float(sum(values) / len(values))


def median(values: Sequence[float]) -> float:
    """Standard median; mean of the middle two for even length."""
    if not values:
        raise AnalyticsError("median of empty list")
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return float((ordered[mid - 1] + ordered[mid]) / 2)


def lower_quartile(values: Sequence[float]) -> float:
    """Nearest-rank lower quartile (1-based index ceil(n/4))."""
    if not values:
        raise AnalyticsError("quartile of empty list")
    ordered = sorted(values)
    return float(ordered[math.ceil(len(ordered) / 4) - 1])


def iqr_mean(values: Sequence[float]) -> float:
    """Mean of the ascending values between the quartile ranks, inclusive."""
    if not values:
        raise AnalyticsError("iqr_mean of empty list")
    ordered = sorted(values)
    n = len(ordered)
    if n < 4:
        return mean(ordered)
    lo = math.ceil(n / 4)
    hi = math.ceil(3 * n / 4)
    window = ordered[lo - 1 : hi]
    return float(sum(window) / len(window))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation coefficient.

    Raises for mismatched lengths, fewer than two points, or a constant
    series (the coefficient is undefined there; callers surface that as
    "undefined", never as 0).
    """
    if len(x) != len(y):
        raise AnalyticsError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise AnalyticsError("pearson needs at least two points")
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sxx = syy = 0.0
    for xi, yi in zip(x, y):
        dx = xi - mx
        dy = yi - my
        sxy += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        raise AnalyticsError("pearson undefined for a constant series")
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------------------
# Correlation reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupStat:
    sd_value: int
    size: int
    statistic: float


@dataclass
class CorrelationReport:
    """Pearson correlation between diversity values and citation statistics."""

    variant: str
    stat: StatKind
    mode: str  # "grouped" or "per_paper"
    groups: tuple[GroupStat, ...]
    r: float | None
    n_papers: int
    note: str | None = None


_STAT_FUNCS = {StatKind.MEDIAN: median, StatKind.IQR_MEAN: iqr_mean}


def correlation_by_diversity(
    papers: Iterable[tuple[int, float]],
    stat: StatKind,
    mode: str = "grouped",
    variant: str = "",
) -> CorrelationReport:
    """Correlate diversity values with citation counts.

    Grouped mode buckets papers by exact diversity value, reduces each
    bucket with the chosen statistic, and correlates (value, statistic)
    points. Per-paper mode correlates the raw pairs directly (the stat is
    ignored there). Fewer than two distinct diversity values is an error;
    an undefined coefficient (constant second series) is reported as
    r=None.
    """
    pairs = list(papers)
    groups: dict[int, list[float]] = {}
    for sd_value, citations in pairs:
        groups.setdefault(int(sd_value), []).append(float(citations))
    if len(groups) < 2:
        raise AnalyticsError(
            f"fewer than 2 diversity groups (got {len(groups)}); correlation undefined"
        )
    reduce = _STAT_FUNCS[stat]
    group_stats = tuple(
        GroupStat(value, len(members), reduce(members))
        for value, members in sorted(groups.items())
    )
    if mode == "grouped":
        xs: list[float] = [float(gs.sd_value) for gs in group_stats]
        ys: list[float] = [gs.statistic for gs in group_stats]
    elif mode == "per_paper":
        xs = [float(sd) for sd, _ in pairs]
        ys = [float(c) for _, c in pairs]
    else:
        raise AnalyticsError(f"unknown correlation mode {mode!r}")
    note = None
    try:
        r: float | None = pearson(xs, ys)
    except AnalyticsError as exc:
        r = None
        note = str(exc)
        logger.warning("correlation undefined (%s mode): %s", mode, exc)
    return CorrelationReport(variant, stat, mode, group_stats, r, len(pairs), note)


# ---------------------------------------------------------------------------
# Trend curves
# ---------------------------------------------------------------------------


@dataclass
class TrendSeries:
    """Mean normalized citation curve for one diversity bin."""

    bin: DiversityBin
    mean_normalized: tuple[float, ...]
    n_papers: int


def normalize_trend(counts: Sequence[float]) -> list[float]:
    """Divide a ten-entry citation series by its total.

    An all-zero series stays all-zero rather than dividing by zero.
    """
    if len(counts) != TREND_YEARS:
        raise AnalyticsError(f"trend series must have {TREND_YEARS} entries, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise AnalyticsError("trend series entries must be non-negative")
    total = float(sum(counts))
    if total == 0.0:
        return [0.0] * TREND_YEARS
    return [float(c) / total for c in counts]


def trend_by_bin(
    results: Iterable["DiversityResult"],
    series: Mapping[int, Sequence[float]],
    variant: "DiversityVariant",
) -> list[TrendSeries]:
    """Mean normalized citation curve per diversity bin.

    Papers are binned by the chosen variant's diversity value; each
    paper's series is normalized before averaging so that absolute
    citation volume differences drop out. Bins with no papers are
    omitted (with a log notice), as are papers with no reference set
    (diversity 0).
    """
    sums: dict[DiversityBin, list[float]] = {}
    counts: dict[DiversityBin, int] = {}
    skipped = 0
    for res in results:
        sd_value = res.counts.get(variant)
        if sd_value is None:
            skipped += 1
            continue
        bin_ = DiversityBin.classify(sd_value)
        if bin_ is None:
            skipped += 1
            continue
        normalized = normalize_trend(series[res.target])
        acc = sums.setdefault(bin_, [0.0] * TREND_YEARS)
        for i, val in enumerate(normalized):
            acc[i] += val
        counts[bin_] = counts.get(bin_, 0) + 1
    if skipped:
        logger.info("trend: skipped %d papers without a usable diversity value", skipped)
    out = []
    for bin_ in DiversityBin:
        if bin_ not in counts:
            logger.info("trend: no papers in %s diversity bin", bin_.value)
            continue
        n = counts[bin_]
        out.append(TrendSeries(bin_, tuple(v / n for v in sums[bin_]), n))
    return out


# ---------------------------------------------------------------------------
# Interdisciplinarity
# ---------------------------------------------------------------------------


def topic_correlation(
    results: Iterable["DiversityResult"],
    records: Iterable["PaperRecord"],
    variant: "DiversityVariant",
) -> float | None:
    """Pearson r between per-paper diversity and topic count.

    Returns None (with a log notice) when the coefficient is undefined,
    e.g. a constant topic count. Papers without topic data are excluded;
    having none at all is an error.
    """
    topic_counts = {rec.id: rec.n_topics for rec in records if rec.topics is not None}
    if not topic_counts:
        raise AnalyticsError("no topic data on any record")
    xs = []
    ys = []
    for res in results:
        sd_value = res.counts.get(variant)
        if sd_value is None or res.external_id not in topic_counts:
            continue
        xs.append(float(sd_value))
        ys.append(float(topic_counts[res.external_id]))
    if len(xs) < 2:
        raise AnalyticsError("fewer than two papers with both diversity and topic data")
    try:
        return pearson(xs, ys)
    except AnalyticsError as exc:
        logger.warning("topic correlation undefined: %s", exc)
        return None


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------


def write_correlation_csv(reports: Iterable[CorrelationReport], out: IO[str]) -> None:
    """Per-group rows for every grouped report."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["variant", "stat", "mode", "sd_value", "group_size", "statistic"])
    for rep in reports:
        if rep.mode != "grouped":
            continue
        for gs in rep.groups:
            writer.writerow(
                [rep.variant, rep.stat.value, rep.mode, gs.sd_value, gs.size, format(gs.statistic, ".10g")]
            )


def correlation_summary(report: CorrelationReport) -> dict:
    return {
        "variant": report.variant,
        "stat": report.stat.value,
        "mode": report.mode,
        "r": report.r,
        "n_groups": len(report.groups),
        "n_papers": report.n_papers,
        **({"note": report.note} if report.note else {}),
    }


def write_correlation_json(reports: Iterable[CorrelationReport], out: IO[str]) -> None:
    json.dump([correlation_summary(r) for r in reports], out, indent=2, sort_keys=True)
    out.write("\n")


def write_trend_csv(series: Iterable[TrendSeries], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["bin", "year_offset", "mean_normalized", "n_papers"])
    for ts in series:
        for offset, value in enumerate(ts.mean_normalized):
            writer.writerow([ts.bin.value, offset, format(value, ".10g"), ts.n_papers])
