"""Command-line pipeline: ingest -> component -> sd -> correlate/trends/predict -> report.

Outputs are written atomically (temp file + rename) and contain nothing
nondeterministic, so rerunning a command on identical inputs produces
byte-identical files. Exit codes: 0 success, 1 usage error, 2 data error.
Log level comes from the CSD_LOG environment variable
(error/warn/info/debug).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from csd import analytics, diversity
from csd import corpus as corpus_mod
from csd import graph as graph_mod
from csd import predict as predict_mod
from csd.analytics import AnalyticsError, StatKind
from csd.corpus import CleanPolicy, Corpus, CorpusError, GroupSpec
from csd.diversity import DiversityError, DiversityVariant, ThresholdPolicy, VARIANT_CODES
from csd.graph import CitationGraph, GraphError
from csd.predict import PredictionError, SplitSpec
from csd.semantics import EmbeddingError, NodeSimilarities, load_embeddings

logger = logging.getLogger(__name__)

USAGE_EXIT = 1
DATA_EXIT = 2

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_DATA_ERRORS = (
    CorpusError,
    GraphError,
    EmbeddingError,
    DiversityError,
    AnalyticsError,
    PredictionError,
    FileNotFoundError,
)

# Flags that default to something other than None; applied after the config
# merge so that precedence is CLI flag > config file > default.
_FALLBACKS = {
    "format": "canonical",
    "theta_policy": "dblp",
    "window": 3,
    "horizon": 5,
    "min_references": 0,
    "seed": 0,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage by default; the contract wants 1."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("CSD_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, payload: object) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _render(write) -> str:
    buf = io.StringIO()
    write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", help="input corpus file")
    p.add_argument(
        "--format",
        choices=("dblp_v13", "pubmed", "canonical"),
        help="layout of the corpus file (default: canonical)",
    )


def _add_group_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--year", type=int, help="restrict to records from this year")
    p.add_argument("--venue", help="restrict to records from this venue")
    p.add_argument("--rank", choices=corpus_mod.VENUE_RANKS, help="restrict to this venue rank")


def _add_semantic_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", help="embedding JSONL file (enables semantic variants)")
    p.add_argument("--theta1", type=float, help="fixed semantic-edge threshold")
    p.add_argument("--theta2", type=float, help="fixed gated-combinatorial threshold")
    p.add_argument(
        "--theta-policy",
        choices=("dblp", "pubmed"),
        help="threshold derivation rules when no fixed values are given (default: dblp)",
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output path (file or directory per command)")
    p.add_argument("--config", help="JSON config file; explicit flags take precedence")
    p.add_argument("--threads", type=int, help="worker bound (default: available cores)")


_VARIANT_ALIASES = {code: variant for variant, code in VARIANT_CODES.items()}
_VARIANT_ALIASES.update({variant.value: variant for variant in DiversityVariant})


def _parse_variants(raw: str | None, have_sims: bool) -> tuple[DiversityVariant, ...]:
    if raw is None:
        if have_sims:
            return tuple(DiversityVariant)
        return (DiversityVariant.PLAIN, DiversityVariant.COMBINED)
    out = []
    for name in raw.split(","):
        name = name.strip()
        if name not in _VARIANT_ALIASES:
            raise CorpusError(
                f"unknown variant {name!r}; choose from {sorted(set(_VARIANT_ALIASES))}"
            )
        out.append(_VARIANT_ALIASES[name])
    return tuple(dict.fromkeys(out))


def _finalize_args(args: argparse.Namespace) -> argparse.Namespace:
    """Merge config-file values under explicit flags, then apply defaults."""
    if getattr(args, "config", None):
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise CorpusError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(overrides, dict):
            raise CorpusError("config file must contain a JSON object")
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                logger.warning("config key %r does not apply to this command", key)
                continue
            current = getattr(args, attr)
            if current is None or current is False:
                setattr(args, attr, value)
    for attr, fallback in _FALLBACKS.items():
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, fallback)
    if getattr(args, "threads", None) is None:
        args.threads = os.cpu_count() or 1
    for required in ("corpus", "out"):
        if hasattr(args, required) and getattr(args, required) is None:
            raise CorpusError(f"--{required} is required (flag or config)")
    return args


# ---------------------------------------------------------------------------
# Pipeline plumbing shared by the analysis commands
# ---------------------------------------------------------------------------


def _load_corpus(args: argparse.Namespace) -> Corpus:
    return corpus_mod.parse_corpus(args.corpus, args.format)


def _threshold_policy(args: argparse.Namespace) -> ThresholdPolicy:
    maker = ThresholdPolicy.pubmed if args.theta_policy == "pubmed" else ThresholdPolicy.dblp
    return maker(args.theta1, args.theta2)


def _group_spec(args: argparse.Namespace) -> GroupSpec | None:
    if args.year is None and args.venue is None and args.rank is None:
        return None
    return GroupSpec(args.year, args.venue, args.rank)


def _select_targets(args: argparse.Namespace, corp: Corpus, g: CitationGraph) -> list[int]:
    if getattr(args, "targets", None):
        ids = [t.strip() for t in args.targets.split(",") if t.strip()]
        return [g.node_of(i) for i in ids]
    spec = _group_spec(args)
    ids = corpus_mod.select_group(corp, spec) if spec else corp.ids()
    return [g.node_of(i) for i in ids]


def _diversity_results(
    args: argparse.Namespace,
    corp: Corpus,
    variants: tuple[DiversityVariant, ...] | None = None,
):
    g = graph_mod.build(corp)
    sims = None
    if args.embeddings:
        table = load_embeddings(args.embeddings, corp)
        sims = NodeSimilarities(table, g)
    if variants is None:
        variants = _parse_variants(getattr(args, "variant", None), sims is not None)
    targets = _select_targets(args, corp, g)
    policy = _threshold_policy(args)
    results = diversity.compute_all(g, sims, targets, policy, variants, max_workers=args.threads)
    return g, results, variants


def _citation_counts(g: CitationGraph, nodes: Sequence[int], window: int) -> dict[int, int]:
    """Citations gathered within `window` years of publication, per node."""
    out = {}
    for node in nodes:
        year = g.years[node]
        if year is None:
            continue
        out[node] = sum(graph_mod.citation_series(g, node, year, window).counts)
    return out


def _correlation_reports(results, counts, variants, stats) -> list[analytics.CorrelationReport]:
    reports = []
    for variant in variants:
        pairs = [
            (res.counts[variant], counts[res.target])
            for res in results
            if variant in res.counts and res.target in counts
        ]
        for stat in stats:
            for mode in ("grouped", "per_paper"):
                reports.append(
                    analytics.correlation_by_diversity(pairs, stat, mode, VARIANT_CODES[variant])
                )
    return reports


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    corp = _load_corpus(args)
    policy = CleanPolicy(
        require_title=args.require_title,
        require_abstract=args.require_abstract,
        min_references=args.min_references,
        drop_dangling_refs=args.drop_dangling_refs,
    )
    cleaned = corpus_mod.clean(corp, policy)
    out = Path(args.out)
    lines = [corpus_mod.dumps_record(rec) for rec in cleaned]
    _atomic_write(out, "\n".join(lines) + "\n")
    report = {
        "input": str(args.corpus),
        "format": args.format,
        "records_in": len(corp),
        "records_out": len(cleaned),
        "policy": {
            "require_title": policy.require_title,
            "require_abstract": policy.require_abstract,
            "min_references": policy.min_references,
            "drop_dangling_refs": policy.drop_dangling_refs,
        },
        "counters": dict(sorted(cleaned.provenance.counters.items())),
    }
    _write_json(out.with_name(out.name + ".report.json"), report)
    return 0


def cmd_component(args: argparse.Namespace) -> int:
    corp = _load_corpus(args)
    component = corpus_mod.largest_weak_component(corp)
    lines = [corpus_mod.dumps_record(rec) for rec in component]
    _atomic_write(Path(args.out), "\n".join(lines) + "\n")
    logger.info("kept %d of %d records", len(component), len(corp))
    return 0


def cmd_sd(args: argparse.Namespace) -> int:
    corp = _load_corpus(args)
    _, results, _ = _diversity_results(args, corp)
    _atomic_write(Path(args.out), _render(lambda out: diversity.write_diversity_csv(results, out)))
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    corp = _load_corpus(args)
    g, results, wanted = _diversity_results(args, corp)
    counts = _citation_counts(g, [r.target for r in results], args.window)
    stats: tuple[StatKind, ...] = (StatKind.MEDIAN, StatKind.IQR_MEAN)
    if args.stat:
        stats = (StatKind.IQR_MEAN,) if args.stat == "iqrmean" else (StatKind.MEDIAN,)
    reports = _correlation_reports(results, counts, wanted, stats)
    out_dir = Path(args.out)
    _atomic_write(
        out_dir / "correlation.csv",
        _render(lambda out: analytics.write_correlation_csv(reports, out)),
    )
    _atomic_write(
        out_dir / "correlation.json",
        _render(lambda out: analytics.write_correlation_json(reports, out)),
    )
    return 0


def cmd_trends(args: argparse.Namespace) -> int:
    corp = _load_corpus(args)
    variant = _parse_variants(args.variant, True)[0] if args.variant else DiversityVariant.PLAIN
    g, results, _ = _diversity_results(args, corp, variants=(variant,))
    series = {}
    usable = []
    for res in results:
        year = g.years[res.target]
        if year is None:
            continue
        series[res.target] = graph_mod.citation_series(
            g, res.target, year, analytics.TREND_YEARS
        ).counts
        usable.append(res)
    trend = analytics.trend_by_bin(usable, series, variant)
    _atomic_write(
        Path(args.out) / "trends.csv",
        _render(lambda out: analytics.write_trend_csv(trend, out)),
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    corp = _load_corpus(args)
    variant = _parse_variants(args.variant, True)[0] if args.variant else None
    g, results, _ = _diversity_results(
        args, corp, variants=(variant,) if variant else (DiversityVariant.PLAIN,)
    )
    by_node = {res.target: res for res in results}
    rows = predict_mod.assemble_features(corp, g, by_node, args.horizon, variant=variant)
    train, test = predict_mod.split(rows, SplitSpec(args.seed))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    predict_mod.export_features(rows, out_dir / "features.csv")
    label = VARIANT_CODES[variant] if variant else "baseline"
    actual = [r.target for r in test]
    linear = predict_mod.fit_linear(train)
    knn = predict_mod.fit_knn(train, k=7)
    payload = [
        {
            "model": name,
            "horizon": args.horizon,
            "variant_or_baseline": label,
            "r2": metrics.r_squared,
            "mse": metrics.mse,
            "n_train": len(train),
            "n_test": len(test),
            "seed": args.seed,
        }
        for name, metrics in (
            ("LR", predict_mod.evaluate(predict_mod.predict_linear(linear, test), actual)),
            ("KNN", predict_mod.evaluate(predict_mod.predict_knn(knn, test), actual)),
        )
    ]
    _write_json(out_dir / "metrics.json", payload)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    """Run diversity, correlation, trends, and prediction; aggregate one summary."""
    out_dir = Path(args.out)
    corp = _load_corpus(args)
    g, results, wanted = _diversity_results(args, corp)
    _atomic_write(
        out_dir / "diversity.csv",
        _render(lambda out: diversity.write_diversity_csv(results, out)),
    )
    counts = _citation_counts(g, [r.target for r in results], args.window)
    reports = []
    for variant in wanted:
        pairs = [
            (res.counts[variant], counts[res.target])
            for res in results
            if variant in res.counts and res.target in counts
        ]
        for stat in (StatKind.MEDIAN, StatKind.IQR_MEAN):
            for mode in ("grouped", "per_paper"):
                try:
                    reports.append(
                        analytics.correlation_by_diversity(pairs, stat, mode, VARIANT_CODES[variant])
                    )
                except AnalyticsError as exc:
                    logger.warning("%s %s/%s: %s", VARIANT_CODES[variant], stat.value, mode, exc)
    _atomic_write(
        out_dir / "correlation.csv",
        _render(lambda out: analytics.write_correlation_csv(reports, out)),
    )

    bin_variant = wanted[0]
    series = {}
    usable = []
    for res in results:
        year = g.years[res.target]
        if year is None:
            continue
        series[res.target] = graph_mod.citation_series(
            g, res.target, year, analytics.TREND_YEARS
        ).counts
        usable.append(res)
    trend = analytics.trend_by_bin(usable, series, bin_variant)
    _atomic_write(
        out_dir / "trends.csv",
        _render(lambda out: analytics.write_trend_csv(trend, out)),
    )

    prediction: list[dict] | str
    try:
        by_node = {res.target: res for res in results}
        rows = predict_mod.assemble_features(corp, g, by_node, args.horizon, variant=bin_variant)
        train, test = predict_mod.split(rows, SplitSpec(args.seed))
        actual = [r.target for r in test]
        linear = predict_mod.fit_linear(train)
        knn = predict_mod.fit_knn(train, k=7)
        prediction = [
            {
                "model": name,
                "horizon": args.horizon,
                "variant_or_baseline": VARIANT_CODES[bin_variant],
                "r2": metrics.r_squared,
                "mse": metrics.mse,
                "n_train": len(train),
                "n_test": len(test),
                "seed": args.seed,
            }
            for name, metrics in (
                ("LR", predict_mod.evaluate(predict_mod.predict_linear(linear, test), actual)),
                ("KNN", predict_mod.evaluate(predict_mod.predict_knn(knn, test), actual)),
            )
        ]
    except PredictionError as exc:
        logger.warning("prediction skipped: %s", exc)
        prediction = f"skipped: {exc}"

    summary = {
        "corpus": str(args.corpus),
        "records": len(corp),
        "edges": g.n_edges,
        "targets": len(results),
        "variants": [VARIANT_CODES[v] for v in wanted],
        "correlations": [analytics.correlation_summary(r) for r in reports],
        "trends": [
            {"bin": ts.bin.value, "n_papers": ts.n_papers} for ts in trend
        ],
        "prediction": prediction,
        "seed": args.seed,
    }
    _write_json(out_dir / "report.json", summary)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="csd", description="citation structural diversity pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, clean, and canonicalize a corpus")
    _add_corpus_args(p)
    p.add_argument("--require-title", action="store_true")
    p.add_argument("--require-abstract", action="store_true")
    p.add_argument("--min-references", type=int)
    p.add_argument("--drop-dangling-refs", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("component", help="keep the largest weakly connected component")
    _add_corpus_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_component)

    p = sub.add_parser("sd", help="compute structural diversity values")
    _add_corpus_args(p)
    _add_semantic_args(p)
    _add_group_args(p)
    p.add_argument("--variant", help="comma-separated variants (default: all available)")
    p.add_argument("--targets", help="comma-separated record ids (default: whole group)")
    _add_common(p)
    p.set_defaults(func=cmd_sd)

    p = sub.add_parser("correlate", help="diversity vs. citation-count correlation report")
    _add_corpus_args(p)
    _add_semantic_args(p)
    _add_group_args(p)
    p.add_argument("--variant", help="comma-separated variants (default: all available)")
    p.add_argument("--stat", choices=("median", "iqrmean"), help="restrict to one statistic")
    p.add_argument("--window", type=int, help="citation window in years (default: 3)")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("trends", help="normalized ten-year citation trend curves per bin")
    _add_corpus_args(p)
    _add_semantic_args(p)
    _add_group_args(p)
    p.add_argument("--variant", help="variant to bin by (default: plain)")
    _add_common(p)
    p.set_defaults(func=cmd_trends)

    p = sub.add_parser("predict", help="fit and score the citation predictors")
    _add_corpus_args(p)
    _add_semantic_args(p)
    _add_group_args(p)
    p.add_argument("--variant", help="diversity variant feature (omit for baseline)")
    p.add_argument("--horizon", type=int, choices=(1, 5, 10), help="target window (default: 5)")
    p.add_argument("--seed", type=int, help="split seed (default: 0)")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="run the pipeline and aggregate one summary JSON")
    _add_corpus_args(p)
    _add_semantic_args(p)
    _add_group_args(p)
    p.add_argument("--variant", help="comma-separated variants (default: all available)")
    p.add_argument("--window", type=int)
    p.add_argument("--horizon", type=int, choices=(1, 5, 10))
    p.add_argument("--seed", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse handles --help (0) and usage errors (1, via _Parser)
        return int(exc.code or 0)
    try:
        args = _finalize_args(args)
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"csd: error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
