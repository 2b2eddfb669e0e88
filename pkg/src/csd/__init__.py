"""Citation structural diversity toolkit.

Builds citation graphs from bibliographic corpora, enhances them with
co-citation, coupling, and embedding-similarity edges, and computes six
structural-diversity metrics plus the downstream analytics (correlation
reports, citation trend curves, and a citation-prediction harness).
"""

from csd.corpus import (
    CleanPolicy,
    Corpus,
    CorpusError,
    GroupSpec,
    PaperRecord,
    clean,
    largest_weak_component,
    parse_corpus,
    select_group,
    write_canonical,
)
from csd.graph import (
    BaseGraph,
    CitationGraph,
    GraphError,
    SubgraphView,
    base_graph,
    build,
    citation_series,
    connected_component_count,
    induced_subgraph,
    reference_set,
    weak_components,
)
from csd.semantics import (
    EmbeddingError,
    EmbeddingTable,
    NodeSimilarities,
    SimilarityMatrix,
    cosine,
    load_embeddings,
    pairwise_similarities,
    target_similarities,
)
from csd.diversity import (
    DiversityError,
    DiversityResult,
    DiversityVariant,
    ThresholdPolicy,
    compute_all,
    resolve_thresholds,
    structural_diversity,
)
from csd.analytics import (
    AnalyticsError,
    CorrelationReport,
    DiversityBin,
    StatKind,
    TrendSeries,
    correlation_by_diversity,
    iqr_mean,
    median,
    normalize_trend,
    pearson,
    topic_correlation,
    trend_by_bin,
)
from csd.predict import (
    FeatureRow,
    PredictionError,
    SplitSpec,
    assemble_features,
    export_features,
    fit_knn,
    fit_linear,
    mse,
    predict_knn,
    predict_linear,
    r_squared,
    split,
)

__version__ = "0.1.0"
