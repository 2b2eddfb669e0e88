"""Structural diversity of reference sets under five edge-enhancement schemes.

For a target paper v with reference set R, the diversity of a variant is
the number of connected components of the undirected view of R plus that
variant's edge union:

    plain                       internal citation edges only
    combined                    + co-citation and coupling edges
    semantic_enhanced           + similarity edges gated by theta1
    combined_enhanced           + co-citation/coupling edges gated by theta2
    semantic_combined_enhanced  semantic_enhanced ∪ combined_enhanced
    combined_semantic_enhanced  combined ∪ semantic_enhanced

All edge sets are scoped to one target's reference set; nothing global is
materialized. Enhancement edges are undirected: a pair is "already cited"
when either direction exists between the two references.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Protocol, Sequence

from csd.analytics import iqr_mean, lower_quartile, mean
from csd.graph import CitationGraph, UnionFind, induced_subgraph, reference_set

logger = logging.getLogger(__name__)

Pair = tuple[int, int]


class DiversityError(Exception):
    """Missing inputs or unusable threshold configuration."""


class SimilarityProvider(Protocol):
    def has(self, node: int) -> bool: ...

    def sim(self, a: int, b: int) -> float | None: ...


class DiversityVariant(str, Enum):
    PLAIN = "plain"
    COMBINED = "combined"
    SEMANTIC_ENHANCED = "semantic_enhanced"
    COMBINED_ENHANCED = "combined_enhanced"
    SEMANTIC_COMBINED_ENHANCED = "semantic_combined_enhanced"
    COMBINED_SEMANTIC_ENHANCED = "combined_semantic_enhanced"


#: Column codes used in CSV output, in canonical order.
VARIANT_CODES: dict[DiversityVariant, str] = {
    DiversityVariant.PLAIN: "sd_r",
    DiversityVariant.COMBINED: "sd_c",
    DiversityVariant.SEMANTIC_ENHANCED: "sd_ss",
    DiversityVariant.COMBINED_ENHANCED: "sd_cs",
    DiversityVariant.SEMANTIC_COMBINED_ENHANCED: "sd_scs",
    DiversityVariant.COMBINED_SEMANTIC_ENHANCED: "sd_css",
}

SEMANTIC_VARIANTS = frozenset(
    {
        DiversityVariant.SEMANTIC_ENHANCED,
        DiversityVariant.COMBINED_ENHANCED,
        DiversityVariant.SEMANTIC_COMBINED_ENHANCED,
        DiversityVariant.COMBINED_SEMANTIC_ENHANCED,
    }
)


class Theta1Rule(str, Enum):
    MEAN_TARGET_REF = "mean_target_ref"
    LOWER_QUARTILE_TARGET_REF = "lower_quartile_target_ref"


class Theta2Rule(str, Enum):
    IQRMEAN_PAIRWISE_REF = "iqrmean_pairwise_ref"
    IQRMEAN_TARGET_REF = "iqrmean_target_ref"


@dataclass(frozen=True)
class ThresholdPolicy:
    """How theta1 (semantic edges) and theta2 (gated combinatorial edges)
    are derived per target; explicit overrides win when set."""

    theta1_rule: Theta1Rule = Theta1Rule.MEAN_TARGET_REF
    theta2_rule: Theta2Rule = Theta2Rule.IQRMEAN_PAIRWISE_REF
    theta1_override: float | None = None
    theta2_override: float | None = None

    @classmethod
    def dblp(cls, theta1: float | None = None, theta2: float | None = None) -> "ThresholdPolicy":
        """Mean target-reference similarity for theta1, pairwise IQR mean for theta2."""
        return cls(
            Theta1Rule.MEAN_TARGET_REF,
            Theta2Rule.IQRMEAN_PAIRWISE_REF,
            theta1,
            theta2,
        )

    @classmethod
    def pubmed(cls, theta1: float | None = None, theta2: float | None = None) -> "ThresholdPolicy":
        """Lower quartile of target-reference similarity for theta1, IQR mean
        of target-reference similarity for theta2."""
        return cls(
            Theta1Rule.LOWER_QUARTILE_TARGET_REF,
            Theta2Rule.IQRMEAN_TARGET_REF,
            theta1,
            theta2,
        )


@dataclass
class DiversityResult:
    """Per-target diversity counts with the inputs that produced them."""

    target: int
    external_id: str
    n_refs: int
    counts: dict[DiversityVariant, int]
    edge_counts: dict[DiversityVariant, int]
    theta1: float | None
    theta2: float | None
    error: str | None = None


def _norm(u: int, w: int) -> Pair:
    return (u, w) if u < w else (w, u)


# ---------------------------------------------------------------------------
# Edge sets (all scoped to one target's reference set)
# ---------------------------------------------------------------------------


def co_citation_edges(g: CitationGraph, v: int, refs: frozenset[int]) -> frozenset[Pair]:
    """Pairs of references cited together by some third paper (not v itself)."""
    pairs: set[Pair] = set()
    by_citer: dict[int, list[int]] = {}
    for u in refs:
        for x in g.in_adj[u]:
            if x != v:
                by_citer.setdefault(x, []).append(u)
    for cited in by_citer.values():
        cited.sort()
        for i in range(len(cited)):
            for j in range(i + 1, len(cited)):
                pairs.add((cited[i], cited[j]))
    return frozenset(pairs)


def coupling_edges(g: CitationGraph, v: int, refs: frozenset[int]) -> frozenset[Pair]:
    """Pairs of references that both cite some common paper."""
    pairs: set[Pair] = set()
    by_cited: dict[int, list[int]] = {}
    for u in refs:
        for y in g.out_adj[u]:
            by_cited.setdefault(y, []).append(u)
    for citers in by_cited.values():
        citers.sort()
        for i in range(len(citers)):
            for j in range(i + 1, len(citers)):
                pairs.add((citers[i], citers[j]))
    return frozenset(pairs)


def _existing_pairs(existing_edges: Iterable[Pair]) -> frozenset[Pair]:
    return frozenset(_norm(u, w) for u, w in existing_edges)


def semantic_edges(
    sims: SimilarityProvider,
    v: int,
    refs: frozenset[int],
    theta1: float,
    existing: frozenset[Pair],
) -> frozenset[Pair]:
    """Reference pairs with similarity >= theta1 that are not already cited.

    Pairs where a similarity is unavailable (missing vector) never gain an
    edge.
    """
    ordered = sorted(refs)
    pairs: set[Pair] = set()
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            pair = (ordered[i], ordered[j])
            if pair in existing:
                continue
            s = sims.sim(*pair)
            if s is not None and s >= theta1:
                pairs.add(pair)
    return frozenset(pairs)


def filtered_co_citation_edges(
    g: CitationGraph,
    sims: SimilarityProvider,
    v: int,
    refs: frozenset[int],
    theta2: float,
    existing: frozenset[Pair] | None = None,
) -> frozenset[Pair]:
    """Co-citation pairs that clear theta2 and are not already cited."""
    if existing is None:
        existing = _existing_pairs(induced_subgraph(g, refs).edges)
    out: set[Pair] = set()
    for pair in co_citation_edges(g, v, refs):
        if pair in existing:
            continue
        s = sims.sim(*pair)
        if s is not None and s >= theta2:
            out.add(pair)
    return frozenset(out)


def filtered_coupling_edges(
    g: CitationGraph,
    sims: SimilarityProvider,
    v: int,
    refs: frozenset[int],
    theta2: float,
    existing: frozenset[Pair] | None = None,
) -> frozenset[Pair]:
    """Coupling pairs that clear theta2 and are not already cited."""
    if existing is None:
        existing = _existing_pairs(induced_subgraph(g, refs).edges)
    out: set[Pair] = set()
    for pair in coupling_edges(g, v, refs):
        if pair in existing:
            continue
        s = sims.sim(*pair)
        if s is not None and s >= theta2:
            out.add(pair)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------


def _target_ref_sims(sims: SimilarityProvider, v: int, refs: frozenset[int]) -> list[float]:
    return [s for u in sorted(refs) if (s := sims.sim(v, u)) is not None]


def _pairwise_ref_sims(sims: SimilarityProvider, refs: frozenset[int]) -> list[float]:
    ordered = sorted(refs)
    return [
        s
        for i in range(len(ordered))
        for j in range(i + 1, len(ordered))
        if (s := sims.sim(ordered[i], ordered[j])) is not None
    ]


def _resolve_theta1(
    sims: SimilarityProvider, v: int, refs: frozenset[int], policy: ThresholdPolicy
) -> float:
    if policy.theta1_override is not None:
        return float(policy.theta1_override)
    values = _target_ref_sims(sims, v, refs)
    if not values:
        raise DiversityError(f"no target-reference similarities for node {v}")
    if policy.theta1_rule is Theta1Rule.MEAN_TARGET_REF:
        return float(mean(values))
    return float(lower_quartile(values))


def _resolve_theta2(
    sims: SimilarityProvider, v: int, refs: frozenset[int], policy: ThresholdPolicy
) -> float | None:
    """theta2, or None when there are no reference pairs to gate."""
    if policy.theta2_override is not None:
        return float(policy.theta2_override)
    if len(refs) < 2:
        return None
    if policy.theta2_rule is Theta2Rule.IQRMEAN_PAIRWISE_REF:
        values = _pairwise_ref_sims(sims, refs)
    else:
        values = _target_ref_sims(sims, v, refs)
    if not values:
        raise DiversityError(f"no similarities to derive theta2 for node {v}")
    return float(iqr_mean(values))


def resolve_thresholds(
    sims: SimilarityProvider,
    v: int,
    refs: frozenset[int],
    policy: ThresholdPolicy,
) -> tuple[float, float]:
    """Resolve (theta1, theta2) for one target under the policy.

    Raises when a rule has no similarity values to work from and no
    override is set.
    """
    if not refs:
        raise DiversityError("cannot resolve thresholds for an empty reference set")
    theta1 = _resolve_theta1(sims, v, refs, policy)
    theta2 = _resolve_theta2(sims, v, refs, policy)
    if theta2 is None:
        raise DiversityError(f"no reference pairs to derive theta2 for node {v}")
    return theta1, theta2


# ---------------------------------------------------------------------------
# Diversity computation
# ---------------------------------------------------------------------------


def _component_count(refs: frozenset[int], pairs: Iterable[Pair]) -> int:
    ordered = sorted(refs)
    if not ordered:
        return 0
    pos = {n: i for i, n in enumerate(ordered)}
    uf = UnionFind(len(ordered))
    for a, b in pairs:
        uf.union(pos[a], pos[b])
    return uf.count


def _variant_pairs(
    variant: DiversityVariant,
    base: frozenset[Pair],
    e1: frozenset[Pair],
    e2: frozenset[Pair],
    e3: frozenset[Pair],
    e4: frozenset[Pair],
    e5: frozenset[Pair],
) -> frozenset[Pair]:
    if variant is DiversityVariant.PLAIN:
        return base
    if variant is DiversityVariant.COMBINED:
        return base | e1 | e2
    if variant is DiversityVariant.SEMANTIC_ENHANCED:
        return base | e3
    if variant is DiversityVariant.COMBINED_ENHANCED:
        return base | e4 | e5
    if variant is DiversityVariant.SEMANTIC_COMBINED_ENHANCED:
        return base | e3 | e4 | e5
    if variant is DiversityVariant.COMBINED_SEMANTIC_ENHANCED:
        return base | e1 | e2 | e3
    raise DiversityError(f"unknown variant {variant!r}")


def diversity_profile(
    g: CitationGraph,
    sims: SimilarityProvider | None,
    v: int,
    policy: ThresholdPolicy | None = None,
    variants: Sequence[DiversityVariant] | None = None,
) -> DiversityResult:
    """Compute the requested variants for one target, sharing edge sets.

    Semantic variants require a similarity provider. theta2 is left
    unresolved (None) when the target has fewer than two references, in
    which case the gated edge sets are vacuously empty.
    """
    wanted = tuple(variants) if variants is not None else tuple(DiversityVariant)
    refs = reference_set(g, v)
    eid = g.external_ids[v]
    if not refs:
        zero = {w: 0 for w in wanted}
        return DiversityResult(v, eid, 0, dict(zero), dict(zero), None, None)
    needs_sims = any(w in SEMANTIC_VARIANTS for w in wanted)
    if needs_sims and sims is None:
        raise DiversityError(f"variant set {sorted(w.value for w in wanted)} requires similarities")

    base = _existing_pairs(induced_subgraph(g, refs).edges)
    needs_combo = any(
        w
        in (
            DiversityVariant.COMBINED,
            DiversityVariant.COMBINED_ENHANCED,
            DiversityVariant.SEMANTIC_COMBINED_ENHANCED,
            DiversityVariant.COMBINED_SEMANTIC_ENHANCED,
        )
        for w in wanted
    )
    e1 = co_citation_edges(g, v, refs) if needs_combo else frozenset()
    e2 = coupling_edges(g, v, refs) if needs_combo else frozenset()

    theta1 = theta2 = None
    e3 = e4 = e5 = frozenset()
    if needs_sims:
        assert sims is not None
        policy = policy or ThresholdPolicy()
        theta1 = _resolve_theta1(sims, v, refs, policy)
        theta2 = _resolve_theta2(sims, v, refs, policy)
        e3 = semantic_edges(sims, v, refs, theta1, base)
        if theta2 is not None:
            e4 = filtered_co_citation_edges(g, sims, v, refs, theta2, base)
            e5 = filtered_coupling_edges(g, sims, v, refs, theta2, base)

    counts: dict[DiversityVariant, int] = {}
    edge_counts: dict[DiversityVariant, int] = {}
    for w in wanted:
        pairs = _variant_pairs(w, base, e1, e2, e3, e4, e5)
        counts[w] = _component_count(refs, pairs)
        edge_counts[w] = len(pairs)
    return DiversityResult(v, eid, len(refs), counts, edge_counts, theta1, theta2)


def structural_diversity(
    g: CitationGraph,
    v: int,
    variant: DiversityVariant,
    policy: ThresholdPolicy | None = None,
    sims: SimilarityProvider | None = None,
) -> int:
    """Component count of one variant's enhanced reference subgraph.

    Returns 0 when the target cites nothing.
    """
    return diversity_profile(g, sims, v, policy, (variant,)).counts[variant]


def compute_all(
    g: CitationGraph,
    sims: SimilarityProvider | None,
    targets: Iterable[int],
    policy: ThresholdPolicy | None = None,
    variants: Sequence[DiversityVariant] | None = None,
    max_workers: int | None = None,
) -> list[DiversityResult]:
    """Diversity profiles for a batch of targets, in ascending node order.

    Per-target failures (typically a missing target vector under a
    derived-threshold policy) are recorded on the result rather than
    aborting the batch; such results carry the combinatorial variants
    only. Targets are independent, so the batch may fan out over a
    thread pool; results come back in target order either way.
    """
    target_list = sorted(set(targets))
    if not target_list:
        raise DiversityError("empty target set")
    wanted = tuple(variants) if variants is not None else tuple(DiversityVariant)
    if sims is None and any(w in SEMANTIC_VARIANTS for w in wanted):
        raise DiversityError(
            f"variant set {sorted(w.value for w in wanted)} requires similarities"
        )
    fallback = tuple(w for w in wanted if w not in SEMANTIC_VARIANTS)

    def one(v: int) -> DiversityResult:
        try:
            return diversity_profile(g, sims, v, policy, wanted)
        except DiversityError as exc:
            logger.warning("target %s: %s", g.external_ids[v], exc)
            partial = (
                diversity_profile(g, None, v, policy, fallback)
                if fallback
                else DiversityResult(
                    v, g.external_ids[v], len(reference_set(g, v)), {}, {}, None, None
                )
            )
            partial.error = str(exc)
            return partial

    if max_workers is not None and max_workers > 1 and len(target_list) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, target_list))
    return [one(v) for v in target_list]


# ---------------------------------------------------------------------------
# Batch output
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "target_id",
    "n_refs",
    "sd_r",
    "sd_c",
    "sd_ss",
    "sd_cs",
    "sd_scs",
    "sd_css",
    "theta1",
    "theta2",
)


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".10g")


def write_diversity_csv(results: Iterable[DiversityResult], out: IO[str]) -> None:
    """Write batch results as CSV in canonical column order."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    by_code = {code: variant for variant, code in VARIANT_CODES.items()}
    for res in results:
        row = [res.external_id, str(res.n_refs)]
        for code in CSV_COLUMNS[2:8]:
            variant = by_code[code]
            row.append(_fmt(res.counts.get(variant)))
        row.append(_fmt(res.theta1))
        row.append(_fmt(res.theta2))
        writer.writerow(row)
