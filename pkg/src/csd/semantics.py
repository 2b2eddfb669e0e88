"""Embedding storage and cosine similarity service.

Embedding files are JSON Lines, one ``{"id": str, "vector": [float, ...]}``
row per paper, all rows the same dimension. Lines starting with ``#`` are
treated as comments (the embedder records its model revision that way).
Vectors are stored as float32; similarities are computed in float64 so
threshold comparisons are stable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

if TYPE_CHECKING:
    from csd.corpus import Corpus
    from csd.graph import CitationGraph

logger = logging.getLogger(__name__)


class EmbeddingError(Exception):
    """Unreadable or inconsistent embedding input."""


@dataclass
class EmbeddingTable:
    """Per-paper dense vectors of a common dimension."""

    dim: int
    vectors: dict[str, np.ndarray]
    unresolved_ids: tuple[str, ...] = ()
    missing_ids: tuple[str, ...] = ()

    def __contains__(self, record_id: str) -> bool:
        return record_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric cosine matrix over an ordered id tuple."""

    ids: tuple[str, ...]
    values: np.ndarray

    def get(self, a: str, b: str) -> float:
        i, j = self.ids.index(a), self.ids.index(b)
        return float(self.values[i, j])


def load_embeddings(path: str | Path, corpus: "Corpus | None" = None) -> EmbeddingTable:
    """Load an embedding file, checking dimensional consistency.

    When a corpus is given, corpus ids without vectors are reported on the
    table (``missing_ids``); file ids absent from the corpus are kept but
    listed in ``unresolved_ids``.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    try:
        stream = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise EmbeddingError(f"cannot read embedding file {path}: {exc}") from exc
    with stream:
        for lineno, line in enumerate(stream, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
                rid = str(obj["id"])
                vec = np.asarray(obj["vector"], dtype=np.float32)
            except (ValueError, KeyError, TypeError) as exc:
                raise EmbeddingError(f"{path}:{lineno}: bad embedding row: {exc}") from exc
            if vec.ndim != 1:
                raise EmbeddingError(f"{path}:{lineno}: vector for {rid!r} is not 1-d")
            if dim is None:
                dim = int(vec.shape[0])
            elif vec.shape[0] != dim:
                raise EmbeddingError(
                    f"{path}:{lineno}: vector for {rid!r} has dim {vec.shape[0]}, "
                    f"expected {dim}"
                )
            vectors[rid] = vec
    if dim is None:
        raise EmbeddingError(f"no embedding rows in {path}")
    unresolved: tuple[str, ...] = ()
    missing: tuple[str, ...] = ()
    if corpus is not None:
        unresolved = tuple(sorted(rid for rid in vectors if rid not in corpus))
        missing = tuple(sorted(rid for rid in corpus.ids() if rid not in vectors))
        if unresolved:
            logger.warning("%d embedding ids do not resolve in the corpus", len(unresolved))
        if missing:
            logger.warning("%d corpus ids lack embeddings", len(missing))
    return EmbeddingTable(dim, vectors, unresolved, missing)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero-norm vectors are treated as similar to nothing."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EmbeddingError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def target_similarities(
    table: EmbeddingTable, v: str, refs: Iterable[str]
) -> dict[str, float]:
    """Cosine of the target against each reference that has a vector.

    References without vectors are skipped (logged); a missing target
    vector is an error.
    """
    if v not in table:
        raise EmbeddingError(f"no vector for target {v!r}")
    out: dict[str, float] = {}
    skipped = []
    for ref in sorted(set(refs)):
        if ref not in table:
            skipped.append(ref)
            continue
        out[ref] = cosine(table.vectors[v], table.vectors[ref])
    if skipped:
        logger.warning("target %s: %d references lack vectors", v, len(skipped))
    return out


def pairwise_similarities(table: EmbeddingTable, refs: Iterable[str]) -> SimilarityMatrix:
    """Symmetric cosine matrix over the references that have vectors."""
    ids = tuple(sorted(r for r in set(refs) if r in table))
    n = len(ids)
    values = np.ones((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            s = cosine(table.vectors[ids[i]], table.vectors[ids[j]])
            values[i, j] = s
            values[j, i] = s
    return SimilarityMatrix(ids, values)


class NodeSimilarities:
    """Cosine similarities addressed by graph node id, with caching.

    Bridges an id-keyed embedding table and the interned graph so the
    diversity layer can ask for Sim(u, w) in node terms. Pairs involving
    a node without a vector yield None. Safe under concurrent readers:
    cache entries are idempotent, so a racing duplicate write is harmless.
    """

    def __init__(self, table: EmbeddingTable, graph: "CitationGraph"):
        self._vecs: list[np.ndarray | None] = [
            table.vectors.get(eid) for eid in graph.external_ids
        ]
        self._cache: dict[tuple[int, int], float] = {}

    def has(self, node: int) -> bool:
        return self._vecs[node] is not None

    def sim(self, a: int, b: int) -> float | None:
        if a > b:
            a, b = b, a
        key = (a, b)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        va, vb = self._vecs[a], self._vecs[b]
        if va is None or vb is None:
            return None
        value = cosine(va, vb)
        self._cache[key] = value
        return value


class MappingSimilarities:
    """NodeSimilarities-compatible provider backed by an explicit pair map.

    Useful for synthetic experiments where similarity values are planted
    directly instead of derived from vectors.
    """

    def __init__(self, pairs: Mapping[tuple[int, int], float]):
        self._pairs = {(min(a, b), max(a, b)): float(s) for (a, b), s in pairs.items()}

    def has(self, node: int) -> bool:
        return True

    def sim(self, a: int, b: int) -> float | None:
        if a == b:
            return 1.0
        return self._pairs.get((min(a, b), max(a, b)))
