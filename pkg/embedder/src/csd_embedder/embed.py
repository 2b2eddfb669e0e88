"""Corpus-to-embedding-file pipeline and verification.

The input is the toolkit's canonical corpus (JSON Lines with ``id``,
``title``, ``abstract`` fields; other fields ignored here). The output is
the embedding file contract: an optional leading ``#`` comment row, then
``{"id": str, "vector": [float, ...]}`` rows of one common dimension, in
corpus order. Records without a usable title are skipped and reported,
never silently dropped.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from csd_embedder.encoders import DEFAULT_MODEL, EncoderError, get_encoder

logger = logging.getLogger(__name__)


class EmbedError(Exception):
    """Unreadable corpus, unusable model, or empty output."""


@dataclass
class EmbedJob:
    corpus: str | Path
    out: str | Path
    model: str = DEFAULT_MODEL
    batch_size: int = 32
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise EmbedError("batch size must be positive")


@dataclass
class EmbedReport:
    model: str
    revision: str
    dim: int
    rows_written: int
    skipped_no_title: list[str] = field(default_factory=list)
    skipped_unencodable: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "revision": self.revision,
            "dim": self.dim,
            "rows_written": self.rows_written,
            "skipped_no_title": self.skipped_no_title,
            "skipped_unencodable": self.skipped_unencodable,
        }


def _iter_corpus(path: Path) -> Iterator[tuple[str, str, str]]:
    """Yield (id, title, abstract) in file order; malformed lines are skipped."""
    try:
        stream = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise EmbedError(f"cannot read corpus {path}: {exc}") from exc
    with stream:
        for lineno, line in enumerate(stream, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                obj = json.loads(line)
                rid = str(obj["id"])
            except (ValueError, KeyError, TypeError):
                logger.warning("%s:%d: skipping malformed record", path, lineno)
                continue
            yield rid, str(obj.get("title", "")), str(obj.get("abstract", ""))


def _document_text(title: str, abstract: str, separator: str) -> str:
    title = title.strip()
    abstract = abstract.strip()
    if abstract:
        return f"{title}{separator}{abstract}"
    return title


def _format_vector(vec: np.ndarray) -> list[float]:
    return [float(x) for x in np.asarray(vec, dtype=np.float32)]


def embed_corpus(job: EmbedJob) -> EmbedReport:
    """Encode every titled record and write the embedding file atomically.

    Rows land in corpus order regardless of batching. The header comment
    records the model identifier and revision so reruns are attributable.
    """
    encoder = get_encoder(job.model, job.device)
    separator = getattr(encoder, "sep_token", " ")
    entries: list[tuple[str, str]] = []
    report = EmbedReport(encoder.model_id, encoder.revision, 0, 0)
    for rid, title, abstract in _iter_corpus(Path(job.corpus)):
        if not title.strip():
            report.skipped_no_title.append(rid)
            continue
        entries.append((rid, _document_text(title, abstract, separator)))
    if not entries and not report.skipped_no_title:
        raise EmbedError(f"no records in corpus {job.corpus}")

    out_path = Path(job.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = out_path.with_name(out_path.name + ".tmp")
    rows = 0
    dim: int | None = None
    with tmp_path.open("w", encoding="utf-8", newline="\n") as out:
        header_written = False
        for start in range(0, len(entries), job.batch_size):
            batch = entries[start : start + job.batch_size]
            vectors = encoder.encode([text for _, text in batch])
            for (rid, _), vec in zip(batch, vectors):
                if vec is None:
                    report.skipped_unencodable.append(rid)
                    continue
                if dim is None:
                    dim = int(vec.shape[0])
                    out.write(
                        f"# model={encoder.model_id} revision={encoder.revision} dim={dim}\n"
                    )
                    header_written = True
                row = {"id": rid, "vector": _format_vector(vec)}
                out.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
                rows += 1
        if not header_written:
            raise EmbedError("no record could be embedded")
    os.replace(tmp_path, out_path)
    report.dim = dim or 0
    report.rows_written = rows
    if report.skipped_no_title:
        logger.warning("skipped %d records without a title", len(report.skipped_no_title))
    if report.skipped_unencodable:
        logger.warning(
            "skipped %d records the encoder could not represent",
            len(report.skipped_unencodable),
        )
    return report


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class VerifyReport:
    dim: int
    rows: int
    corpus_records: int
    missing_ids: list[str]
    unresolved_ids: list[str]
    max_self_cosine_error: float

    @property
    def ok(self) -> bool:
        return self.rows > 0 and self.max_self_cosine_error <= 1e-6

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "rows": self.rows,
            "corpus_records": self.corpus_records,
            "missing": len(self.missing_ids),
            "missing_ids": self.missing_ids[:50],
            "unresolved_ids": self.unresolved_ids[:50],
            "max_self_cosine_error": self.max_self_cosine_error,
            "ok": self.ok,
        }


def _self_cosine(vec: np.ndarray) -> float:
    v = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return 0.0
    return float(np.dot(v, v) / (norm * norm))


def verify_embeddings(
    embedding_path: str | Path,
    corpus_path: str | Path,
    sample: int = 64,
) -> VerifyReport:
    """Check the written file against the contract and the source corpus.

    Reports dimension, row count, coverage of titled corpus records, file
    ids that do not resolve in the corpus, and the worst self-cosine
    deviation from 1 over a deterministic sample of rows.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    path = Path(embedding_path)
    try:
        stream = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise EmbedError(f"cannot read embeddings {path}: {exc}") from exc
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
                raise EmbedError(f"{path}:{lineno}: bad row: {exc}") from exc
            if dim is None:
                dim = int(vec.shape[0])
            elif vec.shape[0] != dim:
                raise EmbedError(
                    f"{path}:{lineno}: dimension {vec.shape[0]} != {dim} for {rid!r}"
                )
            vectors[rid] = vec
    if dim is None:
        raise EmbedError(f"no embedding rows in {path}")

    corpus_ids = [rid for rid, title, _ in _iter_corpus(Path(corpus_path)) if title.strip()]
    corpus_set = set(corpus_ids)
    missing = [rid for rid in corpus_ids if rid not in vectors]
    unresolved = sorted(rid for rid in vectors if rid not in corpus_set)

    sampled = sorted(vectors)[:: max(1, len(vectors) // sample)][:sample]
    worst = max(abs(_self_cosine(vectors[rid]) - 1.0) for rid in sampled)
    return VerifyReport(dim, len(vectors), len(corpus_ids), missing, unresolved, worst)
