"""Corpus ingestion: canonical paper records, source adapters, cleaning, grouping.

The canonical interchange format is JSON Lines, one record per line:

    {"id": str, "title": str, "abstract": str, "year": int, "venue": str,
     "rank": str?, "references": [str], "topics": [str]?}

Adapters normalize the Aminer DBLP v13 dump and PubMed-style exports into
the same shape. Records are immutable after parsing; every transformation
(cleaning, component selection) returns a new Corpus.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Iterator

logger = logging.getLogger(__name__)

VENUE_RANKS = ("Q1", "Q2", "Q3", "Q4", "A", "B", "C", "Unranked")

# Canonical field order; the writer emits exactly this so that
# parse -> serialize -> parse round-trips byte-for-byte.
_CANONICAL_KEYS = ("id", "title", "abstract", "year", "venue", "rank", "references", "topics")


class CorpusError(Exception):
    """Unreadable, empty, or structurally invalid corpus input."""


@dataclass(frozen=True)
class PaperRecord:
    """One bibliographic entry with its outgoing reference list."""

    id: str
    title: str = ""
    abstract: str = ""
    year: int | None = None
    venue: str = ""
    rank: str | None = None
    references: tuple[str, ...] = ()
    topics: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("record id must be non-empty")

    @property
    def n_topics(self) -> int:
        return len(self.topics) if self.topics is not None else 0


@dataclass(frozen=True)
class CleanPolicy:
    """Which cleaning predicates to apply; all off by default."""

    require_title: bool = False
    require_abstract: bool = False
    min_references: int = 0
    drop_dangling_refs: bool = False


@dataclass(frozen=True)
class GroupSpec:
    """Conjunction of year/venue/rank filters; at least one must be set."""

    year: int | None = None
    venue: str | None = None
    rank: str | None = None

    def __post_init__(self) -> None:
        if self.year is None and self.venue is None and self.rank is None:
            raise CorpusError("group spec must set at least one of year, venue, rank")


@dataclass
class Provenance:
    """Where a corpus came from and what was done to it."""

    source: str
    format: str
    cleaning: CleanPolicy | None = None
    counters: dict[str, int] = field(default_factory=dict)


class Corpus:
    """Immutable id-keyed collection of paper records.

    Records are stored in ascending id order; iteration and all derived
    outputs are deterministic. References that do not resolve inside the
    corpus are kept on the records but tallied in ``dangling_references``.
    """

    def __init__(self, records: Iterable[PaperRecord], provenance: Provenance):
        by_id: dict[str, PaperRecord] = {}
        for rec in records:
            if rec.id in by_id:
                raise CorpusError(f"duplicate record id {rec.id!r}")
            by_id[rec.id] = rec
        self._records = {rid: by_id[rid] for rid in sorted(by_id)}
        self.provenance = provenance
        self._dangling: int | None = None

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[PaperRecord]:
        return iter(self._records.values())

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._records

    def get(self, record_id: str) -> PaperRecord:
        return self._records[record_id]

    def ids(self) -> tuple[str, ...]:
        return tuple(self._records)

    @property
    def dangling_references(self) -> int:
        """Count of (record, reference) pairs that do not resolve in-corpus."""
        if self._dangling is None:
            self._dangling = sum(
                1 for rec in self for ref in rec.references if ref not in self._records
            )
        return self._dangling


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _normalize_references(raw: Iterable[str], own_id: str, counters: dict[str, int]) -> tuple[str, ...]:
    """Dedupe, drop self-references, and sort a raw reference list."""
    seen: set[str] = set()
    for ref in raw:
        ref = str(ref)
        if ref == own_id:
            counters["self_references_dropped"] = counters.get("self_references_dropped", 0) + 1
            continue
        if ref in seen:
            counters["duplicate_references_dropped"] = (
                counters.get("duplicate_references_dropped", 0) + 1
            )
            continue
        seen.add(ref)
    return tuple(sorted(seen))


def _normalize_rank(raw: object, counters: dict[str, int]) -> str | None:
    if raw is None:
        return None
    rank = str(raw)
    if rank not in VENUE_RANKS:
        counters["unknown_ranks"] = counters.get("unknown_ranks", 0) + 1
        return "Unranked"
    return rank


def _record_from_canonical(obj: dict, counters: dict[str, int]) -> PaperRecord:
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise ValueError("missing or empty id")
    year = obj.get("year")
    if year is not None and not isinstance(year, int):
        raise ValueError("year must be an integer when present")
    topics_raw = obj.get("topics")
    topics = tuple(sorted({str(t) for t in topics_raw})) if topics_raw is not None else None
    return PaperRecord(
        id=rid,
        title=str(obj.get("title", "")),
        abstract=str(obj.get("abstract", "")),
        year=year,
        venue=str(obj.get("venue", "")),
        rank=_normalize_rank(obj.get("rank"), counters),
        references=_normalize_references(obj.get("references", ()), rid, counters),
        topics=topics,
    )


def _record_from_dblp(obj: dict, counters: dict[str, int]) -> PaperRecord:
    rid = obj.get("_id") or obj.get("id")
    if not rid:
        raise ValueError("missing id")
    rid = str(rid)
    venue = obj.get("venue", "")
    if isinstance(venue, dict):
        venue = venue.get("raw", "") or venue.get("_id", "")
    year = obj.get("year")
    if year is not None:
        try:
            year = int(year)
        except (TypeError, ValueError):
            year = None
    fos = obj.get("fos")
    topics: tuple[str, ...] | None = None
    if fos:
        names = {f.get("name", "") if isinstance(f, dict) else str(f) for f in fos}
        names.discard("")
        topics = tuple(sorted(names)) if names else None
    return PaperRecord(
        id=rid,
        title=str(obj.get("title", "")),
        abstract=str(obj.get("abstract", "")),
        year=year,
        venue=str(venue),
        rank=_normalize_rank(obj.get("rank"), counters),
        references=_normalize_references(obj.get("references", ()), rid, counters),
        topics=topics,
    )


def _record_from_pubmed(obj: dict, counters: dict[str, int]) -> PaperRecord:
    rid = obj.get("pmid") or obj.get("id")
    if not rid:
        raise ValueError("missing pmid/id")
    rid = str(rid)
    year = obj.get("year", obj.get("pub_year"))
    if year is not None:
        try:
            year = int(year)
        except (TypeError, ValueError):
            year = None
    topics_raw = obj.get("mesh_terms", obj.get("topics"))
    topics = tuple(sorted({str(t) for t in topics_raw})) if topics_raw is not None else None
    return PaperRecord(
        id=rid,
        title=str(obj.get("title", "")),
        abstract=str(obj.get("abstract", "")),
        year=year,
        venue=str(obj.get("journal", obj.get("venue", ""))),
        rank=_normalize_rank(obj.get("rank"), counters),
        references=_normalize_references(obj.get("references", ()), rid, counters),
        topics=topics,
    )


_ADAPTERS = {
    "canonical": _record_from_canonical,
    "dblp_v13": _record_from_dblp,
    "pubmed": _record_from_pubmed,
}

# Aminer v13 dumps wrap integers in Mongo extended-JSON syntax.
_NUMBERINT = re.compile(r"NumberInt\(\s*(-?\d+)\s*\)")


def _iter_json_objects(stream: IO[str]) -> Iterator[tuple[int, str]]:
    """Yield (line_number, json_text) for each top-level object in the stream.

    Handles both JSON Lines (one object per line) and the Aminer array
    layout where each object is pretty-printed across several lines inside
    ``[ ... ]``. Brace depth is tracked outside string literals.
    """
    buf: list[str] = []
    depth = 0
    in_string = False
    escape = False
    start_line = 0
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not buf:
            if not stripped or stripped in ("[", "]", ","):
                continue
            # strip a leading array bracket glued to the first object
            if stripped.startswith("["):
                line = line.replace("[", "", 1)
            start_line = lineno
        for ch in line:
            if escape:
                escape = False
                continue
            if ch == "\\" and in_string:
                escape = True
                continue
            if ch == '"':
                in_string = not in_string
                continue
            if in_string:
                continue
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
        buf.append(line)
        if depth == 0:
            text = "".join(buf).strip()
            # strip trailing object separators / closing array bracket
            while text.endswith((",", "]")):
                text = text[:-1].rstrip()
            if text:
                yield start_line, text
            buf = []
    if buf:
        text = "".join(buf).strip()
        while text.endswith((",", "]")):
            text = text[:-1].rstrip()
        if text:
            yield start_line, text


def parse_corpus(path: str | Path, format: str = "canonical") -> Corpus:
    """Parse a raw corpus file into canonical records.

    Malformed entries are counted and skipped. Duplicate ids abort the
    parse with both offending line numbers; a file yielding zero records
    is an error.
    """
    if format not in _ADAPTERS:
        raise CorpusError(f"unknown corpus format {format!r}")
    adapter = _ADAPTERS[format]
    path = Path(path)
    counters: dict[str, int] = {"malformed": 0}
    records: dict[str, PaperRecord] = {}
    first_line: dict[str, int] = {}
    try:
        stream = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    with stream:
        for lineno, text in _iter_json_objects(stream):
            if format == "dblp_v13":
                text = _NUMBERINT.sub(r"\1", text)
            try:
                obj = json.loads(text)
                if not isinstance(obj, dict):
                    raise ValueError("entry is not a JSON object")
                rec = adapter(obj, counters)
            except (ValueError, CorpusError) as exc:
                counters["malformed"] += 1
                logger.debug("skipping malformed entry at line %d: %s", lineno, exc)
                continue
            if rec.id in records:
                raise CorpusError(
                    f"duplicate record id {rec.id!r} at lines "
                    f"{first_line[rec.id]} and {lineno}"
                )
            records[rec.id] = rec
            first_line[rec.id] = lineno
    if not records:
        raise CorpusError(f"no parseable records in {path}")
    corpus = Corpus(records.values(), Provenance(str(path), format, counters=counters))
    counters["dangling_references"] = corpus.dangling_references
    if counters["malformed"]:
        logger.warning("%s: skipped %d malformed entries", path, counters["malformed"])
    return corpus


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def dumps_record(rec: PaperRecord) -> str:
    """Serialize one record as a canonical JSON line (no trailing newline)."""
    obj: dict[str, object] = {
        "id": rec.id,
        "title": rec.title,
        "abstract": rec.abstract,
        "year": rec.year,
        "venue": rec.venue,
    }
    if rec.rank is not None:
        obj["rank"] = rec.rank
    obj["references"] = list(rec.references)
    if rec.topics is not None:
        obj["topics"] = list(rec.topics)
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_canonical(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus in canonical JSON Lines form (records in id order)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as out:
        for rec in corpus:
            out.write(dumps_record(rec))
            out.write("\n")


# ---------------------------------------------------------------------------
# Cleaning and subsetting
# ---------------------------------------------------------------------------


def _passes(rec: PaperRecord, policy: CleanPolicy, effective_refs: int) -> str | None:
    """Return the name of the first violated rule, or None."""
    if policy.require_title and not rec.title.strip():
        return "require_title"
    if policy.require_abstract and not rec.abstract.strip():
        return "require_abstract"
    if effective_refs < policy.min_references:
        return "min_references"
    return None


def clean(corpus: Corpus, policy: CleanPolicy) -> Corpus:
    """Apply a cleaning policy; returns a new corpus.

    With ``drop_dangling_refs`` the record filter and the reference pruning
    interact (removing a record may strand references elsewhere), so the
    filter iterates to a fixpoint. This is what makes clean idempotent.
    Removal counts per rule land in the result's provenance counters.
    """
    removed: dict[str, int] = {}
    survivors = {rec.id: rec for rec in corpus}
    pruned_refs = 0
    while True:
        ids = set(survivors)
        changed = False
        for rid in list(survivors):
            rec = survivors[rid]
            if policy.drop_dangling_refs:
                effective = sum(1 for ref in rec.references if ref in ids)
            else:
                effective = len(rec.references)
            rule = _passes(rec, policy, effective)
            if rule is not None:
                removed[rule] = removed.get(rule, 0) + 1
                del survivors[rid]
                changed = True
        if not changed:
            break
    if not survivors:
        raise CorpusError("cleaning policy removed every record")
    if policy.drop_dangling_refs:
        ids = set(survivors)
        for rid, rec in survivors.items():
            kept = tuple(ref for ref in rec.references if ref in ids)
            if len(kept) != len(rec.references):
                pruned_refs += len(rec.references) - len(kept)
                survivors[rid] = replace(rec, references=kept)
    counters = dict(corpus.provenance.counters)
    for rule, count in removed.items():
        counters[f"removed_{rule}"] = counters.get(f"removed_{rule}", 0) + count
    if pruned_refs:
        counters["dangling_references_pruned"] = (
            counters.get("dangling_references_pruned", 0) + pruned_refs
        )
    result = Corpus(
        survivors.values(),
        Provenance(corpus.provenance.source, corpus.provenance.format, policy, counters),
    )
    counters["dangling_references"] = result.dangling_references
    return result


def largest_weak_component(corpus: Corpus) -> Corpus:
    """Restrict the corpus to its largest weakly connected citation component.

    Ties are broken toward the component containing the smallest record id.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot take the largest component of an empty corpus")
    from csd.graph import build, weak_components

    graph = build(corpus)
    labels = weak_components(graph)
    members: dict[int, list[int]] = {}
    for node, label in labels.items():
        members.setdefault(label, []).append(node)
    # max size; ties -> smallest label, which is the smallest member NodeId
    # and therefore the smallest member id (interning is sorted by id)
    best = min(members, key=lambda lab: (-len(members[lab]), lab))
    keep = {graph.external_ids[node] for node in members[best]}
    counters = dict(corpus.provenance.counters)
    counters["component_dropped_records"] = len(corpus) - len(keep)
    return Corpus(
        (rec for rec in corpus if rec.id in keep),
        Provenance(
            corpus.provenance.source,
            corpus.provenance.format,
            corpus.provenance.cleaning,
            counters,
        ),
    )


def select_group(corpus: Corpus, spec: GroupSpec) -> tuple[str, ...]:
    """Ids of records matching every field set on the filter, sorted."""
    out = []
    for rec in corpus:
        if spec.year is not None and rec.year != spec.year:
            continue
        if spec.venue is not None and rec.venue != spec.venue:
            continue
        if spec.rank is not None and rec.rank != spec.rank:
            continue
        out.append(rec.id)
    return tuple(out)
