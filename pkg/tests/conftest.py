"""Shared fixtures: the eight-paper golden corpus and its planted vectors."""

from pathlib import Path

import pytest

from csd.corpus import parse_corpus
from csd.graph import build
from csd.semantics import NodeSimilarities, load_embeddings

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def f1_corpus():
    return parse_corpus(DATA_DIR / "f1.jsonl")


@pytest.fixture(scope="session")
def f1_graph(f1_corpus):
    return build(f1_corpus)


@pytest.fixture(scope="session")
def f1_table(f1_corpus):
    return load_embeddings(DATA_DIR / "f1_vectors.jsonl", f1_corpus)


@pytest.fixture(scope="session")
def f1_sims(f1_table, f1_graph):
    return NodeSimilarities(f1_table, f1_graph)


@pytest.fixture()
def n(f1_graph):
    """Map a record id like "3" to its graph node."""
    return f1_graph.node_of
