"""Batch document embedder for the csd toolkit.

Reads a canonical JSON Lines corpus, encodes each paper's title and
abstract with a pluggable document encoder, and writes the embedding
file format the toolkit consumes: one ``{"id", "vector"}`` row per
paper, a comment header recording the model revision, rows in corpus
order.
"""

from csd_embedder.embed import EmbedError, EmbedJob, embed_corpus, verify_embeddings
from csd_embedder.encoders import HashEncoder, get_encoder

__version__ = "0.1.0"
