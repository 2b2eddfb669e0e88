"""Document encoders behind one interface.

Two families:

- ``hash:<dim>`` — a dependency-free feature-hashing encoder. Tokens are
  hashed into signed buckets and the result is L2-normalized. Fully
  deterministic across runs and platforms; used offline and in tests.
- any other identifier — a Hugging Face transformer (default class:
  SPECTER-style document encoders). The document representation is the
  first-token embedding of the final hidden layer, computed in inference
  mode. Requires the ``hf`` extra.

Encoders return one float32 vector per text and report a revision string
that is recorded in the output file header for reproducibility.
"""

from __future__ import annotations

import hashlib
import logging
import re
from typing import Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\w+", re.UNICODE)


class EncoderError(Exception):
    """Encoder unavailable or text cannot be encoded."""


class Encoder(Protocol):
    model_id: str
    revision: str
    dim: int

    def encode(self, texts: Sequence[str]) -> list[np.ndarray | None]:
        """One vector per text; None marks an un-encodable text."""
        ...


class HashEncoder:
    """Signed feature hashing over word tokens, L2-normalized.

    Not a semantic model; it exists so the pipeline runs offline with
    stable, distinct vectors. A text with no word tokens has no
    representation and encodes to None.
    """

    revision = "builtin-1"

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise EncoderError(f"hash encoder dimension must be >= 2, got {dim}")
        self.dim = dim
        self.model_id = f"hash:{dim}"

    def _vector(self, text: str) -> np.ndarray | None:
        tokens = _TOKEN.findall(text.lower())
        if not tokens:
            return None
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "big")
            bucket = value % self.dim
            sign = 1.0 if (value >> 63) & 1 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # opposing signs cancelled every bucket; nudge deterministically
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)

    def encode(self, texts: Sequence[str]) -> list[np.ndarray | None]:
        return [self._vector(t) for t in texts]


class TransformerEncoder:
    """First-token document embedding from a pretrained transformer."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(
                "transformers/torch are not installed; install the 'hf' extra "
                "or use a hash:<dim> model id"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_id)
            self._model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderError(f"cannot load model {model_id!r}: {exc}") from exc
        self._torch = torch
        self._device = device
        self._model.to(device)
        self._model.eval()
        self.model_id = model_id
        self.revision = getattr(self._model.config, "_commit_hash", None) or "unpinned"
        self.dim = int(self._model.config.hidden_size)

    def encode(self, texts: Sequence[str]) -> list[np.ndarray | None]:
        if not texts:
            return []
        batch = self._tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=512,
            return_tensors="pt",
        ).to(self._device)
        with self._torch.no_grad():
            output = self._model(**batch)
        first_token = output.last_hidden_state[:, 0, :].cpu().numpy()
        return [row.astype(np.float32) for row in first_token]

    @property
    def sep_token(self) -> str:
        return self._tokenizer.sep_token or " "


_HASH_ID = re.compile(r"^hash:(\d+)$")

DEFAULT_MODEL = "allenai/specter"


def get_encoder(model_id: str, device: str = "cpu"):
    match = _HASH_ID.match(model_id)
    if match:
        return HashEncoder(int(match.group(1)))
    return TransformerEncoder(model_id, device)
