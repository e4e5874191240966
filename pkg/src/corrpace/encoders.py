"""Per-modality encoders mapping raw feature vectors to a shared embedding
width. Desk-scale stand-ins for heavyweight sequence encoders: each one is
a small MLP, so the machinery downstream (pairing, correlation scoring,
fusion) never cares what produced the embedding. Sequence-valued inputs
are a declared extension point, not supported here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .numerics import MlpCache, MlpParams, mlp_forward


@dataclass
class UnimodalEncoder:
    modality: int
    mlp: MlpParams

    @property
    def input_dim(self) -> int:
        return self.mlp.in_dim

    @property
    def output_dim(self) -> int:
        return self.mlp.out_dim

    def _check_width(self, features: np.ndarray) -> None:
        if features.shape[-1] != self.input_dim:
            raise ConfigError(
                f"modality {self.modality}: encoder expects feature width "
                f"{self.input_dim}, got {features.shape[-1]}"
            )

    def encode(self, features) -> np.ndarray:
        """Embed one feature vector or a (batch, width) stack."""
        arr = np.asarray(features, dtype=np.float64)
        self._check_width(arr)
        out, _ = mlp_forward(self.mlp, arr)
        return out

    def encode_with_cache(self, features) -> tuple[np.ndarray, MlpCache]:
        arr = np.asarray(features, dtype=np.float64)
        self._check_width(arr)
        return mlp_forward(self.mlp, arr)

    def copy(self) -> "UnimodalEncoder":
        return UnimodalEncoder(self.modality, self.mlp.copy())


def build_encoders(
    feature_widths: Sequence[int],
    embed_dim: int,
    hidden: Sequence[int],
    rng: np.random.Generator,
    activation: str = "relu",
) -> list[UnimodalEncoder]:
    """One encoder per modality, all emitting ``embed_dim`` embeddings."""
    if embed_dim < 1:
        raise ConfigError(f"embed_dim must be >= 1, got {embed_dim}")
    encoders = []
    for m, width in enumerate(feature_widths):
        sizes = [width, *hidden, embed_dim]
        encoders.append(UnimodalEncoder(m, MlpParams.init(sizes, rng, activation)))
    return encoders


def encode_all(
    encoders: Sequence[UnimodalEncoder], features: Sequence[np.ndarray], with_cache: bool = False
):
    """Encode every modality block of a dataset.

    Returns a list of (n, d) embedding matrices, plus the forward caches
    when ``with_cache`` is set (needed for backprop).
    """
    embeddings = []
    caches = []
    for enc, block in zip(encoders, features):
        if with_cache:
            emb, cache = enc.encode_with_cache(block)
            caches.append(cache)
        else:
            emb = enc.encode(block)
        embeddings.append(emb)
    return (embeddings, caches) if with_cache else embeddings


__all__ = ["UnimodalEncoder", "build_encoders", "encode_all"]
