"""Skip-gram negative-sampling embeddings trained from scratch, plus a
plain-text vector store and nearest-neighbor queries.

Training is single-threaded and fully deterministic given the seed: same
corpus + same params -> bitwise-identical vectors.  Frequent-token
subsampling is deliberately omitted (corpora here are desk scale).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .corpus import Corpus
    from .matcher import Matcher


@dataclass
class TrainParams:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    min_count: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        for name in ("window", "negatives", "min_count", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")


@dataclass
class EmbeddingSpace:
    vocab: dict[str, int]
    vectors: np.ndarray  # shape (|vocab|, dim), float32
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def tokens(self) -> list[str]:
        out = [""] * len(self.vocab)
        for t, i in self.vocab.items():
            out[i] = t
        return out

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        if token not in self.vocab:
            raise KeyError(f"token {token!r} not in vocabulary")
        return self.vectors[self.vocab[token]]


@dataclass
class NeighborList:
    anchor: str
    neighbors: list[tuple[str, float]]  # (token, cosine), cosine non-increasing


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def train_sgns(corpus: "Corpus", matcher: "Matcher | None", params: TrainParams) -> EmbeddingSpace:
    """Train embeddings on the corpus with idiom spans rewritten to single
    tokens (when a matcher is given).

    Uses the classic two-matrix formulation: for every (center, context)
    pair, `negatives` noise tokens are drawn from the unigram^0.75
    distribution and a logistic update is applied with linearly decaying
    learning rate.  Per-epoch mean loss is recorded on the returned space.
    """
    from .matcher import rewrite_with_idiom_tokens

    sentences: list[list[str]] = []
    for post in corpus.posts:
        tokens = list(post.tokens)
        if matcher is not None:
            tokens = rewrite_with_idiom_tokens(matcher, tokens)
        sentences.append(tokens)

    counts = Counter(t for sent in sentences for t in sent)
    vocab_tokens = sorted(
        (t for t, c in counts.items() if c >= params.min_count),
        key=lambda t: (-counts[t], t),
    )
    if not vocab_tokens:
        raise ValueError("corpus too small: no token reaches min_count")
    vocab = {t: i for i, t in enumerate(vocab_tokens)}

    id_sentences = []
    for sent in sentences:
        ids = np.array([vocab[t] for t in sent if t in vocab], dtype=np.int64)
        if ids.size >= 2:
            id_sentences.append(ids)
    if not id_sentences:
        raise ValueError("corpus too small: no sentence with 2 in-vocabulary tokens")

    freq = np.array([counts[t] for t in vocab_tokens], dtype=np.float64) ** 0.75
    noise_cdf = np.cumsum(freq / freq.sum())
    noise_cdf[-1] = 1.0

    init_rng = np.random.default_rng(params.seed)
    dim = params.dim
    syn0 = ((init_rng.random((len(vocab), dim)) - 0.5) / dim).astype(np.float32)
    syn1 = np.zeros((len(vocab), dim), dtype=np.float32)

    n_centers = sum(len(ids) for ids in id_sentences)
    total_steps = params.epochs * n_centers
    min_lr = params.initial_lr * 1e-4
    neg = params.negatives

    step = 0
    epoch_losses: list[float] = []
    for _ in range(params.epochs):
        # identical draw stream every epoch: the per-epoch mean loss is then
        # measured on the same sampled objective, so it decreases under the
        # decaying learning rate instead of wobbling with sampling noise
        rng = np.random.default_rng([params.seed, 0x5E9])
        loss_sum = 0.0
        n_pairs = 0
        for ids in id_sentences:
            n = len(ids)
            windows = rng.integers(1, params.window + 1, size=n)
            for i in range(n):
                lr = max(min_lr, params.initial_lr * (1.0 - step / total_steps))
                step += 1
                b = windows[i]
                lo = max(0, i - b)
                ctx = np.concatenate((ids[lo:i], ids[i + 1 : i + 1 + b]))
                k = ctx.size
                if k == 0:
                    continue
                center = ids[i]
                noise = np.searchsorted(noise_cdf, rng.random(k * neg))
                rows = np.concatenate((ctx, noise))
                labels = np.zeros(rows.size, dtype=np.float32)
                labels[:k] = 1.0

                v = syn0[center]
                scores = _sigmoid(syn1[rows] @ v)
                loss_sum += -float(
                    np.log(np.clip(scores[:k], 1e-10, None)).sum()
                    + np.log(np.clip(1.0 - scores[k:], 1e-10, None)).sum()
                )
                n_pairs += rows.size

                g = (labels - scores) * lr
                grad_center = g @ syn1[rows]
                np.add.at(syn1, rows, g[:, None] * v[None, :])
                syn0[center] += grad_center
        epoch_losses.append(loss_sum / max(n_pairs, 1))

    return EmbeddingSpace(vocab=vocab, vectors=syn0, epoch_losses=epoch_losses)


def save_vectors(space: EmbeddingSpace, path: str) -> None:
    """Write the plain-text vector format: a "<vocab> <dim>" header, then
    one token + floats per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(space.vocab)} {space.dim}\n")
        for token in space.tokens:
            row = space.vectors[space.vocab[token]]
            fh.write(token + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def load_vectors(path: str) -> EmbeddingSpace:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("bad header: expected '<vocab_size> <dim>'")
        try:
            size, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise ValueError("bad header: expected two integers") from exc

        vocab: dict[str, int] = {}
        vectors = np.empty((size, dim), dtype=np.float32)
        row = 0
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if row >= size:
                raise ValueError(f"row {lineno}: more rows than header declares ({size})")
            token = parts[0]
            if token in vocab:
                raise ValueError(f"row {lineno}: duplicate token {token!r}")
            if len(parts) - 1 != dim:
                raise ValueError(f"row {lineno}: expected {dim} values, got {len(parts) - 1}")
            vocab[token] = row
            vectors[row] = np.array(parts[1:], dtype=np.float32)
            row += 1
        if row != size:
            raise ValueError(f"header declares {size} rows but file has {row}")
    return EmbeddingSpace(vocab=vocab, vectors=vectors)


def nearest_neighbors(space: EmbeddingSpace, token: str, k: int) -> NeighborList:
    """Top-k most cosine-similar tokens, descending; ties broken by token.

    The anchor itself is excluded.
    """
    if token not in space.vocab:
        raise KeyError(f"token {token!r} not in vocabulary")
    if k > len(space.vocab) - 1:
        raise ValueError(f"k={k} exceeds vocabulary size minus one ({len(space.vocab) - 1})")
    if k <= 0:
        return NeighborList(anchor=token, neighbors=[])

    mat = space.vectors.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    anchor_idx = space.vocab[token]
    if norms[anchor_idx] == 0.0:
        raise ValueError(f"anchor {token!r} has a zero vector")
    sims = mat @ (mat[anchor_idx] / norms[anchor_idx])
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(norms > 0, sims / np.where(norms > 0, norms, 1.0), -2.0)
    sims = np.clip(sims, -2.0, 1.0)

    ranked = sorted(
        ((t, float(sims[i])) for t, i in space.vocab.items() if i != anchor_idx),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return NeighborList(anchor=token, neighbors=ranked[:k])


def sentence_embedding(space: EmbeddingSpace, tokens: Sequence[str]) -> np.ndarray:
    """Bag-of-vectors sentence representation: the mean of in-vocabulary,
    non-stopword token vectors."""
    from .lexicon import STOPWORDS

    rows = [space.vocab[t] for t in tokens if t not in STOPWORDS and t in space.vocab]
    if not rows:
        raise ValueError("no in-vocabulary, non-stopword token to embed")
    return space.vectors[rows].astype(np.float64).mean(axis=0)
