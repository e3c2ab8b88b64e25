"""Text normalization, vocabulary construction, and embedding pretraining.

Normalization lowercases, replaces URLs with a marker token, spells out
standalone integers, and splits on anything non-alphanumeric.  Vocabulary
construction filters by document frequency (absolute minimum, relative
maximum, both bounds inclusive-retain).  A small in-package skip-gram
trainer with negative sampling provides deterministic embedding
pretraining; any other trainer satisfying the same callable contract can be
plugged in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from chatternet.errors import ConfigurationError, DataError, NumericalError

PAD, UNK, URL, NUM = "<PAD>", "<UNK>", "<URL>", "<NUM>"
SPECIALS = (PAD, UNK, URL, NUM)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TOKEN_RE = re.compile(r"[a-z0-9]+")
_URL_SENTINEL = "\x00url\x00"

_ONES = ("zero one two three four five six seven eight nine ten eleven twelve "
         "thirteen fourteen fifteen sixteen seventeen eighteen nineteen").split()
_TENS = ["", ""] + "twenty thirty forty fifty sixty seventy eighty ninety".split()
_SCALES = ((10 ** 12, "trillion"), (10 ** 9, "billion"),
           (10 ** 6, "million"), (10 ** 3, "thousand"))
_MAX_SPELLED = 10 ** 15


def spell_integer(n: int) -> list[str]:
    """English words for a nonnegative integer, as separate lowercase tokens."""
    if n < 0:
        raise ValueError("spell_integer takes nonnegative integers")
    if n < 20:
        return [_ONES[n]]
    if n < 100:
        tens, rest = divmod(n, 10)
        return [_TENS[tens]] + (spell_integer(rest) if rest else [])
    if n < 1000:
        hundreds, rest = divmod(n, 100)
        return spell_integer(hundreds) + ["hundred"] + (spell_integer(rest) if rest else [])
    for scale, name in _SCALES:
        if n >= scale:
            major, rest = divmod(n, scale)
            return spell_integer(major) + [name] + (spell_integer(rest) if rest else [])
    raise AssertionError("unreachable")


def normalize(text: str) -> list[str]:
    """Lowercased tokens with URLs and numerals rewritten.

    URLs collapse to a single marker token; standalone integers become their
    spelled-out words (very large numbers fall back to the numeric marker).
    Splitting keeps alphanumeric runs only, so punctuation vanishes.
    """
    lowered = _URL_RE.sub(f" {_URL_SENTINEL} ", text).lower()
    tokens: list[str] = []
    for piece in lowered.split():
        if piece == _URL_SENTINEL:
            tokens.append(URL)
            continue
        for tok in _TOKEN_RE.findall(piece):
            if tok.isdigit():
                value = int(tok)
                if value < _MAX_SPELLED:
                    tokens.extend(spell_integer(value))
                else:
                    tokens.append(NUM)
            else:
                tokens.append(tok)
    return tokens


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class Vocabulary:
    """Token-to-id map with document frequencies.

    Ids are dense and contiguous; the four marker tokens occupy ids 0..3
    with PAD pinned at 0.  Marker tokens are exempt from the frequency
    bounds; every other retained token satisfies min_df <= df and
    df/n_docs <= max_df.
    """

    token_to_id: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int
    min_df: int
    max_df: float

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, self.token_to_id[UNK])

    def tokens(self) -> list[str]:
        ordered = sorted(self.token_to_id.items(), key=lambda kv: kv[1])
        return [tok for tok, _ in ordered]


def build_vocab(corpus: Iterable[Sequence[str]], max_df: float = 0.8, min_df: int = 5) -> Vocabulary:
    """Build a vocabulary from normalized token lists.

    Tokens with absolute document frequency below ``min_df`` or relative
    document frequency above ``max_df`` are excluded (both bounds inclusive
    on the retain side) and will encode as UNK.
    """
    doc_freq: dict[str, int] = {}
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        for token in set(doc):
            doc_freq[token] = doc_freq.get(token, 0) + 1
    if n_docs == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    token_to_id = {tok: i for i, tok in enumerate(SPECIALS)}
    kept = [
        tok for tok, df in doc_freq.items()
        if tok not in token_to_id and df >= min_df and df / n_docs <= max_df
    ]
    for tok in sorted(kept):
        token_to_id[tok] = len(token_to_id)
    return Vocabulary(token_to_id, doc_freq, n_docs, min_df, max_df)


@dataclass(frozen=True, slots=True)
class TokenSequence:
    """Fixed-length id sequence; positions past true_length are PAD."""

    ids: tuple[int, ...]
    true_length: int


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int) -> TokenSequence:
    """Truncate to the prefix of ``max_len`` tokens and right-pad with PAD."""
    if max_len < 0:
        raise ConfigurationError("max_len must be nonnegative")
    ids = [vocab.id_of(t) for t in tokens[:max_len]]
    true_length = len(ids)
    ids.extend([0] * (max_len - true_length))
    return TokenSequence(tuple(ids), true_length)


def decode(seq: TokenSequence, vocab: Vocabulary) -> list[str]:
    """Tokens for the non-PAD prefix (UNK substitutions included)."""
    ordered = vocab.tokens()
    return [ordered[i] for i in seq.ids[: seq.true_length]]


# --- persistence -----------------------------------------------------------

VOCAB_FORMAT = "chatternet-vocab-v1"


def save_vocab(path, vocab: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# {VOCAB_FORMAT}\tn_docs={vocab.n_docs}\t"
                     f"min_df={vocab.min_df}\tmax_df={vocab.max_df}\n")
        for token in vocab.tokens():
            handle.write(f"{token}\t{vocab.token_to_id[token]}\t{vocab.doc_freq.get(token, 0)}\n")


def load_vocab(path) -> Vocabulary:
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if VOCAB_FORMAT not in header:
            raise DataError(f"{path}: not a {VOCAB_FORMAT} file")
        meta = dict(part.split("=", 1) for part in header.split("\t")[1:])
        token_to_id: dict[str, int] = {}
        doc_freq: dict[str, int] = {}
        for line in handle:
            token, id_str, df_str = line.rstrip("\n").split("\t")
            token_to_id[token] = int(id_str)
            doc_freq[token] = int(df_str)
    return Vocabulary(token_to_id, doc_freq, int(meta["n_docs"]),
                      int(meta["min_df"]), float(meta["max_df"]))


def save_embeddings(path, matrix: np.ndarray) -> None:
    """Persist as .npy (self-describing header: shape, dtype, order)."""
    np.save(path, np.ascontiguousarray(matrix, dtype=np.float64))


def load_embeddings(path) -> np.ndarray:
    matrix = np.load(path)
    if matrix.ndim != 2:
        raise DataError(f"{path}: embedding matrix must be 2-D")
    if np.isnan(matrix).any():
        raise DataError(f"{path}: embedding matrix contains NaN")
    return matrix


# ---------------------------------------------------------------------------
# Skip-gram pretraining
# ---------------------------------------------------------------------------

# Trainer contract: (sentences of token ids, vocab size, dim, window,
# iterations, seed) -> (vocab_size, dim) float array.  Row 0 is reserved for
# PAD and is zeroed by the caller regardless of what the trainer returns.
SkipGramTrainer = Callable[[list[list[int]], int, int, int, int, int], np.ndarray]


def _subsampled_pairs(sentence: list[int], window: int, rng: np.random.Generator):
    for pos, center in enumerate(sentence):
        span = int(rng.integers(1, window + 1))
        lo = max(0, pos - span)
        hi = min(len(sentence), pos + span + 1)
        for ctx_pos in range(lo, hi):
            if ctx_pos != pos:
                yield center, sentence[ctx_pos]


def skipgram_negative_sampling(
    sentences: list[list[int]],
    vocab_size: int,
    dim: int,
    window: int,
    iterations: int,
    seed: int,
    negatives: int = 5,
    lr: float = 0.025,
) -> np.ndarray:
    """Reference skip-gram trainer (SGD, negative sampling, unigram^0.75).

    Deterministic for a fixed seed.  Intended for the modest corpora this
    package trains on; plug in an external trainer for large corpora.
    """
    rng = np.random.default_rng(seed)
    counts = np.zeros(vocab_size, dtype=np.float64)
    for sent in sentences:
        for tok in sent:
            counts[tok] += 1
    noise = counts ** 0.75
    if noise.sum() == 0:
        raise DataError("skip-gram corpus contains no tokens")
    noise /= noise.sum()
    w_in = (rng.random((vocab_size, dim)) - 0.5) / dim
    w_out = np.zeros((vocab_size, dim), dtype=np.float64)
    total_steps = max(1, iterations * len(sentences))
    step = 0
    for _ in range(iterations):
        for sent in sentences:
            step += 1
            alpha = lr * max(1e-4, 1.0 - step / total_steps)
            for center, context in _subsampled_pairs(sent, window, rng):
                targets = np.empty(negatives + 1, dtype=np.int64)
                targets[0] = context
                targets[1:] = rng.choice(vocab_size, size=negatives, p=noise)
                labels = np.zeros(negatives + 1)
                labels[0] = 1.0
                v = w_in[center]
                u = w_out[targets]
                scores = 1.0 / (1.0 + np.exp(-u @ v))
                grad = (scores - labels)[:, None]
                w_in[center] -= alpha * (grad * u).sum(axis=0)
                w_out[targets] -= alpha * grad * v
    return w_in


def pretrain_embeddings(
    sentences: list[list[int]],
    vocab_size: int,
    dim: int = 100,
    window: int = 10,
    iterations: int = 500,
    seed: int = 0,
    trainer: SkipGramTrainer | None = None,
) -> np.ndarray:
    """Pretrain the shared word-embedding matrix on encoded sentences.

    PAD ids are stripped from the sentences before training and the PAD row
    of the result is zeroed (it stays frozen downstream).
    """
    if dim <= 0 or window <= 0 or iterations <= 0:
        raise ConfigurationError("dim, window, and iterations must all be positive")
    if not sentences:
        raise DataError("cannot pretrain embeddings on an empty corpus")
    cleaned = [[tok for tok in sent if tok != 0] for sent in sentences]
    cleaned = [sent for sent in cleaned if sent]
    if not cleaned:
        raise DataError("cannot pretrain embeddings: corpus has only PAD tokens")
    train = trainer or skipgram_negative_sampling
    matrix = np.asarray(train(cleaned, vocab_size, dim, window, iterations, seed),
                        dtype=np.float64)
    if matrix.shape != (vocab_size, dim):
        raise ConfigurationError(
            f"trainer returned shape {matrix.shape}, expected {(vocab_size, dim)}"
        )
    matrix = matrix.copy()
    matrix[0] = 0.0
    if np.isnan(matrix).any():
        raise NumericalError("skip-gram trainer produced NaN embeddings")
    return matrix


@dataclass(slots=True)
class TextConfig:
    """Text-pipeline settings shared by training and evaluation."""

    max_len_submission: int = 50
    max_len_news: int = 100
    min_df: int = 5
    max_df: float = 0.8
    embed_dim: int = 100
    window: int = 10
    iterations: int = 500
    pretrain: bool = True

    def __post_init__(self) -> None:
        if self.max_len_submission <= 0 or self.max_len_news <= 0:
            raise ConfigurationError("text lengths must be positive")
        if self.min_df < 0 or not (0.0 < self.max_df <= 1.0):
            raise ConfigurationError("document-frequency bounds out of range")
