"""Classical cascade-growth baseline: hand-built features plus a pluggable
step classifier.

Feature definitions follow the published expressions verbatim, including
the last-half temporal-gap average whose divisor (k/2 - 1) does not match
its k/2+1 summands; it is kept as printed.  The "org" configuration keeps
only the features of the original cascade-prediction work (per-comment
elapsed times, the two gap averages, and sentiment polarity); "full" adds
tf-idf bag-of-words, text complexity, LIX readability, referral count,
word/sentence counts, and the subreddit.

The growth-step protocol observes the first k comments of a submission and
predicts the step label floor(final_size / k); accuracy is judged by the
step-wise rank correlation only.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from chatternet.errors import ConfigurationError, DataError
from chatternet.evaluation import STEP_BIN_SIZE, stepwise_labels
from chatternet.textprep import normalize

logger = logging.getLogger(__name__)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_SENTENCE_RE = re.compile(r"[.!?]+")
_WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)?", re.UNICODE)

ORG_FEATURES = ("commenting_time", "avg_gap_first_half", "avg_gap_last_half", "polarity")


def complexity(term_frequencies: dict[str, int]) -> float:
    """Degree of unique token use: mean of tf_t * (ln|T| - ln tf_t) over terms.

    The empty term set maps to 0 by convention.
    """
    if not term_frequencies:
        return 0.0
    n_terms = len(term_frequencies)
    log_n = math.log(n_terms)
    return sum(tf * (log_n - math.log(tf)) for tf in term_frequencies.values()) / n_terms


def lix(text: str) -> float:
    """Readability: words per sentence plus 100 * share of words longer than 6 letters."""
    sentences = [s for s in _SENTENCE_RE.split(text) if s.strip()]
    word_list = _WORD_RE.findall(text)
    if not sentences or not word_list:
        raise DataError("lix needs at least one sentence and one word")
    long_words = sum(1 for w in word_list if len(w) > 6)
    return len(word_list) / len(sentences) + 100.0 * long_words / len(word_list)


def temporal_gaps(comment_times: Sequence[float], submission_time: float,
                  k: int = STEP_BIN_SIZE) -> tuple[float, float]:
    """Average gap among the first k/2 comments and average elapsed time of
    the last k/2, both divided by k/2 - 1 as printed."""
    if k < 4 or k % 2:
        raise ConfigurationError("k must be an even integer >= 4")
    if len(comment_times) != k:
        raise DataError(f"temporal_gaps needs exactly {k} comment times, got {len(comment_times)}")
    times = [submission_time] + list(comment_times)
    if any(b < a for a, b in zip(times, times[1:])):
        raise DataError("comment times must be sorted and not precede the submission")
    half = k // 2
    denom = half - 1
    avg_first = sum(times[i] - times[i - 1] for i in range(1, half)) / denom
    avg_last = sum(times[i] - times[0] for i in range(half, k + 1)) / denom
    return avg_first, avg_last


def referral_count(text: str) -> int:
    return len(_URL_RE.findall(text))


def count_words_sentences(text: str) -> tuple[int, int]:
    words = _WORD_RE.findall(text)
    sentences = [s for s in _SENTENCE_RE.split(text) if s.strip()]
    return len(words), len(sentences)


def load_lexicon(path) -> dict[str, float]:
    """term,score CSV (one row per term)."""
    lexicon: dict[str, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.reader(handle):
            if not row or row[0].startswith("#"):
                continue
            lexicon[row[0].strip().lower()] = float(row[1])
    return lexicon


def polarity(tokens: Sequence[str], lexicon: dict[str, float]) -> float:
    """Sum of lexicon scores over the UNIQUE terms of the submission."""
    return sum(lexicon.get(tok, 0.0) for tok in set(tokens))


@dataclass(slots=True)
class CasPredFeatures:
    submission_id: str
    subreddit: str
    tfidf: np.ndarray
    complexity: float
    lix: float
    polarity: float | None
    referral_count: int
    word_count: int
    sentence_count: int
    commenting_time: tuple[float, ...]     # elapsed time of each observed comment
    avg_gap_first_half: float
    avg_gap_last_half: float


class CasPredExtractor:
    """Extracts the feature table for submissions with >= k observed comments.

    tf-idf is fitted over the submission corpus once; extraction afterward
    is deterministic and order-independent.
    """

    def __init__(self, lexicon: dict[str, float] | None = None, k: int = STEP_BIN_SIZE):
        if k < 4 or k % 2:
            raise ConfigurationError("k must be an even integer >= 4")
        self.k = k
        self.lexicon = lexicon
        if lexicon is None:
            logger.warning("no sentiment lexicon loaded; polarity will be omitted")
        self._vectorizer = None
        self._tfidf_terms: list[str] = []
        self.subreddits: list[str] = []

    def fit_corpus(self, texts: Sequence[str], subreddits: Sequence[str]) -> None:
        from sklearn.feature_extraction.text import TfidfVectorizer

        self._vectorizer = TfidfVectorizer(tokenizer=normalize, preprocessor=lambda x: x,
                                           token_pattern=None)
        self._vectorizer.fit(list(texts))
        self._tfidf_terms = list(self._vectorizer.get_feature_names_out())
        self.subreddits = sorted(set(subreddits))

    def extract(self, submission_id: str, text: str, subreddit: str,
                submission_time: float, comment_times: Sequence[float]) -> CasPredFeatures:
        if self._vectorizer is None:
            raise ConfigurationError("call fit_corpus before extract")
        if len(comment_times) < self.k:
            raise DataError(
                f"{submission_id}: needs {self.k} observed comments, has {len(comment_times)}"
            )
        observed = sorted(comment_times)[: self.k]
        tokens = normalize(text)
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        avg_first, avg_last = temporal_gaps(observed, submission_time, self.k)
        words, sentences = count_words_sentences(text)
        return CasPredFeatures(
            submission_id=submission_id,
            subreddit=subreddit,
            tfidf=np.asarray(self._vectorizer.transform([text]).todense()).ravel(),
            complexity=complexity(counts),
            lix=lix(text) if words and sentences else 0.0,
            polarity=polarity(tokens, self.lexicon) if self.lexicon is not None else None,
            referral_count=referral_count(text),
            word_count=words,
            sentence_count=sentences,
            commenting_time=tuple(t - submission_time for t in observed),
            avg_gap_first_half=avg_first,
            avg_gap_last_half=avg_last,
        )

    # -- matrix assembly -------------------------------------------------------

    def feature_columns(self, configuration: str) -> list[str]:
        base = [f"commenting_time_{i + 1}" for i in range(self.k)]
        base += ["avg_gap_first_half", "avg_gap_last_half"]
        if self.lexicon is not None:
            base.append("polarity")
        if configuration == "org":
            return base
        if configuration != "full":
            raise ConfigurationError("configuration must be 'org' or 'full'")
        extra = [f"tfidf_{t}" for t in self._tfidf_terms]
        extra += ["complexity", "lix", "referral_count", "word_count", "sentence_count"]
        extra += [f"sr_{name}" for name in self.subreddits]
        return base + extra

    def to_matrix(self, rows: Sequence[CasPredFeatures], configuration: str) -> np.ndarray:
        columns = self.feature_columns(configuration)
        matrix = np.zeros((len(rows), len(columns)))
        for i, f in enumerate(rows):
            values = list(f.commenting_time)
            values += [f.avg_gap_first_half, f.avg_gap_last_half]
            if self.lexicon is not None:
                values.append(f.polarity if f.polarity is not None else 0.0)
            if configuration == "full":
                values.extend(f.tfidf.tolist())
                values += [f.complexity, f.lix, float(f.referral_count),
                           float(f.word_count), float(f.sentence_count)]
                onehot = [0.0] * len(self.subreddits)
                if f.subreddit in self.subreddits:
                    onehot[self.subreddits.index(f.subreddit)] = 1.0
                values.extend(onehot)
            matrix[i] = values
        return matrix

    def export_csv(self, path, rows: Sequence[CasPredFeatures], configuration: str) -> None:
        columns = self.feature_columns(configuration)
        matrix = self.to_matrix(rows, configuration)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["submission_id"] + columns)
            for f, vec in zip(rows, matrix):
                writer.writerow([f.submission_id] + [f"{v:.6f}" for v in vec])


# ---------------------------------------------------------------------------
# Growth-step classification
# ---------------------------------------------------------------------------

class StepClassifier(Protocol):
    """fit/predict contract for pluggable growth-step models."""

    def fit(self, features: np.ndarray, steps: np.ndarray) -> None: ...

    def predict(self, features: np.ndarray) -> np.ndarray: ...


class ThresholdLogistic:
    """One regularized logistic model per growth threshold.

    Threshold l answers "will the discussion reach at least l*k comments?";
    the predicted step is the number of consecutive positive thresholds.
    """

    def __init__(self, regularization: float = 1.0, max_step: int | None = None):
        self.regularization = regularization
        self.max_step = max_step
        self._models: list = []

    def fit(self, features: np.ndarray, steps: np.ndarray) -> None:
        from sklearn.linear_model import LogisticRegression

        top = int(steps.max()) if self.max_step is None else self.max_step
        self._models = []
        for level in range(1, max(top, 1) + 1):
            labels = (steps >= level).astype(int)
            if labels.min() == labels.max():
                self._models.append(int(labels[0]))  # degenerate level: constant answer
                continue
            model = LogisticRegression(C=1.0 / self.regularization, max_iter=1000)
            model.fit(features, labels)
            self._models.append(model)

    def predict(self, features: np.ndarray) -> np.ndarray:
        if not self._models:
            raise ConfigurationError("classifier is untrained; call fit first")
        steps = np.zeros(len(features), dtype=np.int64)
        alive = np.ones(len(features), dtype=bool)
        for model in self._models:
            if isinstance(model, int):
                positive = np.full(len(features), bool(model))
            else:
                positive = model.predict(features).astype(bool)
            alive &= positive
            steps += alive.astype(np.int64)
        return steps


class RegressionStepAdapter:
    """Wraps a size regressor: predicted step = floor(predicted_size / k)."""

    def __init__(self, regressor, k: int = STEP_BIN_SIZE):
        self.regressor = regressor
        self.k = k

    def fit(self, features: np.ndarray, steps: np.ndarray) -> None:
        # Train on a representative size for each step label.
        self.regressor.fit(features, steps * self.k)

    def predict(self, features: np.ndarray) -> np.ndarray:
        sizes = np.maximum(np.asarray(self.regressor.predict(features)), 0.0)
        return stepwise_labels(sizes, self.k)


def classify_growth(train_features: np.ndarray, train_sizes: np.ndarray,
                    test_features: np.ndarray, classifier: StepClassifier | None = None,
                    k: int = STEP_BIN_SIZE) -> np.ndarray:
    """Fit on observed discussion sizes and predict growth steps."""
    model = classifier if classifier is not None else ThresholdLogistic()
    model.fit(train_features, stepwise_labels(train_sizes, k))
    return np.asarray(model.predict(test_features), dtype=np.int64)
