# metrics.py  –  SARI, corpus BLEU, FKGL and compression ratio
#
# All scores are computed over tokens from textproc.tokenize.  SARI and BLEU
# are reported on a 0-100 scale.

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from errors import (
    EmptyCorpusError,
    LengthMismatchError,
    MetricError,
    NoWordsError,
    ZeroSourceTokensError,
)
from textproc import SentenceList, TokenizedText, count_syllables, is_word, tokenize

MAX_ORDER = 4


@dataclass(frozen=True)
class MetricReport:
    sari: float
    bleu: float
    fkgl: float
    compression: float

    def __post_init__(self):
        for name in ("sari", "bleu"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise MetricError(f"{name} out of range: {value}")
        if self.compression < 0:
            raise MetricError(f"compression must be non-negative: {self.compression}")


@dataclass(frozen=True)
class EvalTriple:
    source: TokenizedText
    candidate: TokenizedText
    references: Tuple[TokenizedText, ...]

    def __post_init__(self):
        object.__setattr__(self, "references", tuple(self.references))
        if not self.references:
            raise MetricError("an EvalTriple needs at least one reference")


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _size(counter: Counter) -> int:
    return sum(counter.values())


def _ratio(numerator: int, denominator: int) -> float:
    # 0/0 counts as perfect: nothing to keep, add or delete.
    if denominator == 0:
        return 1.0
    return numerator / denominator


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# ─────────────────────────────────────────────
#  SARI
# ─────────────────────────────────────────────

def sari_ngram_scores(source: Sequence[str], candidate: Sequence[str], reference: Sequence[str], n: int) -> Tuple[float, float, float]:
    """Return ``(keep_f1, delete_precision, add_f1)`` for one n-gram order.

    Multisets throughout.  A deletion is correct when the reference dropped
    the same copy, i.e. ``(S - C) & (S - R)``.
    """
    s = ngram_counts(source, n)
    c = ngram_counts(candidate, n)
    r = ngram_counts(reference, n)

    kept = s & c
    kept_good = kept & r
    keep_precision = _ratio(_size(kept_good), _size(kept))
    keep_recall = _ratio(_size(kept_good), _size(s & r))

    deleted = s - c
    delete_precision = _ratio(_size(deleted & (s - r)), _size(deleted))

    added = c - s
    added_good = added & r
    add_precision = _ratio(_size(added_good), _size(added))
    add_recall = _ratio(_size(added_good), _size(r - s))

    return _f1(keep_precision, keep_recall), delete_precision, _f1(add_precision, add_recall)


def sari_sentence(triple: EvalTriple) -> float:
    """SARI of one triple on a 0-1 scale."""
    if len(triple.references) != 1:
        raise MetricError("SARI is computed against exactly one reference")
    source = triple.source.tokens
    candidate = triple.candidate.tokens
    reference = triple.references[0].tokens

    per_order = []
    for n in range(1, MAX_ORDER + 1):
        keep, delete, add = sari_ngram_scores(source, candidate, reference, n)
        per_order.append((keep + delete + add) / 3)
    return sum(per_order) / MAX_ORDER


def sari_corpus(triples: Sequence[EvalTriple]) -> float:
    if not triples:
        raise EmptyCorpusError("SARI needs at least one triple")
    return 100.0 * math.fsum(sari_sentence(t) for t in triples) / len(triples)


# ─────────────────────────────────────────────
#  BLEU
# ─────────────────────────────────────────────

def ngram_matches(candidate: Sequence[str], reference: Sequence[str], n: int) -> Tuple[int, int]:
    """Clipped n-gram matches and candidate n-gram total for one pair."""
    c = ngram_counts(candidate, n)
    r = ngram_counts(reference, n)
    return _size(c & r), _size(c)


def bleu_stats(candidates: Sequence[TokenizedText], references: Sequence[TokenizedText]) -> Tuple[List[int], List[int], int, int]:
    """Corpus sufficient statistics: matches, totals per order, sys_len, ref_len."""
    if not candidates or not references:
        raise EmptyCorpusError("BLEU needs at least one candidate")
    if len(candidates) != len(references):
        raise LengthMismatchError(f"{len(candidates)} candidates vs {len(references)} references")

    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    sys_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        sys_len += len(cand.tokens)
        ref_len += len(ref.tokens)
        for n in range(1, MAX_ORDER + 1):
            hit, total = ngram_matches(cand.tokens, ref.tokens, n)
            matches[n - 1] += hit
            totals[n - 1] += total
    return matches, totals, sys_len, ref_len


def bleu_corpus(candidates: Sequence[TokenizedText], references: Sequence[TokenizedText]) -> float:
    """Unsmoothed corpus BLEU-4 on a 0-100 scale.

    Orders for which the corpus has no candidate n-grams at all are left
    out of the geometric mean (effective order), so short documents still
    score.  A zero match count at any remaining order gives 0.
    """
    matches, totals, sys_len, ref_len = bleu_stats(candidates, references)

    precisions = [m / t for m, t in zip(matches, totals) if t > 0]
    if not precisions or min(precisions) == 0:
        return 0.0

    if sys_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / sys_len)
    else:
        brevity_penalty = 1.0

    geo_mean = float(np.exp(np.mean(np.log(precisions))))
    return min(100.0, 100.0 * brevity_penalty * geo_mean)


# ─────────────────────────────────────────────
#  Readability and length
# ─────────────────────────────────────────────

def fkgl(sentences: SentenceList) -> float:
    """Flesch-Kincaid grade level; words are tokens containing a letter."""
    words = [tok for sentence in sentences for tok in tokenize(sentence).tokens if is_word(tok)]
    if not words:
        raise NoWordsError("FKGL needs at least one word")
    syllables = sum(count_syllables(w) for w in words)
    return 0.39 * (len(words) / len(sentences)) + 11.8 * (syllables / len(words)) - 15.59


def compression_ratio(sources: Sequence[TokenizedText], candidates: Sequence[TokenizedText]) -> float:
    if not sources or not candidates:
        raise EmptyCorpusError("compression ratio needs at least one document")
    if len(sources) != len(candidates):
        raise LengthMismatchError(f"{len(sources)} sources vs {len(candidates)} candidates")
    source_tokens = sum(len(s.tokens) for s in sources)
    if source_tokens == 0:
        raise ZeroSourceTokensError("sources contain no tokens")
    return sum(len(c.tokens) for c in candidates) / source_tokens


def score_corpus(
    sources: Sequence[TokenizedText],
    candidates: Sequence[TokenizedText],
    references: Sequence[TokenizedText],
    candidate_sentences: Iterable[SentenceList],
) -> MetricReport:
    """All four measures for one system; *candidate_sentences* feed FKGL."""
    if not len(sources) == len(candidates) == len(references):
        raise LengthMismatchError("sources, candidates and references differ in length")
    triples = [EvalTriple(s, c, (r,)) for s, c, r in zip(sources, candidates, references)]
    pooled = SentenceList(tuple(s for sl in candidate_sentences for s in sl))
    return MetricReport(
        sari=sari_corpus(triples),
        bleu=bleu_corpus(candidates, references),
        fkgl=fkgl(pooled),
        compression=compression_ratio(sources, candidates),
    )
