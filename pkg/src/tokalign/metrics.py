"""Alignment-based plausibility scores and boundary agreement metrics.

The alignment score of a tokenizer over a dataset is the mean over
words of the mean over that word's subwords of an aggregation applied
to the surviving translation probabilities: for each subword, the
probabilities of the word's feature tokens that exceed the threshold.
Boundary precision and recall compare predicted and gold segmentation
split points per word and are micro-averaged over the dataset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, TextIO

from .corpus import CuratedDataset, FeatureMode
from .errors import ConfigError, DataError, UncoverableWord
from .ibm1 import (
    NULL_TOKEN,
    ParallelPair,
    TranslationTable,
    build_parallel_corpus,
)
from .tokenizers import TokenizerModel, canonical_subwords, segment


class Aggregation(Enum):
    SUM = "sum"
    LOG = "log"
    MEAN = "mean"
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class ScoreConfig:
    aggregation: Aggregation
    threshold: float = 0.01
    mode: FeatureMode = FeatureMode.SPLIT

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold < 1.0:
            raise ConfigError(
                f"threshold must be in [0, 1), got {self.threshold}"
            )


DEFAULT_THRESHOLDS = tuple(round(0.01 + i * 0.049, 3) for i in range(11))


@dataclass
class BoundaryCounts:
    true_positive: int = 0
    predicted_total: int = 0
    gold_total: int = 0
    excluded: int = 0


def subword_score(
    table: TranslationTable,
    subword: str,
    features: Sequence[str],
    config: ScoreConfig,
) -> float:
    """Aggregate the surviving probabilities for one subword.

    The surviving values keep multiplicity: a feature token listed twice
    contributes twice.  An empty surviving set scores 0.0 under every
    aggregation, including the log aggregation.
    """
    row = table.probs.get(subword)
    surviving: list[float] = []
    if row is not None:
        for feature in features:
            p = row.get(feature, 0.0)
            if p > config.threshold:
                surviving.append(p)
    if not surviving:
        return 0.0
    agg = config.aggregation
    if agg is Aggregation.SUM:
        return sum(surviving)
    if agg is Aggregation.LOG:
        return sum(math.log(p) for p in surviving)
    if agg is Aggregation.MEAN:
        return sum(surviving) / len(surviving)
    if agg is Aggregation.MIN:
        return min(surviving)
    return max(surviving)


def word_score(
    table: TranslationTable,
    subwords: Sequence[str],
    features: Sequence[str],
    config: ScoreConfig,
) -> float:
    """Mean subword score over one word's subwords."""
    if not subwords:
        raise DataError("word with no subwords")
    total = 0.0
    for subword in subwords:
        total += subword_score(table, subword, features, config)
    return total / len(subwords)


def alignment_score_from_pairs(
    table: TranslationTable,
    pairs: Sequence[ParallelPair],
    config: ScoreConfig,
) -> float:
    """Mean word score over prepared parallel pairs.

    The null token never enters scoring; it exists only to absorb
    probability mass during training.
    """
    if not pairs:
        raise DataError("no scorable entries")
    total = 0.0
    for pair in pairs:
        subwords = [s for s in pair.source if s != NULL_TOKEN]
        total += word_score(table, subwords, pair.target, config)
    return total / len(pairs)


def alignment_score(
    table: TranslationTable,
    dataset: CuratedDataset,
    model: TokenizerModel,
    config: ScoreConfig,
) -> float:
    """Dataset-level plausibility score for one tokenizer.

    Entries the tokenizer cannot cover are excluded, matching the
    exclusion applied when the table's training corpus was built.
    """
    pairs, _ = build_parallel_corpus(dataset, model, config.mode)
    return alignment_score_from_pairs(table, pairs, config)


def boundary_positions(segments: Sequence[str]) -> set[int]:
    """Internal split points as cumulative character offsets."""
    positions: set[int] = set()
    offset = 0
    for seg in segments[:-1]:
        offset += len(seg)
        positions.add(offset)
    return positions


def _ratio(numerator: int, denominator: int) -> float:
    # A segmentation task with nothing to find or nothing predicted is
    # scored as perfectly solved rather than failed.
    if denominator == 0:
        return 1.0
    return numerator / denominator


def boundary_prf(
    dataset: CuratedDataset, model: TokenizerModel
) -> tuple[float, float, float, BoundaryCounts]:
    """Micro-averaged boundary precision, recall, and F1.

    Entries whose segmentation contains the unknown-token placeholder
    are excluded from all counts, mirroring the alignment-score
    exclusion, and reported in the returned counts.
    """
    if not dataset.entries:
        raise DataError("cannot score an empty dataset")
    counts = BoundaryCounts()
    scored = 0
    for entry in dataset.entries:
        try:
            predicted = canonical_subwords(model, segment(model, entry.form))
        except UncoverableWord:
            counts.excluded += 1
            continue
        gold = boundary_positions(entry.gold_segments)
        pred = boundary_positions(predicted)
        counts.true_positive += len(gold & pred)
        counts.predicted_total += len(pred)
        counts.gold_total += len(gold)
        scored += 1
    if scored == 0:
        raise DataError("every entry was excluded from boundary scoring")
    precision = _ratio(counts.true_positive, counts.predicted_total)
    recall = _ratio(counts.true_positive, counts.gold_total)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1, counts


@dataclass(frozen=True)
class ScoreRow:
    """One evaluated grid point: tokenizer, scoring setup, and results."""

    language: str
    kind: str
    vocab_size: int
    mode: str
    aggregation: str
    threshold: float
    alignment: float
    precision: float
    recall: float
    f1: float
    excluded: int

    @property
    def label(self) -> str:
        return f"{self.kind}-{self.vocab_size}"


SCORE_COLUMNS = (
    "language",
    "kind",
    "vocab_size",
    "mode",
    "aggregation",
    "threshold",
    "alignment_score",
    "precision",
    "recall",
    "f1",
    "excluded_count",
)


def write_score_rows(
    rows: Iterable[ScoreRow], stream: TextIO, seed: int | None = None
) -> None:
    """Write rows as CSV with a comment header carrying the seed."""
    if seed is not None:
        stream.write(f"# seed: {seed}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SCORE_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.language,
                row.kind,
                row.vocab_size,
                row.mode,
                row.aggregation,
                repr(row.threshold),
                repr(row.alignment),
                repr(row.precision),
                repr(row.recall),
                repr(row.f1),
                row.excluded,
            ]
        )


def read_score_rows(stream: Iterable[str]) -> list[ScoreRow]:
    """Parse a score CSV produced by :func:`write_score_rows`."""
    rows: list[ScoreRow] = []
    lines = [line for line in stream if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != SCORE_COLUMNS:
        raise DataError("score file header does not match the expected columns")
    for cols in reader:
        if not cols:
            continue
        if len(cols) != len(SCORE_COLUMNS):
            raise DataError(f"score row has {len(cols)} columns")
        try:
            rows.append(
                ScoreRow(
                    language=cols[0],
                    kind=cols[1],
                    vocab_size=int(cols[2]),
                    mode=cols[3],
                    aggregation=cols[4],
                    threshold=float(cols[5]),
                    alignment=float(cols[6]),
                    precision=float(cols[7]),
                    recall=float(cols[8]),
                    f1=float(cols[9]),
                    excluded=int(cols[10]),
                )
            )
        except ValueError as exc:
            raise DataError(f"score row is malformed: {exc}") from exc
    return rows
