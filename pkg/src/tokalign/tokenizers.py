"""Subword tokenizer training and segmentation.

Five model kinds share a single serializable container:

* ``bpe``: greedy merges of the most frequent adjacent symbol pair.
* ``wordpiece``: the same merge loop scored by pair likelihood, with
  greedy longest-match segmentation that falls back to an unknown-token
  placeholder and decorates word-internal tokens with ``##``.
* ``unigram``: a unigram language model fitted with Viterbi EM and
  pruned to the vocabulary budget by removal utility.
* ``character``: split into single characters.
* ``gold``: look up the curated gold segmentation.

All training is deterministic: corpora are handled in sorted order and
score ties break lexicographically, so retraining on the same input
yields byte-identical model files.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import CuratedDataset, normalize
from .errors import ConfigError, DataError, NumericalError, UncoverableWord

UNK = "[UNK]"
WORDPIECE_MARKER = "##"
MAX_SEED_TOKEN_LEN = 20
# Log-probability charged for a single character never seen in training.
OOV_CHAR_LOGPROB = -100.0
PROB_FLOOR = 1e-12
MODEL_SCHEMA = "subword-model/1"


class TokenizerKind(Enum):
    BPE = "bpe"
    WORDPIECE = "wordpiece"
    UNIGRAM = "unigram"
    CHARACTER = "character"
    GOLD = "gold"


TRAINED_KINDS = (TokenizerKind.BPE, TokenizerKind.WORDPIECE, TokenizerKind.UNIGRAM)


@dataclass
class TrainConfig:
    kind: TokenizerKind
    vocab_size: int
    seed: int = 0
    unigram_seed_vocab_factor: int = 4
    unigram_prune_fraction: float = 0.25

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ConfigError(f"vocab_size must be positive, got {self.vocab_size}")
        if self.unigram_seed_vocab_factor < 1:
            raise ConfigError("unigram_seed_vocab_factor must be at least 1")
        if not 0.0 < self.unigram_prune_fraction < 1.0:
            raise ConfigError("unigram_prune_fraction must be in (0, 1)")


@dataclass
class TokenizerModel:
    """Trained tokenizer state, treated as immutable once built."""

    kind: TokenizerKind
    vocab: list[str]
    vocab_size: int = 0
    seed: int = 0
    merges: list[tuple[str, str]] = field(default_factory=list)
    token_logprob: dict[str, float] = field(default_factory=dict)
    gold_map: dict[str, list[str]] = field(default_factory=dict)
    continuation_marker: str = ""

    def __post_init__(self) -> None:
        self._vocab_set = set(self.vocab)
        self._max_token_len = max((len(t) for t in self.vocab), default=1)


def word_frequencies(lines: Iterable[str]) -> Counter:
    """Count whitespace-separated words over one-sentence-per-line text."""
    freqs: Counter = Counter()
    for line in lines:
        for word in normalize(line).split():
            freqs[word] += 1
    return freqs


def _sorted_corpus(corpus: Mapping[str, int]) -> list[tuple[str, int]]:
    if not corpus:
        raise DataError("empty training corpus")
    items = []
    for word, freq in sorted(corpus.items()):
        if not word:
            raise DataError("training corpus contains an empty word")
        if freq < 1:
            raise DataError(f"non-positive frequency for {word!r}")
        items.append((word, freq))
    return items


def _check_alphabet_budget(alphabet_size: int, vocab_size: int) -> None:
    if vocab_size < alphabet_size:
        raise ConfigError(
            f"vocab_size {vocab_size} is below the initial symbol count "
            f"{alphabet_size}"
        )


def _pair_counts(seqs: list[tuple[list[str], int]]) -> Counter:
    # Overlapping occurrences all count: "aaa" contributes ("a","a") twice.
    counts: Counter = Counter()
    for symbols, freq in seqs:
        for pair in zip(symbols, symbols[1:]):
            counts[pair] += freq
    return counts


def _merge_sequence(
    symbols: list[str], pair: tuple[str, str], joined: str
) -> list[str]:
    """Replace every non-overlapping left-to-right occurrence of pair."""
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(joined)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train_bpe(corpus: Mapping[str, int], config: TrainConfig) -> TokenizerModel:
    """Learn merges by joining the most frequent adjacent symbol pair.

    Training stops when the vocabulary reaches the budget or no pair
    occurs at least twice (weighted by word frequency).  Count ties
    break on the lexicographically smallest (left, right) pair.
    """
    seqs = [(list(word), freq) for word, freq in _sorted_corpus(corpus)]
    alphabet = sorted({sym for symbols, _ in seqs for sym in symbols})
    _check_alphabet_budget(len(alphabet), config.vocab_size)
    vocab = set(alphabet)
    merges: list[tuple[str, str]] = []
    while len(vocab) < config.vocab_size:
        counts = _pair_counts(seqs)
        if not counts:
            break
        pair, count = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if count < 2:
            break
        joined = pair[0] + pair[1]
        merges.append(pair)
        vocab.add(joined)
        seqs = [(_merge_sequence(s, pair, joined), f) for s, f in seqs]
    return TokenizerModel(
        kind=TokenizerKind.BPE,
        vocab=sorted(vocab),
        vocab_size=config.vocab_size,
        seed=config.seed,
        merges=merges,
    )


def _strip_marker(token: str, marker: str) -> str:
    if marker and token.startswith(marker):
        return token[len(marker):]
    return token


def train_wordpiece(corpus: Mapping[str, int], config: TrainConfig) -> TokenizerModel:
    """Merge loop over raw symbols scored by pair likelihood.

    Pairs are ranked by count(pair) / (count(left) * count(right)),
    compared as exact fractions so ties are platform independent and
    break on the lexicographically smallest pair.  Any observed pair is
    eligible, so even singleton pairs merge once frequent pairs are
    exhausted.  The continuation marker decorates word-internal tokens
    at segmentation time only; training symbols and the stored
    vocabulary are marker-free.
    """
    seqs = [(list(word), freq) for word, freq in _sorted_corpus(corpus)]
    alphabet = sorted({sym for symbols, _ in seqs for sym in symbols})
    _check_alphabet_budget(len(alphabet), config.vocab_size)
    vocab = set(alphabet)
    merges: list[tuple[str, str]] = []
    while len(vocab) < config.vocab_size:
        pair_counts = _pair_counts(seqs)
        if not pair_counts:
            break
        symbol_counts: Counter = Counter()
        for symbols, freq in seqs:
            for sym in symbols:
                symbol_counts[sym] += freq
        best_pair: tuple[str, str] | None = None
        best_score: Fraction | None = None
        for pair in sorted(pair_counts):
            score = Fraction(
                pair_counts[pair], symbol_counts[pair[0]] * symbol_counts[pair[1]]
            )
            if best_score is None or score > best_score:
                best_pair, best_score = pair, score
        joined = best_pair[0] + best_pair[1]
        merges.append(best_pair)
        vocab.add(joined)
        seqs = [(_merge_sequence(s, best_pair, joined), f) for s, f in seqs]
    return TokenizerModel(
        kind=TokenizerKind.WORDPIECE,
        vocab=sorted(vocab),
        vocab_size=config.vocab_size,
        seed=config.seed,
        merges=merges,
        continuation_marker=WORDPIECE_MARKER,
    )


def _viterbi(
    word: str,
    logprob: Mapping[str, float],
    max_token_len: int,
    banned: str | None = None,
    oov_char_logprob: float | None = None,
) -> tuple[list[str], float] | None:
    """Best-scoring segmentation of ``word`` under a unigram model.

    Returns None when no segmentation covers the word.  With
    ``oov_char_logprob`` set, single characters outside the vocabulary
    are admitted at that penalty, which makes coverage total.
    """
    n = len(word)
    best_score: list[float | None] = [None] * (n + 1)
    back: list[tuple[int, str] | None] = [None] * (n + 1)
    best_score[0] = 0.0
    for end in range(1, n + 1):
        for start in range(max(0, end - max_token_len), end):
            prev = best_score[start]
            if prev is None:
                continue
            token = word[start:end]
            if banned is not None and token == banned:
                continue
            lp = logprob.get(token)
            if lp is None:
                if oov_char_logprob is not None and end - start == 1:
                    lp = oov_char_logprob
                else:
                    continue
            cand = prev + lp
            if best_score[end] is None or cand > best_score[end]:
                best_score[end] = cand
                back[end] = (start, token)
    if best_score[n] is None:
        return None
    tokens: list[str] = []
    pos = n
    while pos > 0:
        start, token = back[pos]
        tokens.append(token)
        pos = start
    tokens.reverse()
    return tokens, best_score[n]


def _unigram_seed(
    words: list[tuple[str, int]], config: TrainConfig
) -> tuple[list[str], dict[str, float]]:
    """Initial vocabulary: all characters plus top-scoring substrings.

    Substring candidates up to MAX_SEED_TOKEN_LEN characters are ranked
    by frequency times length and capped so the seed vocabulary holds at
    most unigram_seed_vocab_factor * vocab_size items.  Scores are
    normalized into the starting unigram distribution.
    """
    char_counts: Counter = Counter()
    substr_counts: Counter = Counter()
    for word, freq in words:
        for ch in word:
            char_counts[ch] += freq
        n = len(word)
        for i in range(n):
            top = min(n, i + MAX_SEED_TOKEN_LEN)
            for j in range(i + 2, top + 1):
                substr_counts[word[i:j]] += freq
    chars = sorted(char_counts)
    _check_alphabet_budget(len(chars), config.vocab_size)
    budget = config.unigram_seed_vocab_factor * config.vocab_size - len(chars)
    ranked = sorted(
        substr_counts.items(), key=lambda kv: (-kv[1] * len(kv[0]), kv[0])
    )
    seeds = [token for token, _ in ranked[: max(budget, 0)]]
    scores: dict[str, float] = {}
    for ch in chars:
        scores[ch] = float(char_counts[ch])
    for token in seeds:
        scores[token] = float(substr_counts[token] * len(token))
    total = sum(scores.values())
    logprob = {t: math.log(scores[t] / total) for t in sorted(scores)}
    return chars, logprob


def _unigram_em_round(
    words: list[tuple[str, int]],
    vocab: set[str],
    logprob: dict[str, float],
    iterations: int = 2,
) -> tuple[dict[str, float], dict[str, tuple[list[str], float]]]:
    """Hard EM: Viterbi-count tokens, renormalize, repeat.

    Tokens with zero count keep a floor probability so every vocabulary
    item stays usable by the segmenter.  The corpus negative log
    likelihood must not increase between iterations at fixed vocabulary.
    """
    max_len = max(len(t) for t in vocab)
    seg_cache: dict[str, tuple[list[str], float]] = {}
    prev_nll: float | None = None
    for _ in range(iterations):
        counts: Counter = Counter()
        nll = 0.0
        seg_cache = {}
        for word, freq in words:
            result = _viterbi(word, logprob, max_len)
            if result is None:
                raise NumericalError(f"vocabulary no longer covers {word!r}")
            tokens, lp = result
            seg_cache[word] = (tokens, lp)
            nll -= freq * lp
            for token in tokens:
                counts[token] += freq
        if prev_nll is not None and nll > prev_nll + 1e-9 * max(1.0, abs(prev_nll)):
            raise NumericalError(
                f"unigram EM loss increased from {prev_nll} to {nll}"
            )
        prev_nll = nll
        total = sum(counts.values())
        if total <= 0:
            raise NumericalError("unigram EM produced an empty segmentation count")
        logprob = {}
        for token in sorted(vocab):
            c = counts.get(token, 0)
            p = c / total if c else PROB_FLOOR
            logprob[token] = math.log(p)
    return logprob, seg_cache


def train_unigram(corpus: Mapping[str, int], config: TrainConfig) -> TokenizerModel:
    """Fit a unigram language model and prune it to the budget.

    Each round re-estimates probabilities with two hard EM iterations,
    then removes the multi-character tokens whose removal would increase
    the Viterbi corpus loss the least, keeping at least
    vocab_size and at most (1 - prune_fraction) of the current
    vocabulary.  Single characters are never pruned, so segmentation
    stays total over the training alphabet.
    """
    words = _sorted_corpus(corpus)
    chars, logprob = _unigram_seed(words, config)
    vocab = set(logprob)
    char_set = set(chars)
    while len(vocab) > config.vocab_size:
        logprob, segs = _unigram_em_round(words, vocab, logprob)
        max_len = max(len(t) for t in vocab)
        utility: dict[str, float] = {}
        for token in vocab:
            if token not in char_set:
                utility[token] = 0.0
        for word, freq in words:
            tokens, lp = segs[word]
            for token in set(tokens):
                if token in char_set:
                    continue
                alt = _viterbi(word, logprob, max_len, banned=token)
                if alt is None:
                    # Only this token covers some stretch of the word.
                    utility[token] = math.inf
                else:
                    utility[token] += freq * (lp - alt[1])
        target = max(
            config.vocab_size,
            int(len(vocab) * (1.0 - config.unigram_prune_fraction)),
        )
        keep = target - len(char_set)
        survivors = sorted(utility, key=lambda t: (-utility[t], t))[: max(keep, 0)]
        vocab = char_set | set(survivors)
        logprob = {t: lp for t, lp in logprob.items() if t in vocab}
    logprob, _ = _unigram_em_round(words, vocab, logprob)
    return TokenizerModel(
        kind=TokenizerKind.UNIGRAM,
        vocab=sorted(vocab),
        vocab_size=config.vocab_size,
        seed=config.seed,
        token_logprob=logprob,
    )


def train_character(corpus: Mapping[str, int]) -> TokenizerModel:
    """Baseline that splits every word into single characters."""
    words = _sorted_corpus(corpus)
    vocab = sorted({ch for word, _ in words for ch in word})
    return TokenizerModel(kind=TokenizerKind.CHARACTER, vocab=vocab)


def build_gold_lookup(dataset: CuratedDataset) -> TokenizerModel:
    """Baseline that replays the curated gold segmentation."""
    gold_map: dict[str, list[str]] = {}
    for entry in dataset.entries:
        gold_map.setdefault(entry.form, list(entry.gold_segments))
    vocab = sorted({seg for segs in gold_map.values() for seg in segs})
    return TokenizerModel(kind=TokenizerKind.GOLD, vocab=vocab, gold_map=gold_map)


def train(corpus: Mapping[str, int], config: TrainConfig) -> TokenizerModel:
    """Dispatch to the trainer for config.kind."""
    if config.kind is TokenizerKind.BPE:
        return train_bpe(corpus, config)
    if config.kind is TokenizerKind.WORDPIECE:
        return train_wordpiece(corpus, config)
    if config.kind is TokenizerKind.UNIGRAM:
        return train_unigram(corpus, config)
    raise ConfigError(f"kind {config.kind.value!r} is not trainable from a corpus")


def _segment_bpe(model: TokenizerModel, word: str) -> list[str]:
    # Applying the lowest-ranked applicable merge first is equivalent to
    # replaying all merges in learned order, because a merge can only
    # create adjacencies for pairs learned later.
    ranks = getattr(model, "_merge_ranks", None)
    if ranks is None:
        ranks = {pair: i for i, pair in enumerate(model.merges)}
        model._merge_ranks = ranks
    symbols = list(word)
    while len(symbols) > 1:
        best_rank: int | None = None
        best_pair: tuple[str, str] | None = None
        for pair in zip(symbols, symbols[1:]):
            rank = ranks.get(pair)
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank, best_pair = rank, pair
        if best_pair is None:
            break
        symbols = _merge_sequence(symbols, best_pair, best_pair[0] + best_pair[1])
    return symbols


def _segment_wordpiece(model: TokenizerModel, word: str) -> list[str]:
    marker = model.continuation_marker
    tokens: list[str] = []
    pos = 0
    n = len(word)
    while pos < n:
        matched = None
        for stop in range(min(n, pos + model._max_token_len), pos, -1):
            candidate = word[pos:stop]
            if candidate in model._vocab_set:
                matched = (candidate, stop)
                break
        if matched is None:
            return [UNK]
        tokens.append(matched[0] if pos == 0 else marker + matched[0])
        pos = matched[1]
    return tokens


def _segment_unigram(model: TokenizerModel, word: str) -> list[str]:
    result = _viterbi(
        word,
        model.token_logprob,
        model._max_token_len,
        oov_char_logprob=OOV_CHAR_LOGPROB,
    )
    return result[0]


def segment(model: TokenizerModel, word: str) -> list[str]:
    """Split one word into subword tokens under the model's strategy.

    WordPiece may return ``[UNK]`` for uncoverable words; the gold
    baseline raises for forms outside its lookup table.  Every other
    kind covers any word whose characters it has seen, with the unigram
    model extending coverage to unseen characters at a fixed penalty.
    """
    if not word:
        raise DataError("cannot segment an empty word")
    if model.kind is TokenizerKind.CHARACTER:
        return list(word)
    if model.kind is TokenizerKind.GOLD:
        segs = model.gold_map.get(word)
        if segs is None:
            raise DataError(f"form {word!r} is not in the gold lookup table")
        return list(segs)
    if model.kind is TokenizerKind.BPE:
        return _segment_bpe(model, word)
    if model.kind is TokenizerKind.WORDPIECE:
        return _segment_wordpiece(model, word)
    if model.kind is TokenizerKind.UNIGRAM:
        return _segment_unigram(model, word)
    raise ConfigError(f"unknown tokenizer kind {model.kind!r}")


def canonical_subwords(model: TokenizerModel, tokens: list[str]) -> list[str]:
    """Strip continuation markers so tokens concatenate to the word.

    Raises UncoverableWord when the unknown-token placeholder is
    present, because such output no longer corresponds to the surface
    string.
    """
    if UNK in tokens:
        raise UncoverableWord("unknown-token placeholder in segmentation")
    marker = model.continuation_marker
    if not marker or not tokens:
        return list(tokens)
    # Only word-internal tokens are decorated, so only those are stripped.
    return [tokens[0]] + [_strip_marker(t, marker) for t in tokens[1:]]


def model_to_json(model: TokenizerModel) -> str:
    """Canonical JSON rendering; equal models serialize byte-identically."""
    doc = {
        "schema": MODEL_SCHEMA,
        "kind": model.kind.value,
        "vocab_size": model.vocab_size,
        "seed": model.seed,
        "continuation_marker": model.continuation_marker,
        "vocab": sorted(model.vocab),
        "merges": [[left, right] for left, right in model.merges],
        "token_logprob": [
            [token, model.token_logprob[token]]
            for token in sorted(model.token_logprob)
        ],
        "gold_map": [
            [form, model.gold_map[form]] for form in sorted(model.gold_map)
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=1) + "\n"


def save_model(model: TokenizerModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> TokenizerModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != MODEL_SCHEMA:
        raise DataError(f"model file {path} has an unrecognized schema")
    try:
        kind = TokenizerKind(doc["kind"])
        return TokenizerModel(
            kind=kind,
            vocab=list(doc["vocab"]),
            vocab_size=int(doc["vocab_size"]),
            seed=int(doc["seed"]),
            merges=[(left, right) for left, right in doc["merges"]],
            token_logprob={t: float(lp) for t, lp in doc["token_logprob"]},
            gold_map={form: list(segs) for form, segs in doc["gold_map"]},
            continuation_marker=str(doc["continuation_marker"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"model file {path} is malformed: {exc}") from exc
