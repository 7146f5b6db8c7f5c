"""Command line pipeline: curate, train, segment, evaluate, sweep, report.

Every stage reads and writes plain files, so a sweep is resumable: grid
points whose output files already exist are skipped, and the final
score and correlation CSVs are rebuilt from the per-point files.  Exit
codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical degeneracy.

Example sweep configuration (JSON, paths relative to the config file):

    {
      "seed": 0,
      "epochs": 10,
      "kinds": ["bpe", "wordpiece", "unigram"],
      "vocab_sizes": [200, 400, 800],
      "modes": ["split"],
      "aggregations": ["mean"],
      "thresholds": [0.01],
      "output_dir": "out",
      "languages": {
        "toy": {
          "corpus": "toy/corpus.txt",
          "features": "toy/features.tsv",
          "segmentations": "toy/segmentations.tsv"
        }
      }
    }
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import corpus as corpus_mod
from . import ibm1, metrics, stats, tokenizers
from .corpus import CuratedDataset, FeatureMode
from .errors import ConfigError, DataError, NumericalError, TokalignError
from .metrics import Aggregation, DEFAULT_THRESHOLDS, ScoreConfig, ScoreRow
from .tokenizers import TokenizerKind, TokenizerModel, TrainConfig

DEFAULT_VOCAB_SIZES = (
    2000, 4000, 8000, 16000, 24000, 32000,
    40000, 48000, 56000, 64000, 72000, 80000,
)
DEFAULT_EPOCHS = 10
BASELINE_KINDS = (TokenizerKind.CHARACTER, TokenizerKind.GOLD)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read_lines(path: Path) -> list[str]:
    try:
        with path.open("r", encoding="utf-8") as handle:
            return handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _parse_modes(text: str) -> list[FeatureMode]:
    try:
        return [FeatureMode(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"unknown feature mode in {text!r}") from exc


def _parse_aggregations(text: str) -> list[Aggregation]:
    try:
        return [Aggregation(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"unknown aggregation in {text!r}") from exc


def _parse_thresholds(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"bad threshold list {text!r}") from exc
    if not values:
        raise ConfigError("threshold list is empty")
    return values


def run_evaluation(
    dataset: CuratedDataset,
    model: TokenizerModel,
    mode: FeatureMode,
    aggregations: Sequence[Aggregation],
    thresholds: Sequence[float],
    epochs: int,
    include_null: bool,
    language: str,
) -> tuple[list[ScoreRow], ibm1.TranslationTable]:
    """Train one translation table and score the aggregation grid.

    The table depends only on (model, mode), so it is trained once and
    shared by every aggregation and threshold combination.
    """
    pairs, excluded = ibm1.build_parallel_corpus(
        dataset, model, mode, include_null=include_null
    )
    table = ibm1.train_ibm1(pairs, epochs=epochs)
    precision, recall, f1, _counts = metrics.boundary_prf(dataset, model)
    rows: list[ScoreRow] = []
    for aggregation in aggregations:
        for threshold in thresholds:
            config = ScoreConfig(
                aggregation=aggregation, threshold=threshold, mode=mode
            )
            score = metrics.alignment_score_from_pairs(table, pairs, config)
            rows.append(
                ScoreRow(
                    language=language,
                    kind=model.kind.value,
                    vocab_size=model.vocab_size,
                    mode=mode.value,
                    aggregation=aggregation.value,
                    threshold=threshold,
                    alignment=score,
                    precision=precision,
                    recall=recall,
                    f1=f1,
                    excluded=excluded,
                )
            )
    return rows, table


def _load_curated(path: Path) -> CuratedDataset:
    return corpus_mod.read_curated(_read_lines(path))


def _load_corpus(path: Path) -> dict[str, int]:
    freqs = tokenizers.word_frequencies(_read_lines(path))
    if not freqs:
        raise DataError(f"corpus {path} contains no words")
    return dict(freqs)


def cmd_curate(args: argparse.Namespace) -> int:
    features, feat_stats = corpus_mod.parse_feature_lexicon(
        _read_lines(Path(args.features))
    )
    segmentations, seg_stats = corpus_mod.parse_segmentation_lexicon(
        _read_lines(Path(args.segmentations))
    )
    dataset, join_stats = corpus_mod.curate(
        segmentations, features, language=args.language
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as handle:
        corpus_mod.write_curated(dataset, handle)
    print(f"curated {len(dataset)} entries to {out}")
    print(
        f"feature rows: {feat_stats.kept} kept, {feat_stats.skipped} skipped; "
        f"segmentation rows: {seg_stats.kept} kept, {seg_stats.skipped} skipped"
    )
    print(f"matched: {join_stats.matched} dropped: {join_stats.dropped}")
    return EXIT_OK


def _train_model(
    kind: TokenizerKind,
    vocab_size: int,
    seed: int,
    corpus_path: Path | None,
    curated_path: Path | None,
) -> TokenizerModel:
    if kind is TokenizerKind.GOLD:
        if curated_path is None:
            raise ConfigError("gold tokenizer needs a curated dataset (--curated)")
        return tokenizers.build_gold_lookup(_load_curated(curated_path))
    if corpus_path is None:
        raise ConfigError(f"{kind.value} tokenizer needs a training corpus (--corpus)")
    corpus = _load_corpus(corpus_path)
    if kind is TokenizerKind.CHARACTER:
        return tokenizers.train_character(corpus)
    config = TrainConfig(kind=kind, vocab_size=vocab_size, seed=seed)
    return tokenizers.train(corpus, config)


def cmd_train_tokenizer(args: argparse.Namespace) -> int:
    try:
        kind = TokenizerKind(args.kind)
    except ValueError as exc:
        raise ConfigError(f"unknown tokenizer kind {args.kind!r}") from exc
    if kind in tokenizers.TRAINED_KINDS and args.vocab_size is None:
        raise ConfigError(f"--vocab-size is required for kind {kind.value}")
    model = _train_model(
        kind,
        args.vocab_size or 0,
        args.seed,
        Path(args.corpus) if args.corpus else None,
        Path(args.curated) if args.curated else None,
    )
    _atomic_write(Path(args.out), tokenizers.model_to_json(model))
    print(f"trained {kind.value} model with {len(model.vocab)} tokens to {args.out}")
    return EXIT_OK


def cmd_segment(args: argparse.Namespace) -> int:
    model = tokenizers.load_model(Path(args.model))
    vocab = set(model.vocab)
    oov_count = 0
    for word in args.words:
        pieces = tokenizers.segment(model, corpus_mod.normalize(word))
        print(f"{word}\t{' '.join(pieces)}")
        if tokenizers.UNK in pieces:
            continue
        canonical = tokenizers.canonical_subwords(model, pieces)
        oov_count += sum(1 for piece in canonical if piece not in vocab)
    if oov_count:
        print(
            f"note: emitted {oov_count} out-of-vocabulary singleton tokens",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = _load_curated(Path(args.curated))
    model = tokenizers.load_model(Path(args.model))
    modes = _parse_modes(args.mode)
    if len(modes) != 1:
        raise ConfigError("evaluate takes exactly one feature mode")
    aggregations = _parse_aggregations(args.aggregations)
    thresholds = _parse_thresholds(args.thresholds)
    language = args.language or dataset.language
    rows, table = run_evaluation(
        dataset,
        model,
        modes[0],
        aggregations,
        thresholds,
        args.epochs,
        args.include_null,
        language,
    )
    buffer = io.StringIO()
    metrics.write_score_rows(rows, buffer, seed=args.seed)
    _atomic_write(Path(args.out), buffer.getvalue())
    if args.table_out:
        _atomic_write(Path(args.table_out), ibm1.table_to_json(table))
    print(
        f"wrote {len(rows)} score rows to {args.out} "
        f"(excluded {rows[0].excluded} entries, final loglik "
        f"{table.final_loglik:.6f})"
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    rows = metrics.read_score_rows(_read_lines(Path(args.scores)))
    report = stats.build_report(rows)
    buffer = io.StringIO()
    stats.write_report(report, buffer, seed=args.seed)
    _atomic_write(Path(args.out), buffer.getvalue())
    ok = len(report.ok_cells())
    print(f"wrote {len(report.cells)} report cells ({ok} with defined rho) to {args.out}")
    return EXIT_OK


@dataclass
class LanguageSpec:
    name: str
    corpus: Path
    curated: Path | None = None
    features: Path | None = None
    segmentations: Path | None = None


@dataclass
class SweepConfig:
    languages: list[LanguageSpec]
    kinds: list[TokenizerKind]
    vocab_sizes: list[int]
    modes: list[FeatureMode]
    aggregations: list[Aggregation]
    thresholds: list[float]
    epochs: int
    seed: int
    include_baselines: bool
    include_null: bool
    output_dir: Path

    def __post_init__(self) -> None:
        if not self.languages:
            raise ConfigError("sweep config lists no languages")
        for field_name in ("kinds", "vocab_sizes", "modes", "aggregations", "thresholds"):
            if not getattr(self, field_name):
                raise ConfigError(f"sweep config field {field_name} is empty")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if len(set(s.name for s in self.languages)) != len(self.languages):
            raise ConfigError("duplicate language names in sweep config")


def load_sweep_config(path: Path) -> SweepConfig:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    base = path.parent

    def _resolve(raw: str) -> Path:
        p = Path(raw)
        return p if p.is_absolute() else base / p

    try:
        kinds = [TokenizerKind(k) for k in doc.get("kinds", ["bpe", "wordpiece", "unigram"])]
        modes = [FeatureMode(m) for m in doc.get("modes", ["joint", "split"])]
        aggregations = [
            Aggregation(a)
            for a in doc.get("aggregations", [a.value for a in Aggregation])
        ]
    except ValueError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc
    languages = []
    lang_doc = doc.get("languages")
    if not isinstance(lang_doc, dict) or not lang_doc:
        raise ConfigError("config must map language names to their input paths")
    for name in sorted(lang_doc):
        spec = lang_doc[name]
        if not isinstance(spec, dict) or "corpus" not in spec:
            raise ConfigError(f"language {name!r} needs at least a corpus path")
        curated = spec.get("curated")
        features = spec.get("features")
        segmentations = spec.get("segmentations")
        if curated is None and (features is None or segmentations is None):
            raise ConfigError(
                f"language {name!r} needs either a curated path or both "
                "feature and segmentation lexicons"
            )
        languages.append(
            LanguageSpec(
                name=name,
                corpus=_resolve(spec["corpus"]),
                curated=_resolve(curated) if curated else None,
                features=_resolve(features) if features else None,
                segmentations=_resolve(segmentations) if segmentations else None,
            )
        )
    for spec in languages:
        for p in (spec.corpus, spec.curated, spec.features, spec.segmentations):
            if p is not None and not p.exists():
                raise ConfigError(f"input path does not exist: {p}")
    config = SweepConfig(
        languages=languages,
        kinds=kinds,
        vocab_sizes=[int(v) for v in doc.get("vocab_sizes", DEFAULT_VOCAB_SIZES)],
        modes=modes,
        aggregations=aggregations,
        thresholds=[float(t) for t in doc.get("thresholds", DEFAULT_THRESHOLDS)],
        epochs=int(doc.get("epochs", DEFAULT_EPOCHS)),
        seed=int(doc.get("seed", 0)),
        include_baselines=bool(doc.get("include_baselines", True)),
        include_null=bool(doc.get("include_null", False)),
        output_dir=_resolve(doc["output_dir"]) if "output_dir" in doc else base / "out",
    )
    return config


def _model_path(out: Path, lang: str, kind: TokenizerKind, size: int) -> Path:
    return out / lang / "models" / f"{kind.value}-{size}.json"


def _point_paths(
    out: Path, lang: str, kind: TokenizerKind, size: int, mode: FeatureMode
) -> tuple[Path, Path]:
    stem = f"{kind.value}-{size}-{mode.value}"
    return (
        out / lang / "points" / f"{stem}.csv",
        out / lang / "tables" / f"{stem}.json",
    )


def _eval_point_job(payload: tuple) -> str | None:
    """Evaluate one (model, mode) grid point; returns an error or None.

    Runs in a worker process, so everything arrives as paths and
    primitive values and all results go to disk.
    """
    (
        curated_path, model_path, point_path, table_path,
        mode_value, agg_values, thresholds, epochs, include_null,
        language, seed,
    ) = payload
    try:
        dataset = _load_curated(Path(curated_path))
        model = tokenizers.load_model(Path(model_path))
        rows, table = run_evaluation(
            dataset,
            model,
            FeatureMode(mode_value),
            [Aggregation(a) for a in agg_values],
            [float(t) for t in thresholds],
            epochs,
            include_null,
            language,
        )
        buffer = io.StringIO()
        metrics.write_score_rows(rows, buffer, seed=seed)
        _atomic_write(Path(table_path), ibm1.table_to_json(table))
        _atomic_write(Path(point_path), buffer.getvalue())
        return None
    except TokalignError as exc:
        return f"{type(exc).__name__}: {exc}"


def _sweep_language(
    config: SweepConfig, spec: LanguageSpec, jobs: int, failures: list[tuple[str, str]]
) -> list[Path]:
    """Train models and evaluate grid points for one language.

    Returns the point CSV paths that exist after this run, in grid
    order, so the caller can assemble the combined score file.
    """
    out = config.output_dir
    if spec.curated is not None:
        curated_path = spec.curated
    else:
        curated_path = out / spec.name / "curated.tsv"
        if not curated_path.exists():
            features, _ = corpus_mod.parse_feature_lexicon(_read_lines(spec.features))
            segmentations, _ = corpus_mod.parse_segmentation_lexicon(
                _read_lines(spec.segmentations)
            )
            dataset, _ = corpus_mod.curate(segmentations, features, language=spec.name)
            buffer = io.StringIO()
            corpus_mod.write_curated(dataset, buffer)
            _atomic_write(curated_path, buffer.getvalue())

    grid: list[tuple[TokenizerKind, int]] = [
        (kind, size) for kind in config.kinds for size in config.vocab_sizes
    ]
    if config.include_baselines:
        grid.extend((kind, 0) for kind in BASELINE_KINDS)

    trained: list[tuple[TokenizerKind, int, Path]] = []
    for kind, size in grid:
        path = _model_path(out, spec.name, kind, size)
        if not path.exists():
            try:
                model = _train_model(kind, size, config.seed, spec.corpus, curated_path)
            except TokalignError as exc:
                failures.append(
                    (f"{spec.name}/{kind.value}-{size}/train",
                     f"{type(exc).__name__}: {exc}")
                )
                continue
            _atomic_write(path, tokenizers.model_to_json(model))
        trained.append((kind, size, path))

    pending: list[tuple] = []
    point_files: list[Path] = []
    agg_values = [a.value for a in config.aggregations]
    for kind, size, model_path in trained:
        for mode in config.modes:
            point_path, table_path = _point_paths(out, spec.name, kind, size, mode)
            point_files.append(point_path)
            if point_path.exists():
                continue
            pending.append(
                (
                    str(curated_path), str(model_path),
                    str(point_path), str(table_path),
                    mode.value, agg_values, list(config.thresholds),
                    config.epochs, config.include_null, spec.name, config.seed,
                )
            )
    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_eval_point_job, pending))
    else:
        results = [_eval_point_job(payload) for payload in pending]
    for payload, error in zip(pending, results):
        if error is not None:
            failures.append((f"{Path(payload[2]).stem}", error))
    return [p for p in point_files if p.exists()]


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_sweep_config(Path(args.config))
    if args.output_dir:
        config.output_dir = Path(args.output_dir)
    jobs = max(1, args.jobs)
    out = config.output_dir
    failures: list[tuple[str, str]] = []
    all_rows: list[ScoreRow] = []
    for spec in config.languages:
        for point_path in _sweep_language(config, spec, jobs, failures):
            all_rows.extend(metrics.read_score_rows(_read_lines(point_path)))
    buffer = io.StringIO()
    metrics.write_score_rows(all_rows, buffer, seed=config.seed)
    _atomic_write(out / "scores.csv", buffer.getvalue())
    report = stats.build_report(all_rows)
    buffer = io.StringIO()
    stats.write_report(report, buffer, seed=config.seed)
    _atomic_write(out / "correlations.csv", buffer.getvalue())
    if failures:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["point", "error"])
        writer.writerows(failures)
        _atomic_write(out / "failures.csv", buffer.getvalue())
        print(f"{len(failures)} grid points failed; see {out / 'failures.csv'}")
    print(
        f"sweep complete: {len(all_rows)} score rows, "
        f"{len(report.cells)} report cells under {out}"
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(
        prog="tokalign",
        description="Morphological plausibility scoring for subword tokenizers.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("curate", help="join lexicons into a curated dataset")
    p.add_argument("--features", required=True, help="feature lexicon TSV")
    p.add_argument("--segmentations", required=True, help="segmentation lexicon TSV")
    p.add_argument("--out", required=True, help="curated TSV to write")
    p.add_argument("--language", default="und", help="language code for metadata")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("train-tokenizer", help="train a tokenizer model")
    p.add_argument("--corpus", help="training corpus, one sentence per line")
    p.add_argument("--curated", help="curated dataset (required for kind gold)")
    p.add_argument("--kind", required=True,
                   choices=[k.value for k in TokenizerKind])
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train_tokenizer)

    p = sub.add_parser("segment", help="segment words with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("words", nargs="+", metavar="word")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score one model over a curated dataset")
    p.add_argument("--curated", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", default="split", help="joint or split")
    p.add_argument("--aggregations",
                   default=",".join(a.value for a in Aggregation))
    p.add_argument("--thresholds",
                   default=",".join(str(t) for t in DEFAULT_THRESHOLDS))
    p.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    p.add_argument("--include-null", action="store_true",
                   help="add a shared null source token during alignment")
    p.add_argument("--language", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="score CSV to write")
    p.add_argument("--table-out", default=None, help="translation table JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run the full evaluation grid from a config")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--output-dir", default=None, help="override the config output_dir")
    p.add_argument("--jobs", type=int, default=1, help="parallel grid-point workers")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="build a correlation report from score rows")
    p.add_argument("--scores", required=True, help="score CSV")
    p.add_argument("--out", required=True, help="correlation CSV to write")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
