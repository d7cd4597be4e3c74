"""End-to-end orchestration: featurization, training with validation
based model selection, evaluation, baselines, and readability
gradient attribution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import net
from .corpus import (
    BookRecord,
    CorpusSet,
    Genre,
    SectionSpec,
    SuccessLabel,
    select_section,
    split_train_val,
)
from .embedding import book_average, chunk_average, encode_hashed_bow, load_embeddings
from .metrics import class_f1, confusion_counts, weighted_f1
from .net import ModelConfig, ModelParams
from .readability import (
    INDEX_NAMES,
    ReadabilityScaler,
    ReadabilityVector,
    apply_scaler,
    fit_scaler,
    readability_vector,
)
from .textstats import counts_from_sentences, segment_sentences

__all__ = [
    "EncoderConfig",
    "ModelSpec",
    "TrainConfig",
    "TrainResult",
    "EpochStats",
    "BookPrediction",
    "EvalReport",
    "AttributionReport",
    "FeaturizationError",
    "TrainingDivergedError",
    "featurize_corpus",
    "train",
    "predict_corpus",
    "evaluate",
    "majority_baseline",
    "attribute_readability",
    "export_book_vectors",
    "write_history_csv",
    "eval_report_csv",
    "eval_report_text",
    "attribution_csv",
    "attribution_text",
    "feature_meta",
    "config_from_feature_meta",
]


class FeaturizationError(RuntimeError):
    """Raised when one book cannot be turned into model inputs; the
    message names the book."""


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class EncoderConfig:
    """How sentence vectors are produced: the built-in hashed
    bag-of-words encoder, or externally computed .semb files."""

    kind: str = "hashed"  # "hashed" | "external"
    dim: int = 512
    seed: int = 0
    directory: Path | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("hashed", "external"):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind == "external" and self.directory is None:
            raise ValueError("external encoder needs a directory of .semb files")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture hyperparameters, before the input width is known."""

    arch: str = "cnn"  # "cnn" | "book2vec"
    window_sizes: tuple[int, ...] = (2, 3, 5, 7)
    filters_per_window: int = 20
    hidden_units: int = 50
    dropout_p: float = 0.6
    use_readability: bool = True

    def to_model_config(self, input_dim: int, n_chunks: int) -> ModelConfig:
        if self.arch == "book2vec":
            return ModelConfig(
                input_dim=input_dim,
                arch="book2vec",
                window_sizes=(),
                filters_per_window=0,
                hidden_units=self.hidden_units,
                dropout_p=0.0,
                n_chunks=1,
                use_readability=False,
            )
        return ModelConfig(
            input_dim=input_dim,
            arch="cnn",
            window_sizes=self.window_sizes,
            filters_per_window=self.filters_per_window,
            hidden_units=self.hidden_units,
            dropout_p=self.dropout_p,
            n_chunks=n_chunks,
            use_readability=self.use_readability,
        )


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    epochs: int = 100
    batch_size: int = 32
    val_fraction: float = 0.2
    section: SectionSpec = field(default_factory=lambda: SectionSpec.first(1000))
    n_chunks: int = 50
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    model: ModelSpec = field(default_factory=ModelSpec)

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class BookFeatures:
    record: BookRecord
    x: np.ndarray  # (n_chunks, dim) for cnn, (dim,) for book2vec
    readability_raw: ReadabilityVector | None


def _load_sentences(record: BookRecord):
    try:
        text = record.text_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FeaturizationError(f"book {record.book_id}: cannot read text ({exc})") from exc
    return segment_sentences(text)


def _section_matrix(record: BookRecord, cfg: TrainConfig) -> np.ndarray:
    """Sentence-embedding matrix for the configured book section."""
    if cfg.encoder.kind == "hashed":
        sentences = select_section(_load_sentences(record), cfg.section)
        if not sentences:
            raise FeaturizationError(f"book {record.book_id}: no sentences")
        return encode_hashed_bow(
            [s.text for s in sentences], dim=cfg.encoder.dim, seed=cfg.encoder.seed
        )
    semb_path = cfg.encoder.directory / f"{record.book_id}.semb"
    try:
        matrix = load_embeddings(semb_path)
    except Exception as exc:
        raise FeaturizationError(f"book {record.book_id}: {exc}") from exc
    rows = select_section(list(range(matrix.shape[0])), cfg.section)
    if not rows:
        raise FeaturizationError(f"book {record.book_id}: empty embedding matrix")
    return matrix[rows]


def featurize_book(
    record: BookRecord, cfg: TrainConfig, need_readability: bool = True
) -> BookFeatures:
    """Model inputs for one book: section-selected chunk sequence (or
    averaged vector for book2vec) plus its raw readability scores."""
    matrix = _section_matrix(record, cfg)
    if cfg.model.arch == "book2vec":
        x = book_average(matrix)
    else:
        x = chunk_average(matrix, cfg.n_chunks)
    readability = None
    if need_readability:
        sentences = select_section(_load_sentences(record), cfg.section)
        try:
            readability = readability_vector(counts_from_sentences(sentences))
        except ValueError as exc:
            raise FeaturizationError(f"book {record.book_id}: {exc}") from exc
    return BookFeatures(record=record, x=x, readability_raw=readability)


def featurize_corpus(
    corpus: CorpusSet, cfg: TrainConfig, need_readability: bool = True
) -> list[BookFeatures]:
    feats = [featurize_book(r, cfg, need_readability=need_readability) for r in corpus]
    dims = {f.x.shape[-1] for f in feats}
    if len(dims) > 1:
        raise FeaturizationError(f"inconsistent embedding dims across corpus: {sorted(dims)}")
    return feats


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_weighted_f1: float


@dataclass
class TrainResult:
    params: ModelParams  # best validation weighted F1 (earliest epoch on ties)
    scaler: ReadabilityScaler | None
    history: list[EpochStats]
    best_epoch: int
    final_params: ModelParams


def _scaled_inputs(
    feats: list[BookFeatures], scaler: ReadabilityScaler | None
) -> list[np.ndarray | None]:
    if scaler is None:
        return [None] * len(feats)
    return [apply_scaler(scaler, f.readability_raw).as_array() for f in feats]


def train(corpus: CorpusSet, cfg: TrainConfig) -> TrainResult:
    """Train on ``corpus`` with an internal train/validation split.

    Deterministic given ``cfg.seed``: the split, the parameter init, the
    batch shuffles, and the dropout masks all derive from it. After each
    epoch the validation weighted F1 is computed in eval mode and the
    best-scoring parameters (earliest epoch on ties) are kept.
    """
    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    train_set, val_set = split_train_val(corpus, cfg.val_fraction, cfg.seed)

    use_readability = cfg.model.arch == "cnn" and cfg.model.use_readability
    feats_train = featurize_corpus(train_set, cfg, need_readability=use_readability)
    feats_val = featurize_corpus(val_set, cfg, need_readability=use_readability)

    scaler = None
    if use_readability:
        scaler = fit_scaler([f.readability_raw for f in feats_train])
    r_train = _scaled_inputs(feats_train, scaler)
    r_val = _scaled_inputs(feats_val, scaler)

    input_dim = feats_train[0].x.shape[-1]
    model_cfg = cfg.model.to_model_config(input_dim=input_dim, n_chunks=cfg.n_chunks)

    root = np.random.SeedSequence(cfg.seed)
    init_ss, shuffle_ss, dropout_ss = root.spawn(3)
    params = net.init_params(model_cfg, seed=int(init_ss.generate_state(1)[0]))
    rng_shuffle = np.random.default_rng(shuffle_ss)
    rng_dropout = np.random.default_rng(dropout_ss)
    adam = net.AdamState.zeros(params)

    x_train = [f.x for f in feats_train]
    y_train = [f.record.label for f in feats_train]
    x_val = [f.x for f in feats_val]
    y_val = [f.record.label for f in feats_val]

    history: list[EpochStats] = []
    best_f1 = -1.0
    best_epoch = 0
    best_params = params.copy()

    n_train = len(x_train)
    for epoch in range(1, cfg.epochs + 1):
        order = rng_shuffle.permutation(n_train)
        epoch_losses: list[float] = []
        for start in range(0, n_train, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grad_sum: dict[str, np.ndarray] | None = None
            for i in batch:
                logits, cache = net.forward(
                    params, x_train[i], r_train[i], train_mode=True, rng=rng_dropout
                )
                epoch_losses.append(net.loss(logits, y_train[i]))
                grads, _ = net.backward(params, cache, y_train[i])
                if grad_sum is None:
                    grad_sum = grads
                else:
                    for name in grad_sum:
                        grad_sum[name] += grads[name]
            scale = 1.0 / len(batch)
            for name in grad_sum:
                grad_sum[name] *= scale
            if not all(np.isfinite(g).all() for g in grad_sum.values()):
                raise TrainingDivergedError(f"non-finite gradients at epoch {epoch}")
            params, adam = net.adam_step(params, grad_sum, adam)

        train_loss = float(np.mean(epoch_losses))
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
        val_preds = [
            net.predict(params, x, r)[0] for x, r in zip(x_val, r_val)
        ]
        val_f1 = weighted_f1(val_preds, y_val)
        history.append(EpochStats(epoch=epoch, train_loss=train_loss, val_weighted_f1=val_f1))
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_params = params.copy()

    return TrainResult(
        params=best_params,
        scaler=scaler,
        history=history,
        best_epoch=best_epoch,
        final_params=params,
    )


@dataclass(frozen=True)
class BookPrediction:
    book_id: str
    genre: Genre
    gold: SuccessLabel
    pred: SuccessLabel
    p_successful: float


def _check_featurization_match(params: ModelParams, cfg: TrainConfig) -> None:
    mc = params.config
    if cfg.model.arch != mc.arch:
        raise ValueError(f"checkpoint arch {mc.arch!r} but config says {cfg.model.arch!r}")
    if mc.arch == "cnn" and cfg.n_chunks != mc.n_chunks:
        raise ValueError(
            f"checkpoint expects n_chunks={mc.n_chunks}, config has {cfg.n_chunks}"
        )
    if cfg.encoder.kind == "hashed" and cfg.encoder.dim != mc.input_dim:
        raise ValueError(
            f"checkpoint expects input_dim={mc.input_dim}, encoder dim is {cfg.encoder.dim}"
        )


def predict_corpus(
    params: ModelParams,
    scaler: ReadabilityScaler | None,
    corpus: CorpusSet,
    cfg: TrainConfig,
) -> list[BookPrediction]:
    """Eval-mode predictions for every book, in corpus order."""
    _check_featurization_match(params, cfg)
    use_readability = params.config.use_readability
    if use_readability and scaler is None:
        raise ValueError("model uses readability but no scaler was provided")
    feats = featurize_corpus(corpus, cfg, need_readability=use_readability)
    scaled = _scaled_inputs(feats, scaler if use_readability else None)
    out = []
    for f, r in zip(feats, scaled):
        label, prob = net.predict(params, f.x, r)
        p_success = prob if label == SuccessLabel.SUCCESSFUL else 1.0 - prob
        out.append(
            BookPrediction(
                book_id=f.record.book_id,
                genre=f.record.genre,
                gold=f.record.label,
                pred=label,
                p_successful=p_success,
            )
        )
    return out


@dataclass
class EvalReport:
    weighted_f1: float
    per_class_f1: tuple[float, float]  # (Unsuccessful, Successful)
    per_genre_f1: dict[Genre, float]
    confusion: np.ndarray  # rows gold, cols pred; 0 = Unsuccessful
    n: int


def report_from_predictions(predictions: list[BookPrediction]) -> EvalReport:
    preds = [p.pred for p in predictions]
    golds = [p.gold for p in predictions]
    confusion = confusion_counts(preds, golds)
    per_genre: dict[Genre, float] = {}
    for genre in Genre:
        subset = [p for p in predictions if p.genre == genre]
        if subset:
            per_genre[genre] = weighted_f1([p.pred for p in subset], [p.gold for p in subset])
    return EvalReport(
        weighted_f1=weighted_f1(preds, golds),
        per_class_f1=(class_f1(confusion, 0), class_f1(confusion, 1)),
        per_genre_f1=per_genre,
        confusion=confusion,
        n=len(predictions),
    )


def evaluate(
    params: ModelParams,
    scaler: ReadabilityScaler | None,
    test: CorpusSet,
    cfg: TrainConfig,
) -> EvalReport:
    """Weighted F1 overall and per genre, plus the confusion matrix.

    Genres absent from the test set are omitted from per-genre scores.
    """
    return report_from_predictions(predict_corpus(params, scaler, test, cfg))


def majority_baseline(train_set: CorpusSet) -> SuccessLabel:
    """The constant label a majority-class predictor emits: the modal
    training label, ties going to Successful."""
    if len(train_set) == 0:
        raise ValueError("majority baseline needs a nonempty training set")
    n_successful = sum(1 for r in train_set if r.label == SuccessLabel.SUCCESSFUL)
    if n_successful >= len(train_set) - n_successful:
        return SuccessLabel.SUCCESSFUL
    return SuccessLabel.UNSUCCESSFUL


@dataclass
class AttributionReport:
    mean_gradient: np.ndarray  # 5 values, order [FRES, FKG, SMOG, CLI, ARI]
    n_books: int
    target: str  # "logit" | "probability"


def attribute_readability(
    params: ModelParams,
    scaler: ReadabilityScaler,
    test: CorpusSet,
    cfg: TrainConfig,
    target: str = "logit",
) -> AttributionReport:
    """Mean gradient of the Successful output with respect to the 5
    scaled readability inputs over the test books (eval mode)."""
    if not params.config.use_readability:
        raise ValueError("model was trained without readability fusion")
    _check_featurization_match(params, cfg)
    feats = featurize_corpus(test, cfg, need_readability=True)
    scaled = _scaled_inputs(feats, scaler)
    total = np.zeros(net.N_READABILITY)
    for f, r in zip(feats, scaled):
        total += net.readability_output_gradient(params, f.x, r, target=target)
    return AttributionReport(
        mean_gradient=total / len(feats), n_books=len(feats), target=target
    )


def export_book_vectors(corpus: CorpusSet, cfg: TrainConfig, out_path: str | Path) -> int:
    """Write one averaged embedding vector per book as CSV
    (book_id, genre, then the vector components). Returns the row count."""
    out_path = Path(out_path)
    rows = []
    dim = None
    for record in corpus:
        matrix = _section_matrix(record, cfg)
        vec = book_average(matrix)
        dim = len(vec)
        rows.append((record.book_id, record.genre.value, vec))
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["book_id", "genre"] + [f"v{i}" for i in range(dim or 0)])
        for book_id, genre, vec in rows:
            writer.writerow([book_id, genre] + [f"{v:.9g}" for v in vec])
    return len(rows)


# ----------------------------------------------------------------------
# Report and history serialization
# ----------------------------------------------------------------------


def write_history_csv(history: list[EpochStats], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_weighted_f1"])
        for stats in history:
            writer.writerow(
                [stats.epoch, repr(stats.train_loss), repr(stats.val_weighted_f1)]
            )


def eval_report_csv(report: EvalReport) -> str:
    lines = ["metric,value"]
    lines.append(f"n,{report.n}")
    lines.append(f"weighted_f1,{report.weighted_f1!r}")
    lines.append(f"f1_unsuccessful,{report.per_class_f1[0]!r}")
    lines.append(f"f1_successful,{report.per_class_f1[1]!r}")
    c = report.confusion
    lines.append(f"confusion_gold_unsuccessful_pred_unsuccessful,{int(c[0, 0])}")
    lines.append(f"confusion_gold_unsuccessful_pred_successful,{int(c[0, 1])}")
    lines.append(f"confusion_gold_successful_pred_unsuccessful,{int(c[1, 0])}")
    lines.append(f"confusion_gold_successful_pred_successful,{int(c[1, 1])}")
    for genre in Genre:
        if genre in report.per_genre_f1:
            lines.append(f"genre_f1_{genre.value},{report.per_genre_f1[genre]!r}")
    return "\n".join(lines) + "\n"


def eval_report_text(report: EvalReport) -> str:
    c = report.confusion
    lines = [
        f"books evaluated: {report.n}",
        f"weighted F1: {report.weighted_f1:.4f}",
        f"F1 Unsuccessful: {report.per_class_f1[0]:.4f}",
        f"F1 Successful: {report.per_class_f1[1]:.4f}",
        "confusion (rows gold U/S, cols pred U/S):",
        f"  {int(c[0, 0]):6d} {int(c[0, 1]):6d}",
        f"  {int(c[1, 0]):6d} {int(c[1, 1]):6d}",
    ]
    if report.per_genre_f1:
        lines.append("per-genre weighted F1:")
        for genre in Genre:
            if genre in report.per_genre_f1:
                lines.append(f"  {genre.value:20s} {report.per_genre_f1[genre]:.4f}")
    return "\n".join(lines) + "\n"


def attribution_csv(report: AttributionReport) -> str:
    lines = ["name,value"]
    for name, value in zip(INDEX_NAMES, report.mean_gradient):
        lines.append(f"{name},{float(value)!r}")
    lines.append(f"n_books,{report.n_books}")
    return "\n".join(lines) + "\n"


def attribution_text(report: AttributionReport) -> str:
    lines = [
        f"mean gradient of the Successful {report.target} w.r.t. scaled "
        f"readability inputs ({report.n_books} books):"
    ]
    for name, value in zip(INDEX_NAMES, report.mean_gradient):
        lines.append(f"  {name:5s} {float(value):+.6f}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# Featurization metadata stored inside checkpoints so that evaluation
# reuses the training-time featurization exactly.
# ----------------------------------------------------------------------


def feature_meta(cfg: TrainConfig) -> dict:
    meta = {
        "section": str(cfg.section),
        "n_chunks": cfg.n_chunks,
        "encoder_kind": cfg.encoder.kind,
        "encoder_dim": cfg.encoder.dim,
        "encoder_seed": cfg.encoder.seed,
    }
    return meta


def config_from_feature_meta(
    meta: dict,
    model_config: ModelConfig,
    semb_dir: Path | None = None,
) -> TrainConfig:
    """Rebuild the featurization side of a TrainConfig from checkpoint
    metadata; ``semb_dir`` supplies the .semb directory for external
    encoders (it is not stored in checkpoints)."""
    encoder = EncoderConfig(
        kind=meta["encoder_kind"],
        dim=meta["encoder_dim"],
        seed=meta["encoder_seed"],
        directory=semb_dir,
    )
    spec = ModelSpec(
        arch=model_config.arch,
        window_sizes=model_config.window_sizes,
        filters_per_window=model_config.filters_per_window,
        hidden_units=model_config.hidden_units,
        dropout_p=model_config.dropout_p,
        use_readability=model_config.use_readability,
    )
    return TrainConfig(
        section=SectionSpec.parse(meta["section"]),
        n_chunks=meta["n_chunks"],
        encoder=encoder,
        model=spec,
    )
