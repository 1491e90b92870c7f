"""Experiment orchestration: run configs, training loops, and the CV driver.

The flow mirrors the two-stage design: scale features to [0,1], train the
autoencoder on padded feature images, read its 4096-wide dense activations
back out as the learned representation, train the classifier on those, and
score held-out pairs. `cmd_cv_run` wraps that in shuffled k-fold
cross-validation with repeats; everything downstream of the master seed is
derived through tagged generator streams, so fold assignment, parameter
init, batch order and dropout masks are independent of each other and
reproducible run to run.

Leakage stance: scaling records and both networks are fit on training
folds only. `global_ae=True` switches to the fidelity protocol that fits
scaling and the autoencoder once on the full dataset before
cross-validating the classifier; reports name the mode used.
"""

import hashlib
import json
import math
import os
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import checkpoint
from .data import (
    DELIMITED,
    Dataset,
    ScalingRecord,
    apply_scaling,
    as_images,
    as_square_images,
    dataset_stats,
    fit_scaling,
    load_dataset,
    make_folds,
    read_feature_file,
    subset,
    write_feature_file,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    FrnetError,
    MissingArtifactError,
    PipelineError,
)
from .metrics import (
    EvalReport,
    ScoredLabels,
    aggregate,
    evaluate_scores,
    pr_points,
    roc_points,
    write_curve_files,
)
from .models import (
    DEEP_FEATURES,
    CompiledModel,
    build_frnet1,
    build_frnet2,
    compile_model,
    extract_features,
    spec_from_dict,
    spec_to_dict,
)
from .optim import AdamState, adam_step
from .rng import DROPOUT, FOLDS, SHUFFLE, derive_key, stream
from .tensor import Tensor

ENV_OUT_DIR = "FRNET_OUT_DIR"

# seed-path stage tags (never reuse across purposes)
_STAGE_AE = 1
_STAGE_CLF = 2
_STAGE_GLOBAL_AE = 3


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str = ""
    dataset_format: str = DELIMITED
    dataset_name: str = "custom"
    orientation: tuple[int, int] = (211, 7)
    seed: int = 0
    batch_size: int = 64
    epochs_ae: int = 50
    epochs_clf: int = 50
    lr: float = 0.001
    keep_prob: float = 0.5
    l2_scale: float = 0.001
    folds: int = 5
    repeats: int = 10
    bottleneck_channels: int = 16
    stratified: bool = True
    global_ae: bool = False
    ae_hidden: tuple[int, int] = (4096, 2048)
    clf_hidden: tuple[int, int] = (2048, 512)
    threshold: float = 0.5
    out_dir: str = "runs"

    def validate(self) -> "RunConfig":
        checks = [
            (self.batch_size >= 1, "batch-size must be >= 1"),
            (self.epochs_ae >= 0, "epochs-ae must be >= 0"),
            (self.epochs_clf >= 0, "epochs-clf must be >= 0"),
            (self.lr > 0, "lr must be positive"),
            (0 < self.keep_prob <= 1, "keep-prob must be in (0, 1]"),
            (self.l2_scale >= 0, "l2-scale must be >= 0"),
            (self.folds >= 2, "folds must be >= 2"),
            (self.repeats >= 1, "repeats must be >= 1"),
            (self.bottleneck_channels >= 1, "bottleneck-channels must be >= 1"),
            (0 < self.threshold < 1, "threshold must be in (0, 1)"),
            (len(self.orientation) == 2 and min(self.orientation) >= 1,
             "orientation must be two positive extents"),
            (len(self.ae_hidden) == 2 and min(self.ae_hidden) >= 1,
             "ae-hidden must be two positive widths"),
            (len(self.clf_hidden) == 2 and min(self.clf_hidden) >= 1,
             "clf-hidden must be two positive widths"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    def require_square_representation(self) -> int:
        side = math.isqrt(self.ae_hidden[0])
        if side * side != self.ae_hidden[0]:
            raise ConfigError(
                f"ae-hidden {self.ae_hidden[0]} is not a perfect square; "
                "the classifier views the representation as a square image"
            )
        return side


CONFIG_KEYS = {
    "dataset_path": "dataset-path",
    "dataset_format": "dataset-format",
    "dataset_name": "dataset-name",
    "orientation": "orientation",
    "seed": "seed",
    "batch_size": "batch-size",
    "epochs_ae": "epochs-ae",
    "epochs_clf": "epochs-clf",
    "lr": "lr",
    "keep_prob": "keep-prob",
    "l2_scale": "l2-scale",
    "folds": "folds",
    "repeats": "repeats",
    "bottleneck_channels": "bottleneck-channels",
    "stratified": "stratified",
    "global_ae": "global-ae",
    "ae_hidden": "ae-hidden",
    "clf_hidden": "clf-hidden",
    "threshold": "threshold",
    "out_dir": "out-dir",
}


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for attr, key in CONFIG_KEYS.items():
        v = getattr(cfg, attr)
        out[key] = list(v) if isinstance(v, tuple) else v
    return out


def config_digest(cfg: RunConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_pair(text: str, what: str) -> tuple[int, int]:
    """'211x7' or '4096,2048' -> (211, 7); both separators accepted."""
    for sep in ("x", ","):
        if sep in text:
            parts = text.split(sep)
            if len(parts) == 2:
                try:
                    return int(parts[0]), int(parts[1])
                except ValueError:
                    break
    raise ConfigError(f"{what}: expected two integers like '211x7', got {text!r}")


def config_from_dict(values: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from kebab-case keys, starting from `base`."""
    cfg = base if base is not None else RunConfig()
    attr_by_key = {key: attr for attr, key in CONFIG_KEYS.items()}
    updates = {}
    for key, raw in values.items():
        if key not in attr_by_key:
            raise ConfigError(f"unknown config key {key!r}")
        attr = attr_by_key[key]
        current = getattr(cfg, attr)
        if isinstance(current, bool):
            if isinstance(raw, bool):
                updates[attr] = raw
            elif str(raw).lower() in ("true", "yes", "1"):
                updates[attr] = True
            elif str(raw).lower() in ("false", "no", "0"):
                updates[attr] = False
            else:
                raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        elif isinstance(current, int):
            try:
                updates[attr] = int(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
        elif isinstance(current, float):
            try:
                updates[attr] = float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        elif isinstance(current, tuple):
            if isinstance(raw, (list, tuple)):
                if len(raw) != 2:
                    raise ConfigError(f"{key}: expected two integers")
                updates[attr] = (int(raw[0]), int(raw[1]))
            else:
                updates[attr] = parse_pair(str(raw), key)
        else:
            updates[attr] = str(raw)
    return replace(cfg, **updates)


class TrainLog:
    """Per-epoch (index, loss, accuracy, seconds) records."""

    def __init__(self):
        self.entries: list[dict] = []

    def add(self, epoch: int, loss: float, accuracy: float, seconds: float) -> None:
        if self.entries and epoch <= self.entries[-1]["epoch"]:
            raise PipelineError(f"epoch {epoch} logged after {self.entries[-1]['epoch']}")
        self.entries.append(
            {"epoch": epoch, "loss": loss, "accuracy": accuracy, "seconds": seconds}
        )

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch\tloss\taccuracy\tseconds\n")
            for e in self.entries:
                fh.write(
                    "%d\t%.10g\t%.10g\t%.3f\n"
                    % (e["epoch"], e["loss"], e["accuracy"], e["seconds"])
                )


def _predict_batched(model: CompiledModel, x: np.ndarray, batch_size: int) -> np.ndarray:
    outs = [model.predict(x[s : s + batch_size]) for s in range(0, len(x), batch_size)]
    return np.concatenate(outs, axis=0)


def _train(
    model: CompiledModel,
    x: np.ndarray,
    y: np.ndarray,
    *,
    epochs: int,
    batch_size: int,
    lr: float,
    master_seed: int,
    path: tuple[int, ...],
    accuracy_fn,
) -> tuple[AdamState, TrainLog]:
    """Mini-batch Adam over (x, y); deterministic given seed and path tags."""
    n = len(x)
    params = model.params()
    state = AdamState.init(params, lr=lr)
    log = TrainLog()
    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = stream(master_seed, SHUFFLE, *path, epoch).permutation(n)
        batch_losses = []
        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start : start + batch_size]
            dropout_seed = derive_key(master_seed, DROPOUT, *path, epoch, b)
            total, _, grads = model.train_step_grads(x[idx], y[idx], dropout_seed)
            params = adam_step(params, grads, state)
            model.set_params(params)
            batch_losses.append(total)
        loss = float(np.mean(np.array(batch_losses, dtype=np.float64)))
        log.add(epoch, loss, accuracy_fn(model), time.perf_counter() - t0)
    return state, log


def _sample(n: int, cap: int = 256) -> slice:
    return slice(0, min(n, cap))


def _recon_accuracy_fn(x: np.ndarray, y: np.ndarray, batch_size: int):
    s = _sample(len(x))
    xs, ys = x[s], y[s]

    def fn(model: CompiledModel) -> float:
        pred = _predict_batched(model, xs, batch_size)
        return float(np.mean((pred >= 0.5) == (ys >= 0.5)))

    return fn


def _threshold_accuracy_fn(x: np.ndarray, y: np.ndarray, batch_size: int, threshold: float):
    s = _sample(len(x))
    xs, ys = x[s], y[s]

    def fn(model: CompiledModel) -> float:
        pred = _predict_batched(model, xs, batch_size)
        return float(np.mean((pred >= threshold).astype(np.int64) == ys.astype(np.int64)))

    return fn


def _train_autoencoder(
    cfg: RunConfig, feats_scaled: np.ndarray, *, path: tuple[int, ...]
) -> tuple[CompiledModel, AdamState, TrainLog]:
    spec = build_frnet1(
        feature_count=feats_scaled.shape[1],
        orientation=cfg.orientation,
        hidden=cfg.ae_hidden,
        bottleneck_channels=cfg.bottleneck_channels,
        keep_prob=cfg.keep_prob,
        l2_scale=cfg.l2_scale,
    )
    model = compile_model(spec, init_seed=derive_key(cfg.seed, *path))
    x = as_images(feats_scaled, cfg.orientation)
    state, log = _train(
        model, x, feats_scaled,
        epochs=cfg.epochs_ae, batch_size=cfg.batch_size, lr=cfg.lr,
        master_seed=cfg.seed, path=path,
        accuracy_fn=_recon_accuracy_fn(x, feats_scaled, cfg.batch_size),
    )
    return model, state, log


def _train_classifier(
    cfg: RunConfig, rep: np.ndarray, labels: np.ndarray, *, path: tuple[int, ...]
) -> tuple[CompiledModel, AdamState, TrainLog]:
    spec = build_frnet2(
        feature_count=rep.shape[1],
        hidden=cfg.clf_hidden,
        bottleneck_channels=cfg.bottleneck_channels,
        keep_prob=cfg.keep_prob,
        l2_scale=cfg.l2_scale,
    )
    model = compile_model(spec, init_seed=derive_key(cfg.seed, *path))
    x = as_square_images(rep)
    y = labels.astype(np.float32).reshape(-1, 1)
    state, log = _train(
        model, x, y,
        epochs=cfg.epochs_clf, batch_size=cfg.batch_size, lr=cfg.lr,
        master_seed=cfg.seed, path=path,
        accuracy_fn=_threshold_accuracy_fn(x, labels, cfg.batch_size, cfg.threshold),
    )
    return model, state, log


def _model_state(
    model: CompiledModel,
    cfg: RunConfig,
    record: ScalingRecord | None,
    extras: dict | None = None,
) -> checkpoint.ModelState:
    return checkpoint.ModelState(
        spec_dict=spec_to_dict(model.spec),
        params={name: t.data for name, t in model.params().items()},
        seed=cfg.seed,
        config_digest=config_digest(cfg),
        scaling=(record.mins, record.maxs) if record is not None else None,
        extras=extras or {},
    )


def _load_model(path: str, expected_kind: str) -> tuple[CompiledModel, ScalingRecord | None]:
    state = checkpoint.load(path)
    if state.spec_dict["model_kind"] != expected_kind:
        raise CheckpointError(
            f"{path}: holds a {state.spec_dict['model_kind']} model, expected {expected_kind}"
        )
    spec = spec_from_dict(state.spec_dict)
    model = compile_model(spec, init_seed=0, random_init=False)
    model.set_params({name: Tensor(arr) for name, arr in state.params.items()})
    record = ScalingRecord(*state.scaling) if state.scaling is not None else None
    return model, record


def _resolve_dataset(cfg: RunConfig, dataset: Dataset | None) -> Dataset:
    if dataset is not None:
        return dataset
    if not cfg.dataset_path:
        raise ConfigError("no dataset: set dataset-path or pass one in")
    return load_dataset(cfg.dataset_path, format=cfg.dataset_format, name=cfg.dataset_name)


def _ensure_out_dir(cfg: RunConfig, *parts: str) -> str:
    path = os.path.join(cfg.out_dir, *parts)
    os.makedirs(path, exist_ok=True)
    return path


def cmd_ingest(cfg: RunConfig, dataset: Dataset | None = None) -> dict:
    """Load and validate the dataset; returns its summary statistics."""
    cfg.validate()
    d = _resolve_dataset(cfg, dataset)
    stats = dataset_stats(d)
    stats["name"] = d.name
    stats["features"] = d.feature_count
    return stats


def cmd_train_ae(cfg: RunConfig, dataset: Dataset | None = None) -> dict:
    """Train the autoencoder on the full dataset; write checkpoint and log."""
    cfg.validate()
    d = _resolve_dataset(cfg, dataset)
    record = fit_scaling(d.features)
    scaled = apply_scaling(d.features, record)
    model, _, log = _train_autoencoder(cfg, scaled, path=(_STAGE_GLOBAL_AE,))
    out = _ensure_out_dir(cfg)
    ckpt_path = os.path.join(out, "ae.ckpt")
    log_path = os.path.join(out, "ae_train_log.tsv")
    checkpoint.save(_model_state(model, cfg, record), ckpt_path)
    log.write(log_path)
    return {"checkpoint": ckpt_path, "log": log_path, "train_log": log}


def cmd_extract(cfg: RunConfig, ae_checkpoint: str, dataset: Dataset | None = None) -> str:
    """Run the dataset through a trained autoencoder; write the feature file."""
    cfg.validate()
    d = _resolve_dataset(cfg, dataset)
    if len(d) == 0:
        raise DataError("dataset has no rows; nothing to extract")
    model, record = _load_model(ae_checkpoint, "frnet1")
    if record is None:
        raise CheckpointError(f"{ae_checkpoint}: no scaling record; cannot reproduce inputs")
    h, w, _ = model.shapes[model.spec.input_layer.name]
    if d.feature_count + 1 != h * w:
        raise CheckpointError(
            f"{ae_checkpoint}: expects {h * w - 1} features, dataset has {d.feature_count}"
        )
    scaled = apply_scaling(d.features, record)
    rep = extract_features(model, as_images(scaled, (h, w)))
    out = _ensure_out_dir(cfg)
    path = os.path.join(out, "features.tsv")
    write_feature_file(path, Dataset(d.name, d.drug_ids, d.target_ids, rep, d.labels))
    return path


def cmd_train_clf(cfg: RunConfig, features_path: str) -> dict:
    """Train the classifier on an extracted-feature file; write checkpoint and log."""
    cfg.validate()
    d = read_feature_file(features_path)
    model, _, log = _train_classifier(
        cfg, d.features, d.labels, path=(_STAGE_CLF, 0, 0)
    )
    out = _ensure_out_dir(cfg)
    ckpt_path = os.path.join(out, "clf.ckpt")
    log_path = os.path.join(out, "clf_train_log.tsv")
    checkpoint.save(_model_state(model, cfg, None), ckpt_path)
    log.write(log_path)
    return {"checkpoint": ckpt_path, "log": log_path, "train_log": log}


def cmd_cv_run(cfg: RunConfig, dataset: Dataset | None = None) -> tuple[EvalReport, dict]:
    """k-fold cross-validation with repeats over the full two-stage pipeline."""
    cfg.validate()
    cfg.require_square_representation()
    d = _resolve_dataset(cfg, dataset)
    models_dir = _ensure_out_dir(cfg, "models")
    curves_dir = _ensure_out_dir(cfg, "curves")
    logs_dir = _ensure_out_dir(cfg, "logs")
    digest = config_digest(cfg)

    global_model = None
    global_record = None
    if cfg.global_ae:
        global_record = fit_scaling(d.features)
        scaled_all = apply_scaling(d.features, global_record)
        global_model, _, glog = _train_autoencoder(cfg, scaled_all, path=(_STAGE_GLOBAL_AE,))
        glog.write(os.path.join(logs_dir, "ae_global.tsv"))
        checkpoint.save(
            _model_state(global_model, cfg, global_record),
            os.path.join(models_dir, "ae_global.ckpt"),
        )

    fold_metrics: list[dict] = []
    curve_files: list[str] = []
    ckpt_files: list[str] = []
    if cfg.global_ae:
        ckpt_files.append(os.path.join("models", "ae_global.ckpt"))

    for r in range(cfg.repeats):
        plan = make_folds(d, k=cfg.folds, seed=derive_key(cfg.seed, FOLDS, r),
                          stratified=cfg.stratified)
        for f in range(cfg.folds):
            try:
                fm, files = _run_fold(
                    cfg, d, plan, r, f,
                    global_model=global_model, global_record=global_record,
                    models_dir=models_dir, curves_dir=curves_dir, logs_dir=logs_dir,
                )
            except FrnetError as e:
                raise PipelineError(f"repeat {r} fold {f}: {e}") from e
            fold_metrics.append(fm)
            curve_files.extend(files["curves"])
            ckpt_files.extend(files["checkpoints"])

    report = aggregate(fold_metrics)
    report_dict = {
        "dataset": d.name,
        "pairs": len(d),
        "positives": int(d.positives),
        "mode": "global-ae" if cfg.global_ae else "per-fold-ae",
        "config": config_to_dict(cfg),
        "config_digest": digest,
        "fold_metrics": fold_metrics,
        "means": report.means,
        "sds": report.sds,
        "curve_files": curve_files,
        "checkpoint_files": ckpt_files,
    }
    report_path = os.path.join(cfg.out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report_dict, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return report, report_dict


def _run_fold(
    cfg: RunConfig,
    d: Dataset,
    plan,
    r: int,
    f: int,
    *,
    global_model,
    global_record,
    models_dir: str,
    curves_dir: str,
    logs_dir: str,
) -> tuple[dict, dict]:
    train_idx = plan.train_indices(f)
    test_idx = plan.test_indices(f)
    train_labels = d.labels[train_idx]
    test_labels = d.labels[test_idx]
    if train_labels.sum() == 0 or test_labels.sum() == 0:
        raise DataError(f"fold {f} leaves a side without positives; use stratified folds")

    files = {"curves": [], "checkpoints": []}
    if cfg.global_ae:
        record = global_record
        ae = global_model
    else:
        record = fit_scaling(d.features[train_idx])
        ae, _, ae_log = _train_autoencoder(
            cfg, apply_scaling(d.features[train_idx], record), path=(_STAGE_AE, r, f)
        )
        ae_log.write(os.path.join(logs_dir, f"ae_r{r}_f{f}.tsv"))
        ae_ckpt = os.path.join(models_dir, f"ae_r{r}_f{f}.ckpt")
        checkpoint.save(_model_state(ae, cfg, record), ae_ckpt)
        files["checkpoints"].append(os.path.relpath(ae_ckpt, cfg.out_dir))

    h, w = cfg.orientation
    rep_train = extract_features(
        ae, as_images(apply_scaling(d.features[train_idx], record), (h, w))
    )
    rep_test = extract_features(
        ae, as_images(apply_scaling(d.features[test_idx], record), (h, w))
    )

    clf, _, clf_log = _train_classifier(cfg, rep_train, train_labels, path=(_STAGE_CLF, r, f))
    clf_log.write(os.path.join(logs_dir, f"clf_r{r}_f{f}.tsv"))
    clf_ckpt = os.path.join(models_dir, f"clf_r{r}_f{f}.ckpt")
    checkpoint.save(_model_state(clf, cfg, None), clf_ckpt)
    files["checkpoints"].append(os.path.relpath(clf_ckpt, cfg.out_dir))

    probs = _predict_batched(clf, as_square_images(rep_test), cfg.batch_size)[:, 0]
    scored = ScoredLabels(probs.astype(np.float64), test_labels)
    fm = evaluate_scores(scored, cfg.threshold)
    fm["repeat"] = r
    fm["fold"] = f
    roc_path, pr_path = write_curve_files(
        curves_dir, d.name, r, f, roc_points(scored), pr_points(scored)
    )
    files["curves"].append(os.path.relpath(roc_path, cfg.out_dir))
    files["curves"].append(os.path.relpath(pr_path, cfg.out_dir))
    return fm, files


def cmd_rank_candidates(
    cfg: RunConfig,
    ae_checkpoint: str,
    clf_checkpoint: str,
    k: int,
    dataset: Dataset | None = None,
) -> list[tuple[str, str, float]]:
    """Top-k label-0 pairs by predicted interaction probability.

    Descending score; ties broken by (drug-id, target-id) lexicographically.
    """
    cfg.validate()
    if k < 0:
        raise ConfigError("k must be >= 0")
    d = _resolve_dataset(cfg, dataset)
    negatives = np.flatnonzero(d.labels == 0)
    if k > negatives.size:
        warnings.warn(
            f"k={k} exceeds the {negatives.size} negative pairs; returning all of them",
            stacklevel=2,
        )
        k = negatives.size
    if k == 0:
        return []
    ae, record = _load_model(ae_checkpoint, "frnet1")
    if record is None:
        raise CheckpointError(f"{ae_checkpoint}: no scaling record; cannot reproduce inputs")
    clf, _ = _load_model(clf_checkpoint, "frnet2")
    neg = subset(d, negatives)
    h, w, _ = ae.shapes[ae.spec.input_layer.name]
    if neg.feature_count + 1 != h * w:
        raise CheckpointError(
            f"{ae_checkpoint}: expects {h * w - 1} features, dataset has {neg.feature_count}"
        )
    rep = extract_features(ae, as_images(apply_scaling(neg.features, record), (h, w)))
    probs = _predict_batched(clf, as_square_images(rep), cfg.batch_size)[:, 0]
    rows = sorted(
        zip(neg.drug_ids, neg.target_ids, probs.astype(float)),
        key=lambda row: (-row[2], row[0], row[1]),
    )
    return [(drug, target, float(score)) for drug, target, score in rows[:k]]


def cmd_report(run_dir: str) -> dict:
    """Summarize a finished run directory; fails closed on missing artifacts."""
    report_path = os.path.join(run_dir, "report.json")
    if not os.path.exists(report_path):
        raise MissingArtifactError(f"missing artifacts in {run_dir}: ['report.json']")
    with open(report_path, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    missing = [
        rel
        for rel in list(report["curve_files"]) + list(report["checkpoint_files"])
        if not os.path.exists(os.path.join(run_dir, rel))
    ]
    if missing:
        raise MissingArtifactError(f"missing artifacts in {run_dir}: {sorted(missing)}")

    def fmt(v):
        return "n/a" if v is None else "%.4f" % v

    means, sds = report["means"], report["sds"]
    table_path = os.path.join(run_dir, "metrics.tsv")
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("dataset\tmode\tmetric\tmean\tsd\n")
        for key in sorted(means):
            fh.write(
                "%s\t%s\t%s\t%s\t%s\n"
                % (report["dataset"], report["mode"], key, fmt(means[key]), fmt(sds[key]))
            )
    summary_path = os.path.join(run_dir, "summary.txt")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dataset {report['dataset']}: {report['pairs']} pairs, "
                 f"{report['positives']} positive\n")
        fh.write(f"mode {report['mode']}, config {report['config_digest'][:12]}\n")
        fh.write(f"folds x repeats evaluated: {len(report['fold_metrics'])}\n")
        for key in ("auPR", "auROC"):
            fh.write(f"{key}: mean {fmt(means[key])} sd {fmt(sds[key])}\n")
        fh.write(f"curve files: {len(report['curve_files'])}\n")
    return {"summary": summary_path, "table": table_path, "report": report}
