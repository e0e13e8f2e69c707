"""Pipeline steps usable from Python; the CLI is a thin layer on top."""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from seamsentinel import cwt as cwt_mod
from seamsentinel import sim
from seamsentinel.classify import (
    Dataset,
    ForestModel,
    evaluate,
    feature_importance,
    load_model,
    save_model,
    stratified_split,
    train_random_forest,
    train_svm,
)
from seamsentinel.classify.dataset import check_schema
from seamsentinel.features import (
    STATISTICAL_NAMES,
    DegenerateWindowError,
    Scheme,
    statistical_array,
)
from seamsentinel.pipeline.config import ConfigError, PipelineConfig
from seamsentinel.signal import (
    AccelerationRecording,
    ConditionLabel,
    Scenario,
    Window,
    label_windows_by_time,
    load_recording,
    segment_windows,
)
from seamsentinel.wpd import band_feature_names, wpd_rms_array

log = logging.getLogger(__name__)

DEGENERATE_LIMIT = 0.01


class PipelineError(RuntimeError):
    pass


class HashMismatchError(ConfigError):
    pass


def check_hash(artifact: str, found: str | None, cfg: PipelineConfig, force: bool) -> None:
    if found is None or found == cfg.hash or force:
        return
    raise HashMismatchError(
        f"{artifact} was produced with config hash {found}, current config is {cfg.hash}; "
        "pass --force to override"
    )


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(cfg: PipelineConfig, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    paths = sim.generate_experiment(
        cfg.scenario, out_dir, seed=cfg.seed,
        per_class_durations=cfg.durations or None,
        overrides=dict(cfg.sim) or None,
        extra={"config_hash": cfg.hash},
    )
    (out_dir / "pipeline.conf").write_text(cfg.to_text(), encoding="utf-8")
    return paths


# ---------------------------------------------------------------------------
# featurize

def feature_names(cfg: PipelineConfig, sample_rate_hz: int) -> tuple[str, ...]:
    if cfg.scheme is Scheme.WPD_RMS:
        return band_feature_names(sample_rate_hz, cfg.wpd_level)
    return STATISTICAL_NAMES


def _featurize_block(cfg: PipelineConfig, block: np.ndarray) -> np.ndarray:
    if cfg.scheme is Scheme.WPD_RMS:
        return wpd_rms_array(block, cfg.wpd_level, cfg.wpd_filter)
    out = np.empty((len(block), len(STATISTICAL_NAMES)))
    for i, row in enumerate(block):
        try:
            out[i] = statistical_array(row, cfg.entropy_bins)
        except DegenerateWindowError:
            out[i] = np.nan
    return out


def featurize_windows(cfg: PipelineConfig, windows: Sequence[Window], n_jobs: int = 1) -> np.ndarray:
    """Feature matrix in window order; degenerate windows give NaN rows."""
    if not windows:
        return np.zeros((0, 0))
    data = np.stack([w.samples for w in windows])
    if n_jobs > 1 and len(windows) > 1:
        chunks = np.array_split(np.arange(len(windows)), n_jobs)
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda idx: _featurize_block(cfg, data[idx]), chunks))
        return np.concatenate(parts, axis=0)
    return _featurize_block(cfg, data)


def labeled_windows(cfg: PipelineConfig, rec: AccelerationRecording):
    windows = segment_windows(rec, cfg.axis, cfg.window_seconds)
    if rec.condition is not None:
        return [(w, rec.condition.class_id) for w in windows]
    if cfg.scenario is Scenario.WEAR:
        lw = label_windows_by_time(windows, cfg.early_span_s, cfg.late_span_s,
                                   ConditionLabel(Scenario.WEAR, 0), ConditionLabel(Scenario.WEAR, 1),
                                   total_duration_s=rec.duration_s)
        return [(x.window, x.label.class_id) for x in lw]
    raise PipelineError("recording carries no condition label")


def build_dataset(cfg: PipelineConfig, recordings: Sequence[AccelerationRecording],
                  n_jobs: int = 1) -> Dataset:
    if not recordings:
        raise PipelineError("no recordings to featurize")
    fs = recordings[0].sample_rate_hz
    pairs = []
    for rec in recordings:
        if rec.sample_rate_hz != fs:
            raise PipelineError("recordings have different sample rates")
        pairs.extend(labeled_windows(cfg, rec))
    if not pairs:
        raise PipelineError("recordings produced no labeled windows")
    X = featurize_windows(cfg, [w for w, _ in pairs], n_jobs)
    y = np.array([label for _, label in pairs])
    bad = np.nonzero(~np.all(np.isfinite(X), axis=1))[0]
    if len(bad):
        offsets = ", ".join(f"{pairs[i][0].source_offset_s:g}s" for i in bad[:20])
        log.warning("%d degenerate windows skipped at offsets %s", len(bad), offsets)
        if len(bad) > DEGENERATE_LIMIT * len(pairs):
            raise PipelineError(f"{len(bad)} of {len(pairs)} windows are degenerate "
                                f"(offsets {offsets}); aborting")
        keep = np.setdiff1d(np.arange(len(pairs)), bad)
        X, y = X[keep], y[keep]
    return Dataset(feature_names(cfg, fs), X, y, cfg.scheme, cfg.scenario)


def save_dataset(ds: Dataset, path: str | Path, config_hash: str | None = None) -> None:
    lines = [f"# scheme={ds.scheme.value}"]
    if ds.scenario is not None:
        lines.append(f"# scenario={ds.scenario.value}")
    if config_hash:
        lines.append(f"# config_hash={config_hash}")
    lines.append("label," + ",".join(ds.names))
    for label, row in zip(ds.y.tolist(), ds.X.tolist()):
        lines.append(f"{label}," + ",".join(repr(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


@dataclass
class DatasetFile:
    dataset: Dataset
    config_hash: str | None


def load_dataset(path: str | Path) -> DatasetFile:
    directives = {}
    header = None
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                directives[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                if header[0] != "label" or len(header) < 2:
                    raise PipelineError(f"{path}:{lineno}: expected header 'label,<features>'")
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise PipelineError(f"{path}:{lineno}: expected {len(header)} columns")
            try:
                rows.append((int(cells[0]), [float(c) for c in cells[1:]]))
            except ValueError:
                raise PipelineError(f"{path}:{lineno}: non-numeric cell") from None
    if header is None:
        raise PipelineError(f"{path}: missing header")
    if "scheme" not in directives:
        raise PipelineError(f"{path}: missing '# scheme=' directive")
    scenario = directives.get("scenario")
    ds = Dataset(tuple(header[1:]), np.array([r[1] for r in rows]).reshape(len(rows), len(header) - 1),
                 [r[0] for r in rows], Scheme.parse(directives["scheme"]),
                 Scenario.parse(scenario) if scenario else None)
    return DatasetFile(ds, directives.get("config_hash"))


def cmd_featurize(cfg: PipelineConfig, recording_paths: Sequence[str | Path], out_csv: str | Path,
                  n_jobs: int = 1, force: bool = False) -> Dataset:
    if not recording_paths:
        raise PipelineError("no recordings given")
    recs = []
    for p in recording_paths:
        rec = load_recording(p)
        check_hash(str(p), rec.extra.get("config_hash"), cfg, force)
        recs.append(rec)
    ds = build_dataset(cfg, recs, n_jobs)
    save_dataset(ds, out_csv, cfg.hash)
    return ds


# ---------------------------------------------------------------------------
# train / evaluate

def _gamma(cfg: PipelineConfig):
    return "scale" if cfg.svm_gamma == "scale" else float(cfg.svm_gamma)


def train_models(cfg: PipelineConfig, ds: Dataset, n_jobs: int = 1):
    """Split, train the configured classifiers and evaluate them.

    Returns ``(models, reports)`` keyed by classifier name.
    """
    if len(ds.classes) < 2:
        raise PipelineError("dataset needs at least 2 classes")
    train, val = stratified_split(ds, cfg.validation_ratio, cfg.seed)
    info = {"config_hash": cfg.hash, "split_seed": str(cfg.seed),
            "validation_ratio": repr(cfg.validation_ratio)}
    models, reports = {}, {}
    for name in cfg.classifiers:
        if name == "svm":
            model = train_svm(train, C=cfg.svm_c, gamma=_gamma(cfg), seed=cfg.seed)
        else:
            model = train_random_forest(train, cfg.n_trees, cfg.seed, n_jobs=n_jobs)
        model = replace(model, info=dict(info))
        models[name] = model
        reports[name] = evaluate(model, val, train=train, model_id=name, split_seed=cfg.seed)
    return models, reports


def report_text(cfg: PipelineConfig, reports: dict, ds: Dataset) -> str:
    lines = [f"scenario: {cfg.scenario.value}", f"seed: {cfg.seed}",
             f"config_hash: {cfg.hash}", f"rows: {len(ds)}", ""]
    for name, rep in reports.items():
        lines.append(rep.to_text())
        lines.append("")
    lines.append("config:")
    lines.extend("  " + ln for ln in cfg.to_text().splitlines())
    return "\n".join(lines) + "\n"


def report_json(cfg: PipelineConfig, reports: dict, ds: Dataset) -> str:
    doc = {
        "scenario": cfg.scenario.value,
        "seed": cfg.seed,
        "config_hash": cfg.hash,
        "config": dict(ln.split("=", 1) for ln in cfg.to_text().splitlines()),
        "rows": len(ds),
        "models": {name: rep.as_dict() for name, rep in reports.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_train(cfg: PipelineConfig, dataset_path: str | Path, out_dir: str | Path,
              n_jobs: int = 1, force: bool = False) -> dict:
    df = load_dataset(dataset_path)
    check_hash(str(dataset_path), df.config_hash, cfg, force)
    if df.dataset.scheme is not cfg.scheme:
        raise ConfigError(f"dataset uses the {df.dataset.scheme.value} scheme, "
                          f"config asks for {cfg.scheme.value}")
    models, reports = train_models(cfg, df.dataset, n_jobs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, model in models.items():
        save_model(model, out / f"{name}.model")
    (out / "report.txt").write_text(report_text(cfg, reports, df.dataset), encoding="utf-8")
    (out / "report.json").write_text(report_json(cfg, reports, df.dataset), encoding="utf-8")
    return reports


def cmd_evaluate(model_path: str | Path, dataset_path: str | Path, split: str = "all",
                 force: bool = False):
    model = load_model(model_path)
    df = load_dataset(dataset_path)
    mh = model.info.get("config_hash")
    if not force and mh and df.config_hash and mh != df.config_hash:
        raise HashMismatchError(f"model hash {mh} differs from dataset hash {df.config_hash}; "
                                "pass --force to override")
    ds = df.dataset
    if split == "validation":
        seed = int(model.info.get("split_seed", model.seed))
        ratio = float(model.info.get("validation_ratio", 0.25))
        _, ds = stratified_split(ds, ratio, seed)
    elif split != "all":
        raise ConfigError("split must be 'all' or 'validation'")
    return evaluate(model, ds, model_id=Path(model_path).stem)


def cmd_importance(model_path: str | Path) -> list[tuple[str, float]]:
    model = load_model(model_path)
    if not isinstance(model, ForestModel):
        raise ConfigError("importance needs a forest model")
    return feature_importance(model)


def cmd_scalogram(recording_path: str | Path, wavelet: cwt_mod.WaveletSpec, scales,
                  out_path: str | Path, axis: str = "Y", start_s: float = 0.0,
                  duration_s: float | None = 2.0, fmt: str = "csv") -> cwt_mod.Scalogram:
    rec = load_recording(recording_path)
    data = rec.axis(axis)
    a = int(round(start_s * rec.sample_rate_hz))
    b = len(data) if duration_s is None else min(len(data), a + int(round(duration_s * rec.sample_rate_hz)))
    if b - a < 2:
        raise PipelineError("selected segment is shorter than 2 samples")
    sc = cwt_mod.cwt(data[a:b], wavelet, scales, rec.sample_rate_hz)
    cwt_mod.export_scalogram(sc, out_path, fmt)
    return sc


def cmd_predict(model_path: str | Path, recording_path: str | Path,
                cfg: PipelineConfig | None = None, force: bool = False):
    """Per-window predictions and the modal label (lowest label on ties).

    The recording's config hash is checked against the one the model was
    trained under.
    """
    model = load_model(model_path)
    rec = load_recording(recording_path)
    if cfg is None:
        if model.scenario is None:
            raise ConfigError("model has no scenario; pass a config")
        cfg = PipelineConfig.for_scenario(model.scenario, scheme=model.scheme)
    found, expected = rec.extra.get("config_hash"), model.info.get("config_hash")
    if found and expected and found != expected and not force:
        raise HashMismatchError(f"{recording_path} has config hash {found}, model was trained "
                                f"under {expected}; pass --force to override")
    windows = segment_windows(rec, cfg.axis, cfg.window_seconds)
    if not windows:
        raise PipelineError("recording is shorter than one window")
    check_schema(model.names, feature_names(cfg, rec.sample_rate_hz))
    X = featurize_windows(cfg, windows)
    ok = np.all(np.isfinite(X), axis=1)
    labels = np.full(len(windows), -1)
    if np.any(ok):
        labels[ok] = model.predict_matrix(X[ok])
    counts = Counter(int(v) for v in labels if v >= 0)
    modal = min(counts, key=lambda c: (-counts[c], c)) if counts else None
    return [(w.source_offset_s, int(l)) for w, l in zip(windows, labels)], modal
