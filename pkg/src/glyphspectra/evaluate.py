"""Experiments: dataset manifests, stratified splits, precision/recall/F,
repeated randomized trials, and a synthetic glyph dataset generator."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from . import fusion as fusion_mod
from . import svm as svm_mod
from .errors import ConfigError, DataError, ParameterError
from .fusion import confusion_matrix
from .pipeline import FeatureScaler, PipelineConfig, features_from_file
from .svm import KernelParams

FEATURE_TAGS = ("FT1", "FT2", "FT3")


@dataclass
class DatasetManifest:
    samples: list[tuple[str, str]]  # (path, label)
    classes: list[str]

    def __post_init__(self):
        paths = [p for p, _ in self.samples]
        if len(set(paths)) != len(paths):
            raise DataError("duplicate paths in manifest")
        known = set(self.classes)
        for _, label in self.samples:
            if label not in known:
                raise DataError(f"label {label!r} missing from class list")

    @classmethod
    def from_samples(cls, samples) -> "DatasetManifest":
        samples = [(str(p), str(l)) for p, l in samples]
        return cls(samples, sorted({l for _, l in samples}))

    def save(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["path", "label"])
            writer.writerows(self.samples)

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or \
                    {"path", "label"} - set(reader.fieldnames):
                raise DataError(f"{path}: manifest needs a path,label header")
            samples = [(row["path"], row["label"]) for row in reader]
        if not samples:
            raise DataError(f"{path}: empty manifest")
        return cls.from_samples(samples)


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[int, int, int] = (60, 20, 20)
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios) \
                or sum(self.ratios) != 100:
            raise ConfigError(f"ratios must be positive and sum to 100: {self.ratios}")


def split(manifest: DatasetManifest, spec: SplitSpec):
    """Stratified (train, val, test) split; train and val counts are floored
    per class and the remainder goes to test."""
    rng = np.random.default_rng(spec.seed)
    buckets: dict[str, list] = {c: [] for c in manifest.classes}
    for sample in manifest.samples:
        buckets[sample[1]].append(sample)
    parts = ([], [], [])
    for c in manifest.classes:
        group = buckets[c]
        if len(group) < 3:
            raise DataError(f"class {c!r} has fewer than 3 samples")
        order = rng.permutation(len(group))
        n_train = math.floor(spec.ratios[0] * len(group) / 100)
        n_val = math.floor(spec.ratios[1] * len(group) / 100)
        for rank, idx in enumerate(order):
            part = 0 if rank < n_train else 1 if rank < n_train + n_val else 2
            parts[part].append(group[idx])
    return tuple(DatasetManifest(sorted(p), list(manifest.classes)) for p in parts)


@dataclass
class ClassMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f_measure: np.ndarray

    @property
    def macro_f(self) -> float:
        return float(self.f_measure.mean())

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())


def precision_recall_f(cm: np.ndarray) -> ClassMetrics:
    """Per-class precision, recall and F-measure from a confusion matrix;
    zero denominators yield 0."""
    cm = np.asarray(cm, dtype=float)
    cp = cm.diagonal()
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(col > 0, cp / col, 0.0)
        recall = np.where(row > 0, cp / row, 0.0)
        denom = precision + recall
        f = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return ClassMetrics(precision, recall, f)


# ---------------------------------------------------------------------------
# synthetic dataset

_CIRCLE = [(0.5 + 0.28 * math.cos(2 * math.pi * k / 24),
            0.42 + 0.28 * math.sin(2 * math.pi * k / 24)) for k in range(25)]
_S_CURVE = ([(0.5 + 0.2 * math.cos(a), 0.3 - 0.2 * math.sin(a))
             for a in np.linspace(-math.pi / 2, math.pi / 2, 10)]
            + [(0.5 - 0.2 * math.cos(a), 0.7 - 0.2 * math.sin(a))
               for a in np.linspace(math.pi / 2, -math.pi / 2, 10)[1:]])
_SPIRAL = [( 0.5 + (0.06 + 0.34 * t) * math.cos(3 * math.pi * t),
             0.5 + (0.06 + 0.34 * t) * math.sin(3 * math.pi * t))
           for t in np.linspace(0.0, 1.0, 40)]

# ten stroke templates with distinct topologies
GLYPH_TEMPLATES: dict[str, list[list[tuple[float, float]]]] = {
    "line": [[(0.5, 0.08), (0.5, 0.92)]],
    "cross": [[(0.08, 0.5), (0.92, 0.5)], [(0.5, 0.08), (0.5, 0.92)]],
    "loop": [_CIRCLE],
    "loop_tail": [_CIRCLE, [(0.5 + 0.28, 0.42), (0.92, 0.92)]],
    "tee": [[(0.08, 0.1), (0.92, 0.1)], [(0.5, 0.1), (0.5, 0.92)]],
    "wye": [[(0.1, 0.08), (0.5, 0.5)], [(0.9, 0.08), (0.5, 0.5)],
            [(0.5, 0.5), (0.5, 0.92)]],
    "zed": [[(0.1, 0.1), (0.9, 0.1), (0.1, 0.9), (0.9, 0.9)]],
    "ess": [_S_CURVE],
    "aitch": [[(0.15, 0.08), (0.15, 0.92)], [(0.85, 0.08), (0.85, 0.92)],
              [(0.15, 0.5), (0.85, 0.5)]],
    "spiral": [_SPIRAL],
}

SYNTH_CANVAS = 96
SYNTH_STROKE = 3


def render_glyph(template: list[list[tuple[float, float]]],
                 rng: np.random.Generator,
                 canvas: int = SYNTH_CANVAS) -> np.ndarray:
    """Rasterize one jittered instance of a stroke template.

    Random rotation within +-15 degrees, scale 0.8-1.2, small translation,
    and per-vertex stroke jitter. Returns dark-ink-on-white grayscale.
    """
    angle = math.radians(rng.uniform(-15.0, 15.0))
    scale = rng.uniform(0.8, 1.2) * canvas * 0.78
    shift = rng.uniform(-4.0, 4.0, size=2)
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    img = Image.new("L", (canvas, canvas), 255)
    draw = ImageDraw.Draw(img)
    for stroke in template:
        pts = []
        for x, y in stroke:
            jx, jy = rng.normal(0.0, 0.5, size=2)
            ux, uy = x - 0.5, y - 0.5
            rx = cos_a * ux - sin_a * uy
            ry = sin_a * ux + cos_a * uy
            pts.append((canvas / 2 + rx * scale + shift[0] + jx,
                        canvas / 2 + ry * scale + shift[1] + jy))
        draw.line(pts, fill=20, width=SYNTH_STROKE, joint="curve")
    return np.asarray(img, dtype=np.float64) / 255.0


def synth_dataset(classes: int, per_class: int, seed: int,
                  out_dir) -> DatasetManifest:
    """Generate a labelled synthetic glyph dataset as PNG files plus a CSV
    manifest (written to out_dir/manifest.csv)."""
    if not 2 <= classes <= 10:
        raise ParameterError(f"classes must be in [2, 10], got {classes}")
    if per_class < 10:
        raise ParameterError(f"per_class must be >= 10, got {per_class}")
    os.makedirs(out_dir, exist_ok=True)
    names = list(GLYPH_TEMPLATES)[:classes]
    samples = []
    rng = np.random.default_rng(seed)
    for name in names:
        for k in range(per_class):
            img = render_glyph(GLYPH_TEMPLATES[name], rng)
            path = os.path.join(out_dir, f"{name}_{k:04d}.png")
            Image.fromarray(np.rint(img * 255).astype(np.uint8)).save(path)
            samples.append((path, name))
    manifest = DatasetManifest.from_samples(samples)
    manifest.save(os.path.join(out_dir, "manifest.csv"))
    return manifest


# ---------------------------------------------------------------------------
# repeated trials

@dataclass
class ExperimentConfig:
    ratios: tuple[int, int, int] = (60, 20, 20)
    trials: int = 10
    base_seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    fixed_params: dict[str, KernelParams] | None = None
    c_grid: list[float] | None = None
    gamma_grid: list[float] | None = None
    grid_base: int = 10
    scale_features: bool = False

    def validate(self) -> "ExperimentConfig":
        SplitSpec(tuple(self.ratios), self.base_seed)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        self.pipeline.validate()
        return self


@dataclass
class TrialReport:
    seed: int
    params: dict[str, KernelParams]
    confusions: dict[str, np.ndarray]      # FT tags plus "fused"
    metrics: dict[str, ClassMetrics]

    @property
    def macro_f(self) -> dict[str, float]:
        return {tag: m.macro_f for tag, m in self.metrics.items()}


@dataclass
class ExperimentReport:
    classes: list[str]
    trials: list[TrialReport]
    config_echo: dict

    def series(self) -> dict[str, dict[str, float]]:
        """Mean +- sample std of the macro F-measure per classifier."""
        out = {}
        for tag in (*FEATURE_TAGS, "fused"):
            values = np.array([t.macro_f[tag] for t in self.trials])
            std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            out[tag] = {"mean": float(values.mean()), "std": std,
                        "mean_percent": float(values.mean()) * 100.0,
                        "std_percent": std * 100.0}
        return out

    def to_dict(self) -> dict:
        return {
            "classes": self.classes,
            "config": self.config_echo,
            "trial_count": len(self.trials),
            "series": self.series(),
            "trials": [
                {
                    "seed": t.seed,
                    "params": {tag: {"C": p.C, "gamma": p.gamma}
                               for tag, p in sorted(t.params.items())},
                    "macro_f": t.macro_f,
                    "per_class_f": {tag: m.f_measure.tolist()
                                    for tag, m in sorted(t.metrics.items())},
                    "confusions": {tag: c.tolist()
                                   for tag, c in sorted(t.confusions.items())},
                }
                for t in self.trials
            ],
        }


def extract_features(manifest: DatasetManifest, cfg: PipelineConfig):
    """Feature vectors for every manifest sample, keyed by path."""
    feats = {}
    for path, _ in manifest.samples:
        feats[path] = features_from_file(path, cfg)
    return feats


def _matrix_for(feats, manifest, tag) -> tuple[np.ndarray, list]:
    xs = np.array([feats[p][tag] for p, _ in manifest.samples])
    ys = [l for _, l in manifest.samples]
    return xs, ys


def run_single_trial(manifest: DatasetManifest, feats, cfg: ExperimentConfig,
                     seed: int) -> TrialReport:
    train, val, test = split(manifest, SplitSpec(tuple(cfg.ratios), seed))
    classes = manifest.classes
    chosen: dict[str, KernelParams] = {}
    models = {}
    scalers = {}
    val_preds = {}
    test_preds = {}
    for tag in FEATURE_TAGS:
        tr_x, tr_y = _matrix_for(feats, train, tag)
        va_x, va_y = _matrix_for(feats, val, tag)
        te_x, _ = _matrix_for(feats, test, tag)
        if cfg.scale_features:
            scalers[tag] = FeatureScaler.fit(tr_x)
            tr_x = scalers[tag].transform(tr_x)
            va_x = scalers[tag].transform(va_x)
            te_x = scalers[tag].transform(te_x)
        if cfg.fixed_params is not None:
            params = cfg.fixed_params[tag]
        else:
            c_grid = cfg.c_grid or svm_mod.default_grid(cfg.grid_base)
            g_grid = cfg.gamma_grid or svm_mod.default_grid(cfg.grid_base)
            params, _ = svm_mod.grid_search(tr_x, tr_y, va_x, va_y,
                                            c_grid, g_grid, tag)
        chosen[tag] = params
        models[tag] = svm_mod.train_ovo(tr_x, tr_y, params, tag)
        val_preds[tag] = svm_mod.predict_batch(models[tag], va_x)
        test_preds[tag] = svm_mod.predict_batch(models[tag], te_x)

    # fusion calibrated on the validation split only
    val_actuals = [l for _, l in val.samples]
    test_actuals = [l for _, l in test.samples]
    fm = fusion_mod.calibrate(classes, val_preds, val_actuals)
    fused_preds = []
    for k in range(len(test.samples)):
        _, label = fusion_mod.fuse(fm, {tag: test_preds[tag][k]
                                        for tag in FEATURE_TAGS})
        fused_preds.append(label)

    confusions = {tag: confusion_matrix(test_actuals, test_preds[tag], classes)
                  for tag in FEATURE_TAGS}
    confusions["fused"] = confusion_matrix(test_actuals, fused_preds, classes)
    metrics = {tag: precision_recall_f(cm) for tag, cm in confusions.items()}
    return TrialReport(seed, chosen, confusions, metrics)


def run_trials(manifest: DatasetManifest, cfg: ExperimentConfig,
               feats=None) -> ExperimentReport:
    """The full randomized-trials experiment.

    Features are extracted once; each trial re-splits with seed
    base_seed + trial index, trains the three per-feature-type classifiers,
    calibrates fusion on validation, and evaluates everything on test.
    """
    cfg.validate()
    if feats is None:
        feats = extract_features(manifest, cfg.pipeline)
    trials = [run_single_trial(manifest, feats, cfg, cfg.base_seed + t)
              for t in range(cfg.trials)]
    echo = {
        "ratios": list(cfg.ratios), "trials": cfg.trials,
        "base_seed": cfg.base_seed, "n": cfg.pipeline.n,
        "scale_features": cfg.scale_features,
        "grid_base": cfg.grid_base,
        "fixed_params": None if cfg.fixed_params is None else
            {tag: {"C": p.C, "gamma": p.gamma}
             for tag, p in sorted(cfg.fixed_params.items())},
    }
    return ExperimentReport(list(manifest.classes), trials, echo)


def write_report(report: ExperimentReport, out_dir) -> list[str]:
    """Emit report.json, a summary/per-class CSV, and confusion CSV grids."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _atomic(name, text):
        path = os.path.join(out_dir, name)
        tmp = path + ".tmp"
        with open(tmp, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
        written.append(path)

    _atomic("report.json", json.dumps(report.to_dict(), indent=2, sort_keys=True))

    lines = ["series,mean_f,std_f,mean_percent,std_percent"]
    for tag, s in report.series().items():
        lines.append(f"{tag},{s['mean']:.6f},{s['std']:.6f},"
                     f"{s['mean_percent']:.2f},{s['std_percent']:.2f}")
    _atomic("summary.csv", "\n".join(lines) + "\n")

    lines = ["trial,series,class,f_measure"]
    for t in report.trials:
        for tag, m in sorted(t.metrics.items()):
            for c, f_val in zip(report.classes, m.f_measure):
                lines.append(f"{t.seed},{tag},{c},{f_val:.6f}")
    _atomic("per_class_f.csv", "\n".join(lines) + "\n")

    for tag in (*FEATURE_TAGS, "fused"):
        total = sum(t.confusions[tag] for t in report.trials)
        grid = "\n".join(",".join(str(v) for v in row) for row in total)
        header = "," + ",".join(report.classes)
        rows = [f"{c},{line}" for c, line in
                zip(report.classes, grid.splitlines())]
        _atomic(f"confusion_{tag}.csv", header + "\n" + "\n".join(rows) + "\n")
    return written
