"""Command-line front end.

Subcommands: synth, graph, features, train, predict, evaluate. Options can
come from a JSON config file (--config); explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import images, svm
from .errors import ConfigError, GlyphError
from .evaluate import (DatasetManifest, ExperimentConfig, SplitSpec,
                       extract_features, run_trials, split, synth_dataset,
                       write_report, FEATURE_TAGS)
from .fusion import FusionModel, calibrate, fuse
from .pipeline import (FeatureScaler, PipelineConfig, features_from_file,
                       image_to_graph)
from .svm import KernelParams, TABLE_PARAMS


def _atomic_write(path, text: str) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def _parse_ratios(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(p) for p in text.split(":"))
    except ValueError:
        raise ConfigError(f"ratios must look like 60:20:20, got {text!r}")
    if len(parts) != 3:
        raise ConfigError(f"ratios must have three parts, got {text!r}")
    return parts


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def _setting(args, config: dict, name: str, default):
    """Flag > config file > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _pipeline_config(args, config) -> PipelineConfig:
    return PipelineConfig(
        sigma1=float(_setting(args, config, "sigma1", 1.0)),
        sigma2=float(_setting(args, config, "sigma2", 1.6)),
        target_size=int(_setting(args, config, "target_size", 64)),
        rdp_epsilon=float(_setting(args, config, "rdp_epsilon", 2.0)),
        n=int(_setting(args, config, "n", 3)),
    ).validate()


def _fixed_params(args, config) -> dict[str, KernelParams] | None:
    from_file = config.get("fixed_params")
    if getattr(args, "fixed_params", False):
        from_file = from_file or True
    if not from_file:
        return None
    if from_file is True:
        return {tag: KernelParams(*TABLE_PARAMS[tag]) for tag in FEATURE_TAGS}
    return {tag: KernelParams(float(v["C"]), float(v["gamma"]))
            for tag, v in from_file.items()}


def _experiment_config(args, config) -> ExperimentConfig:
    ratios = _setting(args, config, "ratios", "60:20:20")
    if isinstance(ratios, str):
        ratios = _parse_ratios(ratios)
    return ExperimentConfig(
        ratios=tuple(ratios),
        trials=int(_setting(args, config, "trials", 10)),
        base_seed=int(_setting(args, config, "seed", 0)),
        pipeline=_pipeline_config(args, config),
        fixed_params=_fixed_params(args, config),
        c_grid=config.get("c_grid"),
        gamma_grid=config.get("gamma_grid"),
        grid_base=int(_setting(args, config, "grid_base", 10)),
        scale_features=bool(_setting(args, config, "scale_features", False)
                            or getattr(args, "scale_features", False)),
    ).validate()


def cmd_synth(args) -> int:
    config = _load_config(args.config)
    manifest = synth_dataset(
        int(_setting(args, config, "classes", 10)),
        int(_setting(args, config, "per_class", 100)),
        int(_setting(args, config, "seed", 0)),
        _setting(args, config, "out", "synth_out"))
    print(f"wrote {len(manifest.samples)} images and manifest.csv")
    return 0


def cmd_graph(args) -> int:
    config = _load_config(args.config)
    cfg = _pipeline_config(args, config)
    out_dir = _setting(args, config, "out", ".")
    os.makedirs(out_dir, exist_ok=True)
    if os.path.isdir(args.input):
        paths = sorted(os.path.join(args.input, f) for f in os.listdir(args.input)
                       if f.lower().endswith((".png", ".pgm")))
    else:
        paths = [args.input]
    if not paths:
        print(f"error: no images found in {args.input}", file=sys.stderr)
        return 1
    failures = 0
    for path in paths:
        stem = os.path.splitext(os.path.basename(path))[0]
        try:
            stages = image_to_graph(images.load_gray(path), cfg)
        except (GlyphError, OSError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        _atomic_write(os.path.join(out_dir, f"{stem}.graph.json"),
                      stages.graph.to_json())
        if args.debug:
            for name, stage in (("filtered", stages.filtered),
                                ("normalized", stages.normalized),
                                ("binary", stages.binary),
                                ("skeleton", stages.skeleton)):
                images.save_pgm(os.path.join(out_dir, f"{stem}.{name}.pgm"),
                                stage)
        print(f"{path}: {stages.graph.order} nodes, "
              f"{len(stages.graph.edges)} edges")
    return 1 if failures == len(paths) else 0


def cmd_features(args) -> int:
    config = _load_config(args.config)
    cfg = _pipeline_config(args, config)
    manifest = DatasetManifest.load(args.manifest)
    lines = ["label,feature_type," + ",".join(f"v{i+1}" for i in range(cfg.n))]
    for path, label in manifest.samples:
        feats = features_from_file(path, cfg)
        for tag in FEATURE_TAGS:
            values = ",".join(f"{v:.10g}" for v in feats[tag])
            lines.append(f"{label},{tag},{values}")
    out = _setting(args, config, "out", "features.csv")
    _atomic_write(out, "\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args.config)
    cfg = _experiment_config(args, config)
    manifest = DatasetManifest.load(args.manifest)
    out_dir = _setting(args, config, "out", "model_bundle")
    os.makedirs(out_dir, exist_ok=True)

    feats = extract_features(manifest, cfg.pipeline)
    train, val, _ = split(manifest, SplitSpec(tuple(cfg.ratios), cfg.base_seed))
    chosen, scalers, val_preds = {}, {}, {}
    for tag in FEATURE_TAGS:
        tr_x = np.array([feats[p][tag] for p, _ in train.samples])
        tr_y = [l for _, l in train.samples]
        va_x = np.array([feats[p][tag] for p, _ in val.samples])
        va_y = [l for _, l in val.samples]
        if cfg.scale_features:
            scalers[tag] = FeatureScaler.fit(tr_x)
            tr_x = scalers[tag].transform(tr_x)
            va_x = scalers[tag].transform(va_x)
        if cfg.fixed_params is not None:
            params = cfg.fixed_params[tag]
        else:
            params, _ = svm.grid_search(
                tr_x, tr_y, va_x, va_y,
                cfg.c_grid or svm.default_grid(cfg.grid_base),
                cfg.gamma_grid or svm.default_grid(cfg.grid_base), tag)
        chosen[tag] = params
        model = svm.train_ovo(tr_x, tr_y, params, tag)
        val_preds[tag] = svm.predict_batch(model, va_x)
        _atomic_write(os.path.join(out_dir, f"{tag.lower()}.model.json"),
                      json.dumps(svm.ovo_to_dict(model, cfg.pipeline.n),
                                 indent=2, sort_keys=True))
    fm = calibrate(manifest.classes, val_preds, [l for _, l in val.samples])
    _atomic_write(os.path.join(out_dir, "fusion.json"),
                  json.dumps(fm.to_dict(), indent=2, sort_keys=True))
    meta = {
        "classes": manifest.classes,
        "n": cfg.pipeline.n,
        "seed": cfg.base_seed,
        "ratios": list(cfg.ratios),
        "params": {tag: {"C": p.C, "gamma": p.gamma}
                   for tag, p in sorted(chosen.items())},
        "scalers": {tag: s.to_dict() for tag, s in sorted(scalers.items())},
        "pipeline": {
            "sigma1": cfg.pipeline.sigma1, "sigma2": cfg.pipeline.sigma2,
            "target_size": cfg.pipeline.target_size,
            "rdp_epsilon": cfg.pipeline.rdp_epsilon, "n": cfg.pipeline.n,
        },
    }
    _atomic_write(os.path.join(out_dir, "meta.json"),
                  json.dumps(meta, indent=2, sort_keys=True))
    print(f"wrote model bundle to {out_dir}")
    for tag, p in sorted(chosen.items()):
        print(f"  {tag}: C={p.C} gamma={p.gamma}")
    return 0


def cmd_predict(args) -> int:
    with open(os.path.join(args.bundle, "meta.json")) as f:
        meta = json.load(f)
    cfg = PipelineConfig(**meta["pipeline"]).validate()
    models = {tag: svm.load_ovo(os.path.join(args.bundle,
                                             f"{tag.lower()}.model.json"))
              for tag in FEATURE_TAGS}
    fm = FusionModel.load(os.path.join(args.bundle, "fusion.json"))
    feats = features_from_file(args.image, cfg)
    predictions = {}
    for tag in FEATURE_TAGS:
        x = feats[tag]
        if tag in meta.get("scalers", {}):
            x = FeatureScaler.from_dict(meta["scalers"][tag]).transform(x)
        label, votes = svm.predict(models[tag], x)
        predictions[tag] = label
        print(f"{tag}: {label} (votes: {votes})")
    belief, label = fuse(fm, predictions)
    print("belief: " + ", ".join(f"{c}={b:.4f}"
                                 for c, b in zip(fm.classes, belief)))
    print(f"fused: {label}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    cfg = _experiment_config(args, config)
    manifest = DatasetManifest.load(args.manifest)
    report = run_trials(manifest, cfg)
    out_dir = _setting(args, config, "out", "report_out")
    write_report(report, out_dir)
    print(f"{'series':8s} {'mean F':>8s} {'std':>8s}")
    for tag, s in report.series().items():
        print(f"{tag:8s} {s['mean']:8.4f} {s['std']:8.4f}")
    print(f"reports written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glyphspectra",
        description="Skeleton-graph spectral features for glyph recognition")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, outs=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="base random seed")
        if outs:
            p.add_argument("--out", help="output file or directory")
        p.add_argument("--n", type=int, help="feature length (default 3)")
        p.add_argument("--sigma1", type=float)
        p.add_argument("--sigma2", type=float)
        p.add_argument("--target-size", type=int, dest="target_size")
        p.add_argument("--rdp-epsilon", type=float, dest="rdp_epsilon")

    p = sub.add_parser("synth", help="generate a synthetic glyph dataset")
    common(p)
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", type=int, dest="per_class")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("graph", help="extract interest-point graphs")
    common(p)
    p.add_argument("input", help="image file or directory")
    p.add_argument("--debug", action="store_true",
                   help="emit intermediate stages as PGM")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("features", help="emit spectral feature CSV")
    common(p)
    p.add_argument("manifest", help="CSV manifest (path,label)")
    p.set_defaults(func=cmd_features)

    def training_flags(p):
        p.add_argument("--ratios", help="train:val:test percentages")
        p.add_argument("--trials", type=int)
        p.add_argument("--fixed-params", action="store_true",
                       dest="fixed_params",
                       help="use the validated (C, gamma) defaults, skip search")
        p.add_argument("--grid-base", type=int, choices=(2, 10),
                       dest="grid_base")
        p.add_argument("--scale-features", action="store_true",
                       dest="scale_features",
                       help="z-score features using training-split statistics")

    p = sub.add_parser("train", help="train the three classifiers + fusion")
    common(p)
    training_flags(p)
    p.add_argument("manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify one image with a bundle")
    p.add_argument("bundle", help="model bundle directory")
    p.add_argument("image")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="randomized-trials experiment")
    common(p)
    training_flags(p)
    p.add_argument("manifest")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GlyphError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
