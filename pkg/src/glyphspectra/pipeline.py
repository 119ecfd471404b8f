"""End-to-end glyph pipeline: image -> skeleton -> graph -> feature vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graphs, images, spectra
from .errors import ConfigError


@dataclass
class PipelineConfig:
    sigma1: float = 1.0
    sigma2: float = 1.6
    target_size: int = 64
    margin: int = 2
    rdp_epsilon: float = 2.0
    n: int = 3

    def validate(self) -> "PipelineConfig":
        if not (self.sigma2 > self.sigma1 > 0):
            raise ConfigError("need sigma2 > sigma1 > 0")
        if self.target_size < 8:
            raise ConfigError("target size must be >= 8")
        if self.n < 1:
            raise ConfigError("feature length n must be >= 1")
        return self


@dataclass
class Stages:
    """Intermediate products of one image, for debugging output."""
    filtered: np.ndarray
    normalized: np.ndarray
    binary: np.ndarray
    skeleton: np.ndarray
    graph: graphs.NumeralGraph


def image_to_graph(gray: np.ndarray, cfg: PipelineConfig | None = None) -> Stages:
    cfg = (cfg or PipelineConfig()).validate()
    filtered = images.dog_filter(gray, cfg.sigma1, cfg.sigma2)
    normalized = images.normalize_size(filtered, cfg.target_size, cfg.margin)
    binary = images.binarize_otsu(normalized)
    skeleton = images.thin(binary)
    graph = graphs.extract_graph(skeleton, cfg.rdp_epsilon)
    return Stages(filtered, normalized, binary, skeleton, graph)


def image_features(gray: np.ndarray,
                   cfg: PipelineConfig | None = None) -> dict[str, np.ndarray]:
    """FT1/FT2/FT3 vectors for one grayscale image."""
    cfg = (cfg or PipelineConfig()).validate()
    return spectra.graph_features(image_to_graph(gray, cfg).graph, cfg.n)


def features_from_file(path, cfg: PipelineConfig | None = None):
    return image_features(images.load_gray(path), cfg)


@dataclass
class FeatureScaler:
    """Per-dimension z-score scaling fit on the training split only."""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, xs: np.ndarray) -> "FeatureScaler":
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        std = xs.std(axis=0)
        return cls(xs.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, xs: np.ndarray) -> np.ndarray:
        return (np.asarray(xs, dtype=float) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureScaler":
        return cls(np.array(data["mean"], dtype=float),
                   np.array(data["std"], dtype=float))
