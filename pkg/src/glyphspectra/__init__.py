"""Handwritten glyph recognition via spectral embeddings of skeleton graphs."""

from .errors import (ConfigError, ConsistencyError, ContentError,
                     ContractError, DataError, DegeneracyError, GlyphError,
                     ParameterError, TrainingError)
from .graphs import (InterestPoint, NumeralGraph, build_graph,
                     detect_interest_points, extract_graph, weight_edges)
from .images import binarize_otsu, dog_filter, load_gray, normalize_size, thin
from .pipeline import PipelineConfig, image_features, image_to_graph
from .spectra import (GraphMatrix, adjacency_matrix, distance_matrix, eig_sym,
                      graph_features, laplacian_matrix, spectral_feature)
from .svm import (BinarySvmModel, KernelParams, OvoModel, grid_search,
                  predict, rbf_kernel, train_binary, train_ovo)
from .fusion import FusionModel, calibrate, confusion_matrix, fuse, prob_matrix
from .evaluate import (DatasetManifest, ExperimentConfig, SplitSpec,
                       precision_recall_f, run_trials, split, synth_dataset)

__all__ = [name for name in dir() if not name.startswith("_")]
