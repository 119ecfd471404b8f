"""Graph matrices and their eigenvalue spectra.

Three symmetric matrices summarize a weighted graph: the weighted adjacency
matrix WA, the weighted Laplacian WL = D - WA with unweighted vertex degrees
on the diagonal, and the all-pairs coordinate distance matrix DIST. Sorted
eigenvalue spectra of these matrices, truncated or zero-padded to a fixed
length, are the classifier features FT1/FT2/FT3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegeneracyError, ParameterError
from .graphs import NumeralGraph

WA = "WA"
WL = "WL"
DIST = "DIST"

FEATURE_TYPES = {"FT1": WA, "FT2": WL, "FT3": DIST}

_SYMMETRY_TOL = 1e-12


@dataclass
class GraphMatrix:
    kind: str
    values: np.ndarray


def adjacency_matrix(g: NumeralGraph) -> GraphMatrix:
    """Weighted adjacency matrix: edge weights off-diagonal, zero diagonal."""
    n = g.order
    m = np.zeros((n, n))
    for u, v, w in g.edges:
        m[u, v] = m[v, u] = w
    return GraphMatrix(WA, m)


def laplacian_matrix(g: NumeralGraph) -> GraphMatrix:
    """Weighted Laplacian D - WA, where D counts adjacent vertices."""
    wa = adjacency_matrix(g).values
    deg = np.count_nonzero(wa, axis=1).astype(float)
    return GraphMatrix(WL, np.diag(deg) - wa)


def distance_matrix(g: NumeralGraph) -> GraphMatrix:
    """Euclidean distances between all node pairs, adjacent or not."""
    coords = np.array([(p.x, p.y) for p in g.points], dtype=float)
    diff = coords[:, None, :] - coords[None, :, :]
    m = np.sqrt((diff ** 2).sum(axis=2))
    if g.order > 1:
        off = ~np.eye(g.order, dtype=bool)
        if (m[off] == 0).any():
            raise DegeneracyError("distinct nodes share coordinates")
    return GraphMatrix(DIST, m)


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 100):
    """Cyclic Jacobi rotations for a symmetric matrix.

    Returns (eigenvalues, eigenvectors as columns), unsorted. Convergence:
    off-diagonal Frobenius norm <= 1e-12 * max |a|.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    maxabs = np.abs(a).max()
    if maxabs == 0:
        return np.zeros(n), v
    target = 1e-12 * maxabs
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2)
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= target / (n * n):
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[[p, q], :] = rot.T @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rot
                v[:, [p, q]] = v[:, [p, q]] @ rot
    return a.diagonal().copy(), v


def eig_sym(m: GraphMatrix | np.ndarray) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, sorted descending.

    Verifies the eigenpair residuals against 1e-8 * n * max|M|.
    """
    a = m.values if isinstance(m, GraphMatrix) else np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"matrix must be square, got shape {a.shape}")
    if np.abs(a - a.T).max() > _SYMMETRY_TOL:
        raise ContractError("matrix is not symmetric")
    vals, vecs = jacobi_eigh(a)
    n = a.shape[0]
    maxabs = np.abs(a).max()
    if maxabs > 0:
        residual = np.abs(a @ vecs - vecs * vals).max()
        if residual > 1e-8 * n * maxabs:
            raise ContractError(f"eigenpair residual {residual:.3e} out of tolerance")
    return np.sort(vals)[::-1]


def spectral_feature(spectrum: np.ndarray, n: int = 3) -> np.ndarray:
    """Top-n eigenvalues, zero-padded when the spectrum is shorter than n."""
    if n < 1:
        raise ParameterError(f"feature length must be >= 1, got {n}")
    spectrum = np.asarray(spectrum, dtype=float)
    out = np.zeros(n)
    k = min(n, spectrum.size)
    out[:k] = spectrum[:k]
    return out


def graph_features(g: NumeralGraph, n: int = 3) -> dict[str, np.ndarray]:
    """FT1/FT2/FT3 feature vectors of a weighted graph."""
    mats = {"FT1": adjacency_matrix(g), "FT2": laplacian_matrix(g),
            "FT3": distance_matrix(g)}
    return {ft: spectral_feature(eig_sym(m), n) for ft, m in mats.items()}
