"""RBF-kernel support vector machines trained by SMO, composed one-vs-one.

The binary solver maximizes the soft-margin dual with maximal-violating-pair
working-set selection. Multi-class decisions are majority votes over all
k(k-1)/2 pairwise models; ties go to the tied class with the largest summed
absolute decision value over its winning comparisons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError, TrainingError

DEFAULT_TOL = 1e-3
MAX_PASSES = 10_000

# validated meta-parameters reported for each feature type
TABLE_PARAMS = {
    "FT1": (0.125, 0.001),
    "FT2": (0.031, 0.0004),
    "FT3": (0.001, 0.004),
}


@dataclass(frozen=True)
class KernelParams:
    C: float
    gamma: float

    def __post_init__(self):
        if not (self.C > 0 and self.gamma > 0):
            raise ParameterError(f"C and gamma must be positive, got {self}")


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ContractError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.exp(-gamma * np.sum((x - y) ** 2)))


def kernel_matrix(xs: np.ndarray, ys: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise RBF kernel between the rows of xs and ys."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape[1] != ys.shape[1]:
        raise ContractError(f"dimension mismatch: {xs.shape} vs {ys.shape}")
    sq = (np.sum(xs ** 2, axis=1)[:, None] + np.sum(ys ** 2, axis=1)[None, :]
          - 2.0 * xs @ ys.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class BinarySvmModel:
    support_vectors: np.ndarray      # (m, d)
    dual_coefs: np.ndarray           # alpha_i * y_i per support vector
    bias: float
    params: KernelParams
    dual_objective: float = 0.0

    def decision(self, x: np.ndarray) -> float:
        k = kernel_matrix(self.support_vectors, np.atleast_2d(x),
                          self.params.gamma)[:, 0]
        return float(self.dual_coefs @ k + self.bias)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float):
    """Maximal-violating-pair SMO on a precomputed kernel matrix.

    Returns (alpha, bias). Gradient convention: minimize
    f(a) = 1/2 a^T Q a - sum(a) with Q = (y y^T) * K.
    """
    m = len(y)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(m)
    grad = -np.ones(m)
    yg = -y * grad

    for _ in range(MAX_PASSES):
        up = ((y > 0) & (alpha < C - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < C - 1e-12))
        yg = -y * grad
        gmax = np.where(up, yg, -np.inf)
        gmin = np.where(low, yg, np.inf)
        i = int(np.argmax(gmax))
        j = int(np.argmin(gmin))
        if gmax[i] - gmin[j] < tol / 2:
            break

        ai, aj = alpha[i], alpha[j]
        yi, yj = y[i], y[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        if lo >= hi:
            continue
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 1e-12:
            aj_new = aj + yj * (yi * grad[i] - yj * grad[j]) / eta
            aj_new = min(hi, max(lo, aj_new))
        else:
            # flat direction: pick the better endpoint of the feasible segment
            def obj_delta(a):
                dj = a - aj
                di = yi * yj * (aj - a)
                return (0.5 * (Q[i, i] * di * di + Q[j, j] * dj * dj)
                        + Q[i, j] * di * dj + grad[i] * di + grad[j] * dj)
            aj_new = lo if obj_delta(lo) < obj_delta(hi) else hi
        ai_new = ai + yi * yj * (aj - aj_new)
        if abs(aj_new - aj) < 1e-14:
            break
        grad += Q[:, i] * (ai_new - ai) + Q[:, j] * (aj_new - aj)
        alpha[i], alpha[j] = ai_new, aj_new

    # bias from free support vectors, else midpoint of the KKT interval
    yg = -y * grad
    free = (alpha > 1e-8 * C) & (alpha < C * (1 - 1e-8))
    if free.any():
        b = float(np.mean(yg[free]))
    else:
        up = ((y > 0) & (alpha < C - 1e-12)) | ((y < 0) & (alpha > 1e-12))
        low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < C - 1e-12))
        hi = np.where(up, yg, -np.inf).max()
        lo = np.where(low, yg, np.inf).min()
        b = float((hi + lo) / 2) if np.isfinite(hi) and np.isfinite(lo) else 0.0
    return alpha, b


def train_binary(xs: np.ndarray, ys: np.ndarray, params: KernelParams,
                 tol: float = DEFAULT_TOL) -> BinarySvmModel:
    """Train a soft-margin RBF SVM on labels in {-1, +1}."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys, dtype=float)
    if xs.shape[0] == 0:
        raise TrainingError("empty training set")
    if set(np.unique(ys)) != {-1.0, 1.0}:
        raise TrainingError(f"need both labels -1 and +1, got {sorted(set(ys))}")
    K = kernel_matrix(xs, xs, params.gamma)
    alpha, b = _smo(K, ys, params.C, tol)
    objective = float(alpha.sum()
                      - 0.5 * (alpha * ys) @ K @ (alpha * ys))
    sv = alpha > 1e-12
    return BinarySvmModel(xs[sv].copy(), (alpha * ys)[sv].copy(), b, params,
                          objective)


@dataclass
class OvoModel:
    classes: list
    binaries: dict[tuple[int, int], BinarySvmModel] = field(default_factory=dict)
    feature_type: str = ""

    @property
    def dim(self) -> int:
        first = next(iter(self.binaries.values()))
        return first.support_vectors.shape[1]


def train_ovo(xs: np.ndarray, ys, params: KernelParams,
              feature_type: str = "", tol: float = DEFAULT_TOL) -> OvoModel:
    """One binary model per unordered class pair, each trained on the
    samples of that pair only."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.asarray(ys)
    classes = sorted(set(ys.tolist()))
    if len(classes) < 2:
        raise TrainingError(f"need >= 2 classes, got {len(classes)}")
    model = OvoModel(classes=classes, feature_type=feature_type)
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            mask = (ys == classes[a]) | (ys == classes[b])
            labels = np.where(ys[mask] == classes[a], 1.0, -1.0)
            model.binaries[(a, b)] = train_binary(xs[mask], labels, params, tol)
    return model


def predict(model: OvoModel, x: np.ndarray):
    """Majority vote over the pairwise models.

    Returns (class label, votes per class). Ties break by the largest summed
    |decision value| over won comparisons, then by lowest class index.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise ContractError(f"feature dim {x.shape} != model dim {model.dim}")
    k = len(model.classes)
    votes = np.zeros(k, dtype=int)
    strength = np.zeros(k)
    for (a, b), bin_model in model.binaries.items():
        d = bin_model.decision(x)
        winner = a if d >= 0 else b
        votes[winner] += 1
        strength[winner] += abs(d)
    best = votes.max()
    tied = [i for i in range(k) if votes[i] == best]
    label_idx = max(tied, key=lambda i: (strength[i], -i))
    return model.classes[label_idx], dict(zip(model.classes, votes.tolist()))


def predict_batch(model: OvoModel, xs: np.ndarray) -> list:
    return [predict(model, x)[0] for x in np.atleast_2d(xs)]


def grid_search(train_x, train_y, val_x, val_y, c_grid, gamma_grid,
                feature_type: str = "", tol: float = DEFAULT_TOL):
    """Exhaustive (C, gamma) search scored by macro F-measure on the
    validation set. Ties prefer smaller C, then smaller gamma."""
    from .evaluate import confusion_matrix, precision_recall_f

    c_grid = sorted(c_grid)
    gamma_grid = sorted(gamma_grid)
    if not c_grid or not gamma_grid:
        raise ParameterError("empty parameter grid")
    classes = sorted(set(np.asarray(train_y).tolist()))
    best = None
    for c in c_grid:
        for gamma in gamma_grid:
            params = KernelParams(c, gamma)
            model = train_ovo(train_x, train_y, params, feature_type, tol)
            preds = predict_batch(model, val_x)
            cm = confusion_matrix(val_y, preds, classes)
            score = precision_recall_f(cm).macro_f
            if best is None or score > best[1]:
                best = (params, score)
    return best


def default_grid(base: int = 10) -> list[float]:
    """The meta-parameter sweep 0.001..10000 on a log scale."""
    if base == 10:
        return [float(v) for v in np.logspace(-3, 4, 22)]
    if base == 2:
        return [float(2.0 ** k) for k in range(-10, 14)]
    raise ParameterError(f"grid base must be 2 or 10, got {base}")


def ovo_to_dict(model: OvoModel, n: int) -> dict:
    return {
        "classes": model.classes,
        "feature_type": model.feature_type,
        "n": n,
        "binaries": [
            {
                "pair": [model.classes[a], model.classes[b]],
                "support_vectors": m.support_vectors.tolist(),
                "dual_coefs": m.dual_coefs.tolist(),
                "bias": m.bias,
                "C": m.params.C,
                "gamma": m.params.gamma,
            }
            for (a, b), m in sorted(model.binaries.items())
        ],
    }


def ovo_from_dict(data: dict) -> OvoModel:
    classes = data["classes"]
    index = {c: i for i, c in enumerate(classes)}
    model = OvoModel(classes=classes, feature_type=data.get("feature_type", ""))
    for entry in data["binaries"]:
        a, b = (index[entry["pair"][0]], index[entry["pair"][1]])
        model.binaries[(a, b)] = BinarySvmModel(
            np.array(entry["support_vectors"], dtype=float),
            np.array(entry["dual_coefs"], dtype=float),
            float(entry["bias"]),
            KernelParams(float(entry["C"]), float(entry["gamma"])),
        )
    return model


def save_ovo(path, model: OvoModel, n: int) -> None:
    with open(path, "w") as f:
        json.dump(ovo_to_dict(model, n), f, indent=2, sort_keys=True)


def load_ovo(path) -> OvoModel:
    with open(path) as f:
        return ovo_from_dict(json.load(f))
