"""Raster preprocessing: DoG filtering, size normalization, Otsu binarization,
and Guo-Hall two-subiteration thinning.

Grayscale images are 2D float64 arrays with values in [0, 1]. Binary images
and skeletons are 2D bool arrays where True marks foreground (ink).
"""

from __future__ import annotations

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ContentError, ParameterError

OTSU_BINS = 256


def dog_filter(img: np.ndarray, sigma1: float = 1.0, sigma2: float = 1.6,
               rescale: bool = True) -> np.ndarray:
    """Difference-of-Gaussians band-pass filter.

    Returns blur(sigma1) - blur(sigma2), min-max rescaled to [0, 1].
    A constant difference (e.g. constant input) rescales to all zeros.
    """
    if not (sigma2 > sigma1 > 0):
        raise ParameterError(f"need sigma2 > sigma1 > 0, got {sigma1}, {sigma2}")
    img = np.asarray(img, dtype=np.float64)
    diff = ndimage.gaussian_filter(img, sigma1) - ndimage.gaussian_filter(img, sigma2)
    if not rescale:
        return diff
    lo, hi = diff.min(), diff.max()
    if hi - lo == 0:
        return np.zeros_like(diff)
    return (diff - lo) / (hi - lo)


def _foreground_mask(img: np.ndarray) -> np.ndarray:
    # dark ink on light paper: foreground sits below the mid-range intensity
    lo, hi = img.min(), img.max()
    if hi - lo == 0:
        return np.zeros(img.shape, dtype=bool)
    return img < lo + 0.5 * (hi - lo)


def normalize_size(img: np.ndarray, target: int = 64, margin: int = 2) -> np.ndarray:
    """Scale the glyph bounding box to fit a target x target canvas.

    Aspect ratio is preserved; the glyph fills target - 2*margin along its
    limiting dimension, bilinearly resampled and centered. Padding uses the
    median of the non-foreground pixels as the background estimate.
    """
    img = np.asarray(img, dtype=np.float64)
    if target < 8:
        raise ParameterError(f"target size must be >= 8, got {target}")
    if img.size == 0:
        raise ContentError("empty image")
    fg = _foreground_mask(img)
    if not fg.any():
        raise ContentError("no foreground content after thresholding")
    rows = np.flatnonzero(fg.any(axis=1))
    cols = np.flatnonzero(fg.any(axis=0))
    crop = img[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]

    inner = target - 2 * margin
    h, w = crop.shape
    scale = inner / max(h, w)
    new_h = max(1, round(h * scale))
    new_w = max(1, round(w * scale))
    resized = np.asarray(
        Image.fromarray(crop.astype(np.float32), mode="F").resize(
            (new_w, new_h), Image.BILINEAR),
        dtype=np.float64)

    background = float(np.median(img[~fg]))
    out = np.full((target, target), background)
    top = (target - new_h) // 2
    left = (target - new_w) // 2
    out[top:top + new_h, left:left + new_w] = resized
    return np.clip(out, 0.0, 1.0)


def otsu_threshold(img: np.ndarray) -> float:
    """Threshold maximizing between-class variance over a 256-bin histogram.

    Returned value is an intensity in [0, 1]; foreground is intensity < t.
    """
    img = np.asarray(img, dtype=np.float64)
    hist, edges = np.histogram(img, bins=OTSU_BINS, range=(0.0, 1.0))
    total = hist.sum()
    if total == 0:
        return 0.0
    p = hist / total
    centers = (edges[:-1] + edges[1:]) / 2
    w0 = np.cumsum(p)
    mu = np.cumsum(p * centers)
    mu_total = mu[-1]
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = np.where((w0 > 0) & (w1 > 0),
                           (mu_total * w0 - mu) ** 2 / (w0 * w1), 0.0)
    # between[k] is the variance when classes split after bin k;
    # pixels with intensity < edges[k+1] are class 0 (foreground).
    if between.max() == 0:
        return 0.0
    k = int(np.argmax(between))
    return float(edges[k + 1])


def binarize_otsu(img: np.ndarray) -> np.ndarray:
    """Binarize with Otsu's threshold; darker pixels become foreground."""
    img = np.asarray(img, dtype=np.float64)
    t = otsu_threshold(img)
    return img < t


_GH_NEIGHBORS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _guo_hall_subiteration(padded: np.ndarray, odd: bool) -> int:
    """One Guo-Hall subiteration on a zero-padded bool array, in place."""
    core = padded[1:-1, 1:-1]
    # p2..p9 clockwise from north, per Guo & Hall's numbering
    p = {}
    for idx, (dy, dx) in enumerate(_GH_NEIGHBORS, start=2):
        p[idx] = padded[1 + dy:padded.shape[0] - 1 + dy,
                        1 + dx:padded.shape[1] - 1 + dx]
    c = ((~p[2] & (p[3] | p[4])).astype(np.int8)
         + (~p[4] & (p[5] | p[6])).astype(np.int8)
         + (~p[6] & (p[7] | p[8])).astype(np.int8)
         + (~p[8] & (p[9] | p[2])).astype(np.int8))
    n1 = ((p[9] | p[2]).astype(np.int8) + (p[3] | p[4]).astype(np.int8)
          + (p[5] | p[6]).astype(np.int8) + (p[7] | p[8]).astype(np.int8))
    n2 = ((p[2] | p[3]).astype(np.int8) + (p[4] | p[5]).astype(np.int8)
          + (p[6] | p[7]).astype(np.int8) + (p[8] | p[9]).astype(np.int8))
    n = np.minimum(n1, n2)
    if odd:
        o = (p[2] | p[3] | ~p[5]) & p[4]
    else:
        o = (p[6] | p[7] | ~p[9]) & p[8]
    delete = core & (c == 1) & (n >= 2) & (n <= 3) & ~o
    removed = int(delete.sum())
    core[delete] = False
    return removed


def thin(binary: np.ndarray) -> np.ndarray:
    """Guo-Hall parallel thinning iterated to fixpoint.

    Preserves 8-connectivity and is idempotent; output strokes are one
    pixel wide.
    """
    binary = np.asarray(binary, dtype=bool)
    padded = np.zeros((binary.shape[0] + 2, binary.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = binary
    while True:
        removed = _guo_hall_subiteration(padded, odd=True)
        removed += _guo_hall_subiteration(padded, odd=False)
        if removed == 0:
            break
    return padded[1:-1, 1:-1].copy()


def load_gray(path) -> np.ndarray:
    """Decode PNG or PGM to a [0,1] grayscale array (luma for color input)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def save_pgm(path, img: np.ndarray) -> None:
    """Write a grayscale or binary array as binary PGM (P5)."""
    img = np.asarray(img)
    if img.dtype == bool:
        data = np.where(img, 0, 255).astype(np.uint8)
    else:
        data = np.clip(np.rint(img * 255), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())
