"""Pure numpy implementations of the inner loops.

Used when the compiled extension is unavailable or ``SHARP_PURE_PYTHON=1``.
"""

import numpy as np


def blend_frequencies(thetas, ratios, s, lo, hi):
    thetas = np.asarray(thetas, dtype=np.float64)
    r = np.asarray(ratios, dtype=np.float64)
    if hi - lo < 1e-9:
        g = (r >= hi).astype(np.float64)
    else:
        g = np.where(r < lo, 0.0, np.where(r > hi, 1.0, (r - lo) / (hi - lo)))
    return (1.0 - g) * (thetas / s) + g * thetas


def rotate_pairs(values, angles):
    values = np.asarray(values, dtype=np.float64)
    c = np.cos(angles)
    sn = np.sin(angles)
    a = values[:, 0::2]
    b = values[:, 1::2]
    out = np.empty_like(values)
    out[:, 0::2] = a * c - b * sn
    out[:, 1::2] = a * sn + b * c
    return out


def pair_scores(coef_cos, coef_sin, thetas, offsets):
    phi = np.outer(offsets, thetas)
    return np.cos(phi) @ coef_cos + np.sin(phi) @ coef_sin


def radial_sums(power, cy, cx, nbins):
    h, w = power.shape
    yy, xx = np.indices((h, w), dtype=np.float64)
    k = np.floor(np.hypot(yy - cy, xx - cx) + 0.5).astype(np.int64).ravel()
    keep = k < nbins
    sums = np.bincount(k[keep], weights=power.ravel()[keep], minlength=nbins)[:nbins]
    counts = np.bincount(k[keep], minlength=nbins)[:nbins].astype(np.int64)
    return sums, counts
