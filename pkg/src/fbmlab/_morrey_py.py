"""Pure numpy fallback for the ball-sum kernel (same contract as the compiled one)."""
import numpy as np

_CHUNK_ELEMENTS = 1 << 22


def ball_sums(coords, weights, centers, thresholds):
    """sums[c, m] = sum of weights over points with |x - center_c|^2 < thresholds[m]."""
    coords = np.asarray(coords, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.int64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    ncen, nthr = centers.shape[0], thresholds.shape[0]
    out = np.zeros((ncen, nthr))
    if coords.shape[0] == 0 or ncen == 0:
        return out
    step = max(1, _CHUNK_ELEMENTS // coords.shape[0])
    for start in range(0, ncen, step):
        cen = centers[start:start + step]
        d2 = np.zeros((cen.shape[0], coords.shape[0]), dtype=np.int64)
        for a in range(coords.shape[1]):
            diff = coords[None, :, a] - cen[:, None, a]
            d2 += diff * diff
        b = np.searchsorted(thresholds, d2, side="right")
        flat = (np.arange(cen.shape[0])[:, None] * (nthr + 1) + b).ravel()
        w = np.broadcast_to(weights, d2.shape).ravel()
        bins = np.bincount(flat, weights=w, minlength=cen.shape[0] * (nthr + 1))
        out[start:start + step] = np.cumsum(bins.reshape(cen.shape[0], nthr + 1)[:, :nthr], axis=1)
    return out
