"""Independent brute-force reference implementations for the tests.

Everything here is written as plainly as possible (Python loops, direct
interval checks, explicit parameter flattening) and deliberately avoids
the vectorized code paths in the package, so a disagreement points at a
real defect rather than shared arithmetic.
"""
import numpy as np

SWEEP = [k / 20 for k in range(21)]


def dice_sweep_bruteforce(yhat, y):
    """Best dice over the fixed threshold sweep, ties to the smallest t."""
    best_t, best_d, table = None, -1.0, []
    for t in SWEEP:
        inter = 0
        n_pred = 0
        n_truth = 0
        for p, target in zip(yhat, y):
            pred = p > t
            n_pred += int(pred)
            n_truth += int(target == 1)
            inter += int(pred and target == 1)
        d = 1.0 if n_pred + n_truth == 0 else 2.0 * inter / (n_pred + n_truth)
        table.append(d)
        if d > best_d:
            best_t, best_d = t, d
    return best_t, best_d, table


def evenly_spaced_bruteforce(yhat, y, n_bins):
    """Reliability bins [k/n, (k+1)/n), last bin closed at 1."""
    edges = [k / n_bins for k in range(n_bins + 1)]
    conf, frac, counts = [], [], []
    for b in range(n_bins):
        members = []
        for i, p in enumerate(yhat):
            if b < n_bins - 1:
                inside = edges[b] <= p < edges[b + 1]
            else:
                inside = edges[b] <= p <= edges[b + 1]
            if inside:
                members.append(i)
        counts.append(len(members))
        if members:
            conf.append(float(np.mean(np.asarray([yhat[i] for i in members]))))
            frac.append(float(np.mean(np.asarray([y[i] for i in members]))))
        else:
            conf.append(float("nan"))
            frac.append(float("nan"))
    return conf, frac, counts


def adaptive_bruteforce(yhat, y, n_bins, lo, hi):
    """Equal-count bins over sorted filtered predictions; earlier bins
    take the remainder.  Returns None when everything is filtered."""
    kept = [i for i, p in enumerate(yhat) if lo <= p <= hi]
    if not kept:
        return None
    kept.sort(key=lambda i: yhat[i])  # Python sort is stable, like argsort
    m = len(kept)
    base, extra = divmod(m, n_bins)
    conf, frac, counts = [], [], []
    start = 0
    for b in range(n_bins):
        size = base + (1 if b < extra else 0)
        members = kept[start:start + size]
        start += size
        counts.append(size)
        if members:
            conf.append(float(np.mean(np.asarray([yhat[i] for i in members]))))
            frac.append(float(np.mean(np.asarray([y[i] for i in members]))))
        else:
            conf.append(float("nan"))
            frac.append(float("nan"))
    return conf, frac, counts


def forward_bruteforce(layers, features):
    """Layer-by-layer forward pass with explicit loops."""
    outputs = []
    for row in features:
        a = list(row)
        for k, (w, b) in enumerate(layers):
            nxt = []
            for j in range(w.shape[0]):
                s = b[j]
                for i in range(w.shape[1]):
                    s += w[j, i] * a[i]
                if k < len(layers) - 1:
                    s = max(s, 0.0)
                nxt.append(s)
            a = nxt
        outputs.append(a[0])
    return np.asarray(outputs)


def flatten_layers(layers):
    return np.concatenate([np.concatenate([w.ravel(), b])
                           for w, b in layers])


def unflatten_layers(flat, layers):
    rebuilt, i = [], 0
    for w, b in layers:
        wn = flat[i:i + w.size].reshape(w.shape)
        i += w.size
        bn = flat[i:i + b.size]
        i += b.size
        rebuilt.append((wn, bn))
    return rebuilt


def finite_difference(fn, x0, h=1e-5):
    """Central finite differences of a scalar function of a flat vector."""
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        step = np.zeros_like(x0)
        step[i] = h
        grad[i] = (fn(x0 + step) - fn(x0 - step)) / (2.0 * h)
    return grad
