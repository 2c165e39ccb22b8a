import os

# the batched GEMMs here are too small to win from threading
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import numpy as np
import pytest


def rel_err(a, b, floor=1e-8):
    """Relative error with a floored denominator, elementwise max."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def central_diff_grad(f, arrays, h=1e-4, sample=None, rng=None):
    """Central finite differences of a scalar f() over entries of arrays.

    Returns a list of (flat_index, fd_value) lists, one per array; ``sample``
    limits the number of probed entries per array.
    """
    out = []
    rng = rng or np.random.default_rng(0)
    for arr in arrays:
        flat = arr.ravel()
        idx = np.arange(flat.size)
        if sample is not None and flat.size > sample:
            idx = rng.choice(flat.size, size=sample, replace=False)
        rows = []
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            fp = f()
            flat[i] = old - h
            fm = f()
            flat[i] = old
            rows.append((int(i), (fp - fm) / (2.0 * h)))
        out.append(rows)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(0)
