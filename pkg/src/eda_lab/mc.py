"""Monte Carlo summaries for autocorrelated chain output."""

from __future__ import annotations

import numpy as np

__all__ = ["batch_means_stderr", "series_summary"]


def batch_means_stderr(series, n_batches=32):
    """Standard error of the mean of an autocorrelated series via batch means.

    The series is split into ``n_batches`` contiguous batches (trailing
    remainder dropped); the batch means are treated as approximately
    independent.  Columns are handled independently for 2-d input.
    """
    x = np.asarray(series, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    n = x.shape[0]
    b = min(n_batches, n)
    if b < 2:
        out = np.full(x.shape[1], np.nan)
        return out[0] if squeeze else out
    L = n // b
    means = x[: b * L].reshape(b, L, x.shape[1]).mean(axis=1)
    se = means.std(axis=0, ddof=1) / np.sqrt(b)
    return float(se[0]) if squeeze else se


def series_summary(series, n_batches=32):
    """(mean, batch-means stderr) per column."""
    x = np.asarray(series, dtype=float)
    return x.mean(axis=0), batch_means_stderr(x, n_batches)
