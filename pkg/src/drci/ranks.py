"""Empirical-CDF (rank) preprocessing.

Replacing each column by its within-column average rank divided by n makes
every downstream statistic invariant, bit for bit, under strictly increasing
transformations of that column, and maps the data into (0, 1].
"""
from __future__ import annotations

import numpy as np
from scipy.stats import rankdata
from sklearn.base import BaseEstimator, TransformerMixin

from .sample import Sample, as_column_matrix


def rank_columns(a: np.ndarray) -> np.ndarray:
    """Column-wise rank/n with average ranks for ties; output lies in (0, 1]."""
    a = as_column_matrix(a, "input")
    n = a.shape[0]
    out = np.empty_like(a, dtype=float)
    for j in range(a.shape[1]):
        out[:, j] = rankdata(a[:, j], method="average") / n
    return out


def rank_transform(sample: Sample) -> Sample:
    """Apply the rank/n transform to every coordinate column of the sample."""
    return Sample(
        x=rank_columns(sample.x),
        y=rank_columns(sample.y),
        z=rank_columns(sample.z),
    )


class RankTransformer(TransformerMixin, BaseEstimator):
    """Stateless sklearn transformer computing within-batch column ranks.

    The transform is a function of the batch it receives (rank/n within the
    passed array), so ``fit`` only validates input.  Useful for composing the
    preprocessing step with other estimators in a pipeline.
    """

    def fit(self, X, y=None):
        as_column_matrix(X, "X")
        return self

    def transform(self, X):
        return rank_columns(np.asarray(X, dtype=float))

    def _more_tags(self):
        return {"stateless": True}
