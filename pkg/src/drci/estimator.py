"""Sklearn-style front door for the conditional-independence test."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .basis import BasisSpec, candidate_grid
from .errors import ConfigurationError
from .sample import Sample
from .statistic import run_test
from .tuning import TuningConfig, select_basis


class DensityRatioCIT(BaseEstimator):
    """Conditional-independence test of x against y given z.

    Parameters
    ----------
    basis : "auto", degree triple or BasisSpec
        "auto" runs the bootstrap size-controlled selection over the built-in
        candidate grid; a triple like (2, 2, 2) fixes a tensor basis.
    alpha : float
        Nominal level of the one-sided test.
    rank_transform : bool
        Replace each column by its within-column rank/n before fitting.
        Keeps the decision invariant under monotone transforms of the data.
    bootstrap_reps, size_band : tuning knobs used only when basis="auto".
    grid_degrees : tuple
        Degree caps of the candidate grid used when basis="auto".
    random_state : int or None
        Seed for the selection bootstrap.
    n_jobs : int or None
        Workers for candidate evaluation (None uses all available, capped by
        the DRCI_THREADS environment variable).

    Attributes (after ``fit``)
    --------------------------
    result_ : TestResult for the chosen basis.
    basis_ : the BasisSpec actually used.
    tuning_report_ : TuningReport or None.
    statistic_, p_value_, reject_ : convenience copies from ``result_``.
    """

    def __init__(self, basis="auto", alpha=0.05, rank_transform=True,
                 bootstrap_reps=100, size_band=0.025, grid_degrees=(4, 2, 2),
                 random_state=None, n_jobs=None):
        self.basis = basis
        self.alpha = alpha
        self.rank_transform = rank_transform
        self.bootstrap_reps = bootstrap_reps
        self.size_band = size_band
        self.grid_degrees = grid_degrees
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, x, y, z):
        sample = Sample(x=np.asarray(x, dtype=float),
                        y=np.asarray(y, dtype=float),
                        z=np.asarray(z, dtype=float))
        if isinstance(self.basis, BasisSpec):
            spec = self.basis
            self.tuning_report_ = None
        elif isinstance(self.basis, (tuple, list)):
            spec = BasisSpec.tensor(*self.basis)
            self.tuning_report_ = None
        elif self.basis == "auto":
            config = TuningConfig(
                bootstrap_reps=self.bootstrap_reps,
                alpha=self.alpha,
                size_band=self.size_band,
                seed=self.random_state,
            )
            self.tuning_report_ = select_basis(
                sample, candidate_grid(*self.grid_degrees), config,
                rank_transform=self.rank_transform, n_jobs=self.n_jobs,
            )
            spec = self.tuning_report_.chosen
        else:
            raise ConfigurationError(
                f"basis must be 'auto', a degree triple or a BasisSpec, got {self.basis!r}"
            )
        self.result_ = run_test(sample, spec, self.alpha,
                                rank_transform=self.rank_transform)
        self.basis_ = spec
        self.statistic_ = self.result_.t_stat
        self.p_value_ = self.result_.p_value
        self.reject_ = self.result_.reject
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit(x, y, z) first")

    def summary(self) -> str:
        self._check_fitted()
        res = self.result_
        lines = [
            "Density-ratio conditional independence test",
            f"  n = {res.n}, basis: {res.spec.describe()}",
            f"  statistic = {res.t_stat:.4f}, p-value = {res.p_value:.4f}",
            f"  {'reject' if res.reject else 'fail to reject'} at level {res.alpha}",
        ]
        for w in res.warnings:
            lines.append(f"  note: {w}")
        return "\n".join(lines)
