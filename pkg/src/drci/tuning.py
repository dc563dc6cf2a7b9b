"""Data-driven basis selection with a size-controlled smoothed bootstrap.

Candidates are screened by how often the test rejects on bootstrap samples
that satisfy conditional independence by construction: z is drawn from the
Gaussian kernel density of the observed z, then x and y are drawn
independently from the kernel-smoothed conditionals given the drawn z.
Candidates whose bootstrap rejection rate sits near the nominal level form
the admissible set; among those, the one maximizing the standardized
statistic on the original sample wins.

The bootstrap is kernel-based, so its behaviour depends on the data scale
matching the bandwidth rule.  ``select_basis`` therefore resamples a
per-column standardized copy of the (optionally rank-transformed) working
sample; the tests themselves re-rank internally, so the selection remains
deterministic and invariant under monotone transformations of the input
whenever rank preprocessing is on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from . import ranks
from ._parallel import worker_count
from .basis import BasisSpec
from .errors import ConfigurationError, DataError, EstimationError
from .sample import Sample
from .statistic import run_test

_BANDWIDTH_FACTOR = (4.0 / 3.0) ** (-0.2)


def bandwidth(n: int) -> float:
    """Kernel bandwidth rule (4/3)^(-1/5) * n^(-1/5) for unit-scale data."""
    if n < 2:
        raise ConfigurationError(f"bandwidth requires n >= 2, got {n}")
    return _BANDWIDTH_FACTOR * float(n) ** (-0.2)


@dataclass(frozen=True)
class TuningConfig:
    """Knobs for the bootstrap selection loop.

    ``bandwidth`` of None means the rule above applied to the sample size.
    The size band operationalizes "rejection rate approximately alpha":
    with the default 100 replications the binomial standard error at the
    5% level is about 0.022, so 0.025 keeps well-calibrated candidates in.
    """

    bootstrap_reps: int = 100
    alpha: float = 0.05
    size_band: float = 0.025
    bandwidth: float | None = None
    seed: int | Sequence[int] | None = None

    def __post_init__(self):
        if self.bootstrap_reps < 1:
            raise ConfigurationError(f"bootstrap_reps must be >= 1, got {self.bootstrap_reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.size_band > 0.0:
            raise ConfigurationError(f"size_band must be > 0, got {self.size_band}")
        if self.bandwidth is not None and not self.bandwidth > 0.0:
            raise ConfigurationError(f"bandwidth must be > 0, got {self.bandwidth}")


def smoothed_bootstrap_sample(sample: Sample, h: float, rng: np.random.Generator) -> Sample:
    """One size-n draw satisfying conditional independence by construction.

    Each bootstrap z is an observed z row plus h times standard normal noise
    (an exact draw from the Gaussian kernel mixture).  Given each drawn z,
    the x and y rows are picked independently with kernel weights centered at
    the observed z rows, then jittered the same way, which is an exact draw
    from the smoothed conditional mixtures.
    """
    if not h > 0.0:
        raise ConfigurationError(f"bandwidth must be > 0, got {h}")
    n = sample.n
    pick = rng.integers(0, n, size=n)
    z_star = sample.z[pick] + h * rng.standard_normal(sample.z.shape)

    # Product-Gaussian kernel weights on observed z rows for every drawn z.
    diff = sample.z[:, None, :] - z_star[None, :, :]
    logw = -np.sum(diff * diff, axis=2) / (2.0 * h * h)
    logw -= logw.max(axis=0, keepdims=True)
    weights = np.exp(logw)
    weights /= weights.sum(axis=0, keepdims=True)
    cumulative = np.cumsum(weights, axis=0)
    cumulative[-1, :] = 1.0

    def draw_rows(source: np.ndarray) -> np.ndarray:
        uniforms = rng.random(n)
        rows = np.empty_like(source)
        for t in range(n):
            j = int(np.searchsorted(cumulative[:, t], uniforms[t]))
            rows[t] = source[min(j, n - 1)]
        return rows + h * rng.standard_normal(source.shape)

    x_star = draw_rows(sample.x)
    y_star = draw_rows(sample.y)
    return Sample(x=x_star, y=y_star, z=z_star)


def _candidate_outcomes(candidate: BasisSpec, bootstrap_samples: Sequence[Sample],
                        alpha: float, rank_transform: bool, method: str):
    rejections = 0
    errors = 0
    for bs in bootstrap_samples:
        try:
            if run_test(bs, candidate, alpha, rank_transform=rank_transform,
                        method=method).reject:
                rejections += 1
        except EstimationError:
            errors += 1
    return rejections / len(bootstrap_samples), errors


def rejection_frequency(candidate: BasisSpec, bootstrap_samples: Sequence[Sample],
                        alpha: float, *, rank_transform: bool = True,
                        method: str = "separable") -> float:
    """Fraction of bootstrap samples on which the candidate's test rejects.

    Samples where the fit fails (collinear candidate) count as non-rejections.
    """
    if len(bootstrap_samples) < 1:
        raise ConfigurationError("need at least one bootstrap sample")
    rate, _ = _candidate_outcomes(candidate, bootstrap_samples, alpha,
                                  rank_transform, method)
    return rate


@dataclass(frozen=True)
class TuningReport:
    """Everything the selection loop measured, plus the winner."""

    candidates: tuple[BasisSpec, ...]
    rates: np.ndarray
    error_counts: np.ndarray
    statistics: np.ndarray
    admissible: np.ndarray
    chosen_index: int
    chosen: BasisSpec
    chosen_stat: float
    alpha: float
    size_band: float
    bootstrap_reps: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "size_band": self.size_band,
            "bootstrap_reps": self.bootstrap_reps,
            "candidates": [
                {
                    "u": [[t.ex, t.ey, t.ez] for t in c.u_terms],
                    "v": [[t.ex, t.ey, t.ez] for t in c.v_terms],
                    "rejection_rate": float(self.rates[i]),
                    "fit_errors": int(self.error_counts[i]),
                    "admissible": bool(self.admissible[i]),
                    "statistic": None if not np.isfinite(self.statistics[i])
                    else float(self.statistics[i]),
                }
                for i, c in enumerate(self.candidates)
            ],
            "chosen_index": self.chosen_index,
            "chosen": {
                "u": [[t.ex, t.ey, t.ez] for t in self.chosen.u_terms],
                "v": [[t.ex, t.ey, t.ez] for t in self.chosen.v_terms],
            },
            "chosen_statistic": self.chosen_stat,
        }


def _standardize_columns(sample: Sample) -> Sample:
    parts = []
    for name in ("x", "y", "z"):
        block = getattr(sample, name)
        std = block.std(axis=0)
        if np.any(std <= 0.0):
            raise DataError(f"{name} has a constant column; cannot resample")
        parts.append((block - block.mean(axis=0)) / std)
    return Sample(*parts)


def select_basis(sample: Sample, candidates: Sequence[BasisSpec],
                 config: TuningConfig = TuningConfig(), *,
                 rank_transform: bool = True, method: str = "separable",
                 n_jobs: int | None = 1) -> TuningReport:
    """Pick the basis maximizing the statistic subject to bootstrap size control.

    The admissible set holds candidates whose bootstrap rejection rate is
    within ``size_band`` of ``alpha``; if it is empty the candidate with the
    rate closest to ``alpha`` is returned instead.  Ties prefer fewer
    second-stage terms, then earlier grid order.  The same bootstrap samples
    are reused for every candidate, so rankings are not blurred by resampling
    noise.
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigurationError("candidate list is empty")
    work = ranks.rank_transform(sample) if rank_transform else sample
    source = _standardize_columns(work)
    h = config.bandwidth if config.bandwidth is not None else bandwidth(sample.n)

    root = np.random.SeedSequence(config.seed)
    boots = [
        smoothed_bootstrap_sample(source, h, np.random.default_rng(child))
        for child in root.spawn(config.bootstrap_reps)
    ]

    jobs = worker_count(n_jobs)
    outcomes = Parallel(n_jobs=jobs)(
        delayed(_candidate_outcomes)(c, boots, config.alpha, rank_transform, method)
        for c in candidates
    )
    rates = np.array([o[0] for o in outcomes])
    error_counts = np.array([o[1] for o in outcomes])

    statistics = np.full(len(candidates), np.nan)
    for i, c in enumerate(candidates):
        try:
            statistics[i] = run_test(work, c, config.alpha,
                                     rank_transform=rank_transform, method=method).t_stat
        except EstimationError:
            pass
    usable = np.isfinite(statistics)
    if not usable.any():
        raise ConfigurationError("every candidate failed to fit the sample")

    admissible = (np.abs(rates - config.alpha) <= config.size_band) & usable
    pool = np.where(admissible)[0]
    if pool.size:
        # maximize the statistic; break exact ties by smaller basis, then order
        chosen_index = int(min(
            pool, key=lambda i: (-statistics[i], len(candidates[i].v_terms), i)
        ))
    else:
        pool = np.where(usable)[0]
        chosen_index = int(min(
            pool,
            key=lambda i: (abs(rates[i] - config.alpha), len(candidates[i].v_terms), i),
        ))

    return TuningReport(
        candidates=tuple(candidates),
        rates=rates,
        error_counts=error_counts,
        statistics=statistics,
        admissible=admissible,
        chosen_index=chosen_index,
        chosen=candidates[chosen_index],
        chosen_stat=float(statistics[chosen_index]),
        alpha=config.alpha,
        size_band=config.size_band,
        bootstrap_reps=config.bootstrap_reps,
    )
