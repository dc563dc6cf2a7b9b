"""The standardized conditional-independence test statistic.

The raw statistic is half the sample average of (fitted conditional ratio
minus one) squared, weighted by the stage-one ratio.  Thanks to the
balancing moments it equals half the weighted average of the squared fit
minus one half; both forms are computed and their gap is kept as a
diagnostic.  A plug-in bias term and a pair-sum variance estimate standardize
the statistic, which is compared against the upper standard-normal quantile.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import ranks
from .basis import BasisSpec, u_cross_rows, v_cross_rows
from .errors import ConfigurationError, DegenerateStatisticError
from .ratios import (
    CondRatioFit,
    UncondRatioFit,
    _v_design,
    fit_conditional,
    fit_unconditional,
)
from .sample import Sample

FORM_GAP_TOL = 1e-10


def normal_cdf(t: float) -> float:
    return float(ndtr(t))


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


@dataclass(frozen=True)
class TestResult:
    """Outcome of one conditional-independence test."""

    i_hat: float
    b_hat: float
    sigma_hat: float
    t_stat: float
    p_value: float
    alpha: float
    reject: bool
    spec: BasisSpec
    n: int
    warnings: tuple[str, ...]
    form_gap: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.t_stat,
            "i_hat": self.i_hat,
            "b_hat": self.b_hat,
            "sigma_hat": self.sigma_hat,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "n": self.n,
            "basis": {
                "u": [[t.ex, t.ey, t.ez] for t in self.spec.u_terms],
                "v": [[t.ex, t.ey, t.ez] for t in self.spec.v_terms],
            },
            "warnings": list(self.warnings),
        }


def statistic_forms(sample: Sample, spec: BasisSpec,
                    r_fit: UncondRatioFit, pi_fit: CondRatioFit) -> tuple[float, float]:
    """Both algebraic forms of the raw statistic (defining form first)."""
    r = r_fit.values(sample.y, sample.z)
    pi = pi_fit.values(sample.x, sample.y, sample.z)
    i_def = 0.5 * float(np.mean((pi - 1.0) ** 2 * r))
    i_equiv = 0.5 * float(np.mean(pi ** 2 * r)) - 0.5
    return i_def, i_equiv


def compute_I(sample: Sample, spec: BasisSpec,
              r_fit: UncondRatioFit, pi_fit: CondRatioFit) -> float:
    """Raw weighted quadratic distance of the fitted conditional ratio from 1."""
    return statistic_forms(sample, spec, r_fit, pi_fit)[0]


def influence_matrix(sample: Sample, spec: BasisSpec, r_fit: UncondRatioFit,
                     *, method: str = "separable") -> np.ndarray:
    """Per-observation influence rows used by the bias and variance estimates.

    Row i combines four pieces: the mean over j of the full basis at
    (x_i, y_j, z_i); minus the first-stage projection of that mean evaluated
    through the cross average of the (y, z) basis at (y_j, z_i); plus the
    sample average of basis times fitted weight; minus the observation's own
    basis times fitted weight.  The projection applies the inverse of the
    stage-one Gram matrix so the rows do not depend on how either basis is
    parameterized within its span.
    """
    V, v_tr = _v_design(sample, spec)
    U = r_fit.basis_rows(sample.y, sample.z)
    r = U @ r_fit.gamma
    n = sample.n

    t1_raw = v_cross_rows(spec.v_terms, sample.x, sample.y, sample.z, method=method)
    t1 = v_tr.apply(t1_raw)
    wu_raw = u_cross_rows(spec.u_terms, sample.y, sample.z, method=method)
    wu = r_fit.transform.apply(wu_raw)
    cross_gram = V.T @ U / n
    t2 = wu @ r_fit.solver.solve(cross_gram.T)
    weighted = V * r[:, None]
    t3 = weighted.mean(axis=0)
    return t1 - t2 + t3[None, :] - weighted


def compute_B(influence: np.ndarray, pi_fit: CondRatioFit) -> float:
    """Plug-in bias estimate: averaged quadratic form of the influence rows."""
    n = influence.shape[0]
    solved = pi_fit.solver.solve(influence.T).T
    return float(np.sum(solved * influence)) / (2.0 * n * n)


def compute_sigma(influence: np.ndarray, pi_fit: CondRatioFit,
                  *, method: str = "gram") -> float:
    """Plug-in standard deviation from squared off-diagonal pair interactions.

    The target is the root of 2/(n(n-1)) times the sum over i != j of the
    squared bilinear form of influence rows i and j through the inverse
    weighted Gram matrix.  The default evaluates it from the influence Gram
    matrix in O(n k^2 + k^3); ``method="pairwise"`` materializes the n x n
    interaction matrix directly.
    """
    n, _ = influence.shape
    if method == "pairwise":
        w = influence @ pi_fit.solver.solve(influence.T)
        total = float(np.sum(w * w)) - float(np.sum(np.diag(w) ** 2))
    elif method == "gram":
        # ||W||_F^2 = tr((M G)^2) for W = A M A^T, G = A^T A, symmetric M
        gram = influence.T @ influence
        mg = pi_fit.solver.solve(gram)
        frob2 = float(np.sum(mg * mg.T))
        diag = np.sum(pi_fit.solver.solve(influence.T).T * influence, axis=1)
        total = frob2 - float(np.sum(diag ** 2))
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    var = 2.0 / (n * (n - 1)) * max(total, 0.0)
    sigma = float(np.sqrt(var))
    if sigma <= 0.0 or not np.isfinite(sigma):
        raise DegenerateStatisticError(
            "variance estimate is zero; the standardized statistic is undefined "
            "(constant-only second-stage basis?)"
        )
    return sigma


def run_test(sample: Sample, spec: BasisSpec, alpha: float = 0.05, *,
             rank_transform: bool = True,
             method: str = "separable") -> TestResult:
    """Full test pipeline on one sample with a fixed basis."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")
    work = ranks.rank_transform(sample) if rank_transform else sample
    r_fit = fit_unconditional(work, spec, method=method)
    pi_fit = fit_conditional(work, spec, r_fit, method=method)
    i_def, i_equiv = statistic_forms(work, spec, r_fit, pi_fit)
    influence = influence_matrix(work, spec, r_fit, method=method)
    b_hat = compute_B(influence, pi_fit)
    sigma_hat = compute_sigma(influence, pi_fit)
    n = work.n
    t_stat = 2.0 * n * (i_def - b_hat) / sigma_hat
    p_value = float(ndtr(-t_stat))
    form_gap = abs(i_def - i_equiv)

    warns = list(pi_fit.warnings)
    r = r_fit.values(work.y, work.z)
    pi = pi_fit.values(work.x, work.y, work.z)
    neg_r = int(np.sum(r < 0.0))
    neg_pi = int(np.sum(pi < 0.0))
    if neg_r:
        warns.append(f"stage-one ratio negative at {neg_r} of {n} sample points")
    if neg_pi:
        warns.append(f"conditional ratio negative at {neg_pi} of {n} sample points")
    if form_gap > FORM_GAP_TOL * (1.0 + abs(i_def)):
        warns.append(f"statistic forms disagree by {form_gap:.2e}")

    return TestResult(
        i_hat=i_def,
        b_hat=b_hat,
        sigma_hat=sigma_hat,
        t_stat=t_stat,
        p_value=p_value,
        alpha=alpha,
        reject=bool(p_value < alpha),
        spec=spec,
        n=n,
        warnings=tuple(warns),
        form_gap=form_gap,
    )
