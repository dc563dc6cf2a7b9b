"""Two-stage sieve least-squares density-ratio estimation.

Stage one regresses the ratio of the product of the y- and z-marginals to
their joint density on the (y, z) basis.  Its normal equations use the
diagonal Gram matrix of the basis and the average of the basis over all
ordered cross pairs (y_i, z_j), i != j.  Stage two fits the conditional
density ratio on the full basis, weighting the Gram matrix by the stage-one
fitted values and averaging the basis over cross pairs (x_i, y_j, z_i).

Both solves go through a symmetric eigendecomposition with a reciprocal
condition check; a failing check raises instead of falling back to a
pseudo-inverse, so collinear candidate bases surface during tuning.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .basis import (
    BasisSpec,
    BasisTransform,
    build_transform,
    u_matrix,
    u_pair_mean,
    v_matrix,
    v_pair_mean,
)
from .errors import CollinearBasisError, ConfigurationError, EstimationError
from .sample import Sample

RCOND_MIN = 1e-12
RESIDUAL_TOL = 1e-10


class SymSolver:
    """Symmetric factorization with condition check and iterative refinement."""

    def __init__(self, mat: np.ndarray, label: str, require_psd: bool):
        self.mat = mat
        self.label = label
        self.eigvals, self.eigvecs = eigh(mat)
        scale = np.abs(self.eigvals).max()
        if scale <= 0.0 or not np.isfinite(scale):
            raise CollinearBasisError(f"{label}: matrix is zero or non-finite")
        small = self.eigvals.min() if require_psd else np.abs(self.eigvals).min()
        if small <= RCOND_MIN * scale:
            raise CollinearBasisError(
                f"{label}: reciprocal condition {small / scale:.2e} below {RCOND_MIN:.0e}"
            )
        self.has_negative_eigenvalue = bool(self.eigvals.min() < 0.0)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        coeff = self.eigvecs.T @ rhs
        if coeff.ndim == 1:
            coeff = coeff / self.eigvals
        else:
            coeff = coeff / self.eigvals[:, None]
        return self.eigvecs @ coeff

    def solve_refined(self, rhs: np.ndarray) -> np.ndarray:
        # extended-precision residuals push the forward error down to working
        # precision even when the Gram matrix is 1e7-conditioned
        x = self.solve(rhs)
        mat_hi = self.mat.astype(np.longdouble)
        rhs_hi = rhs.astype(np.longdouble)
        for _ in range(2):
            residual = np.asarray(rhs_hi - mat_hi @ x.astype(np.longdouble), dtype=float)
            x = x + self.solve(residual)
        resid = np.linalg.norm(self.mat @ x - rhs) / np.linalg.norm(rhs)
        if not resid <= RESIDUAL_TOL:
            raise EstimationError(
                f"{self.label}: normal-equation residual {resid:.2e} exceeds {RESIDUAL_TOL:.0e}"
            )
        return x


@dataclass(frozen=True)
class UncondRatioFit:
    """Stage-one fit: coefficients with their normal-equation pieces."""

    spec: BasisSpec
    gamma: np.ndarray
    sigma_mat: np.ndarray
    b_vec: np.ndarray
    transform: BasisTransform
    solver: SymSolver
    n: int

    def basis_rows(self, y, z) -> np.ndarray:
        """Evaluate the fit's (standardized) basis at arbitrary points."""
        return self.transform.apply(u_matrix(self.spec.u_terms, y, z))

    def values(self, y, z) -> np.ndarray:
        """Fitted ratio at each row of (y, z)."""
        return self.basis_rows(y, z) @ self.gamma


@dataclass(frozen=True)
class CondRatioFit:
    """Stage-two fit: coefficients with their weighted normal-equation pieces."""

    spec: BasisSpec
    beta: np.ndarray
    h_mat: np.ndarray
    h_vec: np.ndarray
    transform: BasisTransform
    solver: SymSolver
    n: int
    warnings: tuple[str, ...]

    def basis_rows(self, x, y, z) -> np.ndarray:
        return self.transform.apply(v_matrix(self.spec.v_terms, x, y, z))

    def values(self, x, y, z) -> np.ndarray:
        return self.basis_rows(x, y, z) @ self.beta


def _u_design(sample: Sample, spec: BasisSpec):
    raw = u_matrix(spec.u_terms, sample.y, sample.z)
    tr = build_transform(raw, spec.u_terms, spec.u_mix, spec.describe())
    return tr.apply(raw), tr


def _v_design(sample: Sample, spec: BasisSpec):
    raw = v_matrix(spec.v_terms, sample.x, sample.y, sample.z)
    tr = build_transform(raw, spec.v_terms, spec.v_mix, spec.describe())
    return tr.apply(raw), tr


def fit_unconditional(sample: Sample, spec: BasisSpec, *,
                      method: str = "separable") -> UncondRatioFit:
    """Fit the (y, z) density ratio by unweighted sieve least squares."""
    n = sample.n
    if n < len(spec.u_terms):
        raise ConfigurationError(
            f"need n >= {len(spec.u_terms)} observations for {len(spec.u_terms)} first-stage terms"
        )
    U, tr = _u_design(sample, spec)
    sigma_mat = U.T @ U / n
    sigma_mat = 0.5 * (sigma_mat + sigma_mat.T)
    b_raw = u_pair_mean(spec.u_terms, sample.y, sample.z, method=method)
    b_vec = tr.apply(b_raw[None, :])[0]
    solver = SymSolver(sigma_mat, f"first stage ({spec.describe()})", require_psd=True)
    gamma = solver.solve_refined(b_vec)
    return UncondRatioFit(
        spec=spec, gamma=gamma, sigma_mat=sigma_mat, b_vec=b_vec,
        transform=tr, solver=solver, n=n,
    )


def eval_r(fit: UncondRatioFit, y, z) -> float:
    """Fitted stage-one ratio at a single point; may be negative."""
    point_y = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    point_z = np.atleast_1d(np.asarray(z, dtype=float))[None, :]
    return float(fit.values(point_y, point_z)[0])


def fit_conditional(sample: Sample, spec: BasisSpec, r_fit: UncondRatioFit, *,
                    method: str = "separable") -> CondRatioFit:
    """Fit the conditional density ratio, weighting by the stage-one values.

    ``r_fit`` must come from the same sample and spec.  The fitted weights can
    dip below zero, in which case the weighted Gram matrix may lose positive
    definiteness; that is recorded as a warning on the fit rather than an
    error because the normal equations remain solvable.
    """
    n = sample.n
    if n < len(spec.v_terms):
        raise ConfigurationError(
            f"need n >= {len(spec.v_terms)} observations for {len(spec.v_terms)} second-stage terms"
        )
    if r_fit.spec.u_terms != spec.u_terms or r_fit.n != n:
        raise ConfigurationError("stage-one fit does not match this sample/spec")
    V, tr = _v_design(sample, spec)
    r = r_fit.values(sample.y, sample.z)
    h_mat = (V * r[:, None]).T @ V / n
    h_mat = 0.5 * (h_mat + h_mat.T)
    h_raw = v_pair_mean(spec.v_terms, sample.x, sample.y, sample.z, method=method)
    h_vec = tr.apply(h_raw[None, :])[0]
    solver = SymSolver(h_mat, f"second stage ({spec.describe()})", require_psd=False)
    beta = solver.solve_refined(h_vec)
    warns = []
    if solver.has_negative_eigenvalue:
        warns.append(
            "weighted Gram matrix has a negative eigenvalue "
            "(stage-one ratio dips below zero on this sample)"
        )
    return CondRatioFit(
        spec=spec, beta=beta, h_mat=h_mat, h_vec=h_vec,
        transform=tr, solver=solver, n=n, warnings=tuple(warns),
    )


def eval_pi(fit: CondRatioFit, x, y, z) -> float:
    """Fitted conditional density ratio at a single point; may be negative."""
    px = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    py = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    pz = np.atleast_1d(np.asarray(z, dtype=float))[None, :]
    return float(fit.values(px, py, pz)[0])


def balance_residuals(sample: Sample, spec: BasisSpec,
                      r_fit: UncondRatioFit, pi_fit: CondRatioFit):
    """Empirical balancing-moment residuals of both fitted ratios.

    By the normal equations, the sample average of (fitted ratio x basis)
    reproduces the cross-pair basis average exactly; the returned vectors are
    the differences and should vanish up to solver tolerance.
    """
    U = r_fit.basis_rows(sample.y, sample.z)
    r = U @ r_fit.gamma
    res_u = (U * r[:, None]).mean(axis=0) - r_fit.b_vec
    V = pi_fit.basis_rows(sample.x, sample.y, sample.z)
    pi = V @ pi_fit.beta
    res_v = (V * (pi * r)[:, None]).mean(axis=0) - pi_fit.h_vec
    return res_u, res_v
