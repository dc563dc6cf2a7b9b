"""Simulated bivariate series, the linear Granger baseline and MC studies.

Nine built-in data-generating processes produce coupled (or deliberately
uncoupled) series pairs; the test triple pairs each response value with the
driver's previous value and conditions on the response's previous value.
The "s" processes satisfy the lag-one conditional-independence null and
measure size; the "p" processes violate it in different ways (linear,
quadratic, multiplicative, variance-coupled, locally nonlinear) and measure
power.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import stats as sstats

from ._parallel import worker_count
from .basis import BasisSpec, candidate_grid
from .errors import (
    CollinearBasisError,
    ConfigurationError,
    DataError,
    EstimationError,
    GenerationError,
)
from .sample import Sample
from .statistic import normal_quantile, run_test
from .tuning import TuningConfig, select_basis

DGP_NAMES = (
    "dgp1s", "dgp2s", "dgp3s",
    "dgp1p", "dgp2p", "dgp3p", "dgp4p", "dgp5p", "dgp6p",
)

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class DgpSpec:
    """One simulated process: which recursion, length, burn-in and seed."""

    kind: str
    n: int
    burn_in: int = 200
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in DGP_NAMES:
            raise ConfigurationError(
                f"unknown dgp {self.kind!r}; expected one of {', '.join(DGP_NAMES)}"
            )
        if self.n < 10:
            raise ConfigurationError(f"series length must be >= 10, got {self.n}")
        if self.burn_in < 0:
            raise ConfigurationError(f"burn_in must be >= 0, got {self.burn_in}")


def _gauss_bump(v: float) -> float:
    return np.exp(-0.5 * v * v) / _SQRT_2PI


def generate(spec: DgpSpec, rng: np.random.Generator | None = None) -> Sample:
    """Simulate the process and assemble the lag-one test triple.

    Both series start at zero and the volatility recursions at their
    intercept 0.01; ``burn_in`` initial steps are discarded so the retained
    stretch is effectively stationary.  Innovations are iid standard
    bivariate normal.  Returns n rows of (driver lag, response, response lag).
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    kind = spec.kind
    total = spec.burn_in + spec.n + 1
    noise = rng.standard_normal((total, 2))
    y_series = np.zeros(total + 1)
    x_series = np.zeros(total + 1)
    h1 = h2 = 0.01

    for t in range(1, total + 1):
        e1, e2 = noise[t - 1]
        y_prev = y_series[t - 1]
        x_prev = x_series[t - 1]
        if kind == "dgp1s":
            y_new = 0.5 * y_prev + e1
            x_new = 0.5 * x_prev + e2
        elif kind == "dgp2s":
            y_new = np.sqrt(0.01 + 0.5 * y_prev ** 2) * e1
            x_new = 0.5 * x_prev + e2
        elif kind == "dgp3s":
            h1 = 0.01 + 0.9 * h1 + 0.05 * y_prev ** 2
            h2 = 0.01 + 0.9 * h2 + 0.05 * x_prev ** 2
            y_new = np.sqrt(h1) * e1
            x_new = np.sqrt(h2) * e2
        elif kind == "dgp1p":
            y_new = 0.5 * y_prev + 0.5 * x_prev + e1
            x_new = 0.5 * x_prev + e2
        elif kind == "dgp2p":
            y_new = 0.5 * y_prev + 0.5 * x_prev ** 2 + e1
            x_new = 0.5 * x_prev + e2
        elif kind == "dgp3p":
            y_new = 0.5 * y_prev * x_prev + e1
            x_new = 0.5 * x_prev + e2
        elif kind == "dgp4p":
            y_new = 0.5 * y_prev + 0.5 * x_prev * e1
            x_new = 0.5 * x_prev + e2
        elif kind == "dgp5p":
            h1 = 0.01 + 0.1 * h1 + 0.4 * y_prev ** 2 + 0.1 * x_prev ** 2
            h2 = 0.01 + 0.9 * h2 + 0.05 * x_prev ** 2
            y_new = np.sqrt(h1) * e1
            x_new = np.sqrt(h2) * e2
        else:  # dgp6p
            y_new = 0.5 * y_prev + 4.0 * _gauss_bump(y_prev / 0.1) * x_prev + e1
            x_new = 0.5 * x_prev + e2
        if not (np.isfinite(y_new) and np.isfinite(x_new)):
            raise GenerationError(f"{kind}: non-finite value at step {t}")
        y_series[t] = y_new
        x_series[t] = x_new

    y_kept = y_series[spec.burn_in + 1:]
    x_kept = x_series[spec.burn_in + 1:]
    return Sample(x=x_kept[:-1], y=y_kept[1:], z=y_kept[:-1])


def linear_granger_test(sample: Sample, alpha: float = 0.05) -> tuple[float, bool]:
    """Two-sided t-test for the driver-lag coefficient in a linear regression.

    Regresses y on an intercept, the conditioning column and the driver
    column by ordinary least squares and tests whether the driver coefficient
    is zero against the Student-t reference with n - 3 degrees of freedom.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")
    if sample.x.shape[1] != 1 or sample.z.shape[1] != 1 or sample.y.shape[1] != 1:
        raise DataError("the linear test expects scalar x, y and z columns")
    n = sample.n
    if n < 4:
        raise DataError(f"need n >= 4 observations, got {n}")
    design = np.column_stack([np.ones(n), sample.z[:, 0], sample.x[:, 0]])
    q, r_mat = np.linalg.qr(design)
    if np.abs(np.diag(r_mat)).min() <= 1e-10 * np.abs(np.diag(r_mat)).max():
        raise CollinearBasisError("regression design matrix is rank deficient")
    response = sample.y[:, 0]
    coef = np.linalg.solve(r_mat, q.T @ response)
    resid = response - design @ coef
    dof = n - 3
    scale2 = float(resid @ resid) / dof
    r_inv = np.linalg.solve(r_mat, np.eye(3))
    cov = scale2 * (r_inv @ r_inv.T)
    t_val = coef[2] / np.sqrt(cov[2, 2])
    p_value = 2.0 * float(sstats.t.sf(abs(t_val), dof))
    return p_value, bool(p_value < alpha)


def log_diff_transform(series) -> np.ndarray:
    """First difference of 100 times the natural log of a positive series."""
    arr = np.asarray(series, dtype=float).reshape(-1)
    if arr.size < 2:
        raise DataError("need at least 2 values to difference")
    if not np.all(np.isfinite(arr)):
        raise DataError("series contains non-finite values")
    if np.any(arr <= 0.0):
        raise DataError("log-difference transform requires strictly positive values")
    return 100.0 * np.diff(np.log(arr))


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings: test level, seeding, basis policy, parallelism."""

    alpha: float = 0.05
    seed: int = 0
    basis: object = "auto"  # "auto", (p1, p2, p3) or a BasisSpec
    grid_degrees: tuple[int, int, int] = (4, 2, 2)
    bootstrap_reps: int = 100
    size_band: float = 0.025
    rank_transform: bool = True
    burn_in: int = 200
    n_jobs: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class McRow:
    dgp: str
    n: int
    test: str
    rate: float
    failures: int


@dataclass(frozen=True)
class McReport:
    """Rejection rates per (dgp, n, test) plus bookkeeping."""

    rows: tuple[McRow, ...]
    reps: int
    seed: int
    wall_time: float

    def to_csv(self) -> str:
        lines = ["dgp,n,test,rate,reps,seed"]
        for row in self.rows:
            lines.append(f"{row.dgp},{row.n},{row.test},{row.rate:.6f},{self.reps},{self.seed}")
        return "\n".join(lines) + "\n"


def _resolve_spec(config: McConfig) -> BasisSpec | None:
    if isinstance(config.basis, BasisSpec):
        return config.basis
    if isinstance(config.basis, (tuple, list)):
        return BasisSpec.tensor(*config.basis)
    if config.basis == "auto":
        return None
    raise ConfigurationError(f"basis must be 'auto', a degree triple or a BasisSpec, got {config.basis!r}")


def _mc_batch(kind: str, n: int, combo_index: int, rep_indices: Sequence[int],
              tests: tuple[str, ...], config: McConfig) -> dict:
    """Run a contiguous block of replications; returns rejection counts."""
    fixed_spec = _resolve_spec(config)
    candidates = None if fixed_spec is not None else candidate_grid(*config.grid_degrees)
    counts = {t: 0 for t in tests}
    failures = {t: 0 for t in tests}
    for rep in rep_indices:
        rng = np.random.default_rng([config.seed, combo_index, rep])
        sample = generate(DgpSpec(kind=kind, n=n, burn_in=config.burn_in), rng)
        if "lin" in tests:
            try:
                _, rej = linear_granger_test(sample, config.alpha)
                counts["lin"] += rej
            except EstimationError:
                failures["lin"] += 1
        if "dr" in tests:
            try:
                if fixed_spec is not None:
                    rejected = run_test(sample, fixed_spec, config.alpha,
                                        rank_transform=config.rank_transform).reject
                else:
                    tune_cfg = TuningConfig(
                        bootstrap_reps=config.bootstrap_reps,
                        alpha=config.alpha,
                        size_band=config.size_band,
                        seed=[config.seed, combo_index, rep, 1],
                    )
                    report = select_basis(sample, candidates, tune_cfg,
                                          rank_transform=config.rank_transform,
                                          n_jobs=1)
                    rejected = report.chosen_stat > normal_quantile(1.0 - config.alpha)
                counts["dr"] += bool(rejected)
            except EstimationError:
                failures["dr"] += 1
    return {"counts": counts, "failures": failures, "reps": len(rep_indices)}


def monte_carlo(dgps: Sequence[str], ns: Sequence[int], reps: int,
                tests: Sequence[str] = ("dr", "lin"),
                config: McConfig = McConfig()) -> McReport:
    """Rejection-rate table over (dgp, n) pairs, deterministic given the seed.

    Replications are independent work items seeded by (seed, combo index,
    replication index), so results do not depend on how they are chunked
    across workers.
    """
    if reps < 1:
        raise ConfigurationError(f"reps must be >= 1, got {reps}")
    tests = tuple(sorted({t.lower() for t in tests}))
    for t in tests:
        if t not in ("dr", "lin"):
            raise ConfigurationError(f"unknown test {t!r}; expected 'dr' and/or 'lin'")
    if not tests:
        raise ConfigurationError("no tests requested")
    for kind in dgps:
        if kind not in DGP_NAMES:
            raise ConfigurationError(f"unknown dgp {kind!r}")

    start = time.perf_counter()
    jobs = worker_count(config.n_jobs)
    combos = [(kind, n) for kind in dgps for n in ns]
    chunk_count = max(1, min(reps, 4 * jobs))
    chunks = np.array_split(np.arange(reps), chunk_count)

    rows = []
    for combo_index, (kind, n) in enumerate(combos):
        results = Parallel(n_jobs=jobs)(
            delayed(_mc_batch)(kind, n, combo_index, chunk.tolist(), tests, config)
            for chunk in chunks if len(chunk)
        )
        for test in tests:
            total = sum(r["counts"][test] for r in results)
            fails = sum(r["failures"][test] for r in results)
            rows.append(McRow(dgp=kind, n=n, test=test, rate=total / reps, failures=fails))
    return McReport(rows=tuple(rows), reps=reps, seed=config.seed,
                    wall_time=time.perf_counter() - start)
