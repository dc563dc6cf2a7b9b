"""Polynomial sieve bases: terms, candidate families and design evaluation.

Two bases drive the test: a first-stage basis over (y, z) used to fit the
marginal-product-over-joint density ratio, and a second-stage basis over
(x, y, z) used to fit the conditional density ratio.  Terms are tensor
monomials.  When a variable group has more than one column, the group enters
a monomial through the product of its columns raised to the group exponent.

Besides plain evaluation, this module provides the two-index averages the
estimators need (averages of a term over all ordered pairs of observations
with y taken from one row and the rest from another) in both a separable
O(n) form and a literal O(n^2) form kept as a cross-check oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CollinearBasisError, ConfigurationError
from .sample import as_column_matrix

_METHODS = ("separable", "pairwise")

#: First-stage term pool: constant, y, z and the y*z interaction.
DEFAULT_U_EXPONENTS = ((0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1))


@dataclass(frozen=True, order=True)
class Monomial:
    """One tensor-monomial term with a non-negative exponent per group."""

    ex: int
    ey: int
    ez: int

    def __post_init__(self):
        for name in ("ex", "ey", "ez"):
            e = getattr(self, name)
            if not isinstance(e, (int, np.integer)) or e < 0:
                raise ConfigurationError(f"exponent {name}={e!r} must be a non-negative integer")
            object.__setattr__(self, name, int(e))

    @property
    def is_constant(self) -> bool:
        return self.ex == 0 and self.ey == 0 and self.ez == 0

    def __str__(self) -> str:
        if self.is_constant:
            return "1"
        parts = []
        for sym, e in zip("xyz", (self.ex, self.ey, self.ez)):
            if e == 1:
                parts.append(sym)
            elif e > 1:
                parts.append(f"{sym}^{e}")
        return "*".join(parts)


def _as_terms(terms: Iterable, what: str) -> tuple[Monomial, ...]:
    out = []
    for t in terms:
        if isinstance(t, Monomial):
            out.append(t)
        else:
            out.append(Monomial(*t))
    if not out:
        raise ConfigurationError(f"{what} must contain at least one term")
    return tuple(out)


def _check_mix(mix, size: int, what: str):
    if mix is None:
        return None
    m = np.asarray(mix, dtype=float)
    if m.shape != (size, size):
        raise ConfigurationError(f"{what} must be a {size}x{size} matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ConfigurationError(f"{what} contains non-finite entries")
    return m


@dataclass(frozen=True)
class BasisSpec:
    """An ordered pair of term lists defining both stages of the fit.

    Invariants: each list contains the constant term exactly once and no
    duplicates; first-stage terms must not involve x; and every first-stage
    term must also appear in the second-stage list so the span of the
    (y, z)-basis is contained in the span of the full basis.

    ``u_mix`` / ``v_mix`` optionally recombine the (internally standardized)
    terms by an invertible matrix.  Fitted functions and the test statistic
    do not depend on such recombinations; the hooks exist to make that
    invariance checkable.
    """

    u_terms: tuple[Monomial, ...]
    v_terms: tuple[Monomial, ...]
    u_mix: np.ndarray | None = field(default=None, compare=False)
    v_mix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "u_terms", _as_terms(self.u_terms, "u_terms"))
        object.__setattr__(self, "v_terms", _as_terms(self.v_terms, "v_terms"))
        for name, terms in (("u_terms", self.u_terms), ("v_terms", self.v_terms)):
            if len(set(terms)) != len(terms):
                raise ConfigurationError(f"{name} contains duplicate terms")
            if not any(t.is_constant for t in terms):
                raise ConfigurationError(f"{name} must contain the constant term")
        for t in self.u_terms:
            if t.ex != 0:
                raise ConfigurationError(f"first-stage term {t} must not involve x")
        v_set = set(self.v_terms)
        missing = [t for t in self.u_terms if t not in v_set]
        if missing:
            raise ConfigurationError(
                "every first-stage term must appear in v_terms; missing: "
                + ", ".join(str(t) for t in missing)
            )
        object.__setattr__(self, "u_mix", _check_mix(self.u_mix, len(self.u_terms), "u_mix"))
        object.__setattr__(self, "v_mix", _check_mix(self.v_mix, len(self.v_terms), "v_mix"))

    @classmethod
    def tensor(cls, max_ex: int, max_ey: int, max_ez: int) -> "BasisSpec":
        """Full tensor family x^i y^j z^l with i <= max_ex, j <= max_ey, l <= max_ez.

        The first stage uses the fixed four-term pool {1, y, z, yz}, which
        requires max_ey >= 1 and max_ez >= 1.
        """
        if max_ex < 1 or max_ey < 1 or max_ez < 1:
            raise ConfigurationError(
                f"tensor degrees must all be >= 1, got ({max_ex}, {max_ey}, {max_ez})"
            )
        v = tuple(
            Monomial(i, j, l)
            for i in range(max_ex + 1)
            for j in range(max_ey + 1)
            for l in range(max_ez + 1)
        )
        u = tuple(Monomial(*e) for e in DEFAULT_U_EXPONENTS)
        return cls(u_terms=u, v_terms=v)

    def with_mixing(self, u_mix=None, v_mix=None) -> "BasisSpec":
        return BasisSpec(self.u_terms, self.v_terms, u_mix=u_mix, v_mix=v_mix)

    def describe(self) -> str:
        u = ", ".join(str(t) for t in self.u_terms)
        v = ", ".join(str(t) for t in self.v_terms)
        return f"u=[{u}] v=[{v}]"


def candidate_grid(max_ex: int, max_ey: int, max_ez: int
                   ) -> list[BasisSpec]:
    """Nested tensor candidate families for data-driven basis selection.

    Returns one candidate per degree triple (p1, p2, p3) with
    1 <= p1 <= max_ex, 1 <= p2 <= max_ey, 1 <= p3 <= max_ez, each with the
    fixed four-term first stage.  Degrees below 1 would break the span
    containment of the first stage and are rejected.
    """
    if max_ex < 1 or max_ey < 1 or max_ez < 1:
        raise ConfigurationError(
            f"candidate_grid degrees must all be >= 1, got ({max_ex}, {max_ey}, {max_ez})"
        )
    return [
        BasisSpec.tensor(p1, p2, p3)
        for p1 in range(1, max_ex + 1)
        for p2 in range(1, max_ey + 1)
        for p3 in range(1, max_ez + 1)
    ]


# ---------------------------------------------------------------------------
# Raw evaluation
# ---------------------------------------------------------------------------

def group_product(mat: np.ndarray) -> np.ndarray:
    """Reduce an (n, d) group to the n-vector of row products."""
    if mat.shape[1] == 1:
        return mat[:, 0]
    return np.prod(mat, axis=1)


class _PowerTable:
    """Cached powers g**e of one group-product vector."""

    def __init__(self, g: np.ndarray, max_exp: int):
        self._pows = [np.ones_like(g)]
        for _ in range(max_exp):
            self._pows.append(self._pows[-1] * g)

    def __getitem__(self, e: int) -> np.ndarray:
        return self._pows[e]


def _tables(terms: Sequence[Monomial], groups: dict[str, np.ndarray]) -> dict[str, _PowerTable]:
    maxe = {s: 0 for s in groups}
    for t in terms:
        for s in groups:
            maxe[s] = max(maxe[s], getattr(t, "e" + s))
    return {s: _PowerTable(group_product(groups[s]), maxe[s]) for s in groups}


def u_matrix(terms: Sequence[Monomial], y, z) -> np.ndarray:
    """Raw first-stage design: entry (t, k) is term k at (y_t, z_t)."""
    y = as_column_matrix(y, "y")
    z = as_column_matrix(z, "z")
    tab = _tables(terms, {"y": y, "z": z})
    return np.column_stack([tab["y"][t.ey] * tab["z"][t.ez] for t in terms])


def v_matrix(terms: Sequence[Monomial], x, y, z) -> np.ndarray:
    """Raw second-stage design: entry (t, k) is term k at (x_t, y_t, z_t)."""
    x = as_column_matrix(x, "x")
    y = as_column_matrix(y, "y")
    z = as_column_matrix(z, "z")
    tab = _tables(terms, {"x": x, "y": y, "z": z})
    return np.column_stack([tab["x"][t.ex] * tab["y"][t.ey] * tab["z"][t.ez] for t in terms])


def eval_u(spec: BasisSpec, y, z) -> np.ndarray:
    """Evaluate the raw first-stage terms at a single point."""
    point_y = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    point_z = np.atleast_1d(np.asarray(z, dtype=float))[None, :]
    return u_matrix(spec.u_terms, point_y, point_z)[0]


def eval_v(spec: BasisSpec, x, y, z) -> np.ndarray:
    """Evaluate the raw second-stage terms at a single point."""
    point_x = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    point_y = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    point_z = np.atleast_1d(np.asarray(z, dtype=float))[None, :]
    return v_matrix(spec.v_terms, point_x, point_y, point_z)[0]


# ---------------------------------------------------------------------------
# Two-index averages (separable fast path + literal pairwise oracle)
# ---------------------------------------------------------------------------

def _check_method(method: str):
    if method not in _METHODS:
        raise ConfigurationError(f"method must be one of {_METHODS}, got {method!r}")


def u_pair_mean(terms: Sequence[Monomial], y, z, method: str = "separable") -> np.ndarray:
    """Average of each term over all ordered pairs (i, j), i != j, at (y_i, z_j).

    Every term factors as a(y) * b(z), so the off-diagonal pair sum equals
    sum_i a_i * sum_j b_j minus the diagonal sum; the pairwise method instead
    materializes the n x n products and is kept as an oracle.
    """
    _check_method(method)
    y = as_column_matrix(y, "y")
    z = as_column_matrix(z, "z")
    n = y.shape[0]
    tab = _tables(terms, {"y": y, "z": z})
    out = np.empty(len(terms))
    for k, t in enumerate(terms):
        a, b = tab["y"][t.ey], tab["z"][t.ez]
        if method == "separable":
            out[k] = (a.sum() * b.sum() - (a * b).sum()) / (n * (n - 1))
        else:
            m = a[:, None] * b[None, :]
            out[k] = (m.sum() - np.trace(m)) / (n * (n - 1))
    return out


def v_pair_mean(terms: Sequence[Monomial], x, y, z, method: str = "separable") -> np.ndarray:
    """Average of each term over ordered pairs (i, j), i != j, at (x_i, y_j, z_i)."""
    _check_method(method)
    x = as_column_matrix(x, "x")
    y = as_column_matrix(y, "y")
    z = as_column_matrix(z, "z")
    n = x.shape[0]
    tab = _tables(terms, {"x": x, "y": y, "z": z})
    out = np.empty(len(terms))
    for k, t in enumerate(terms):
        a = tab["x"][t.ex] * tab["z"][t.ez]
        b = tab["y"][t.ey]
        if method == "separable":
            out[k] = (a.sum() * b.sum() - (a * b).sum()) / (n * (n - 1))
        else:
            m = a[:, None] * b[None, :]
            out[k] = (m.sum() - np.trace(m)) / (n * (n - 1))
    return out


def v_cross_rows(terms: Sequence[Monomial], x, y, z, method: str = "separable") -> np.ndarray:
    """Matrix whose row i is the full mean over j of the terms at (x_i, y_j, z_i)."""
    _check_method(method)
    x = as_column_matrix(x, "x")
    y = as_column_matrix(y, "y")
    z = as_column_matrix(z, "z")
    n = x.shape[0]
    if method == "pairwise":
        rows = np.empty((n, len(terms)))
        for i in range(n):
            xi = np.repeat(x[i : i + 1], n, axis=0)
            zi = np.repeat(z[i : i + 1], n, axis=0)
            rows[i] = v_matrix(terms, xi, y, zi).mean(axis=0)
        return rows
    tab = _tables(terms, {"x": x, "y": y, "z": z})
    return np.column_stack(
        [tab["x"][t.ex] * tab["z"][t.ez] * tab["y"][t.ey].mean() for t in terms]
    )


def u_cross_rows(terms: Sequence[Monomial], y, z, method: str = "separable") -> np.ndarray:
    """Matrix whose row i is the full mean over j of the terms at (y_j, z_i)."""
    _check_method(method)
    y = as_column_matrix(y, "y")
    z = as_column_matrix(z, "z")
    n = y.shape[0]
    if method == "pairwise":
        rows = np.empty((n, len(terms)))
        for i in range(n):
            zi = np.repeat(z[i : i + 1], n, axis=0)
            rows[i] = u_matrix(terms, y, zi).mean(axis=0)
        return rows
    tab = _tables(terms, {"y": y, "z": z})
    return np.column_stack([np.full(n, tab["y"][t.ey].mean()) * tab["z"][t.ez] for t in terms])


# ---------------------------------------------------------------------------
# Conditioning transform: affine standardization plus optional recombination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisTransform:
    """Affine per-term standardization followed by an optional recombination.

    High-degree monomials on rank-scale data produce badly conditioned
    normal-equation matrices; every non-constant term is therefore centered
    and scaled using its sample column before solving.  Because the constant
    term is kept untouched, the transform is an invertible linear map on the
    span and leaves fitted functions unchanged.
    """

    shift: np.ndarray
    scale: np.ndarray
    mix: np.ndarray | None

    def apply(self, raw: np.ndarray) -> np.ndarray:
        out = (raw - self.shift) / self.scale
        if self.mix is not None:
            out = out @ self.mix.T
        return out


def build_transform(raw_diag: np.ndarray, terms: Sequence[Monomial],
                    mix: np.ndarray | None, spec_label: str) -> BasisTransform:
    """Standardization statistics from the design evaluated at the sample points.

    A non-constant term whose sample column has (numerically) zero spread is
    collinear with the constant term, so that is reported right away instead
    of surfacing later as a singular solve.
    """
    shift = raw_diag.mean(axis=0)
    scale = raw_diag.std(axis=0)
    for k, t in enumerate(terms):
        if t.is_constant:
            shift[k] = 0.0
            scale[k] = 1.0
        elif scale[k] <= 1e-12 * max(1.0, abs(shift[k])):
            raise CollinearBasisError(
                f"term {t} is constant on this sample (basis {spec_label})"
            )
    return BasisTransform(shift=shift, scale=scale, mix=mix)
