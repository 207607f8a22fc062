"""Composite tests built on weighted logrank statistics.

* maximum test over a weight set, calibrated by the joint normal law of the
  standardised statistics (Maxcombo and the crossing-weight variant);
* projection test: quadratic form through the pseudo-inverse, chi-square
  with rank degrees of freedom;
* Renyi supremum test, calibrated by sup |Brownian motion| on [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import DegenerateDataError, DomainError
from .numerics import (
    MVN_DEFAULT_TOL,
    RngStream,
    brownian_sup_sf,
    chisq_sf,
    find_root,
    mvn_rect_prob,
    normal_cdf,
    normal_quantile,
    pseudo_inverse,
)
from .survival import EventTable
from .weights import Constant, WeightSpec, eval_weight
from .wlrt import CovResult, _norm_const, cov_matrix, increments

__all__ = [
    "ComboResult",
    "ProjectionResult",
    "RenyiResult",
    "max_combo_test",
    "max_combo_pvalue",
    "max_combo_rejects",
    "critical_value",
    "critical_value_bracket",
    "one_sided_pvalues",
    "projection_test",
    "projection_from_z",
    "renyi_test",
]


@dataclass(frozen=True)
class ComboResult:
    z_vec: np.ndarray
    corr: np.ndarray
    t_max: float
    signed_t: float
    p_two_sided: float
    p_one_sided_lower: float
    p_one_sided_upper: float
    c_alpha: float

    def as_record(self) -> dict:
        rec = {f"z{k + 1}": float(z) for k, z in enumerate(self.z_vec)}
        rec.update(t_max=self.t_max, signed_t=self.signed_t, p_two_sided=self.p_two_sided,
                   p_one_sided_lower=self.p_one_sided_lower,
                   p_one_sided_upper=self.p_one_sided_upper, c_alpha=self.c_alpha)
        return rec


@dataclass(frozen=True)
class ProjectionResult:
    s_n: float
    rank: int
    p_value: float

    def as_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RenyiResult:
    q: float
    p_value: float

    def as_record(self) -> dict:
        return asdict(self)


def _two_sided_tail(t: float) -> float:
    return float(2.0 * normal_cdf(-abs(t)))


def critical_value_bracket(alpha: float, m: int) -> tuple[float, float]:
    """Critical values for perfectly correlated and for independent statistics."""
    lo = normal_quantile(1.0 - alpha / 2.0)
    hi = normal_quantile(0.5 + 0.5 * (1.0 - alpha) ** (1.0 / m))
    return lo, hi


def max_combo_pvalue(z_vec, corr, rng: RngStream | None = None,
                     tol: float = MVN_DEFAULT_TOL) -> float:
    """Two-sided p-value of ``max |z_k|`` under N(0, corr)."""
    z_vec = np.atleast_1d(np.asarray(z_vec, dtype=float))
    t = float(np.max(np.abs(z_vec)))
    m = len(z_vec)
    if m == 1:
        return _two_sided_tail(t)
    if t == 0.0:
        return 1.0
    bound = np.full(m, t)
    p = 1.0 - mvn_rect_prob(corr, -bound, bound, tol=tol, rng=rng)
    # The joint tail lies between the single-statistic tail and the Sidak bound.
    single = _two_sided_tail(t)
    return float(min(max(p, single), 1.0 - (1.0 - single) ** m))


def max_combo_rejects(z_vec, corr, alpha: float, rng: RngStream | None = None,
                      tol: float = 1e-3) -> bool:
    """Whether the two-sided maximum test rejects at level ``alpha``.

    Settles most cases from the single-statistic and Sidak bounds on the
    p-value and only integrates the multivariate normal in between.
    """
    z_vec = np.atleast_1d(np.asarray(z_vec, dtype=float))
    t = float(np.max(np.abs(z_vec)))
    single = _two_sided_tail(t)
    if single >= alpha:
        return False
    if 1.0 - (1.0 - single) ** len(z_vec) < alpha:
        return True
    return max_combo_pvalue(z_vec, corr, rng=rng, tol=tol) < alpha


def one_sided_pvalues(p_two_sided: float, signed_t: float) -> tuple[float, float]:
    """Lower/upper one-sided p-values of ``sign(z_1) * max |z_k|``.

    The statistic is symmetric about zero under the null, so its tail beyond
    ``s > 0`` is half the two-sided tail of ``max |z_k|`` at ``s``.
    """
    half = 0.5 * p_two_sided
    if signed_t > 0:
        return 1.0 - half, half
    if signed_t < 0:
        return half, 1.0 - half
    return 1.0 - half, 1.0 - half


def critical_value(corr, alpha: float, rng: RngStream | None = None,
                   tol: float = MVN_DEFAULT_TOL) -> float:
    """``c`` with ``P(max_k |Z_k| < c) = 1 - alpha`` for Z ~ N(0, corr)."""
    corr = np.atleast_2d(np.asarray(corr, dtype=float))
    m = corr.shape[0]
    lo, hi = critical_value_bracket(alpha, m)
    if m == 1:
        return lo
    width = hi - lo
    lo_b, hi_b = lo - 0.1 * width - 1e-6, hi + 0.1 * width + 1e-6

    def excess(c):
        bound = np.full(m, c)
        return mvn_rect_prob(corr, -bound, bound, tol=tol, rng=rng) - (1.0 - alpha)

    return find_root(excess, lo_b, hi_b, tol=1e-6)


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha must lie in (0, 0.5), got {alpha}")


def max_combo_test(table: EventTable, specs, alpha: float = 0.05,
                   rng: RngStream | None = None, tol: float = MVN_DEFAULT_TOL,
                   with_critical_value: bool = True) -> ComboResult:
    """Maximum of standardised weighted logrank statistics.

    The first weight should be the constant (logrank) weight; its sign
    orients the one-sided statistic. ``p_one_sided_upper`` targets the
    alternative where group 1 has the larger cumulative hazard.
    """
    _check_alpha(alpha)
    rng = rng or RngStream(0)
    cov: CovResult = cov_matrix(table, specs)
    z = cov.z_vec
    t_max = float(np.max(np.abs(z)))
    signed = math.copysign(t_max, z[0]) if z[0] != 0 else 0.0
    p_two = max_combo_pvalue(z, cov.corr, rng=rng, tol=tol)
    p_lower, p_upper = one_sided_pvalues(p_two, signed)
    c_alpha = critical_value(cov.corr, alpha, rng=rng, tol=tol) if with_critical_value else math.nan
    return ComboResult(z, cov.corr, t_max, signed, p_two, p_lower, p_upper, c_alpha)


def projection_test(table: EventTable, specs, rank_tol: float = 1e-10) -> ProjectionResult:
    """Projection test on the standardised scale.

    ``S = z' R^- z`` with ``R`` the correlation matrix. With
    ``Sigma = D R D``, ``D^-1 R^- D^-1`` is a generalised inverse of
    ``Sigma`` and ``T = D z`` lies in its range, so ``S = T' Sigma^- T``.
    """
    cov = cov_matrix(table, specs)
    return projection_from_z(cov.z_vec, cov.corr, rank_tol=rank_tol)


def projection_from_z(z_vec, corr, rank_tol: float = 1e-10) -> ProjectionResult:
    """Projection statistic from standardised statistics and their correlation."""
    inv, rank = pseudo_inverse(corr, rank_tol=rank_tol)
    if rank == 0:
        raise DegenerateDataError("covariance matrix has rank 0")
    z_vec = np.asarray(z_vec, dtype=float)
    s_n = max(float(z_vec @ inv @ z_vec), 0.0)
    return ProjectionResult(s_n, rank, chisq_sf(s_n, rank))


def renyi_test(table: EventTable, spec: WeightSpec | None = None) -> RenyiResult:
    """Renyi-type supremum test for a single weight (logrank by default)."""
    spec = spec if spec is not None else Constant()
    score, var = increments(table)
    w = np.broadcast_to(eval_weight(spec, table.f_minus[table.usable]), score.shape)
    c = _norm_const(table)
    path = c * np.cumsum(w * score)
    total_var = c * c * float((w * w) @ var)
    if not total_var > 0:
        raise DegenerateDataError(f"weight {spec} has zero variance on this data")
    q = float(np.max(np.abs(path))) / math.sqrt(total_var)
    p = 1.0 if q == 0.0 else brownian_sup_sf(q)
    return RenyiResult(q, p)
