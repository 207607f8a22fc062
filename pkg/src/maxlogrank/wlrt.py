"""Weighted logrank statistics, their variance and cross-weight covariance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .exceptions import DegenerateDataError, DegenerateWeightError
from .survival import EventTable
from .weights import WeightSpec, eval_weight

__all__ = ["WlrtResult", "CovResult", "wlrt_statistic", "cov_matrix", "weight_matrix",
           "increments"]


@dataclass(frozen=True)
class WlrtResult:
    w_stat: float
    variance: float
    z: float


@dataclass(frozen=True)
class CovResult:
    sigma: np.ndarray
    corr: np.ndarray
    z_vec: np.ndarray
    w_vec: np.ndarray


def _norm_const(table: EventTable) -> float:
    return math.sqrt((table.n0 + table.n1) / (table.n0 * table.n1))


def increments(table: EventTable):
    """Per-row score and variance increments for a unit weight.

    Returns ``(score, var)`` over the usable rows (both groups at risk),
    without the normalising constant:

    * ``score = (d1/y1 - d0/y0) * y1*y0/y``
    * ``var = y1*y0/y * (1 - (d-1)/(y-1)) * d/y``
    """
    keep = table.usable
    if not keep.any():
        raise DegenerateDataError("no event time with both groups at risk")
    y0 = table.y0[keep].astype(float)
    y1 = table.y1[keep].astype(float)
    d0 = table.d0[keep].astype(float)
    d1 = table.d1[keep].astype(float)
    y = y0 + y1
    d = d0 + d1
    score = (d1 / y1 - d0 / y0) * (y1 * y0 / y)
    # The tie factor is taken as 1 when y == 1 (0/0); such rows cannot be
    # usable anyway since both groups must be at risk.
    tie = np.ones_like(y)
    big = y > 1
    tie[big] = 1.0 - (d[big] - 1.0) / (y[big] - 1.0)
    var = (y1 * y0 / y) * tie * (d / y)
    return score, var


def weight_matrix(table: EventTable, specs: Iterable[WeightSpec]) -> np.ndarray:
    """Weights evaluated at ``F(t-)`` over the usable rows, shape (m, rows)."""
    u = table.f_minus[table.usable]
    return np.vstack([np.broadcast_to(eval_weight(s, u), u.shape) for s in specs])


def wlrt_statistic(table: EventTable, spec: WeightSpec) -> WlrtResult:
    """Weighted logrank statistic at the last usable event time.

    Positive values mean more events than expected in group 1.
    """
    score, var = increments(table)
    w = weight_matrix(table, [spec])[0]
    c = _norm_const(table)
    stat = c * float(w @ score)
    variance = c * c * float((w * w) @ var)
    # Zero variance forces a zero score (rows with d == y carry no contrast).
    z = stat / math.sqrt(variance) if variance > 0 else 0.0
    return WlrtResult(stat, variance, z)


def cov_matrix(table: EventTable, specs) -> CovResult:
    """Joint statistics, covariance and correlation for several weights."""
    specs = list(specs)
    score, var = increments(table)
    W = weight_matrix(table, specs)
    c = _norm_const(table)
    w_vec = c * (W @ score)
    sigma = c * c * ((W * var) @ W.T)
    sigma = 0.5 * (sigma + sigma.T)
    diag = np.diag(sigma).copy()
    floor = 1e-14 * max(float(diag.max()), 0.0)
    for k, v in enumerate(diag):
        if v <= floor or v <= 0.0:
            raise DegenerateWeightError(specs[k])
    sd = np.sqrt(diag)
    corr = sigma / np.outer(sd, sd)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return CovResult(sigma, corr, w_vec / sd, w_vec)
