"""Numerical kernel: normal/chi-square distribution functions, multivariate
normal rectangle probabilities, the supremum of |Brownian motion|, an
eigen-based pseudo-inverse, quadrature and bracketed root finding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special

from .exceptions import BracketError, DomainError, MatrixError, NumericError

__all__ = [
    "RngStream",
    "normal_cdf",
    "normal_quantile",
    "chisq_sf",
    "mvn_rect_prob",
    "MvnEstimate",
    "brownian_sup_sf",
    "pseudo_inverse",
    "integrate",
    "find_root",
    "check_correlation",
]

MVN_MAX_POINTS = 2**17
MVN_DEFAULT_TOL = 5e-5
_MVN_SHIFTS = 8
_MVN_FIRST_N = 256
_PSD_TOL = 1e-8


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Generators are rebuilt from the identifiers on every call, so a stream
    handed to a pure function always yields the same draws.
    """

    seed: int
    stream_id: int = 0

    def generator(self, *subkey: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *subkey))
        return np.random.Generator(np.random.PCG64(ss))

    def derive(self, tag: int) -> "RngStream":
        """Independent stream keyed by ``tag`` under this one."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, 0x5EED, tag))
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))


def normal_cdf(x):
    """Standard normal CDF (elementwise)."""
    return special.ndtr(x)


def normal_quantile(p):
    """Standard normal quantile; ``p`` must lie strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError(f"normal quantile needs p in (0, 1), got {p!r}")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def chisq_sf(x: float, k: int) -> float:
    """Upper tail probability of a chi-square variable with ``k`` df."""
    if int(k) != k or k < 1:
        raise DomainError(f"chi-square df must be a positive integer, got {k!r}")
    if x < 0:
        raise DomainError(f"chi-square argument must be >= 0, got {x!r}")
    return float(special.chdtrc(int(k), x))


def check_correlation(corr, tol: float = _PSD_TOL) -> np.ndarray:
    """Validate and return ``corr`` as a float array."""
    c = np.atleast_2d(np.asarray(corr, dtype=float))
    m = c.shape[0]
    if c.shape != (m, m):
        raise MatrixError(f"correlation matrix must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise MatrixError("correlation matrix has non-finite entries")
    if not np.allclose(c, c.T, atol=1e-10):
        raise MatrixError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(c), 1.0, atol=1e-8):
        raise MatrixError("correlation matrix must have unit diagonal")
    if m > 1 and np.linalg.eigvalsh(c)[0] < -tol:
        raise MatrixError("correlation matrix is not positive semidefinite")
    return c


@dataclass(frozen=True)
class MvnEstimate:
    prob: float
    std_error: float
    n_points: int


def _sov_factor(c, a, b):
    """Cholesky factor with Genz-Bretz variable prioritisation.

    Returns the (permuted) lower factor and bounds. Pivots whose conditional
    variance vanishes get a zero column, turning their constraint into an
    indicator on the earlier variables.
    """
    m = len(a)
    c = c.copy()
    a = a.copy()
    b = b.copy()
    L = np.zeros((m, m))
    y = np.zeros(m)
    for i in range(m):
        best, best_p = i, np.inf
        for j in range(i, m):
            var = c[j, j] - L[j, :i] @ L[j, :i]
            if var <= 1e-10:
                continue
            sd = math.sqrt(var)
            shift = L[j, :i] @ y[:i]
            p = special.ndtr((b[j] - shift) / sd) - special.ndtr((a[j] - shift) / sd)
            if p < best_p:
                best, best_p = j, p
        if best != i:
            idx = np.arange(m)
            idx[[i, best]] = idx[[best, i]]
            c = c[np.ix_(idx, idx)]
            a, b, L = a[idx], b[idx], L[idx]
        var = c[i, i] - L[i, :i] @ L[i, :i]
        if var <= 1e-10:
            # Remaining variables are all deterministic given the earlier ones.
            L[i:, i:] = 0.0
            break
        L[i, i] = math.sqrt(var)
        for j in range(i + 1, m):
            L[j, i] = (c[j, i] - L[j, :i] @ L[i, :i]) / L[i, i]
        shift = L[i, :i] @ y[:i]
        lo = (a[i] - shift) / L[i, i]
        hi = (b[i] - shift) / L[i, i]
        mass = special.ndtr(hi) - special.ndtr(lo)
        if mass > 1e-300:
            y[i] = (math.exp(-0.5 * lo * lo) - math.exp(-0.5 * hi * hi)) / (
                math.sqrt(2 * math.pi) * mass
            )
        else:
            y[i] = 0.5 * (max(lo, -9.0) + min(hi, 9.0))
    return L, a, b


def _richtmyer(dim: int) -> np.ndarray:
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    return np.sqrt(np.array(primes[:dim], dtype=float)) % 1.0


def _sov_integrand(L, a, b, x):
    """Evaluate the separation-of-variables integrand at points ``x`` (n, m-1)."""
    n = x.shape[0]
    m = len(a)
    f = np.ones(n)
    y = np.zeros((n, m))
    for i in range(m):
        shift = y[:, :i] @ L[i, :i] if i else np.zeros(n)
        if L[i, i] == 0.0:
            f *= (shift >= a[i]) & (shift <= b[i])
            continue
        d = special.ndtr((a[i] - shift) / L[i, i])
        e = special.ndtr((b[i] - shift) / L[i, i])
        width = e - d
        f *= width
        if i < m - 1:
            w = x[:, i] if i < x.shape[1] else 0.5
            q = np.clip(d + w * width, 1e-17, 1 - 1e-16)
            y[:, i] = np.clip(special.ndtri(q), -9.0, 9.0)
    return f


def mvn_rect_prob(
    corr,
    lower,
    upper,
    tol: float = MVN_DEFAULT_TOL,
    rng: RngStream | None = None,
    max_points: int = MVN_MAX_POINTS,
    return_error: bool = False,
):
    """P(lower <= Z <= upper) for Z ~ N(0, corr).

    Genz's separation-of-variables transform integrated with a randomly
    shifted Richtmyer lattice (baker's periodisation). Point counts double
    until the estimated standard error drops below ``tol`` or the budget
    ``max_points`` is spent. The shifts come from ``rng`` so repeated calls
    with the same stream give the same answer.

    Infinite bounds are allowed.
    """
    c = check_correlation(corr)
    a = np.atleast_1d(np.asarray(lower, dtype=float))
    b = np.atleast_1d(np.asarray(upper, dtype=float))
    m = c.shape[0]
    if a.shape != (m,) or b.shape != (m,):
        raise DomainError("bounds must match the correlation dimension")
    if np.any(np.isnan(a)) or np.any(np.isnan(b)) or np.any(a >= b):
        raise DomainError("need lower < upper componentwise")

    if m == 1:
        p = float(special.ndtr(b[0]) - special.ndtr(a[0]))
        return MvnEstimate(p, 0.0, 0) if return_error else p

    L, a_, b_ = _sov_factor(c, a, b)
    dim = m - 1
    q = _richtmyer(dim)
    gen = (rng or RngStream(0)).generator()

    total_w = 0.0
    est = 0.0
    se = math.inf
    used = 0
    n = _MVN_FIRST_N
    while True:
        shifts = gen.random((_MVN_SHIFTS, dim))
        k = np.arange(1, n + 1)[:, None] * q[None, :]
        means = np.empty(_MVN_SHIFTS)
        for s in range(_MVN_SHIFTS):
            x = np.abs(2.0 * ((k + shifts[s]) % 1.0) - 1.0)
            means[s] = _sov_integrand(L, a_, b_, x).mean()
        used += n * _MVN_SHIFTS
        var = means.var(ddof=1) / _MVN_SHIFTS
        p_round = means.mean()
        # Inverse-variance pooling across rounds; a zero-variance round wins.
        w = 1.0 / max(var, 1e-300)
        est = (total_w * est + w * p_round) / (total_w + w)
        total_w += w
        se = math.sqrt(1.0 / total_w)
        if se <= tol or used + 2 * n * _MVN_SHIFTS > max_points:
            break
        n *= 2
    est = min(max(est, 0.0), 1.0)
    return MvnEstimate(est, se, used) if return_error else est


def _sup_bm_theta(q: float) -> float:
    # 1 - (4/pi) sum (-1)^k/(2k+1) exp(-pi^2 (2k+1)^2 / (8 q^2))
    total = 0.0
    k = 0
    c = math.pi**2 / (8.0 * q * q)
    while True:
        j = 2 * k + 1
        term = (4.0 / math.pi) * math.exp(-c * j * j) / j
        total += term if k % 2 == 0 else -term
        if term < 1e-12:
            break
        k += 1
    return 1.0 - total


def _sup_bm_reflection(q: float) -> float:
    # 4 sum_{k>=1} (-1)^(k+1) (1 - Phi((2k-1) q))
    total = 0.0
    k = 1
    while True:
        term = 4.0 * float(special.ndtr(-(2 * k - 1) * q))
        total += term if k % 2 == 1 else -term
        if term < 1e-12:
            break
        k += 1
    return total


def brownian_sup_sf(q: float) -> float:
    """P(sup_{0<=x<=1} |B(x)| > q) for standard Brownian motion B."""
    if not q > 0:
        raise DomainError(f"supremum level must be > 0, got {q!r}")
    if q < 1.2:
        p = _sup_bm_theta(q)
    else:
        p = _sup_bm_reflection(q)
    return min(max(p, 0.0), 1.0)


def pseudo_inverse(M, rank_tol: float = 1e-10):
    """Moore-Penrose inverse of a symmetric PSD matrix.

    Eigenvalues below ``rank_tol`` times the largest are dropped.

    Returns
    -------
    (ndarray, int)
        The pseudo-inverse and the number of retained eigenvalues.
    """
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise MatrixError(f"matrix must be square, got shape {A.shape}")
    scale = max(np.abs(A).max(), 1e-300)
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-10 * scale):
        raise MatrixError("pseudo_inverse needs a symmetric matrix")
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    top = vals.max(initial=0.0)
    if top <= 0.0:
        return np.zeros_like(A), 0
    if vals[0] < -_PSD_TOL * top:
        raise MatrixError("pseudo_inverse needs a positive semidefinite matrix")
    keep = vals > rank_tol * top
    inv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    return inv, int(keep.sum())


def integrate(f: Callable[[float], float], a: float, b: float, tol: float = 1e-8,
              points=None) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    ``points`` lists interior break points (kinks) to split on.
    """
    if b < a:
        raise DomainError("integrate needs a <= b")
    if a == b:
        return 0.0

    def guarded(x):
        v = f(x)
        if not math.isfinite(v):
            raise NumericError(f"integrand is not finite at {x!r}")
        return v

    edges = [a] + sorted(p for p in (points or ()) if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _integrate.quad(guarded, lo, hi, epsabs=tol / len(edges), epsrel=0.0,
                                   limit=200)
        total += val
    return total


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8) -> float:
    """Root of ``f`` on a sign-changing bracket (Brent's method)."""
    flo, fhi = f(lo), f(hi)
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        raise NumericError("function is not finite at the bracket ends")
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    return float(_optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))
