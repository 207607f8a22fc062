"""Trial simulation: log-logistic control arm, hazard-ratio shapes (A)-(H),
inverse-method sampling of the treatment arm, Type I / Type II censoring.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from .exceptions import DomainError, NumericError
from .numerics import RngStream, find_root, integrate
from .survival import Subject, censoring_rates_from_arrays

__all__ = [
    "CASES",
    "CASE_LABELS",
    "Scenario",
    "TrialData",
    "baseline_time",
    "baseline_hazard",
    "baseline_cum_hazard",
    "hazard_ratio",
    "group1_cum_hazard",
    "group1_time",
    "group1_times",
    "generate_trial",
    "type1_scenario",
    "type2_scenario",
    "load_scenario",
]

CASES = tuple("ABCDEFGH")
CASE_LABELS = {
    "A": "Crossing 1",
    "B": "Crossing 2",
    "C": "Delayed Diverging",
    "D": "Diverging",
    "E": "Converging 1",
    "F": "Converging 2",
    "G": "Constant",
    "H": "Equal",
}
_KINKS = {"A": (10.0, 25.0), "F": (40.0,)}
_CONSTANT_RATIO = {"G": 1.5, "H": 1.0}


def _check_case(case: str) -> str:
    case = str(case).upper()
    if case not in CASES:
        raise DomainError(f"unknown hazard case {case!r}; expected one of A-H")
    return case


def baseline_hazard(t, alpha: float, beta: float):
    t = np.asarray(t, dtype=float)
    r = t / beta
    with np.errstate(divide="ignore", invalid="ignore"):
        # (alpha/t) * x / (1 + x) with x = r^alpha, written to stay finite for large t.
        out = (alpha / t) * special.expit(alpha * np.log(r))
    at_zero = (alpha / beta) * 0.0 ** (alpha - 1.0) if alpha != 1.0 else 1.0 / beta
    return np.where(t > 0, out, at_zero)


def baseline_cum_hazard(t, alpha: float, beta: float):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.logaddexp(0.0, alpha * np.log(t / beta))


def baseline_time(alpha: float, beta: float, u):
    """Log-logistic time with survival probability ``u``: ``beta((1-u)/u)^(1/alpha)``."""
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError("uniform draw must lie in (0, 1)")
    out = beta * ((1.0 - arr) / arr) ** (1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def hazard_ratio(case: str, t):
    """Hazard ratio ``g(t)`` of group 1 to group 0 for cases A-H."""
    case = _check_case(case)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("hazard ratio needs t >= 0")
    if case == "A":
        g = np.where(t < 10, 0.5, np.where(t <= 25, (t - 10) / 15 + 0.5, 1.5))
    elif case == "B":
        g = 3.0 * np.exp(-0.3 * t) + 0.8
    elif case == "C":
        g = 1.5 / (1.0 + np.exp(-0.5 * (t - 20.0))) + 1.0
    elif case == "D":
        # Overflows to inf only far beyond any simulated horizon.
        with np.errstate(over="ignore"):
            g = np.exp(0.03 * t)
    elif case == "E":
        g = np.exp(1.0 / (0.2 * t + 1.0))
    elif case == "F":
        g = np.where(t <= 40, 1.0 - (np.minimum(t, 40.0) - 50.0) ** 2 / 5000.0, 0.98)
    else:
        g = np.full_like(t, _CONSTANT_RATIO[case])
    return float(g) if g.ndim == 0 else g


def group1_cum_hazard(case: str, t: float, alpha: float, beta: float,
                      tol: float = 1e-10) -> float:
    """``Lambda_1(t)`` by adaptive quadrature of ``g * lambda_0``."""
    case = _check_case(case)
    if case in _CONSTANT_RATIO:
        return _CONSTANT_RATIO[case] * float(baseline_cum_hazard(t, alpha, beta))
    return integrate(lambda s: hazard_ratio(case, s) * float(baseline_hazard(s, alpha, beta)),
                     0.0, t, tol=tol, points=_KINKS.get(case))


def group1_time(case: str, alpha: float, beta: float, u: float, tol: float = 1e-10) -> float:
    """Group-1 time with survival probability ``u`` (solves ``Lambda_1(t) = -ln u``).

    Uses quadrature for ``Lambda_1`` and a bracketed root search; the upper
    bracket starts at ``beta`` and doubles until it overshoots. Returns
    ``inf`` when ``Lambda_1`` stays below the target over the float range,
    which only happens for draws within a few ulps of 0.
    """
    if not 0.0 < u < 1.0:
        raise DomainError("uniform draw must lie in (0, 1)")
    case = _check_case(case)
    target = -math.log(u)
    kinks = _KINKS.get(case)

    def rate(s):
        return hazard_ratio(case, s) * float(baseline_hazard(s, alpha, beta))

    lo, cum_lo = 0.0, 0.0
    hi = float(beta)
    cum_hi = group1_cum_hazard(case, hi, alpha, beta)
    while cum_hi < target:
        if hi > 1e300:
            return math.inf
        lo, cum_lo = hi, cum_hi
        hi *= 2.0
        # Accumulating over [lo, 2 lo] keeps each quadrature well scaled.
        cum_hi = cum_lo + integrate(rate, lo, hi, tol=tol, points=kinks)
    return find_root(lambda t: cum_lo + integrate(rate, lo, t, tol=tol, points=kinks) - target,
                     lo, hi, tol=tol * max(1.0, lo))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


class _CumHazardInverse:
    """Vectorised inverse of ``Lambda_1`` for one (case, alpha, beta).

    ``Lambda_1`` is tabulated on a grid containing the ratio's kinks with
    12-point Gauss-Legendre panels; inversion is a safeguarded Newton solve
    inside the bracketing panel. Targets past the grid go to the scalar path.
    """

    def __init__(self, case: str, alpha: float, beta: float, panels: int = 2000):
        self.case, self.alpha, self.beta = case, alpha, beta
        t_lin = max(20.0 * beta, 100.0)
        grid = np.concatenate([np.linspace(0.0, t_lin, panels + 1),
                               np.geomspace(t_lin, 1e4 * t_lin, 600)[1:],
                               _KINKS.get(case, ())])
        grid = np.unique(grid)
        self.grid = grid
        self.cum = np.concatenate([[0.0], np.cumsum(self._panel(grid[:-1], grid[1:]))])

    def rate(self, t):
        return hazard_ratio(self.case, t) * baseline_hazard(t, self.alpha, self.beta)

    def _panel(self, lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        return half * (self.rate(nodes) @ _GL_W)

    def __call__(self, target):
        target = np.asarray(target, dtype=float)
        out = np.empty_like(target)
        inside = target < self.cum[-1]
        tg = target[inside]
        k = np.clip(np.searchsorted(self.cum, tg, side="right") - 1, 0, len(self.grid) - 2)
        lo, hi = self.grid[k], self.grid[k + 1]
        c_lo, c_hi = self.cum[k], self.cum[k + 1]
        lo0 = lo
        t = lo + (hi - lo) * (tg - c_lo) / (c_hi - c_lo)
        for _ in range(60):
            resid = c_lo + self._panel(lo0, t) - tg
            if np.all(np.abs(resid) <= 4e-15 * np.maximum(1.0, tg)):
                break
            lo = np.where(resid < 0, t, lo)
            hi = np.where(resid > 0, t, hi)
            rate = self.rate(t)
            safe = np.where(rate > 0, rate, 1.0)
            t_new = np.where(rate > 0, t - resid / safe, 0.5 * (lo + hi))
            # Bisect whenever Newton leaves the shrinking bracket.
            t = np.where((t_new >= lo) & (t_new <= hi), t_new, 0.5 * (lo + hi))
        out[inside] = t
        for i in np.flatnonzero(~inside):
            out[i] = group1_time(self.case, self.alpha, self.beta, math.exp(-target[i]))
        return out


@lru_cache(maxsize=64)
def _inverse_for(case: str, alpha: float, beta: float) -> _CumHazardInverse:
    return _CumHazardInverse(case, alpha, beta)


def group1_times(case: str, alpha: float, beta: float, u) -> np.ndarray:
    """Vectorised :func:`group1_time` for simulation."""
    case = _check_case(case)
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)) or np.any(~(u < 1.0)):
        raise DomainError("uniform draws must lie in (0, 1)")
    if case in _CONSTANT_RATIO:
        c = _CONSTANT_RATIO[case]
        x = -np.log(u) / c
        # log(expm1(x)) without overflow for the far tail.
        log_em1 = np.where(x > 30.0, x + np.log1p(-np.exp(-x)), np.log(np.expm1(np.minimum(x, 30.0))))
        return beta * np.exp(log_em1 / alpha)
    return _inverse_for(case, float(alpha), float(beta))(-np.log(u))


@dataclass(frozen=True)
class Scenario:
    """A simulated two-arm trial design with 1:1 allocation."""

    mechanism: str
    n_total: int
    case: str
    alpha: float = 2.0
    beta: float = 15.0
    target_event_fraction: float = 1.0
    accrual_weeks: float = 18.0
    admin_end_weeks: float = 42.0

    def __post_init__(self):
        if self.mechanism not in ("TypeI", "TypeII"):
            raise DomainError(f"mechanism must be TypeI or TypeII, got {self.mechanism!r}")
        object.__setattr__(self, "case", _check_case(self.case))
        if self.n_total < 2 or self.n_total % 2:
            raise DomainError("n_total must be an even number >= 2")
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")
        if not 0.0 < self.target_event_fraction <= 1.0:
            raise DomainError("target_event_fraction must lie in (0, 1]")
        if self.accrual_weeks < 0:
            raise DomainError("accrual_weeks must be >= 0")
        if self.mechanism == "TypeI" and self.admin_end_weeks <= self.accrual_weeks:
            raise DomainError("administrative end must come after accrual")

    @property
    def target_events(self) -> int:
        return int(round(self.n_total * self.target_event_fraction))

    @property
    def label(self) -> str:
        if self.mechanism == "TypeI":
            return f"TypeI-N{self.n_total}-beta{self.beta:g}-{self.case}"
        return f"TypeII-{self.target_events}of{self.n_total}-{self.case}"

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))

    def with_case(self, case: str) -> "Scenario":
        return replace(self, case=case)


def type1_scenario(n_total: int, beta: float, case: str, alpha: float = 2.0) -> Scenario:
    """Fixed-length study: 18 weeks of accrual, analysis at week 42."""
    return Scenario("TypeI", n_total, case, alpha, beta, 1.0, 18.0, 42.0)


def type2_scenario(n_total: int, censor_rate: float, case: str, alpha: float = 2.0,
                   beta: float = 12.0) -> Scenario:
    """Event-driven study: 24 weeks of accrual, stop at ``round(N(1-phi))`` events."""
    return Scenario("TypeII", n_total, case, alpha, beta, 1.0 - censor_rate, 24.0, math.inf)


def load_scenario(path) -> Scenario:
    """Read a ``key = value`` scenario file (``#`` comments allowed)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    text = Path(path).read_text()
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise DomainError(f"{path}: malformed scenario file: {exc}") from None
    raw = dict(parser["scenario"])
    known = {f.name: f.type for f in fields(Scenario)}
    unknown = set(raw) - set(known)
    if unknown:
        raise DomainError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    if "mechanism" not in raw or "n_total" not in raw or "case" not in raw:
        raise DomainError("scenario needs mechanism, n_total and case")
    mech = raw["mechanism"]
    if mech == "TypeII":
        defaults = {"beta": 12.0, "accrual_weeks": 24.0, "admin_end_weeks": math.inf}
    else:
        defaults = {}
    kwargs = {}
    for key, value in raw.items():
        try:
            if key in ("mechanism", "case"):
                kwargs[key] = value
            elif key == "n_total":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        except ValueError:
            raise DomainError(f"{path}: bad value for {key}: {value!r}") from None
    for key, value in defaults.items():
        kwargs.setdefault(key, value)
    return Scenario(**kwargs)


@dataclass(frozen=True, eq=False)
class TrialData:
    """One simulated trial: per-subject arrays plus realised summaries."""

    time: np.ndarray
    event: np.ndarray
    group: np.ndarray
    censor_rate0: float
    censor_rate1: float
    duration: float
    dropped: int = 0

    def to_subjects(self) -> list[Subject]:
        return [Subject(float(t), bool(e), int(g))
                for t, e, g in zip(self.time, self.event, self.group)]


def generate_trial(scn: Scenario, rng: RngStream | np.random.Generator) -> TrialData:
    """Simulate one trial under ``scn``.

    Type I: entry ~ U(0, accrual); follow-up is cut at the administrative end.
    Type II: entry ~ U(0, accrual); the study stops at the calendar time of
    the D-th event. Subjects entering after the stop carry no follow-up and
    are dropped from the analysis set, but count as censored in the rates.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    half = scn.n_total // 2
    group = np.repeat([0, 1], half)
    u = gen.random(scn.n_total)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    entry = gen.uniform(0.0, scn.accrual_weeks, scn.n_total)
    t = np.empty(scn.n_total)
    t[:half] = baseline_time(scn.alpha, scn.beta, u[:half])
    t[half:] = group1_times(scn.case, scn.alpha, scn.beta, u[half:])

    if scn.mechanism == "TypeI":
        cap = scn.admin_end_weeks - entry
        event = t <= cap
        obs = np.where(event, t, cap)
        r0, r1 = censoring_rates_from_arrays(event, group)
        return TrialData(obs, event, group, r0, r1, scn.admin_end_weeks)

    d_target = scn.target_events
    if d_target < 1:
        raise DomainError("target event count must be at least 1")
    calendar = entry + t
    tau = float(np.partition(calendar, d_target - 1)[d_target - 1])
    event = calendar <= tau
    obs = np.where(event, t, tau - entry)
    r0, r1 = censoring_rates_from_arrays(event, group)
    keep = obs > 0
    return TrialData(obs[keep], event[keep], group[keep], r0, r1, tau,
                     dropped=int((~keep).sum()))
