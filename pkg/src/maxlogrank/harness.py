"""Monte Carlo replication engine: rejection rates, ranking scores,
crossing-point sensitivity and the crossing-only extension.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .exceptions import DegenerateDataError, DomainError, UnknownNameError
from .numerics import RngStream, normal_cdf
from .omnibus import max_combo_rejects, projection_from_z, renyi_test
from .simgen import Scenario, generate_trial, type1_scenario
from .survival import event_table_from_arrays
from .weights import Constant, WeightSet, builtin_set
from .wlrt import cov_matrix

__all__ = [
    "TestDef",
    "make_test",
    "STANDARD_TESTS",
    "SimReport",
    "RankTable",
    "run_scenario",
    "evaluate_table",
    "ranking_scores",
    "sensitivity_sweep",
    "crossing_only_extension",
    "write_reports_csv",
    "read_power_csv",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

SIDEDNESS = ("two-sided", "upper", "lower")
STANDARD_TESTS = ("logrank", "fh11", "maxcombo", "phi-star(0.5)", "projection", "renyi")
CSV_COLUMNS = ("scenario", "mechanism", "N", "case", "phi0", "phi1", "test",
               "rejection_rate", "reps", "seed")
_MAX_ATTEMPTS = 50
_MVN_TAG = 1


@dataclass(frozen=True)
class TestDef:
    """A named test: ``kind`` is wlrt, combo, projection or renyi."""

    __test__ = False  # not a pytest class

    name: str
    kind: str
    weights: WeightSet


def make_test(name: str) -> TestDef:
    """Resolve a test name.

    Single-weight sets (``logrank``, ``fh11``) give a weighted logrank test,
    multi-weight sets a maximum test, ``projection`` / ``projection-crossing``
    the projection test on ``{1, u, 2u-1}`` and ``renyi`` the Renyi test with
    the logrank weight.
    """
    key = name.strip().lower().replace(" ", "")
    if key == "renyi":
        return TestDef("renyi", "renyi", WeightSet("renyi", (Constant(),)))
    if key in ("projection", "projection-crossing"):
        return TestDef("projection", "projection", builtin_set("projection-crossing"))
    try:
        ws = builtin_set(key)
    except UnknownNameError:
        raise UnknownNameError(f"unknown test {name!r}") from None
    return TestDef(ws.name, "wlrt" if len(ws) == 1 else "combo", ws)


def _rejects_one(test: TestDef, idx, z, corr, table, alpha, sidedness, rng) -> bool:
    if test.kind in ("wlrt", "combo"):
        zz = z[idx]
        level = alpha if sidedness == "two-sided" else 2.0 * alpha
        if sidedness == "upper" and not zz[0] > 0:
            return False
        if sidedness == "lower" and not zz[0] < 0:
            return False
        if test.kind == "wlrt":
            return bool(2.0 * normal_cdf(-abs(zz[0])) < level)
        return max_combo_rejects(zz, corr[np.ix_(idx, idx)], level, rng=rng)
    if sidedness != "two-sided":
        raise DomainError(f"{test.name} is two-sided only")
    if test.kind == "projection":
        return projection_from_z(z[idx], corr[np.ix_(idx, idx)]).p_value < alpha
    return renyi_test(table, test.weights.specs[0]).p_value < alpha


def evaluate_table(table, tests: Sequence[TestDef], alpha: float, sidedness: str,
                   rng: RngStream) -> np.ndarray:
    """Reject/accept decisions for each test on one event table.

    All weights are evaluated jointly so each replication builds a single
    covariance matrix.
    """
    specs = []
    index = []
    for t in tests:
        ids = []
        for s in t.weights.specs:
            if s not in specs:
                specs.append(s)
            ids.append(specs.index(s))
        index.append(np.array(ids))
    cov = cov_matrix(table, specs)
    return np.array([_rejects_one(t, idx, cov.z_vec, cov.corr, table, alpha, sidedness, rng)
                     for t, idx in zip(tests, index)])


@dataclass
class SimReport:
    scenario: Scenario
    tests: tuple
    rejections: np.ndarray
    n_reps: int
    seed: int
    alpha: float
    sidedness: str
    censor_rate0: float
    censor_rate1: float
    regenerated: int = 0

    @property
    def rejection_rate(self) -> dict:
        return {name: float(r) / self.n_reps for name, r in zip(self.tests, self.rejections)}

    def rows(self):
        for name, rate in self.rejection_rate.items():
            yield {
                "scenario": self.scenario.label,
                "mechanism": self.scenario.mechanism,
                "N": self.scenario.n_total,
                "case": self.scenario.case,
                "phi0": round(self.censor_rate0, 4),
                "phi1": round(self.censor_rate1, 4),
                "test": name,
                "rejection_rate": rate,
                "reps": self.n_reps,
                "seed": self.seed,
            }


def _replicate(args):
    scn, tests, alpha, sidedness, seed, indices = args
    out = np.zeros((len(indices), len(tests)), dtype=bool)
    rates = np.zeros((len(indices), 2))
    regenerated = 0
    for row, i in enumerate(indices):
        stream = RngStream(seed, int(i))
        mvn_rng = stream.derive(_MVN_TAG)
        for attempt in range(_MAX_ATTEMPTS):
            trial = generate_trial(scn, stream.generator(attempt))
            # Type II drops can in principle empty an arm.
            if trial.group.size == 0 or trial.group.min() == trial.group.max():
                regenerated += 1
                continue
            try:
                table = event_table_from_arrays(trial.time, trial.event, trial.group)
                out[row] = evaluate_table(table, tests, alpha, sidedness, mvn_rng)
            except DegenerateDataError:
                regenerated += 1
                continue
            rates[row] = trial.censor_rate0, trial.censor_rate1
            break
        else:
            raise DegenerateDataError(f"replication {i} stayed degenerate after "
                                      f"{_MAX_ATTEMPTS} attempts")
    return out, rates, regenerated


def run_scenario(scn: Scenario, tests, n_reps: int = 2000, alpha: float = 0.05,
                 sidedness: str = "two-sided", seed: int = 1, workers: int = 1,
                 chunk: int = 250) -> SimReport:
    """Rejection rates of ``tests`` over ``n_reps`` simulated trials.

    Replication ``i`` draws from stream ``(seed, i)``; a degenerate trial is
    redrawn from the next sub-stream. Results do not depend on ``workers``.
    """
    if n_reps < 1:
        raise DomainError("n_reps must be >= 1")
    if sidedness not in SIDEDNESS:
        raise DomainError(f"sidedness must be one of {SIDEDNESS}")
    tests = tuple(t if isinstance(t, TestDef) else make_test(t) for t in tests)
    if sidedness != "two-sided":
        two_only = [t.name for t in tests if t.kind not in ("wlrt", "combo")]
        if two_only:
            raise DomainError(f"two-sided only: {', '.join(two_only)}")
    idx = np.arange(n_reps)
    jobs = [(scn, tests, alpha, sidedness, seed, idx[k:k + chunk])
            for k in range(0, n_reps, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replicate, jobs))
    else:
        parts = [_replicate(j) for j in jobs]
    decisions = np.concatenate([p[0] for p in parts])
    rates = np.concatenate([p[1] for p in parts])
    regenerated = sum(p[2] for p in parts)
    if regenerated:
        log.info("%s: %d degenerate trials redrawn", scn.label, regenerated)
    return SimReport(scn, tuple(t.name for t in tests), decisions.sum(axis=0), n_reps, seed,
                     alpha, sidedness, float(rates[:, 0].mean()), float(rates[:, 1].mean()),
                     regenerated)


@dataclass
class RankTable:
    tests: tuple
    crossing: np.ndarray
    total: np.ndarray
    n_crossing: int = 0
    n_total: int = 0
    per_scenario: np.ndarray = field(default=None, repr=False)

    def as_rows(self):
        return [dict(row="Crossing", **dict(zip(self.tests, self.crossing.tolist()))),
                dict(row="Total", **dict(zip(self.tests, self.total.tolist())))]


def ranking_scores(power, crossing, tests=None) -> RankTable:
    """Sum of within-scenario ranks (best test gets the highest rank).

    Parameters
    ----------
    power : array_like, shape (scenarios, tests)
    crossing : array_like of bool
        Marks crossing-hazard scenarios for the first row of the table.
    tests : sequence of str, optional
        Column labels.
    """
    power = np.asarray(power, dtype=float)
    if power.ndim != 2 or power.size == 0:
        raise DomainError("power must be a non-empty scenarios x tests matrix")
    if not np.all(np.isfinite(power)):
        raise DomainError("power matrix has missing cells")
    crossing = np.asarray(crossing, dtype=bool)
    if crossing.shape != (power.shape[0],):
        raise DomainError("crossing mask must have one entry per scenario")
    ranks = np.vstack([rankdata(row, method="average") for row in power])
    tests = tuple(tests) if tests is not None else tuple(f"test{k}" for k in range(power.shape[1]))
    return RankTable(tests, ranks[crossing].sum(axis=0), ranks.sum(axis=0),
                     int(crossing.sum()), power.shape[0], ranks)


def sensitivity_sweep(scenarios: Sequence[Scenario], theta_grid, n_reps: int = 2000,
                      seed: int = 1, alpha: float = 0.05, workers: int = 1):
    """Power of the four-weight crossing test for each theta and scenario.

    Returns a list of ``(report, {theta: power})`` pairs. All thetas share the
    same simulated trials.
    """
    theta_grid = [float(t) for t in theta_grid]
    if not theta_grid or any(not 0.0 < t < 1.0 for t in theta_grid):
        raise DomainError("theta grid must be non-empty and inside (0, 1)")
    names = [f"phi-star({t:g})" for t in theta_grid]
    out = []
    for scn in scenarios:
        rep = run_scenario(scn, names, n_reps, alpha, "two-sided", seed, workers)
        rates = rep.rejection_rate
        out.append((rep, {t: rates[n] for t, n in zip(theta_grid, names)}))
    return out


def crossing_only_extension(n_reps: int = 2000, seed: int = 1, ns=(60, 120, 240),
                            betas=(15, 25, 40), cases=("A", "G", "H"), workers: int = 1):
    """Rejection rates of ``phi-star(0.2,0.5,0.8)`` under Type I censoring.

    Returns ``{(case, beta, N): rate}``.
    """
    test = make_test("phi-star(0.2,0.5,0.8)")
    out = {}
    for case in cases:
        for beta in betas:
            for n in ns:
                rep = run_scenario(type1_scenario(n, beta, case), [test], n_reps, 0.05,
                                   "two-sided", seed, workers)
                out[(case, beta, n)] = rep.rejection_rate[test.name]
    return out


def write_reports_csv(reports: Sequence[SimReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for rep in reports:
            for row in rep.rows():
                row = dict(row, rejection_rate=repr(row["rejection_rate"]))
                writer.writerow(row)


def read_power_csv(path):
    """Read a report CSV into ``(scenarios, tests, power, cases)``.

    Scenarios and tests keep their order of first appearance.
    """
    scenarios, tests, cases, cells = [], [], {}, {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"scenario", "case", "test", "rejection_rate"} - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"power CSV lacks columns: {', '.join(sorted(missing))}")
        for line, row in enumerate(reader, start=2):
            scn, test = row["scenario"], row["test"]
            if scn not in cases:
                scenarios.append(scn)
                cases[scn] = row["case"]
            if test not in tests:
                tests.append(test)
            try:
                cells[(scn, test)] = float(row["rejection_rate"])
            except ValueError:
                raise DomainError(f"line {line}: bad rejection_rate {row['rejection_rate']!r}")
    power = np.full((len(scenarios), len(tests)), math.nan)
    for (scn, test), v in cells.items():
        power[scenarios.index(scn), tests.index(test)] = v
    return scenarios, tests, power, [cases[s] for s in scenarios]
