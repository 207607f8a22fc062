"""Built-in scenario grids for the published simulation tables.

Tables 1-4 are rejection-rate grids, 5 and 6 rank the tests over the
alternatives of 3 and 4, 7 is the crossing-point sweep and 9 the
crossing-only extension.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .exceptions import DomainError
from .harness import (
    STANDARD_TESTS,
    RankTable,
    SimReport,
    ranking_scores,
    run_scenario,
)
from .simgen import type1_scenario, type2_scenario

__all__ = ["TABLE_IDS", "TableSpec", "table_spec", "reproduce", "rank_reports",
           "write_rank_csv", "CROSSING_CASES", "SAMPLE_SIZES", "TYPE1_BETAS",
           "TYPE2_CENSOR_RATES", "THETA_GRID"]

TABLE_IDS = (1, 2, 3, 4, 5, 6, 7, 9)
SAMPLE_SIZES = (60, 120, 240)
TYPE1_BETAS = (15, 25, 40)
TYPE2_CENSOR_RATES = (1 / 6, 1 / 3, 1 / 2)
ALTERNATIVES = "ABCDEFG"
CROSSING_CASES = ("A", "B")
THETA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class TableSpec:
    table_id: int
    scenarios: tuple
    tests: tuple
    ranked: bool = False


def _type1(cases):
    return tuple(type1_scenario(n, beta, c) for beta in TYPE1_BETAS for n in SAMPLE_SIZES
                 for c in cases)


def _type2(cases):
    return tuple(type2_scenario(n, phi, c) for phi in TYPE2_CENSOR_RATES for n in SAMPLE_SIZES
                 for c in cases)


def table_spec(table_id: int) -> TableSpec:
    """Scenarios and tests behind a published table."""
    if table_id == 1:
        return TableSpec(1, _type1("H"), STANDARD_TESTS)
    if table_id == 2:
        return TableSpec(2, _type2("H"), STANDARD_TESTS)
    if table_id in (3, 5):
        return TableSpec(table_id, _type1(ALTERNATIVES), STANDARD_TESTS, ranked=table_id == 5)
    if table_id in (4, 6):
        return TableSpec(table_id, _type2(ALTERNATIVES), STANDARD_TESTS, ranked=table_id == 6)
    if table_id == 7:
        scns = tuple(type1_scenario(240, beta, c) for beta in TYPE1_BETAS for c in CROSSING_CASES)
        return TableSpec(7, scns, tuple(f"phi-star({t:g})" for t in THETA_GRID))
    if table_id == 9:
        scns = tuple(type1_scenario(n, beta, c) for c in ("A", "G", "H") for beta in TYPE1_BETAS
                     for n in SAMPLE_SIZES)
        return TableSpec(9, scns, ("phi-star(0.2,0.5,0.8)",))
    raise DomainError(f"unknown table {table_id}; available: {', '.join(map(str, TABLE_IDS))}")


def rank_reports(reports) -> RankTable:
    """Rank tests within each report; cases A and B form the crossing row."""
    tests = reports[0].tests
    power = [[rep.rejection_rate[t] for t in tests] for rep in reports]
    crossing = [rep.scenario.case in CROSSING_CASES for rep in reports]
    return ranking_scores(power, crossing, tests)


def reproduce(table_id: int, n_reps: int = 2000, seed: int = 1, workers: int = 1):
    """Simulate a table. Returns ``(reports, rank_table or None)``."""
    spec = table_spec(table_id)
    reports: list[SimReport] = [
        run_scenario(scn, spec.tests, n_reps, 0.05, "two-sided", seed, workers)
        for scn in spec.scenarios
    ]
    return reports, (rank_reports(reports) if spec.ranked else None)


def write_rank_csv(table: RankTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", *table.tests])
        writer.writerow(["Crossing", *(f"{v:g}" for v in table.crossing)])
        writer.writerow(["Total", *(f"{v:g}" for v in table.total)])
