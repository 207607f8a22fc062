"""Command-line front end.

Subcommands::

    maxlogrank test      --input data.csv [--weights ...] [--theta ...]
    maxlogrank simulate  --scenario scn.txt [--weights ...] --reps N --out rates.csv
    maxlogrank reproduce --table ID --reps N --out table.csv
    maxlogrank rank      --input rates.csv --out ranks.csv

Exit codes: 0 success, 2 bad input or usage, 3 degenerate data.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

import numpy as np

from .exceptions import (
    DegenerateDataError,
    DomainError,
    MaxLogrankError,
    UnknownNameError,
)
from .harness import (
    STANDARD_TESTS,
    make_test,
    read_power_csv,
    ranking_scores,
    run_scenario,
    write_reports_csv,
)
from .numerics import RngStream, normal_cdf
from .omnibus import max_combo_test, one_sided_pvalues, projection_test, renyi_test
from .simgen import load_scenario
from .survival import event_table_from_arrays
from .tables import CROSSING_CASES, TABLE_IDS, reproduce, write_rank_csv
from .wlrt import wlrt_statistic

__all__ = ["main", "build_parser", "split_names", "read_subjects_csv", "InputError"]

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3
DEFAULT_THETAS = "0.25,0.5,0.75"


class InputError(MaxLogrankError, ValueError):
    """Malformed user input (CSV content, flags)."""


def split_names(text: str) -> list[str]:
    """Split a comma-separated list of test names, keeping commas inside parentheses."""
    names, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            names.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    names.append("".join(cur).strip())
    return [n for n in names if n]


def _parse_thetas(text: str) -> list[float]:
    try:
        thetas = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--theta expects comma-separated numbers, got {text!r}") from None
    if not thetas or any(not 0.0 < t < 1.0 for t in thetas):
        raise InputError("--theta values must lie in (0, 1)")
    return thetas


def read_subjects_csv(path):
    """Read ``time,event,group`` rows; raises :class:`InputError` with the line number."""
    times, events, groups = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: line 1: empty file")
        header = [h.strip().lower() for h in header]
        try:
            cols = [header.index(k) for k in ("time", "event", "group")]
        except ValueError:
            raise InputError(f"{path}: line 1: header must contain time,event,group") from None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {line}: expected {len(header)} fields, "
                                 f"got {len(row)}")
            try:
                t = float(row[cols[0]])
                e = int(row[cols[1]])
                g = int(row[cols[2]])
            except ValueError:
                raise InputError(f"{path}: line {line}: non-numeric value") from None
            if not math.isfinite(t) or t < 0:
                raise InputError(f"{path}: line {line}: time must be finite and >= 0")
            if e not in (0, 1) or g not in (0, 1):
                raise InputError(f"{path}: line {line}: event and group must be 0 or 1")
            times.append(t)
            events.append(e)
            groups.append(g)
    if not times:
        raise InputError(f"{path}: no data rows")
    return np.array(times), np.array(events, dtype=bool), np.array(groups)


def _test_names(args) -> list[str]:
    if args.weights:
        return split_names(args.weights)
    thetas = _parse_thetas(args.theta)
    names = ["logrank", "renyi", "maxcombo", "projection"]
    names += [f"phi-star({t:g})" for t in thetas]
    if args.one_sided:
        names = [n for n in names if n not in ("renyi", "projection")]
    return names


def _run_one(test, table, alpha, one_sided, rng):
    """Record for one test: statistic, p-value and decision."""
    if test.kind == "wlrt":
        res = wlrt_statistic(table, test.weights.specs[0])
        p_two = float(2.0 * normal_cdf(-abs(res.z)))
        rec = {"statistic": res.z, "p_two_sided": p_two}
        signed = res.z
    elif test.kind == "combo":
        res = max_combo_test(table, test.weights.specs, alpha=alpha if not one_sided else 2 * alpha,
                             rng=rng)
        p_two = res.p_two_sided
        rec = {"statistic": res.signed_t, "p_two_sided": p_two, "c_alpha": res.c_alpha}
        signed = res.signed_t
    else:
        if one_sided:
            raise InputError(f"{test.name} is a two-sided test only")
        res = projection_test(table, test.weights.specs) if test.kind == "projection" \
            else renyi_test(table, test.weights.specs[0])
        rec = res.as_record()
        stat = rec.pop("s_n", None)
        stat = rec.pop("q", stat)
        rec = {"statistic": stat, "p_two_sided": rec.pop("p_value"), **rec}
        signed = None
    if one_sided:
        lower, upper = one_sided_pvalues(rec["p_two_sided"], signed)
        p = upper if one_sided == "upper" else lower
    else:
        p = rec["p_two_sided"]
    rec["p_value"] = p
    rec["reject"] = bool(p < alpha)
    return rec


def cmd_test(args) -> int:
    time, event, group = read_subjects_csv(args.input)
    if np.unique(group).size < 2:
        raise DegenerateDataError("both groups must be present")
    table = event_table_from_arrays(time, event, group)
    alpha = args.alpha if args.alpha is not None else (0.025 if args.one_sided else 0.05)
    if not 0.0 < alpha < 0.5:
        raise InputError("--alpha must lie in (0, 0.5)")
    tests = [make_test(n) for n in _test_names(args)]
    rng = RngStream(args.seed)
    rows = []
    for test in tests:
        rec = _run_one(test, table, alpha, args.one_sided, rng)
        rows.append({"test": test.name, **rec})
    side = f"one-sided ({args.one_sided})" if args.one_sided else "two-sided"
    print(f"n0={table.n0} n1={table.n1} events={int(table.d.sum())} alpha={alpha:g} {side}")
    print(f"{'test':<24}{'statistic':>12}{'p-value':>12}  reject")
    for r in rows:
        print(f"{r['test']:<24}{r['statistic']:>12.4f}{r['p_value']:>12.4g}  "
              f"{'yes' if r['reject'] else 'no'}")
    if args.out:
        keys = ["test", "statistic", "p_two_sided", "p_value", "reject"]
        extra = sorted({k for r in rows for k in r} - set(keys))
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys + extra)
            writer.writeheader()
            writer.writerows(rows)
    return EXIT_OK


def _sidedness(args) -> str:
    return args.one_sided if args.one_sided else "two-sided"


def cmd_simulate(args) -> int:
    scn = load_scenario(args.scenario)
    names = split_names(args.weights) if args.weights else list(STANDARD_TESTS)
    alpha = args.alpha if args.alpha is not None else (0.025 if args.one_sided else 0.05)
    report = run_scenario(scn, names, args.reps, alpha, _sidedness(args), args.seed, args.jobs)
    write_reports_csv([report], args.out)
    for name, rate in report.rejection_rate.items():
        print(f"{scn.label} {name:<24} {100 * rate:5.1f}%")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.table not in TABLE_IDS:
        raise InputError(f"unknown table {args.table}; available: "
                         f"{', '.join(map(str, TABLE_IDS))}")
    reports, ranks = reproduce(args.table, args.reps, args.seed, args.jobs)
    if ranks is not None:
        write_rank_csv(ranks, args.out)
        for row in ranks.as_rows():
            print(row)
    else:
        write_reports_csv(reports, args.out)
        print(f"wrote {sum(len(r.tests) for r in reports)} rows to {args.out}")
    return EXIT_OK


def cmd_rank(args) -> int:
    try:
        _, tests, power, cases = read_power_csv(args.input)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.input}: {exc}") from None
    ranks = ranking_scores(power, [c in CROSSING_CASES for c in cases], tests)
    write_rank_csv(ranks, args.out)
    for row in ranks.as_rows():
        print(row)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxlogrank",
                                     description="Maximum weighted logrank tests.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, reps=True):
        p.add_argument("--seed", type=int, default=1)
        if reps:
            p.add_argument("--reps", type=int, default=2000)
            p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("test", help="run tests on a time,event,group CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--weights", help="comma-separated test names (default: seven-test panel)")
    p.add_argument("--theta", default=DEFAULT_THETAS,
                   help="crossing points for the default phi-star tests")
    p.add_argument("--alpha", type=float)
    p.add_argument("--one-sided", choices=("upper", "lower"))
    p.add_argument("--out")
    common(p, reps=False)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="simulate one scenario file")
    p.add_argument("--scenario", "--input", dest="scenario", required=True)
    p.add_argument("--weights", help="comma-separated test names")
    p.add_argument("--alpha", type=float)
    p.add_argument("--one-sided", choices=("upper", "lower"))
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="simulate a built-in table grid")
    p.add_argument("--table", type=int, required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("rank", help="ranking scores from a rates CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error: degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, DomainError, UnknownNameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
