import csv

import numpy as np
import pytest

from maxlogrank.cli import main, read_subjects_csv, split_names, InputError


def _write(path, rows, header="time,event,group"):
    path.write_text(header + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows))
    return path


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(8)
    t0, t1 = rng.exponential(10, 40), rng.exponential(15, 40)
    rows = [(f"{t:.5f}", int(rng.random() < 0.85), g)
            for g, ts in ((0, t0), (1, t1)) for t in ts]
    return _write(tmp_path / "d.csv", rows)


def test_split_names_keeps_parenthesised_commas():
    assert split_names("logrank, phi-star(0.2,0.5,0.8),renyi") == [
        "logrank", "phi-star(0.2,0.5,0.8)", "renyi"]


def test_default_panel_has_seven_tests(data_csv, tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert main(["test", "--input", str(data_csv), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["test"] for r in rows] == ["logrank", "renyi", "maxcombo", "projection",
                                         "phi-star(0.25)", "phi-star(0.5)", "phi-star(0.75)"]
    assert all(0 <= float(r["p_value"]) <= 1 for r in rows)


def test_test_output_is_reproducible(data_csv, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["test", "--input", str(data_csv), "--seed", "3", "--out", str(a)])
    main(["test", "--input", str(data_csv), "--seed", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_duplicated_groups_give_pvalue_one(tmp_path):
    base = [(1, 1), (2, 1), (3, 0), (4, 1), (6, 1), (7, 0)]
    rows = [(t, e, g) for g in (0, 1) for t, e in base]
    path = _write(tmp_path / "dup.csv", rows)
    out = tmp_path / "o.csv"
    assert main(["test", "--input", str(path), "--out", str(out)]) == 0
    for r in csv.DictReader(out.open()):
        assert float(r["p_value"]) == pytest.approx(1.0, abs=1e-4)


def test_one_sided_panel(data_csv, tmp_path):
    out = tmp_path / "o.csv"
    assert main(["test", "--input", str(data_csv), "--one-sided", "lower", "--out",
                 str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert "renyi" not in [r["test"] for r in rows]
    for r in rows:
        p_two, p = float(r["p_two_sided"]), float(r["p_value"])
        assert p == pytest.approx(p_two / 2) or p == pytest.approx(1 - p_two / 2)


def test_one_sided_rejects_two_sided_only_tests(data_csv):
    assert main(["test", "--input", str(data_csv), "--one-sided", "upper",
                 "--weights", "renyi"]) == 2


@pytest.mark.parametrize("rows,header", [
    ([(1, 1, 0), (2, "x", 1)], "time,event,group"),
    ([(1, 1, 0), (2, 2, 1)], "time,event,group"),
    ([(1, 1, 0), (-2, 1, 1)], "time,event,group"),
    ([(1, 1, 0), (2, 1)], "time,event,group"),
    ([(1, 1, 0)], "t,e,g"),
])
def test_malformed_csv_exits_2_with_line(tmp_path, capsys, rows, header):
    path = _write(tmp_path / "bad.csv", rows, header)
    assert main(["test", "--input", str(path)]) == 2
    assert "line" in capsys.readouterr().err


def test_read_subjects_csv_reports_line_number(tmp_path):
    path = _write(tmp_path / "bad.csv", [(1, 1, 0), (2, 1, 1), (3, 1, 5)])
    with pytest.raises(InputError, match="line 4"):
        read_subjects_csv(path)


@pytest.mark.parametrize("rows", [[(1, 0, 0), (2, 0, 1)], [(1, 1, 0), (2, 1, 0)]])
def test_degenerate_data_exits_3(tmp_path, rows):
    path = _write(tmp_path / "deg.csv", rows)
    assert main(["test", "--input", str(path)]) == 3


def test_unknown_weights_exit_2(data_csv):
    assert main(["test", "--input", str(data_csv), "--weights", "wilcoxon"]) == 2


def test_unknown_table_exits_2(tmp_path):
    assert main(["reproduce", "--table", "8", "--out", str(tmp_path / "x.csv")]) == 2


def test_simulate_then_rank_round_trip(tmp_path):
    scn = tmp_path / "scn.txt"
    scn.write_text("mechanism = TypeII\nn_total = 60\ncase = A\ntarget_event_fraction = 0.5\n")
    rates = tmp_path / "rates.csv"
    assert main(["simulate", "--scenario", str(scn), "--reps", "20", "--out", str(rates)]) == 0
    ranks = tmp_path / "ranks.csv"
    assert main(["rank", "--input", str(rates), "--out", str(ranks)]) == 0
    rows = list(csv.reader(ranks.open()))
    assert rows[0][0] == "row" and len(rows) == 3 and len(rows[0]) == 7
    assert sum(float(v) for v in rows[1][1:]) == 21


def test_reproduce_small_table(tmp_path):
    out = tmp_path / "t2.csv"
    assert main(["reproduce", "--table", "2", "--reps", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 9 * 6
    assert {r["case"] for r in rows} == {"H"}


def test_rank_rejects_bad_csv(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("scenario,case,test\nx,A,logrank\n")
    assert main(["rank", "--input", str(path), "--out", str(tmp_path / "o.csv")]) == 2
