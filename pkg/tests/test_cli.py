import json
import math

import numpy as np
import pytest

from shuffledp import accountant
from shuffledp.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    return header, rows


def test_delta_valid_exit_zero(capsys):
    code, out, _ = run_cli(capsys, "delta", "--sigma", "1", "--m", "1140000")
    assert code == 0
    header, rows = parse_csv(out)
    assert float(rows[0]["total"]) == pytest.approx(0.01, abs=2e-5)
    assert rows[0]["valid"] == "true"


def test_delta_invalid_exit_two(capsys):
    code, out, _ = run_cli(capsys, "delta", "--sigma", "0.5", "--m", "1000")
    assert code == 2
    _, rows = parse_csv(out)
    assert rows[0]["valid"] == "false"


def test_delta_precondition_exit(capsys):
    code, _, err = run_cli(capsys, "delta", "--sigma", "1", "--m", "2")
    assert code == 65
    assert "M must be" in err


def test_usage_exit(capsys):
    assert run_cli(capsys, "no-such-command")[0] == 64
    assert run_cli(capsys, "delta", "--sigma", "1")[0] == 64  # missing --m


def test_delta_csv_roundtrip(capsys):
    code, out, _ = run_cli(capsys, "delta", "--sigma", "1", "--m", "10000")
    assert code == 0
    _, rows = parse_csv(out)
    bd = accountant.delta_bound(1.0, 10**4)
    assert float(rows[0]["total"]) == bd.total
    assert float(rows[0]["term_be"]) == bd.term_be
    assert float(rows[0]["mu"]) == bd.mu


def test_delta_json_format(capsys):
    code, out, _ = run_cli(capsys, "delta", "--sigma", "1", "--m", "10000",
                           "--format", "json")
    assert code == 0
    row = json.loads(out.strip().splitlines()[0])
    assert row["valid"] is True
    assert row["total"] == accountant.delta_bound(1.0, 10**4).total


def test_impossibility_note_on_stderr(capsys):
    code, _, err = run_cli(capsys, "delta", "--sigma", "0.2", "--m", "100")
    assert code == 2
    assert "provably non-private" in err


def test_table1_values(capsys):
    code, out, _ = run_cli(capsys, "table1")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["sigma", "M_two_term", "M_exact", "N_min"]
    reference = {
        "0.5": (1.57e9, 1.57e9, 7.87e9),
        "0.75": (3.72e6, 3.72e6, 2.79e7),
        "1": (1.14e6, 1.14e6, 1.14e7),
        "1.5": (3.23e6, 3.23e6, 4.85e7),
        "2": (1.49e7, 1.49e7, 2.98e8),
    }
    assert len(rows) == 5
    for row in rows:
        two, exact, n = reference[row["sigma"]]
        assert abs(float(row["M_two_term"]) - two) / two <= 0.01
        assert abs(float(row["M_exact"]) - exact) / exact <= 0.01
        assert abs(float(row["N_min"]) - n) / n <= 0.01


def test_solve_m(capsys):
    code, out, _ = run_cli(capsys, "solve-m", "--sigma", "1.5", "--delta", "0.01")
    assert code == 0
    _, rows = parse_csv(out)
    assert abs(float(rows[0]["M_exact"]) - 3.23e6) / 3.23e6 <= 0.01


def test_solve_m_inadmissible(capsys):
    code, out, err = run_cli(capsys, "solve-m", "--sigma", "1", "--delta", "0.3")
    assert code == 2
    assert out == ""
    assert "max admissible delta" in err
    assert "0.2032" in err


def test_sweep(tmp_path, capsys):
    config = tmp_path / "sweep.cfg"
    config.write_text(
        "# reference sweep\n"
        "sigma_list = 0.05, 1.0\n"
        "m_min = 1e5\n"
        "m_max = 1e7\n"
        "m_points = 5\n"
        "m_spacing = log\n"
    )
    code, out, _ = run_cli(capsys, "sweep", "--config", str(config))
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["sigma", "M", "delta_total", "term_be", "term_linear",
                      "term_quad", "term_cubic", "term_quartic", "term_tail",
                      "valid"]
    assert len(rows) == 10  # row-major over sigma_list x m grid
    assert [r["sigma"] for r in rows[:5]] == ["0.05"] * 5
    # out-of-guard sigma rows are emitted as invalid, not dropped
    assert all(r["valid"] == "false" for r in rows[:5])
    assert all(math.isnan(float(r["delta_total"])) for r in rows[:5])
    sigma_one = [r for r in rows[5:]]
    totals = [float(r["delta_total"]) for r in sigma_one]
    assert totals == sorted(totals, reverse=True)
    crossing = [float(r["M"]) for r in sigma_one if float(r["delta_total"]) <= 0.01]
    assert crossing and min(crossing) >= 1.14e6 * 0.9


def test_sweep_unreadable_config(tmp_path, capsys):
    assert run_cli(capsys, "sweep", "--config", str(tmp_path / "nope.cfg"))[0] == 66
    bad = tmp_path / "bad.cfg"
    bad.write_text("sigma_list = 1.0\nwhat = 3\n")
    assert run_cli(capsys, "sweep", "--config", str(bad))[0] == 66
    nolist = tmp_path / "nolist.cfg"
    nolist.write_text("sigma_list = 1.0\nm_min = 2\nm_max = 10\nm_points = 2\n")
    assert run_cli(capsys, "sweep", "--config", str(nolist))[0] == 66


def test_asymptotics_output(capsys):
    code, out, _ = run_cli(capsys, "asymptotics", "--sigma-min", "0.2",
                           "--sigma-max", "20", "--points", "50")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["sigma", "shuffle_mu", "poisson_mu", "ratio"]
    ratios = [float(r["ratio"]) for r in rows]
    assert ratios[0] == pytest.approx(math.sqrt(2.0), abs=1e-3)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1.05


def test_sensitivity_output(capsys):
    code, out, _ = run_cli(capsys, "sensitivity", "--sigma-min", "0.5",
                           "--sigma-max", "2", "--points", "4",
                           "--deltas", "0.01,0.001")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["sigma", "delta", "m_two_term"]
    assert len(rows) == 8
    # quadratic growth in 1/delta at fixed sigma
    by_sigma = [r for r in rows if r["sigma"] == rows[0]["sigma"]]
    m1, m2 = (float(r["m_two_term"]) for r in by_sigma)
    assert (m2 - 1.0) == pytest.approx(100.0 * (m1 - 1.0), rel=1e-9)


def test_compose_evaluation(capsys):
    code, out, _ = run_cli(capsys, "compose", "--sigma", "1", "--epochs", "4",
                           "--m", "1140369")
    assert code == 0
    _, rows = parse_csv(out)
    delta = accountant.delta_bound(1.0, 1140369).total
    assert float(rows[0]["composed_shift"]) == pytest.approx(
        1.0 - (1.0 - delta) ** 4, rel=1e-12
    )
    assert rows[0]["guaranteed"] == "true"


def test_compose_planning(capsys):
    code, out, err = run_cli(capsys, "compose", "--sigma", "1", "--epochs", "4",
                             "--delta-target", "0.01",
                             "--mode", "conjectured_sqrtE")
    assert code == 0
    assert "not a proven guarantee" in err
    _, rows = parse_csv(out)
    assert rows[0]["guaranteed"] == "false"
    assert float(rows[0]["per_epoch_delta"]) == pytest.approx(0.005)


def test_compose_argument_contract(capsys):
    assert run_cli(capsys, "compose", "--sigma", "1", "--epochs", "2")[0] == 64
    assert run_cli(capsys, "compose", "--sigma", "1", "--epochs", "2",
                   "--m", "10", "--delta-target", "0.1")[0] == 64
    assert run_cli(capsys, "compose", "--sigma", "1", "--epochs", "2",
                   "--m", "1140369", "--mode", "conjectured_sqrtE")[0] == 64


def test_min_n(capsys):
    code, out, _ = run_cli(capsys, "min-n", "--sigma", "2", "--m", "1000",
                           "--budget", "0.5")
    assert code == 0
    _, rows = parse_csv(out)
    assert int(rows[0]["N_min"]) == 4000


def test_admissibility_command(capsys):
    code, out, _ = run_cli(capsys, "admissibility", "--sigma", "1")
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["max_delta"]) == pytest.approx(0.2032457, abs=1e-5)
    code, out, _ = run_cli(capsys, "admissibility", "--delta", "0.01")
    _, rows = parse_csv(out)
    assert float(rows[0]["max_sigma"]) == pytest.approx(3.713, abs=5e-3)
    assert run_cli(capsys, "admissibility")[0] == 64
    assert run_cli(capsys, "admissibility", "--sigma", "1", "--delta", "0.1")[0] == 64


def test_validate_small(capsys):
    code, out, _ = run_cli(capsys, "validate", "--sigma", "1", "--m", "2000",
                           "--replicas", "20000", "--seed", "3")
    assert code == 0
    assert "tradeoff_dominance: NOT_APPLICABLE" in out
    assert "all checks passed" in out


def test_validate_requires_seed(capsys):
    code, _, _ = run_cli(capsys, "validate", "--sigma", "1", "--m", "2000",
                         "--replicas", "20000")
    assert code == 64


def test_validate_precondition(capsys):
    code, _, err = run_cli(capsys, "validate", "--sigma", "1", "--m", "2000",
                           "--replicas", "10", "--seed", "1")
    assert code == 65


def test_atomic_output_file(tmp_path, capsys):
    target = tmp_path / "out.csv"
    code, out, _ = run_cli(capsys, "delta", "--sigma", "1", "--m", "10000",
                           "--out", str(target))
    assert code == 0
    assert out == ""
    header, rows = parse_csv(target.read_text())
    assert float(rows[0]["total"]) == accountant.delta_bound(1.0, 10**4).total
    assert not list(tmp_path.glob(".shuffledp-*"))


def test_no_file_written_on_error(tmp_path, capsys):
    target = tmp_path / "never.csv"
    code, _, _ = run_cli(capsys, "delta", "--sigma", "1", "--m", "2",
                         "--out", str(target))
    assert code == 65
    assert not target.exists()
    assert not list(tmp_path.glob(".shuffledp-*"))
