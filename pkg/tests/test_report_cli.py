import csv
import time

import pytest

from uavbeam.cli import main
from uavbeam.config import AssociationConfig, OutputConfig, SimConfig, Variant
from uavbeam.harness import run_monte_carlo
from uavbeam.report import IA_COLUMNS, TABLES, ReportError, emit_report, ia_delay_rows
from uavbeam.scenario import ScenarioConfig


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def small_result():
    variants = (Variant("md", "dynamic", "greedy"), Variant("md", "static", "lapjv"), Variant("ed", "dynamic", "lapjv"))
    cfg = SimConfig(scenario=ScenarioConfig(K=4, horizon=30), trials=2, seed=1,
                    association=AssociationConfig(variants=variants), output=OutputConfig(figures=True))
    return run_monte_carlo(cfg)


def test_empty_result_gives_header_only_tables(tmp_path):
    paths = emit_report(None, tmp_path)
    assert set(paths) == set(TABLES)
    for name, columns in TABLES.items():
        assert read(paths[name]) == [columns]
    assert not list(tmp_path.glob("*.png"))


def test_matching_table_schema(tmp_path, small_result):
    paths = emit_report(small_result, tmp_path, figures=False)
    rows = read(paths["matching_accuracy"])
    header, body = rows[0], rows[1:]
    assert header == TABLES["matching_accuracy"]
    keys = [(r[0], r[1], r[2]) for r in body]
    assert keys == [("16", "ed", "dynamic"), ("16", "md", "dynamic"), ("16", "md", "static")]
    md_dyn = dict(zip(header, body[1]))
    assert md_dyn["lapjv"] != "" and md_dyn["greedy"] != "" and md_dyn["hungarian"] == ""
    assert 0 <= float(md_dyn["lapjv"]) <= 1
    summary = read(paths["rate_summary"])
    assert {r[1] for r in summary[1:]} >= {"perfect", "oracle", "feedback"}
    assert len(read(paths["weights"])) == 1 + 30
    assert len(read(paths["angle_error"])) == 1 + 30


def test_figures_rendered_next_to_csvs(tmp_path, small_result):
    paths = emit_report(small_result, tmp_path)
    for name in ("weights", "angle_error", "rates", "matching_accuracy", "ia_delay"):
        png = tmp_path / f"{name}.png"
        assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"
    assert paths["fig_rates"] == tmp_path / "rates.png"


def test_ia_delay_table_monotone_in_q():
    rows = ia_delay_rows()
    diag = [r for r in rows if r["Q_B"] == r["Q_U"]]
    ex = [r["exhaustive_ms"] for r in diag]
    assert ex == sorted(ex) and len(set(ex)) == len(ex)
    assert all(r["proposed_ms"] == 30.0 for r in rows)


def test_unwritable_path_reported(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportError):
        emit_report(None, blocker / "sub")
    assert issubclass(ReportError, OSError)


def test_cli_ia_delay(tmp_path, capsys):
    assert main(["ia-delay", "--q", "4", "6", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(IA_COLUMNS)
    assert lines[1].split(",")[:3] == ["4", "4", "30"]
    assert len(read(tmp_path / "ia_delay.csv")) == 5


def test_cli_config_round_trip(tmp_path, capsys):
    out = tmp_path / "c.yaml"
    assert main(["config", "--out", str(out)]) == 0
    assert SimConfig.load(out) == SimConfig()
    assert main(["config", "--config", str(out)]) == 0
    assert "scenario:" in capsys.readouterr().out


def test_cli_simulate_small(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario:\n  K: 3\n  horizon: 20\n")
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(cfg), "--trials", "1", "--seed", "2", "--solver", "km",
                 "--variant", "ed/static/greedy", "--nt", "16", "--nt", "64", "--out", str(out), "--no-figures"])
    assert code == 0
    text = capsys.readouterr().out
    assert "N_t=16" in text and "N_t=64" in text and "md/dynamic/hungarian" in text
    assert {p.name for p in out.iterdir()} == {f"{n}.csv" for n in TABLES} | {"config.yaml"}
    saved = SimConfig.load(out / "config.yaml")
    assert saved.trials == 1 and saved.antennas.tx_sizes == (16, 64)


def test_cli_reports_bad_input(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["simulate", "--metric", "cosine"])


def test_cli_validate_under_a_minute(capsys):
    t0 = time.perf_counter()
    assert main(["validate"]) == 0
    assert time.perf_counter() - t0 < 60
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 5 and "[FAIL]" not in out
