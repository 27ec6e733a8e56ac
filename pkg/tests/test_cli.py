import csv
import json

import pytest

from patchmux.cli import EXIT_CONFIG, EXIT_EMPTY, EXIT_FORMAT, EXIT_OK, main


def run_cli(*argv):
    return main(list(argv))


def read_json(path):
    return json.loads(path.read_text())


def test_analytic_preset_table2(tmp_path, capsys):
    assert run_cli("analytic", "--preset", "table2", "--out", str(tmp_path)) == EXIT_OK
    report = read_json(tmp_path / "analytic_report.json")
    assert report["command"] == "analytic"
    assert report["results"]["all_consistent"] is True
    assert len(report["results"]["rows"]) == 6
    assert "config_hash" in report["provenance"]
    out = capsys.readouterr().out
    assert "MISMATCH" not in out


def test_analytic_preset_table3(tmp_path):
    assert run_cli("analytic", "--preset", "table3", "--out", str(tmp_path)) == EXIT_OK
    rows = read_json(tmp_path / "analytic_report.json")["results"]["rows"]
    reductions = [r["reduction_pct"] for r in rows]
    expected = [16.87, 30.44, 49.04, 55.69, 70.72, 78.69]
    assert reductions == pytest.approx(expected, abs=0.01)


def test_analytic_rerun_is_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    run_cli("analytic", "--preset", "table2", "--out", str(out_a))
    run_cli("analytic", "--preset", "table2", "--out", str(out_b))
    assert (out_a / "analytic_report.json").read_bytes() == (
        out_b / "analytic_report.json"
    ).read_bytes()
    assert (out_a / "analytic_table.csv").read_bytes() == (
        out_b / "analytic_table.csv"
    ).read_bytes()


def test_analytic_csv_input_with_saturated_row(tmp_path):
    src = tmp_path / "rows.csv"
    src.write_text("d1,p,D1,D4\n3,0.002,1.0,0.5\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input_csv": str(src)}))
    assert run_cli("analytic", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    table = (tmp_path / "analytic_table.csv").read_text()
    assert "inf" in table
    report = read_json(tmp_path / "analytic_report.json")
    assert report["results"]["rows"][0]["attempts_single"] == "inf"


def test_analytic_empty_csv_is_success(tmp_path):
    src = tmp_path / "rows.csv"
    src.write_text("d1,p,D1,D4\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input_csv": str(src)}))
    assert run_cli("analytic", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    assert read_json(tmp_path / "analytic_report.json")["results"]["rows"] == []


def test_analytic_row_error_does_not_stop_table(tmp_path):
    src = tmp_path / "rows.csv"
    src.write_text("D1,D4\n1.7,0.5\n0.5,0.0625\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input_csv": str(src)}))
    assert run_cli("analytic", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    rows = read_json(tmp_path / "analytic_report.json")["results"]["rows"]
    assert rows[0]["error"] is not None
    assert rows[1]["error"] is None


def test_analytic_malformed_csv_is_format_error(tmp_path, capsys):
    src = tmp_path / "rows.csv"
    src.write_text("D1,D4\noops,0.5\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input_csv": str(src)}))
    assert run_cli("analytic", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_FORMAT
    assert "line 2" in capsys.readouterr().err


def test_analytic_unknown_column_is_format_error(tmp_path):
    src = tmp_path / "rows.csv"
    src.write_text("D1,bogus\n0.5,0.5\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input_csv": str(src)}))
    assert run_cli("analytic", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_FORMAT


def test_unknown_preset_is_config_error(tmp_path, capsys):
    assert run_cli("analytic", "--preset", "nope", "--out", str(tmp_path)) == EXIT_CONFIG
    assert "unknown analytic preset" in capsys.readouterr().err


def test_unknown_config_keys_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run_cli("simulate", "--config", str(cfg)) == EXIT_CONFIG


def test_missing_config_file_is_config_error(tmp_path):
    assert run_cli("analytic", "--config", str(tmp_path / "absent.json")) == EXIT_CONFIG


def test_simulate_preset_and_labels(tmp_path):
    assert (
        run_cli(
            "simulate", "--preset", "d3-p0.002", "--seed", "7", "--out", str(tmp_path)
        )
        == EXIT_OK
    )
    report = read_json(tmp_path / "sim_summary.json")
    assert report["provenance"]["seed"] == 7
    assert report["results"]["labels"]["d1"] == 3
    assert report["results"]["labels"]["p"] == 0.002
    assert report["results"]["shots"] == 100000


def test_simulate_worker_count_does_not_change_bytes(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "k": 4,
                "n_shots": 20000,
                "seed": 11,
                "failure": {"kind": "independent", "calibrate_discard": 0.49},
                "escape": {"kind": "bernoulli", "q": 0.2},
                "records": True,
            }
        )
    )
    payloads = []
    for workers, sub in (("1", "w1"), ("4", "w4")):
        out = tmp_path / sub
        assert (
            run_cli(
                "simulate", "--config", str(cfg), "--workers", workers, "--out", str(out)
            )
            == EXIT_OK
        )
        payloads.append(
            (out / "sim_summary.json").read_bytes()
            + (out / "records.jsonl").read_bytes()
        )
    assert payloads[0] == payloads[1]


def test_simulate_nothing_kept_warns_with_exit_code(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "k": 4,
                "n_shots": 100,
                "seed": 1,
                "failure": {"kind": "independent", "calibrate_discard": 1.0},
            }
        )
    )
    assert run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_EMPTY
    report = read_json(tmp_path / "sim_summary.json")
    assert report["results"]["empirical_attempts"] == "inf"
    assert report["results"]["warnings"]


def test_simulate_requires_a_model(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_shots": 10}))
    assert run_cli("simulate", "--config", str(cfg)) == EXIT_CONFIG


def test_simulate_k_mismatch_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"k": 3, "failure": {"kind": "independent", "per_site_fail": [0.1, 0.2]}}
        )
    )
    assert run_cli("simulate", "--config", str(cfg)) == EXIT_CONFIG


def _write_fixture_records(path):
    lines = [
        json.dumps({"gap": 10.0, "correct": True, "attempts_consumed": 2}),
        json.dumps({"gap": 5.0, "correct": False, "attempts_consumed": 3}),
        json.dumps({"gap": 20.0, "correct": True, "attempts_consumed": 1}),
    ]
    path.write_text("\n".join(lines) + "\n")


def test_gap_sweep_fixture_recount(tmp_path):
    records = tmp_path / "fixture.jsonl"
    _write_fixture_records(records)
    assert (
        run_cli("gap-sweep", "--records", str(records), "--out", str(tmp_path))
        == EXIT_OK
    )
    with open(tmp_path / "fixture_curve.csv") as fh:
        rows = {r["G"]: r for r in csv.DictReader(fh)}
    # n_attempts = 6 from the consumed counts; G=0 keeps all three records
    assert rows["0"]["attempts"] == "2"
    assert float(rows["0"]["logical_error"]) == pytest.approx(1 / 3)
    assert rows["10"]["kept_error"] == "0"
    assert rows["10"]["attempts"] == "3"


def test_gap_sweep_single_point_grid(tmp_path):
    records = tmp_path / "fixture.jsonl"
    _write_fixture_records(records)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"records": [str(records)], "thresholds": [0.0]}))
    assert run_cli("gap-sweep", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    with open(tmp_path / "fixture_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["kept_correct"] == "2" and rows[0]["kept_error"] == "1"


def test_gap_sweep_crossing_two_inputs(tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    # curve a: errors concentrated at small gaps, so its error rate collapses
    # once G passes them; curve b: a mid-gap error that lingers
    a_records = [(1.0, False), (1.0, False), (2.0, True), (3.0, True)]
    b_records = [(1.0, True), (2.0, False), (3.0, True), (4.0, True)]
    a.write_text(
        "\n".join(json.dumps({"gap": g, "correct": c}) for g, c in a_records) + "\n"
    )
    b.write_text(
        "\n".join(json.dumps({"gap": g, "correct": c}) for g, c in b_records) + "\n"
    )
    assert (
        run_cli(
            "gap-sweep",
            "--records",
            str(a),
            "--records",
            str(b),
            "--out",
            str(tmp_path),
        )
        == EXIT_OK
    )
    report = read_json(tmp_path / "gap_report.json")
    crossing = report["results"]["crossing"]
    # on grid (0, 1, 2, 3, 4): p_a = (1/2, 1/2, 0, 0, nan) and
    # p_b = (1/4, 1/4, 1/3, 0, 0); the difference flips between G=1 and G=2,
    # interpolating to 1 + 0.25 / (0.25 + 1/3)
    assert crossing is not None
    assert crossing["threshold"] == pytest.approx(1.42857, abs=1e-4)


def test_gap_sweep_n_attempts_override(tmp_path):
    records = tmp_path / "fixture.jsonl"
    _write_fixture_records(records)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps({"records": [str(records)], "n_attempts": 12, "thresholds": [0.0]})
    )
    assert run_cli("gap-sweep", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    with open(tmp_path / "fixture_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["attempts"] == "4"  # 12 attempts / 3 kept


def test_gap_sweep_empty_records_warns(tmp_path, capsys):
    records = tmp_path / "empty.jsonl"
    records.write_text("")
    assert (
        run_cli("gap-sweep", "--records", str(records), "--out", str(tmp_path))
        == EXIT_EMPTY
    )
    assert "no records" in capsys.readouterr().out


def test_gap_sweep_schema_violation_is_format_error(tmp_path, capsys):
    records = tmp_path / "bad.jsonl"
    records.write_text('{"gap": 1.0, "correct": true}\n{"gap": -2, "correct": true}\n')
    assert (
        run_cli("gap-sweep", "--records", str(records), "--out", str(tmp_path))
        == EXIT_FORMAT
    )
    assert "record 2" in capsys.readouterr().err


def test_gap_sweep_missing_file_is_config_error(tmp_path):
    assert (
        run_cli("gap-sweep", "--records", str(tmp_path / "none.jsonl")) == EXIT_CONFIG
    )


def test_gap_sweep_tail_window(tmp_path):
    records = tmp_path / "tail.jsonl"
    lines = [
        json.dumps({"gap": float(g), "correct": False})
        for g in (0, 0, 0, 0, 1, 1, 2, 2, 3, 4)
    ]
    records.write_text("\n".join(lines) + "\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "records": [str(records)],
                "thresholds": [0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
                "tail_window": [0.0, 4.0],
            }
        )
    )
    assert run_cli("gap-sweep", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    with open(tmp_path / "tail_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    flagged = [r for r in rows if r["extrapolated"] == "true"]
    assert {r["G"] for r in flagged} == {"6", "8"}
    report = read_json(tmp_path / "gap_report.json")
    assert "rate" in report["results"]["inputs"][0]["tail"]


def test_layout_canonical_validation(tmp_path):
    assert run_cli("layout", "--out", str(tmp_path)) == EXIT_OK
    report = read_json(tmp_path / "layout_report.json")
    body = report["results"]["layout"]
    assert body["containment_ok"] and body["nonoverlap_ok"]
    assert body["idle_count"] == 241
    art = (tmp_path / "layout_map.txt").read_text()
    assert art.count(".") == 241


def test_layout_injection_stage(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"stage": "injection"}))
    assert run_cli("layout", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    body = read_json(tmp_path / "layout_report.json")["results"]["layout"]
    assert body["idle_count"] == 357


def test_layout_pack_mode(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "pack", "k_max": 4}))
    assert run_cli("layout", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    body = read_json(tmp_path / "layout_report.json")["results"]["layout"]
    assert body["placements"] == 4
    assert body["nonoverlap_ok"]


def test_layout_overlapping_fixture_reports_collisions(tmp_path):
    layout_file = tmp_path / "bad_layout.txt"
    layout_file.write_text(
        "[patch]\n"
        + "\n".join(f"{x} {y}" for x in range(6) for y in range(6))
        + "\n[footprint cultivation]\n0 0\n1 0\n0 1\n"
        + "[site R0 0 0]\n[site R0 0 0]\n"
    )
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"file": str(layout_file)}))
    assert run_cli("layout", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_OK
    body = read_json(tmp_path / "layout_report.json")["results"]["layout"]
    assert body["nonoverlap_ok"] is False
    overlap = [v for v in body["violations"] if v["kind"] == "overlap"]
    assert sorted(map(tuple, overlap[0]["cells"])) == [(0, 0), (0, 1), (1, 0)]


def test_layout_parse_error_is_format_error(tmp_path, capsys):
    layout_file = tmp_path / "broken.txt"
    layout_file.write_text("[patch]\n0 zero\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"file": str(layout_file)}))
    assert run_cli("layout", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_FORMAT
    assert "line 2" in capsys.readouterr().err


def test_layout_pack_infeasible_is_empty_result(tmp_path):
    layout_file = tmp_path / "tiny.txt"
    layout_file.write_text("[patch]\n0 0\n\n[footprint cultivation]\n0 0\n1 0\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"file": str(layout_file), "mode": "pack", "k_max": 2}))
    assert run_cli("layout", "--config", str(cfg), "--out", str(tmp_path)) == EXIT_EMPTY


def test_out_dir_env_override(tmp_path, monkeypatch):
    target = tmp_path / "via_env"
    monkeypatch.setenv("PATCHMUX_OUT", str(target))
    assert run_cli("analytic", "--preset", "table2") == EXIT_OK
    assert (target / "analytic_report.json").is_file()


def test_simulate_records_feed_gap_sweep_through_files(tmp_path):
    sim_cfg = tmp_path / "sim.json"
    sim_cfg.write_text(
        json.dumps(
            {
                "k": 4,
                "n_shots": 30000,
                "seed": 55,
                "failure": {"kind": "independent", "calibrate_discard": 0.52},
                "escape": {"kind": "bernoulli", "q": 0.1},
                "records": True,
            }
        )
    )
    sim_out = tmp_path / "sim"
    assert run_cli("simulate", "--config", str(sim_cfg), "--out", str(sim_out)) == EXIT_OK
    summary = read_json(sim_out / "sim_summary.json")

    sweep_cfg = tmp_path / "gap.json"
    sweep_cfg.write_text(
        json.dumps(
            {
                "records": [str(sim_out / "records.jsonl")],
                "n_attempts": summary["results"]["shots"],
                "thresholds": [0.0],
            }
        )
    )
    sweep_out = tmp_path / "swp"
    assert run_cli("gap-sweep", "--config", str(sweep_cfg), "--out", str(sweep_out)) == EXIT_OK
    with open(sweep_out / "records_curve.csv") as fh:
        row = next(csv.DictReader(fh))
    kept = summary["results"]["kept"]
    assert int(row["kept_correct"]) + int(row["kept_error"]) == kept
    # curve CSV carries 10 significant digits
    assert float(row["attempts"]) == pytest.approx(
        summary["results"]["shots"] / kept, rel=1e-9
    )


def test_rerun_with_embedded_config_reproduces_report(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "k": 4,
                "n_shots": 5000,
                "seed": 21,
                "failure": {"kind": "independent", "calibrate_discard": 0.3},
            }
        )
    )
    out_a = tmp_path / "a"
    assert run_cli("simulate", "--config", str(cfg), "--out", str(out_a)) == EXIT_OK
    report = read_json(out_a / "sim_summary.json")
    # rebuild a config file from the embedded effective config
    embedded = {
        k: v
        for k, v in report["config"].items()
        if v is not None and k not in ("records",)
    }
    cfg_b = tmp_path / "cfg_b.json"
    cfg_b.write_text(json.dumps(embedded))
    out_b = tmp_path / "b"
    assert run_cli("simulate", "--config", str(cfg_b), "--out", str(out_b)) == EXIT_OK
    assert (out_a / "sim_summary.json").read_bytes() == (
        out_b / "sim_summary.json"
    ).read_bytes()
