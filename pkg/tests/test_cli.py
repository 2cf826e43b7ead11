"""End-to-end checks of the command-line front end.

Everything goes through main(argv) in-process; JSON side effects land in
tmp_path.
"""

import json

import numpy as np
import pytest

from hermitia.cli import main
from hermitia.report import encode_matrix, fmt_matrix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report_of(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main(list(argv) + ["--out", str(out)])
    return code, json.loads(out.read_text())


# ---------------------------------------------------------------------------
# the pinned examples


def test_adjoint_degenerate_demo(capsys):
    code, out, _ = run(capsys, "adjoint", "--dimV", "2", "--dimW", "1",
                       "--demo", "degenerate")
    assert code == 0
    assert "(1; 0)" in out
    assert "torsor_dimension" in out


def test_hsc_round_line(tmp_path):
    code, report = report_of(tmp_path, "hsc", "--model", "fs:1",
                             "--samples", "100", "--seed", "7")
    assert code == 0
    assert report["schema"] == "hermitia-report/1"
    by_name = {r["name"]: r for r in report["records"]}
    assert abs(by_name["min_H"]["value"] - 2.0) < 1e-5
    assert abs(by_name["max_H"]["value"] - 2.0) < 1e-5


def test_sum_check_five_instances(tmp_path):
    code, report = report_of(tmp_path, "sum-check", "--seed", "11",
                             "--instances", "5")
    assert code == 0
    records = [r for r in report["records"] if r["name"].startswith("instance_")]
    assert len(records) == 5
    assert all(r["residual"] <= 1e-4 for r in records)
    assert records[0]["name"] == "instance_011"


# ---------------------------------------------------------------------------
# the other commands, smoke level


def test_purge_reports_quotient(tmp_path):
    code, report = report_of(tmp_path, "purge", "--dim", "4", "--rank", "2",
                             "--seed", "3")
    assert code == 0
    by_name = {r["name"]: r for r in report["records"]}
    assert by_name["purged_dim"]["value"] == 2
    assert by_name["kernel_annihilation"]["residual"] < 1e-9


def test_curvature_finite_difference_mode(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "fs:1", "--samples", "1",
                       "--derivatives", "fd")
    assert code == 0
    assert "pair_symmetry" in out


def test_grassmannian_routes_agree(tmp_path):
    code, report = report_of(tmp_path, "grassmannian", "--samples", "5")
    assert code == 0
    by_name = {r["name"]: r for r in report["records"]}
    assert by_name["route_agreement"]["residual"] < 1e-8
    assert by_name["einstein_constant"]["value"] == 4.0


def test_codazzi_and_demailly_checks(capsys):
    code, _, _ = run(capsys, "codazzi-check", "--instances", "2")
    assert code == 0
    code, _, _ = run(capsys, "demailly-check", "--instances", "1")
    assert code == 0


def test_fibration_scan_finds_threshold(tmp_path):
    code, report = report_of(tmp_path, "fibration-scan", "--model", "hirz:1",
                             "--samples", "100", "--lambda-max", "3")
    assert code == 0
    by_name = {r["name"]: r for r in report["records"]}
    assert by_name["lambda0"]["value"] == 0.0


def test_acceptance_subset(capsys):
    code, out, _ = run(capsys, "acceptance", "--criteria", "1,9")
    assert code == 0
    assert "criterion_01" in out and "criterion_09" in out


# ---------------------------------------------------------------------------
# configuration layering and exit codes


def test_config_file_layering(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model = fs:2\nsamples = 40\nseed = 3\n")
    code, report = report_of(tmp_path, "hsc", "--config", str(cfg), "--seed", "9")
    assert code == 0
    assert report["config"]["model"] == "fs:2"
    assert report["config"]["samples"] == 40
    assert report["config"]["seed"] == 9  # flag wins over the file


def test_unknown_model_is_config_error(capsys):
    code, _, err = run(capsys, "hsc", "--model", "nosuch:3")
    assert code == 2
    assert "config error" in err


def test_unknown_config_key_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    code, _, err = run(capsys, "hsc", "--config", str(cfg))
    assert code == 2
    assert "bogus" in err


def test_rank_above_dim_is_config_error(capsys):
    code, _, _ = run(capsys, "purge", "--dim", "2", "--rank", "3")
    assert code == 2


def test_bad_criteria_list_is_config_error(capsys):
    code, _, _ = run(capsys, "acceptance", "--criteria", "1,99")
    assert code == 2


def test_failed_check_exits_one(capsys):
    # the declared lower bound on this chart is far below the sampled
    # minimum, so a tight tolerance cannot pass
    code, out, _ = run(capsys, "hsc", "--model", "gr:2:4", "--samples", "40",
                       "--tol", "1e-5")
    assert code == 1
    assert "FAIL" in out


def test_report_is_deterministic(tmp_path):
    _, first = report_of(tmp_path, "hsc", "--model", "fs:1", "--samples", "40")
    _, second = report_of(tmp_path, "hsc", "--model", "fs:1", "--samples", "40")
    first.pop("wall_time_s")
    second.pop("wall_time_s")
    assert first == second


# ---------------------------------------------------------------------------
# report encoding helpers


def test_matrix_encoding():
    assert encode_matrix(np.array([[1 + 2j]])) == [[[1.0, 2.0]]]
    assert fmt_matrix(np.array([[1.0], [0.0]])) == "(1; 0)"
    assert fmt_matrix(np.array([[0.5 + 0.25j]])) == "(0.5+0.25i)"
