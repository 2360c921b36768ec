import json
from pathlib import Path

import pytest

from autopriv.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


class TestRun:
    def test_dedup_fixture_matches_schedule_oracle(self, tmp_path, capsys):
        code = run_cli("run", "--scenario", FIXTURES / "scenario_dedup.json",
                       "--duration-s", "60", "--out", tmp_path)
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        # analytic schedule: shared stream every 4 s (15) + solo every 10 s (6)
        assert report["bandwidth"]["entries_sent"] == 21
        assert report["bandwidth"]["planned_entries"] == 21
        assert report["bandwidth"]["naive_entries"] == 27
        assert report["checks"]["dedup_matches_schedule"]
        assert report["checks"]["zero_plaintext"]
        assert report["passed"] is True

    def test_reproducible_sidecars(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli("run", "--scenario", FIXTURES / "scenario_lbs.json",
                       "--duration-s", "30", "--seed", "9", "--out", out1) == 0
        assert run_cli("run", "--scenario", FIXTURES / "scenario_lbs.json",
                       "--duration-s", "30", "--seed", "9", "--out", out2) == 0
        assert (out1 / "report.json").read_bytes() == \
            (out2 / "report.json").read_bytes()
        assert (out1 / "series.json").read_bytes() == \
            (out2 / "series.json").read_bytes()

    def test_zero_duration_empty_series_exit_zero(self, tmp_path):
        code = run_cli("run", "--scenario", FIXTURES / "scenario_lbs.json",
                       "--duration-s", "0", "--out", tmp_path)
        assert code == 0
        series = json.loads((tmp_path / "series.json").read_text())
        assert series["epsilon_series"] == []
        assert series["inference_error_series"] == []

    def test_missing_scenario_nonzero_exit(self, tmp_path, capsys):
        code = run_cli("run", "--scenario", tmp_path / "nope.json",
                       "--duration-s", "1", "--out", tmp_path)
        assert code != 0
        assert "not found" in capsys.readouterr().err

    def test_report_text_has_timestamp_header_only_difference(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_cli("run", "--scenario", FIXTURES / "scenario_dedup.json",
                "--duration-s", "10", "--out", out1)
        run_cli("run", "--scenario", FIXTURES / "scenario_dedup.json",
                "--duration-s", "10", "--out", out2)
        lines1 = (out1 / "report.txt").read_text().splitlines()
        lines2 = (out2 / "report.txt").read_text().splitlines()
        assert lines1[0].startswith("# generated")
        assert lines1[1:] == lines2[1:]


class TestSelect:
    def test_storage_purpose_limitation(self, capsys):
        code = run_cli("select", "--trust", FIXTURES / "trust_threeparty.json",
                       "--layer", "storage")
        assert code == 0
        out = capsys.readouterr().out
        assert "cryptography_based" in out
        assert "pbe" in out
        assert "principle PL: primary" in out

    def test_all_trusted_all_secondary(self, capsys):
        code = run_cli("select", "--trust", FIXTURES / "trust_alltrusted.json",
                       "--layer", "processing")
        assert code == 0
        out = capsys.readouterr().out
        assert "primary" not in out.replace("principle", "").split("layer")[0] \
            or all("secondary" in line for line in out.splitlines()
                   if line.startswith("principle"))

    def test_unknown_layer_error(self, capsys):
        code = run_cli("select", "--trust", FIXTURES / "trust_threeparty.json",
                       "--layer", "quantum")
        assert code != 0
        assert "unknown layer" in capsys.readouterr().err

    def test_missing_trust_file(self, tmp_path, capsys):
        code = run_cli("select", "--trust", tmp_path / "nope.json",
                       "--layer", "storage")
        assert code != 0

    def test_custom_weights(self, capsys):
        code = run_cli("select", "--trust", FIXTURES / "trust_threeparty.json",
                       "--layer", "processing", "--weights", "0.7,0.1,0.1,0.1")
        assert code == 0


class TestTableCheck:
    def test_pristine_file_passes(self, capsys):
        assert run_cli("table-check") == 0
        assert "matches" in capsys.readouterr().out

    def test_mutated_cell_fails_naming_cell(self, tmp_path, capsys, monkeypatch):
        import autopriv.cli as cli_mod
        from autopriv.defaults import data_path
        doc = json.loads(data_path("gdpr_pet_mapping.json").read_text())
        for rec in doc:
            if rec["layer"] == "storage" and rec["family"] == "cryptography_based":
                rec["cells"]["PL"] = "none"
        mutated = tmp_path / "mapping.json"
        mutated.write_text(json.dumps(doc))
        monkeypatch.setattr(cli_mod, "data_path", lambda name: mutated)
        assert run_cli("table-check") == 1
        out = capsys.readouterr().out
        assert "storage/cryptography_based [PL]" in out

    def test_missing_file_error(self, tmp_path, capsys, monkeypatch):
        import autopriv.cli as cli_mod
        monkeypatch.setattr(cli_mod, "data_path",
                            lambda name: tmp_path / "gone.json")
        assert run_cli("table-check") == 2
