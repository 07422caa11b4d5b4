import json
import math
from pathlib import Path

import numpy as np
import pytest

from bornlab.cli import (
    SWEEP_COLUMNS,
    dispatch,
    main,
    read_counts_file,
)
from bornlab.config import (
    ConfigError,
    RunConfig,
    build_objects,
    parse_config,
    serialize_config,
)


class TestParseConfig:
    def test_empty_text_gives_defaults(self):
        assert parse_config("") == RunConfig()

    def test_values_and_comments(self):
        cfg = parse_config(
            """
            # geometry
            slit_width = 25e-6
            wavelength = 633e-9  # He-Ne
            mask_scheme = blocking
            repetitions = 7
            poisson = false
            """
        )
        assert cfg.slit_width == 25e-6
        assert cfg.wavelength == 633e-9
        assert cfg.mask_scheme == "blocking"
        assert cfg.repetitions == 7
        assert cfg.poisson is False

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="unknown key 'slitwidth'"):
            parse_config("slitwidth = 1e-6")

    def test_range_error_names_key(self):
        with pytest.raises(ConfigError, match="wavelength: must be > 0"):
            parse_config("wavelength = -1")

    def test_choice_error_names_key(self):
        with pytest.raises(ConfigError, match="rule: must be one of born, cubic"):
            parse_config("rule = cube")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config("seed = 1\nseed = 2")

    def test_missing_value_rejected(self):
        with pytest.raises(ConfigError, match="missing value"):
            parse_config("seed =")

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError, match="expected 'key = value'"):
            parse_config("just some words")

    def test_bad_number_names_key(self):
        with pytest.raises(ConfigError, match="u_points"):
            parse_config("u_points = many")

    def test_bad_bool_names_key(self):
        with pytest.raises(ConfigError, match="poisson"):
            parse_config("poisson = maybe")

    def test_cross_field_grid(self):
        with pytest.raises(ConfigError, match="u_max: must exceed u_min"):
            parse_config("u_min = 10\nu_max = -10")

    def test_cross_field_slit_overlap(self):
        with pytest.raises(ConfigError, match="slit_separation"):
            parse_config("slit_separation = 20e-6")

    def test_cross_field_plate_extent(self):
        with pytest.raises(ConfigError, match="beyond the plate"):
            parse_config("plate_half_width = 90e-6")

    def test_roundtrip(self):
        cfg = parse_config(
            "slit_width = 31e-6\nmask_leakage = 0.05\nseed = 42\n"
            "sequence_order = randomized\npoisson = false\nalpha = 0.125"
        )
        assert parse_config(serialize_config(cfg)) == cfg

    def test_roundtrip_defaults(self):
        assert parse_config(serialize_config(RunConfig())) == RunConfig()

    def test_leakage_converted_to_amplitude(self):
        cfg = parse_config("mask_leakage = 0.05\nplate_leakage = 0.01")
        plate, mask, _, _, _ = build_objects(cfg)
        assert plate.leakage_amplitude == pytest.approx(math.sqrt(0.01))
        assert mask.leakage_amplitude == pytest.approx(math.sqrt(0.05))


def write_counts_csv(path, scale=1e5, dwell=1.0):
    rows = {
        "0": 0.0, "A": scale, "B": scale, "C": scale,
        "AB": 4 * scale, "BC": 4 * scale, "CA": 4 * scale, "ABC": 9 * scale,
    }
    lines = ["combination,counts,dwell_s"]
    lines += [f"{k},{v},{dwell}" for k, v in rows.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestCountsFile:
    def test_roundtrip(self, tmp_path):
        p = tmp_path / "counts.csv"
        write_counts_csv(p)
        pv = read_counts_file(p)
        assert pv.pABC == 9e5
        assert pv.p0 == 0.0

    def test_missing_combination(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("combination,counts,dwell_s\nA,1,1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="missing combinations"):
            read_counts_file(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("comb,counts,dwell\nA,1,1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="header"):
            read_counts_file(p)

    def test_duplicate_combination(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text(
            "combination,counts,dwell_s\nA,1,1\nA,2,1\n", encoding="utf-8"
        )
        with pytest.raises(ConfigError, match="duplicate"):
            read_counts_file(p)

    def test_negative_counts(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("combination,counts,dwell_s\nA,-5,1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="counts must be >= 0"):
            read_counts_file(p)


class TestCli:
    def test_patterns_csv_schema(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("u_points = 51\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "patterns"]) == 0
        lines = (out / "patterns.csv").read_text().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 52
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "patterns"
        assert manifest["config"]["u_points"] == 51
        assert manifest["summary"]["points"] == 51

    def test_sorkin_command_null_counts(self, tmp_path, capsys):
        counts = tmp_path / "counts.csv"
        write_counts_csv(counts)
        out = tmp_path / "out"
        assert main(["sorkin", str(counts), "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "epsilon = 0 " in printed
        assert "rho = 0" in printed
        row = (out / "sorkin.csv").read_text().splitlines()[1].split(",")
        assert row[0] == "nan"
        assert row[SWEEP_COLUMNS.index("rho")] == "0"
        assert row[SWEEP_COLUMNS.index("rho_defined")] == "1"

    def test_sorkin_undefined_rho_exits_zero_with_flag(self, tmp_path, capsys):
        counts = tmp_path / "counts.csv"
        lines = ["combination,counts,dwell_s"]
        lines += [f"{c},100,1.0" for c in
                  ("0", "A", "B", "C", "AB", "BC", "CA", "ABC")]
        counts.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["sorkin", str(counts), "--out", str(out)]) == 0
        assert "undefined" in capsys.readouterr().err
        row = (out / "sorkin.csv").read_text().splitlines()[1].split(",")
        assert row[SWEEP_COLUMNS.index("rho")] == "nan"
        assert row[SWEEP_COLUMNS.index("rho_defined")] == "0"

    def test_missing_counts_file_fails(self, tmp_path, capsys):
        assert main(["sorkin", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("wavelength = -5\n", encoding="utf-8")
        assert main(["--config", str(cfg), "patterns"]) == 2
        assert "wavelength" in capsys.readouterr().err

    def test_unwritable_out_dir(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        code = main(["patterns", "--out", str(blocker / "sub")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_json_format(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("u_points = 11\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--format", "json",
                     "--out", str(out), "patterns"]) == 0
        rows = json.loads((out / "patterns.json").read_text())
        assert len(rows) == 11
        assert set(rows[0]) == set(SWEEP_COLUMNS)
        assert isinstance(rows[0]["rho_defined"], bool)

    def test_seed_override_changes_sweep(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text(
            "u_points = 21\nmask_leakage = 0.05\nplate_leakage = 0.05\n"
            "mask_scheme = blocking\n",
            encoding="utf-8",
        )
        outs = {}
        for seed in (0, 1):
            out = tmp_path / f"out{seed}"
            assert main(["--config", str(cfg), "--seed", str(seed),
                         "--out", str(out), "sweep-mask"]) == 0
            outs[seed] = (out / "mask_sweep.csv").read_text()
            manifest = json.loads((out / "manifest.json").read_text())
            assert manifest["seed"] == seed
        assert outs[0] != outs[1]

    def test_run_command_outputs(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("repetitions = 5\ndwell_time = 1.0\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "run"]) == 0
        counts_lines = (out / "run_counts.csv").read_text().splitlines()
        assert counts_lines[0].startswith("repetition,combination,counts")
        assert len(counts_lines) == 1 + 5 * 8
        rho_lines = (out / "run_rho.csv").read_text().splitlines()
        assert rho_lines[0] == "repetition,rho,rho_defined"
        assert len(rho_lines) == 6
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["rho_defined_repetitions"] == 5

    def test_run_undefined_everywhere_warns_and_exits_zero(self, tmp_path, capsys):
        # dark counts drown a vanishing signal: every repetition's delta
        # sits below the guard in expected-value mode
        cfg = tmp_path / "cfg.txt"
        cfg.write_text(
            "repetitions = 3\ndwell_time = 1.0\nmean_power = 1e-300\n"
            "dark_rate = 1000\npoisson = false\n",
            encoding="utf-8",
        )
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "run"]) == 0
        assert "undefined in every repetition" in capsys.readouterr().err
        rho_lines = (out / "run_rho.csv").read_text().splitlines()
        for line in rho_lines[1:]:
            fields = line.split(",")
            assert fields[1] == "nan"
            assert fields[2] == "0"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["mean_rho"] is None
        assert manifest["summary"]["n_undefined"] == 3

    def test_hierarchy_report(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["hierarchy", "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "order-3 sum rule" in printed
        report = json.loads((out / "hierarchy.json").read_text())
        for k in ("3", "4", "5"):
            assert report["orders"][k]["null_satisfied"] is True
        assert report["order_2_equal_amplitudes"] == 2.0

    def test_hierarchy_cubic_rule_violates(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("rule = cubic\nalpha = 0.01\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "hierarchy"]) == 0
        report = json.loads((out / "hierarchy.json").read_text())
        assert report["orders"]["3"]["null_satisfied"] is False

    def test_detector_sweep_requires_ideal_optics(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("mask_leakage = 0.05\n", encoding="utf-8")
        assert main(["--config", str(cfg), "--out", str(tmp_path / "o"),
                     "sweep-detector"]) == 2
        assert "zero leakage" in capsys.readouterr().err

    def test_sweep_power_extra_columns(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("u_points = 31\npower_fluctuation = 1e-3\n",
                       encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "sweep-power"]) == 0
        lines = (out / "power_sweep.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header[: len(SWEEP_COLUMNS)] == list(SWEEP_COLUMNS)
        assert header[len(SWEEP_COLUMNS):] == ["delta_rho_unit", "delta_rho"]
        i_unit = header.index("delta_rho_unit")
        i_drho = header.index("delta_rho")
        for line in lines[1:4]:
            vals = line.split(",")
            if vals[SWEEP_COLUMNS.index("rho_defined")] == "1":
                assert float(vals[i_drho]) == pytest.approx(
                    1e-3 * float(vals[i_unit]), rel=1e-12
                )

    def test_detector_sweep_summary_band(self, tmp_path):
        # bundled nonlinear-detector configuration lands in the
        # documented band for the pattern-wide maximum
        cfg = Path(__file__).resolve().parent.parent / "configs" / "nonlinear_detector_sweep.cfg"
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "sweep-detector"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert 0.002 <= manifest["summary"]["max_abs_rho"] <= 0.02
        assert manifest["summary"]["rho_at_center"] == pytest.approx(
            -0.00665, abs=5e-4
        )

    def test_run_json_format_types(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("repetitions = 2\ndwell_time = 1.0\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--format", "json",
                     "--out", str(out), "run"]) == 0
        rows = json.loads((out / "run_rho.json").read_text())
        assert rows[0]["repetition"] == 0
        assert isinstance(rows[0]["rho_defined"], bool)

    def test_dispatch_unknown_command(self, capsys):
        assert dispatch("explode", RunConfig(), out_dir=".") == 2
        assert "unknown command" in capsys.readouterr().err

    def test_floats_have_17_significant_digits(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("u_points = 3\nu_min = -1e4\nu_max = 1e4\n",
                       encoding="utf-8")
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "patterns"]) == 0
        row = (out / "patterns.csv").read_text().splitlines()[1].split(",")
        pa = float(row[SWEEP_COLUMNS.index("pA")])
        assert f"{pa:.17g}" == row[SWEEP_COLUMNS.index("pA")]
