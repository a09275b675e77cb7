import json
import math

import pytest

from pmelab import reporting
from pmelab.cli import ConfigError, load_config, main, validate_config
from pmelab.reporting import emit_report, lower_check, overall_exit_code, upper_check


def _cfg_file(tmp_path, **overrides):
    base = {
        "grid.points": 201,
        "time.snapshots": [1.0, 1.25, 1.5, 1.75, 2.0],
        "checks": ["mass", "time_derivative", "gradient_decay", "sup_decay",
                   "propagation", "control_mislabeled_exponent",
                   "control_frozen_snapshot"],
    }
    base.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(base))
    return str(path)


class TestConfig:
    def test_defaults_validate(self):
        load_config(None, {})

    def test_unknown_key_is_named(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"grid.size": 100}')
        with pytest.raises(ConfigError, match="grid.size"):
            load_config(str(path), {})

    @pytest.mark.parametrize("key,value,fragment", [
        ("grid.points", 400, "odd"),
        ("m", 0.5, "m"),
        ("n", 3, "n"),
        ("time.snapshots", [1.0, 1.0], "snapshots"),
        ("checks", ["mass", "entropy"], "entropy"),
        ("scheme.boundary", "periodic", "boundary"),
        ("eta_sequence", [0.1, 0.2], "eta_sequence"),
    ])
    def test_field_precise_messages(self, key, value, fragment):
        cfg = load_config(None, {})
        cfg[key] = value
        with pytest.raises(ConfigError, match=fragment):
            validate_config(cfg)

    def test_ladder_checks_need_barenblatt(self):
        cfg = load_config(None, {})
        cfg["initial.kind"] = "gaussian"
        with pytest.raises(ConfigError, match="ladder"):
            validate_config(cfg)

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2
        assert "does not exist" in capsys.readouterr().err


class TestVerify:
    def test_regression_config_exits_zero(self, tmp_path, capsys):
        code = main(["verify", "--config", _cfg_file(tmp_path),
                     "--out", str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert code == 0
        assert "mass_conservation" in out and "pass" in out
        records = [json.loads(line) for line in
                   (tmp_path / "out" / "reports.jsonl").read_text().splitlines()]
        assert all(set(r) == {"name", "params", "statistic", "bound", "margin",
                              "tolerance", "pass"} for r in records)
        controls = [r for r in records if r["name"].startswith("control_")]
        assert controls and all(not r["pass"] for r in controls)

    def test_mislabeled_exponent_exits_nonzero(self, tmp_path):
        code = main(["verify", "--config", _cfg_file(tmp_path),
                     "--out", str(tmp_path / "out"), "--mislabel-m", "5"])
        assert code != 0

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = _cfg_file(tmp_path)
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        assert main(["verify", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
        for name in sorted(p.name for p in (tmp_path / "a").iterdir()):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()


class TestSimulate:
    def test_snapshots_written(self, tmp_path):
        code = main(["simulate", "--config", _cfg_file(tmp_path),
                     "--out", str(tmp_path / "sim"), "--t", "1.0,1.5,2.0"])
        assert code == 0
        snaps = sorted((tmp_path / "sim").glob("snapshot_*.dat"))
        assert len(snaps) == 3
        from pmelab.fields import read_field
        f = read_field(snaps[-1])
        assert f.t == 2.0
        summary = json.loads((tmp_path / "sim" / "summary.json").read_text())
        assert summary["m"] == 2.0 and summary["nsteps"] > 0

    def test_eta_sequence_writes_differences(self, tmp_path):
        cfg = _cfg_file(tmp_path, **{"domain.half_width": 8.0, "grid.points": 161,
                                     "time.snapshots": [1.0, 2.0]})
        code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim"),
                     "--eta", "0.1,0.05,0.025"])
        assert code == 0
        lines = (tmp_path / "sim" / "eta_differences.dat").read_text().splitlines()
        assert lines[0].startswith("#")
        diffs = [float(line.split()[2]) for line in lines[1:]]
        assert diffs[1] < diffs[0]


class TestBarenblattCommand:
    def test_table_values(self, tmp_path, capsys):
        code = main(["barenblatt", "--m", "2", "--n", "1", "--mass", "1",
                     "--t", "1,2,4", "--out", str(tmp_path)])
        assert code == 0
        rows = [line.split() for line in
                (tmp_path / "barenblatt.dat").read_text().splitlines()[1:]]
        ts = [float(r[0]) for r in rows]
        radii = [float(r[1]) for r in rows]
        bounds = [float(r[2]) for r in rows]
        c = (math.sqrt(3.0) / 8.0) ** (2.0 / 3.0)
        for t, radius, bound in zip(ts, radii, bounds):
            assert radius == pytest.approx(math.sqrt(12.0 * c) * t ** (1.0 / 3.0), rel=1e-12)
            assert bound == pytest.approx((t / 2.0) ** (1.0 / 3.0), rel=1e-12)


class TestCompareHeat:
    def test_trend_and_zero_limit(self, tmp_path):
        cfg = _cfg_file(tmp_path, **{
            "initial.kind": "gaussian", "checks": ["mass"],
            "domain.half_width": 15.0, "grid.points": 301,
            "time.t0": 0.0, "time.t1": 0.5, "time.snapshots": [0.0, 0.25, 0.5],
            "compare.ms": [1.5, 1.25, 1.0], "compare.k": 10.0})
        code = main(["compare-heat", "--config", cfg, "--out", str(tmp_path / "ch")])
        assert code == 0
        rows = [line.split() for line in
                (tmp_path / "ch" / "heat_closeness.dat").read_text().splitlines()[1:]]
        stats = [float(r[2]) for r in rows]
        assert stats[0] > stats[1] > stats[2] == 0.0

    def test_affine_fit_over_radius_grid(self, tmp_path):
        cfg = _cfg_file(tmp_path, **{
            "initial.kind": "gaussian", "checks": ["mass"],
            "domain.half_width": 15.0, "grid.points": 301,
            "time.t0": 0.0, "time.t1": 0.5, "time.snapshots": [0.0, 0.25, 0.5],
            "compare.ms": [1.5, 1.25, 1.1], "compare.k": 10.0,
            "compare.ks": [5.0, 10.0, 14.0]})
        code = main(["compare-heat", "--config", cfg, "--out", str(tmp_path / "ch")])
        assert code == 0
        records = [json.loads(line) for line in
                   (tmp_path / "ch" / "reports.jsonl").read_text().splitlines()]
        fit = [r for r in records if r["name"] == "heat_closeness_affine_fit"]
        assert len(fit) == 1 and fit[0]["pass"]


class TestInequalitiesCommand:
    def test_kit_passes(self, tmp_path):
        cfg = _cfg_file(tmp_path, **{"inequalities.cases": 50_000})
        code = main(["inequalities", "--config", cfg, "--out", str(tmp_path / "iq"),
                     "--seed", "3"])
        assert code == 0
        records = [json.loads(line) for line in
                   (tmp_path / "iq" / "reports.jsonl").read_text().splitlines()]
        names = {r["name"] for r in records}
        assert {"power_difference_sweep", "poincare_polynomial", "poincare_cosine",
                "poincare_random_disc", "poincare_dilation_scaling"} <= names


class TestReporting:
    def test_empty_reports_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report([], tmp_path)

    def test_merge_sorted_by_name_then_m(self, tmp_path):
        reports = [
            upper_check("b_check", {"m": 2.0}, 0.0, 1.0, 0.0),
            upper_check("a_check", {"m": 3.0}, 0.0, 1.0, 0.0),
            upper_check("a_check", {"m": 1.5}, 0.0, 1.0, 0.0),
        ]
        emit_report(reports, tmp_path)
        records = [json.loads(line) for line in
                   (tmp_path / "reports.jsonl").read_text().splitlines()]
        assert [(r["name"], r["params"]["m"]) for r in records] == \
            [("a_check", 1.5), ("a_check", 3.0), ("b_check", 2.0)]

    def test_pass_rule_directions(self):
        assert upper_check("x", {}, 1.0, 1.0, 0.0).passed
        assert not upper_check("x", {}, 1.2, 1.0, 0.1).passed
        assert lower_check("x", {}, -0.05, 0.0, 0.1).passed
        assert not lower_check("x", {}, -0.2, 0.0, 0.1).passed
        assert upper_check("x", {}, 1.2, 1.0, 0.1).margin == pytest.approx(-0.2)
        assert lower_check("x", {}, -0.2, 0.0, 0.1).margin == pytest.approx(-0.2)

    def test_exit_code_logic(self):
        good = upper_check("mass", {}, 0.0, 1.0, 0.0)
        bad = upper_check("mass", {}, 2.0, 1.0, 0.0)
        failing_control = upper_check("control_x", {}, 2.0, 1.0, 0.0)
        passing_control = upper_check("control_x", {}, 0.0, 1.0, 0.0)
        assert overall_exit_code([good, failing_control]) == 0
        assert overall_exit_code([bad, failing_control]) == 1
        assert overall_exit_code([good, passing_control]) == 1

    def test_flat_table_columns(self, tmp_path):
        rep = upper_check("trend", {}, 0.5, 1.0, 0.0,
                          series=[(1.0, 0.5, 1.0), (2.0, 0.4, 1.0)])
        emit_report([rep], tmp_path)
        lines = (tmp_path / "check_trend.dat").read_text().splitlines()
        assert lines[0] == "# t statistic bound margin"
        assert [float(v) for v in lines[1].split()] == [1.0, 0.5, 1.0, 0.5]

    def test_control_name_detection(self):
        assert reporting.is_negative_control("control_anything")
        assert not reporting.is_negative_control("mass_conservation")
