import csv
import dataclasses
import io
import subprocess
import sys

import pytest

from otabyz import cli
from otabyz.config import (CSV_COLUMNS, PRESETS, dump_config, metrics_csv, parse_config,
                           preset_config)
from otabyz.engine import ConfigError, RoundMetrics, SimConfig

TINY = ["N=6", "G=3", "rounds=3", "data.source=synth", "data.synth_d=4",
        "data.synth_classes=10", "data.synth_train=300", "data.synth_test=50"]


def tiny_args(*extra):
    return [a for kv in TINY for a in ("--set", kv)] + list(extra)


def test_empty_config_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("# nothing here\n\n")
    assert parse_config(path) == SimConfig()


def test_dotted_keys_and_aliases(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("ota.sigma2 = 0.5\nsgd.lambda = 0.1\nattack.kind = gaussian\nattack.B = 3\n"
                    "geomed.tol = auto\nbound = false\n")
    cfg = parse_config(path)
    assert cfg.ota.sigma2 == 0.5 and cfg.sgd.lam == 0.1
    assert cfg.attack.byzantine_count == 3 and cfg.geomed.tol is None


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 4\nrounds = 7\n")
    cfg = parse_config(path, ["seed=9"])
    assert cfg.seed == 9 and cfg.rounds == 7


def test_zero_noise_accepted():
    assert parse_config(overrides=["ota.sigma2=0"]).ota.sigma2 == 0.0


@pytest.mark.parametrize("pairs", [["G=30"], ["nonsense=1"], ["rounds=ten"], ["ota.P=-1"],
                                   ["attack.kind=gaussian", "attack.B=100"]])
def test_bad_configs(pairs):
    with pytest.raises(ConfigError):
        parse_config(overrides=pairs)


def test_missing_file():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/run.cfg")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_dump_round_trip(name, tmp_path):
    cfg = preset_config(name)
    path = tmp_path / "dump.cfg"
    path.write_text(dump_config(cfg))
    assert parse_config(path) == cfg


def test_metrics_csv_format():
    rows = [RoundMetrics(1, 0.5, 0.25, 0.75, None, None, 0, 3),
            RoundMetrics(2, empty_groups=1)]
    text = metrics_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == list(CSV_COLUMNS)
    assert parsed[1] == ["1", "0.5", "0.25", "0.75", "", "", "0", "3"]
    assert parsed[2] == ["2", "", "", "", "", "", "1", ""]


def test_cli_run_writes_rows(tmp_path):
    out = tmp_path / "m.csv"
    assert cli.main(["run", *tiny_args("--out", str(out))]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["round"] for r in rows] == ["1", "2", "3"]
    assert all(r["test_acc"] for r in rows)


def test_cli_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = tiny_args("--preset", "fig1-geomed", "--set", "attack.B=1", "--seed", "5")
    assert cli.main(["run", *args, "--out", str(a)]) == 0
    assert cli.main(["run", *args, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_seed_flag_overrides_config(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("seed = 1\n")
    dumped = tmp_path / "resolved.cfg"
    assert cli.main(["run", "--config", str(cfgfile), "--seed", "8", *tiny_args(),
                     "--dump-config", str(dumped), "--out", str(tmp_path / "m.csv")]) == 0
    assert "seed = 8" in dumped.read_text().splitlines()


def test_cli_bad_config_exit_code(tmp_path):
    assert cli.main(["run", "--set", "G=30"]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert cli.main(["run", "--preset", "nope"]) == 2


def test_cli_presets_lists_all(capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_theorem_preset_has_decreasing_bound_column(tmp_path):
    out = tmp_path / "thm.csv"
    assert cli.main(["run", "--preset", "theorem-validation", "--set", "rounds=8",
                     "--out", str(out)]) == 0
    bounds = [float(r["bound"]) for r in csv.DictReader(out.open())]
    assert len(bounds) == 8
    assert all(b >= c for b, c in zip(bounds, bounds[1:]))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "otabyz", "presets"], capture_output=True,
                          text=True, check=True)
    assert "theorem-validation" in proc.stdout


def test_validate_theorem_small(capsys):
    rc = cli.main(["validate-theorem", "--seeds", "3", "--rounds", "5"])
    out = capsys.readouterr().out
    assert out.count("B=") == 3
    assert rc in (0, 1) and ("PASS" in out or "FAIL" in out)
    assert out.strip().splitlines()[-1].startswith(("PASS", "FAIL"))


def test_presets_are_valid():
    for name in PRESETS:
        cfg = preset_config(name)
        cfg.validate()
        assert dataclasses.is_dataclass(cfg)
