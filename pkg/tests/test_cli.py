import csv
import json
import subprocess
import sys

import pytest

from boolperc.cli import CSV_COLUMNS, ConfigError, config_hash, expand, main, validate

MODEL = {"d": 2, "lambda": 0.3, "law": {"kind": "dirac", "r0": 1}}


@pytest.fixture(autouse=True)
def _env(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    monkeypatch.delenv("BOOLPERC_OUT", raising=False)


def write(tmp_path, config, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(config))
    return str(p)


def theta_config(**kw):
    c = {"command": "theta", "model": dict(MODEL), "params": {"s_grid": [1, 2, 4]}, "n_reps": 60, "seed": 3}
    c.update(kw)
    return c


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_zero_intensity_run(tmp_path):
    c = theta_config(model=dict(MODEL, **{"lambda": 0.0}))
    assert main(["--config", write(tmp_path, c), "--out", str(tmp_path / "o")]) == 0
    rows = read_rows(tmp_path / "o" / "results.csv")
    assert [float(r["mean"]) for r in rows] == [0.0, 0.0, 0.0]
    assert list(rows[0]) == list(CSV_COLUMNS)
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["timestamp"].startswith("1970-01-01")
    assert (tmp_path / "o" / "plot.svg").read_text().lstrip().startswith("<?xml")


def test_byte_identical_and_thread_invariant(tmp_path):
    cfg = write(tmp_path, theta_config())
    outs = []
    for i, th in enumerate(("1", "1", "8")):
        d = tmp_path / f"o{i}"
        assert main(["--config", cfg, "--out", str(d), "--threads", th]) == 0
        outs.append(((d / "results.csv").read_bytes(), (d / "report.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_seed_override_changes_results(tmp_path):
    cfg = write(tmp_path, theta_config(n_reps=200))
    main(["--config", cfg, "--out", str(tmp_path / "a")])
    main(["--config", cfg, "--out", str(tmp_path / "b"), "--seed", "99"])
    a, b = read_rows(tmp_path / "a" / "results.csv"), read_rows(tmp_path / "b" / "results.csv")
    assert a[0]["config_hash"] != b[0]["config_hash"] and b[0]["seed"] == "99"


def test_config_hash_ignores_output_options():
    c = theta_config()
    assert config_hash(c) == config_hash(dict(c, out="x", threads=4, force=True))
    assert config_hash(c) != config_hash(dict(c, seed=4))
    assert len(config_hash(c)) == 16


def test_sweep_and_resume(tmp_path, capsys):
    c = theta_config(sweep={"lambda": [0.1, 0.2, 0.3]})
    cfg, out = write(tmp_path, c), tmp_path / "o"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    log = (out / "runs.log").read_text().splitlines()
    assert len(log) == 3
    rows = read_rows(out / "results.csv")
    assert len(rows) == 9 and len({r["config_hash"] for r in rows}) == 3
    first = (out / "results.csv").read_bytes()
    # drop the last entry: only that run is redone
    (out / "runs.log").write_text("\n".join(log[:2]) + "\n")
    capsys.readouterr()
    assert main(["--config", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed.count("skip") == 2 and printed.count("done") == 1
    assert (out / "results.csv").read_bytes() == first
    assert main(["--config", cfg, "--out", str(out), "--force"]) == 0
    assert len((out / "runs.log").read_text().splitlines()) == 6


def test_expand_defaults():
    runs = expand({"command": "theta", "model": dict(MODEL), "params": {"s_grid": [1]},
                   "sweep": {"lambda": [0.1, 0.2]}})
    assert [r["model"]["lambda"] for r in runs] == [0.1, 0.2]
    assert runs[0]["seed"] == 0 and runs[0]["n_reps"] == 1000


@pytest.mark.parametrize("config,where", [
    ({"command": "nope", "model": MODEL, "params": {}}, "$"),
    ({"command": "theta", "model": MODEL, "params": {}}, "s_grid"),
    ({"command": "theta", "model": dict(MODEL, d=7), "params": {"s_grid": [1]}}, "$.model"),
    ({"command": "theta", "model": dict(MODEL, law={"kind": "foo"}), "params": {"s_grid": [1]}}, "$.model"),
    ({"command": "osss", "model": MODEL, "params": {"s": 1, "L": 8}}, "r"),
])
def test_validate_rejects(config, where):
    with pytest.raises(ConfigError) as exc:
        validate(config)
    assert where in str(exc.value)


def test_exit_codes(tmp_path, capsys):
    out = ["--out", str(tmp_path / "o")]
    assert main(["--config", write(tmp_path, {"command": "theta"})] + out) == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["--config", str(tmp_path / "bad.json")] + out) == 2
    assert main(["--config", str(tmp_path / "missing.json")] + out) == 2
    bad = theta_config(params={"s_grid": [2, 1]})
    assert main(["--config", write(tmp_path, bad)] + out) == 3
    assert "strictly increasing" in capsys.readouterr().err
    assert main(["--config", write(tmp_path, theta_config()), "--threads", "0"] + out) == 2


def test_out_precedence(tmp_path, monkeypatch):
    cfg = write(tmp_path, theta_config(out=str(tmp_path / "from_config")))
    assert main(["--config", cfg]) == 0
    assert (tmp_path / "from_config" / "results.csv").exists()
    assert main(["--config", cfg, "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "results.csv").exists()
    monkeypatch.setenv("BOOLPERC_OUT", str(tmp_path / "env"))
    assert main(["--config", cfg, "--out", str(tmp_path / "flag2")]) == 0
    assert (tmp_path / "env" / "results.csv").exists() and not (tmp_path / "flag2").exists()


@pytest.mark.parametrize("command,params", [
    ("crossing", {"r": 3}),
    ("ratio", {"r_grid": [1, 2, 3]}),
    ("decay-fit", {"s_grid": [1, 2, 3, 4], "s_min": 1}),
    ("vacant", {"r": 3, "h": 0.2}),
])
def test_other_commands(tmp_path, command, params):
    model = {"d": 2, "lambda": 0.1, "law": {"kind": "exp_tail", "c": 1}}
    c = {"command": command, "model": model, "params": params, "n_reps": 40, "seed": 1}
    assert main(["--config", write(tmp_path, c), "--out", str(tmp_path / "o")]) == 0
    rows = read_rows(tmp_path / "o" / "results.csv")
    assert rows and all(r["command"] == command for r in rows)


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, theta_config(n_reps=10))
    res = subprocess.run([sys.executable, "-m", "boolperc", "--config", cfg, "--out", str(tmp_path / "o")],
                         capture_output=True, text=True, env={"SOURCE_DATE_EPOCH": "0", "PATH": "/usr/bin:/bin"})
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o" / "results.csv").exists()
