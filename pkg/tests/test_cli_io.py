import json

import numpy as np
import pytest

from eprop_stdp import cli
from eprop_stdp.errors import ConfigError
from eprop_stdp.experiments import SpikeTimingConfig, TwoNeuronConfig, run_spike_timing, run_two_neuron
from eprop_stdp.io import (EPOCH_COLUMNS, OUT_DIR_ENV, TRACE_COLUMNS, load_config, read_csv, resolve_out_dir,
                           write_sidecar, write_training, write_two_neuron)


def test_trace_csv_schema(tmp_path):
    path = write_two_neuron(run_two_neuron(TwoNeuronConfig(T=1000)), tmp_path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1001
    assert lines[0] == ",".join(TRACE_COLUMNS)
    header, data = read_csv(path)
    assert tuple(header) == TRACE_COLUMNS and data.shape == (1000, 9)


def test_lif_family_eps_u_column_empty(tmp_path):
    path = write_two_neuron(run_two_neuron(TwoNeuronConfig(model="stdp-lif", T=50)), tmp_path)
    rows = [r.split(",") for r in path.read_text().splitlines()[1:]]
    assert all(r[6] == "" for r in rows)


def test_trace_csv_byte_identical_rerun(tmp_path):
    a = write_two_neuron(run_two_neuron(TwoNeuronConfig(seed=4, T=200)), tmp_path / "a")
    b = write_two_neuron(run_two_neuron(TwoNeuronConfig(seed=4, T=200)), tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()


def test_epoch_csv(tmp_path):
    s = run_spike_timing(SpikeTimingConfig(epochs=2, n_runs=2, T=50, batch=2), "lif")
    header, data = read_csv(write_training(s, tmp_path))
    assert tuple(header) == EPOCH_COLUMNS and data.shape == (3, 5)
    assert np.allclose(data[:, 1], s.mse_mean)


def test_sidecar_round_trip(tmp_path):
    cfg = TwoNeuronConfig(seed=9, T=120, weight=0.2)
    side = write_sidecar(tmp_path / "x.csv", "two-neuron", cfg)
    doc = json.loads(side.read_text())
    assert doc["format_version"] == "1" and doc["seed"] == 9
    allowed = set(TwoNeuronConfig.__dataclass_fields__)
    assert TwoNeuronConfig(**load_config(side, "two-neuron", allowed)) == cfg


def test_load_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"T": 10, "colour": "red"}))
    with pytest.raises(ConfigError):
        load_config(p, "two-neuron", {"T"})


def test_load_config_rejects_other_command(tmp_path):
    p = write_sidecar(tmp_path / "x.csv", "gradcheck", {"seed": 1})
    with pytest.raises(ConfigError):
        load_config(p, "two-neuron", {"seed"})


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(p, "two-neuron", set())


def test_out_dir_env_override(monkeypatch, tmp_path):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    assert resolve_out_dir() == tmp_path / "env"
    assert resolve_out_dir(tmp_path / "flag") == tmp_path / "flag"


# command line

def test_cli_two_neuron(tmp_path, capsys):
    assert cli.main(["two-neuron", "--model", "izhikevich", "--seed", "7", "--out", str(tmp_path)]) == 0
    csv_path = tmp_path / "two_neuron_izhikevich_seed7.csv"
    assert len(csv_path.read_text().splitlines()) == 1001
    doc = json.loads(csv_path.with_suffix(".json").read_text())
    assert doc["config"]["seed"] == 7 and "rises_then_falls" in doc["results"]


def test_cli_config_round_trip(tmp_path):
    assert cli.main(["two-neuron", "--model", "stdp-lif", "--steps", "300", "--seed", "2",
                     "--out", str(tmp_path / "a")]) == 0
    first = tmp_path / "a" / "two_neuron_stdp-lif_seed2.csv"
    assert cli.main(["two-neuron", "--config", str(first.with_suffix(".json")), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / first.name).read_bytes() == first.read_bytes()


def test_cli_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
    assert cli.main(["two-neuron", "--model", "lif", "--steps", "20"]) == 0
    assert (tmp_path / "two_neuron_lif_seed0.csv").exists()


def test_cli_spike_timing_zero_epochs(tmp_path):
    assert cli.main(["spike-timing", "--model", "lif", "--epochs", "0", "--runs", "2", "--steps", "60",
                     "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "spike_timing_lif_seed0.csv")
    assert data.shape == (1, 5)


def test_cli_gradcheck(capsys):
    assert cli.main(["gradcheck", "--model", "stdp-lif", "--neurons", "4", "--steps", "100"]) == 0
    out = capsys.readouterr().out
    err = float(out.split("max_rel_err=")[1])
    assert err <= 1e-6


def test_cli_gradcheck_reports_failure(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"tolerance": 0.0}))
    assert cli.main(["gradcheck", "--config", str(p), "--model", "lif"]) == cli.EXIT_CHECK_FAILED


@pytest.mark.parametrize("argv", [["two-neuron", "--bogus"], ["nope"], [], ["two-neuron", "--model", "alif"],
                                  ["spike-timing", "--model", "izhikevich"]])
def test_cli_usage_errors(argv, capsys):
    assert cli.main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_config_error(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"foo": 1}))
    assert cli.main(["two-neuron", "--config", str(p)]) == 1
    assert cli.main(["two-neuron", "--config", str(tmp_path / "missing.json")]) == 1


def test_cli_invalid_value(tmp_path):
    assert cli.main(["two-neuron", "--steps", "3", "--out", str(tmp_path)]) == 1


def test_cli_divergence_exit_code(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"current_scale": -1e300}))
    assert cli.main(["two-neuron", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_cli_unwritable_out(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["two-neuron", "--steps", "20", "--out", str(blocker / "sub")]) == 2
