import csv
import json
import math

import numpy as np
import pytest

from rose_echo.cli import (EXIT_CONFIG_INVALID, EXIT_INSUFFICIENT_DATA,
                           EXIT_OK, load_config, main)
from rose_echo.model import EfficiencyModel, efficiency_approx

BASE_CONFIG = """\
[pulse]
omega0_hz = 800e3
beta_hz = 400e3
mu = 1.0

[sequence]
t12_us = 4.0
t23_us = 8.0
signal_area_pi = 0.05

[ensemble]
profile = flat
span_factor = 2.0
n_points = 201

[medium]
alpha_L = 2.3
t2_us = 400
t2_high_us = 1400

[model]
eta_pop = 0.80
eta_phase = 0.85

[output]
directory = out
formats = csv,json
"""


def write_config(tmp_path, text=BASE_CONFIG, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- config loading ----------------------------------------------------------

def test_load_config_units(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.rephasing1.omega0 == pytest.approx(2 * math.pi * 800e3)
    assert cfg.rephasing1.t_center == pytest.approx(4e-6)
    assert cfg.rephasing2.t_center == pytest.approx(12e-6)
    assert cfg.t2 == pytest.approx(400e-6)
    assert cfg.t2_high == pytest.approx(1.4e-3)
    assert cfg.signal_area == pytest.approx(0.05 * math.pi)


def test_unknown_key_rejected(tmp_path):
    bad = BASE_CONFIG.replace("mu = 1.0", "mu = 1.0\nchirp_rate = 3")
    assert main(["pulse-check", "--config",
                 str(write_config(tmp_path, bad))]) == EXIT_CONFIG_INVALID


def test_unknown_section_rejected(tmp_path):
    bad = BASE_CONFIG + "\n[laser]\npower_mw = 10\n"
    assert main(["pulse-check", "--config",
                 str(write_config(tmp_path, bad))]) == EXIT_CONFIG_INVALID


def test_missing_section_rejected(tmp_path):
    bad = BASE_CONFIG.replace("[medium]\nalpha_L = 2.3\nt2_us = 400\n", "")
    assert main(["pulse-check", "--config",
                 str(write_config(tmp_path, bad))]) == EXIT_CONFIG_INVALID


def test_invalid_values_rejected(tmp_path):
    bad = BASE_CONFIG.replace("t23_us = 8.0", "t23_us = 2.0")  # t23 < t12
    assert main(["simulate", "--config",
                 str(write_config(tmp_path, bad))]) == EXIT_CONFIG_INVALID
    bad = BASE_CONFIG.replace("signal_area_pi = 0.05", "signal_area_pi = 0.5")
    assert main(["simulate", "--config",
                 str(write_config(tmp_path, bad))]) == EXIT_CONFIG_INVALID


def test_missing_file_rejected(tmp_path):
    assert main(["simulate", "--config",
                 str(tmp_path / "nope.ini")]) == EXIT_CONFIG_INVALID


# -- pulse-check -------------------------------------------------------------

def test_pulse_check_nominal_parameters(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["pulse-check", "--config", str(cfg),
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "800000 Hz" in out
    assert "0.25" in out
    assert "PASS" in out
    assert (tmp_path / "o" / "pulse_rabi.csv").exists()
    assert (tmp_path / "o" / "pulse_detuning.csv").exists()


def test_pulse_check_fails_at_half_amplitude(tmp_path, capsys):
    text = BASE_CONFIG.replace("omega0_hz = 800e3", "omega0_hz = 400e3")
    assert main(["pulse-check", "--config", str(write_config(tmp_path, text)),
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "ratio" in out and "1" in out


def test_pulse_check_warns_without_sweep(tmp_path, capsys):
    text = BASE_CONFIG.replace("mu = 1.0", "mu = 0.0")
    assert main(["pulse-check", "--config", str(write_config(tmp_path, text)),
                 "--out", str(tmp_path / "o")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "no sweep" in out
    assert "bandwidth: 0 Hz" in out


# -- simulate ----------------------------------------------------------------

def test_simulate_nominal_config(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    echo = summary["signal_mode_echo"]
    assert echo is not None
    assert abs(echo["time_s"] - 16e-6) < 1e-6
    assert echo["mode"] == 1
    assert summary["eta_pop"] is not None
    # pipeline identity: the reported efficiency is the model evaluated at
    # the measured microscopic coefficients
    m = EfficiencyModel(alpha_L=2.3, t23=8e-6, t2=400e-6,
                        eta_pop=summary["eta_pop"],
                        eta_phase=summary["eta_phase"])
    assert summary["predicted_efficiency"] == pytest.approx(
        efficiency_approx(m), rel=1e-12)
    assert 0.0 < summary["predicted_efficiency"] < 0.55
    assert (out / "trace.csv").exists()
    assert (out / "echoes.json").exists()
    stdout = capsys.readouterr().out
    assert "signal-mode echo" in stdout


def test_simulate_one_rephasing_reports_silence(tmp_path):
    text = BASE_CONFIG.replace("signal_area_pi = 0.05",
                               "signal_area_pi = 0.05\nn_rephasings = 1")
    out = tmp_path / "sim1"
    assert main(["simulate", "--config", str(write_config(tmp_path, text)),
                 "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["signal_mode_echo"] is None
    assert summary["message"] == "no signal-mode echo"


def test_simulate_zero_signal_empty_echo_list(tmp_path):
    text = BASE_CONFIG.replace("signal_area_pi = 0.05", "signal_area_pi = 0.0")
    out = tmp_path / "sim0"
    assert main(["simulate", "--config", str(write_config(tmp_path, text)),
                 "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "echoes.json").read_text()) == []
    summary = json.loads((out / "summary.json").read_text())
    assert summary["detected_echoes"] == []


def test_simulate_deterministic_outputs(tmp_path):
    cfg = write_config(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == EXIT_OK
    assert main(["simulate", "--config", str(cfg), "--out", str(out_b),
                 "--threads", "3"]) == EXIT_OK
    for name in ("trace.csv", "echoes.json", "summary.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


# -- curve -------------------------------------------------------------------

def read_curve(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def test_curve_table(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "c"
    assert main(["curve", "--config", str(cfg), "--out", str(out),
                 "--min", "0", "--max", "5", "--step", "0.01"]) == EXIT_OK
    cols = read_curve(out / "curve.csv")
    i = int(np.argmax(cols["eta_ideal"]))
    assert cols["alpha_L"][i] == pytest.approx(2.0, abs=1e-9)
    assert cols["eta_ideal"][i] == pytest.approx(0.5413, abs=1e-4)
    j = int(np.argmax(cols["eta_approx"]))
    # x^2 exp(-0.9 x) peaks at x = 2/0.9
    assert cols["alpha_L"][j] == pytest.approx(2.22, abs=0.01)
    assert cols["eta_approx"][j] == pytest.approx(0.4457, abs=1e-3)
    assert np.all(cols["eta_band_low"] <= cols["eta_band_high"] + 1e-15)


def test_curve_degenerate_range(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "c0"
    assert main(["curve", "--config", str(cfg), "--out", str(out),
                 "--min", "0", "--max", "0", "--step", "0.01"]) == EXIT_OK
    cols = read_curve(out / "curve.csv")
    assert len(cols["alpha_L"]) == 1
    assert cols["eta_ideal"][0] == 0.0
    assert cols["eta_approx"][0] == 0.0


# -- fit ---------------------------------------------------------------------

def write_synthetic_csv(path, eta_pop=0.80, eta_phase=0.85, sigmas=False):
    rows = []
    for aL in np.linspace(0.3, 4.0, 12):
        m = EfficiencyModel(alpha_L=float(aL), t23=8e-6, t2=400e-6,
                            eta_pop=eta_pop, eta_phase=eta_phase)
        rows.append((float(aL), efficiency_approx(m)))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if sigmas:
            writer.writerow(["alpha_L", "efficiency", "sigma_alpha_L",
                             "sigma_efficiency"])
            for aL, eff in rows:
                writer.writerow([aL, eff, 0.02, 0.01])
        else:
            writer.writerow(["alpha_L", "efficiency"])
            writer.writerows(rows)


def test_fit_round_trip_from_csv(tmp_path):
    data = tmp_path / "data.csv"
    write_synthetic_csv(data)
    out = tmp_path / "fit"
    assert main(["fit", "--data", str(data), "--t23-us", "8",
                 "--t2-us", "400", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "fit_report.json").read_text())
    assert report["eta_pop"] == pytest.approx(0.80, abs=1e-4)
    assert report["eta_phase"] == pytest.approx(0.85, abs=1e-4)
    assert report["weighted"] is False


def test_fit_with_sigma_columns_uses_weights(tmp_path):
    data = tmp_path / "data.csv"
    write_synthetic_csv(data, sigmas=True)
    out = tmp_path / "fitw"
    assert main(["fit", "--data", str(data), "--t23-us", "8",
                 "--t2-us", "400", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "fit_report.json").read_text())
    assert report["weighted"] is True


def test_fit_two_rows_insufficient(tmp_path):
    data = tmp_path / "two.csv"
    data.write_text("alpha_L,efficiency\n1.0,0.2\n2.0,0.4\n")
    assert main(["fit", "--data", str(data), "--t23-us", "8",
                 "--t2-us", "400", "--out", str(tmp_path)]) == EXIT_INSUFFICIENT_DATA


def test_fit_synthetic_mode_seeded(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "syn"
    assert main(["fit", "--config", str(cfg), "--synthetic", "12",
                 "--seed", "42", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "fit_report.json").read_text())
    assert report["eta_pop"] == pytest.approx(0.80, abs=0.05)
    assert report["eta_phase"] == pytest.approx(0.85, abs=0.05)
    assert (out / "synthetic_data.csv").exists()

    out2 = tmp_path / "syn2"
    assert main(["fit", "--config", str(cfg), "--synthetic", "12",
                 "--seed", "42", "--out", str(out2)]) == EXIT_OK
    assert ((out / "synthetic_data.csv").read_bytes()
            == (out2 / "synthetic_data.csv").read_bytes())


def test_fit_requires_arguments(tmp_path):
    assert main(["fit", "--t23-us", "8"]) == EXIT_CONFIG_INVALID
