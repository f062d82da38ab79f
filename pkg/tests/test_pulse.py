import math

import numpy as np
import pytest

from rose_echo import (ChsPulse, SignalPulse, adiabaticity_ratio, bandwidth,
                       chs_drive, is_adiabatic, signal_for_area)
from rose_echo.pulse import dump_waveforms, sweep_phase

from conftest import BETA, MU, OMEGA0, TWO_PI


def test_drive_at_center(nominal_pulse):
    rabi, det = chs_drive(0.0, nominal_pulse)
    assert rabi == pytest.approx(OMEGA0, rel=1e-14)
    assert det == pytest.approx(0.0, abs=1e-12)


def test_drive_sech_tanh_values(nominal_pulse):
    # direct evaluation oracle at t - t_center = 1/beta
    t = 1.0 / BETA
    rabi, det = chs_drive(t, nominal_pulse)
    assert rabi == pytest.approx(OMEGA0 / math.cosh(1.0), rel=1e-12)
    assert det == pytest.approx(MU * BETA * math.tanh(1.0), rel=1e-12)
    # at the nominal amplitude this is ~ 2pi * 518.7 kHz
    assert rabi == pytest.approx(TWO_PI * 518.7e3, rel=1e-3)


def test_drive_outside_window(nominal_pulse):
    half = nominal_pulse.window_half_width / BETA
    for t in (half * 1.01, -half * 1.01, 1.0, -1.0):
        rabi, _ = chs_drive(t, nominal_pulse)
        assert rabi == 0.0


def test_drive_offset_enters_detuning():
    p = ChsPulse(OMEGA0, BETA, MU, t_center=0.0, omega_offset=TWO_PI * 50e3)
    _, det = chs_drive(0.0, p)
    assert det == pytest.approx(TWO_PI * 50e3, rel=1e-14)


def test_envelope_even_sweep_odd(nominal_pulse):
    tau = np.linspace(1e-9, 4.9 / BETA, 173)
    rabi_p, det_p = chs_drive(tau, nominal_pulse)
    rabi_m, det_m = chs_drive(-tau, nominal_pulse)
    assert np.allclose(rabi_p, rabi_m, rtol=1e-12, atol=0.0)
    assert np.allclose(det_p, -det_m, rtol=1e-12, atol=0.0)


def test_peak_at_center(nominal_pulse):
    t = np.linspace(*nominal_pulse.window, 4001)
    rabi, _ = chs_drive(t, nominal_pulse)
    assert np.max(rabi) <= OMEGA0
    assert chs_drive(nominal_pulse.t_center, nominal_pulse)[0] == OMEGA0


def test_bandwidth_values(nominal_pulse):
    assert bandwidth(nominal_pulse) == pytest.approx(TWO_PI * 800e3, rel=1e-14)
    p0 = ChsPulse(OMEGA0, BETA, 0.0, t_center=0.0)
    assert bandwidth(p0) == 0.0
    p2 = ChsPulse(OMEGA0, TWO_PI * 100e3, 2.0, t_center=0.0)
    assert bandwidth(p2) == pytest.approx(TWO_PI * 400e3, rel=1e-14)


def test_adiabaticity_ratio_values(nominal_pulse):
    assert adiabaticity_ratio(nominal_pulse) == pytest.approx(0.25, rel=1e-12)
    assert is_adiabatic(nominal_pulse)
    assert adiabaticity_ratio(ChsPulse(OMEGA0, BETA, 0.0, t_center=0.0)) == 0.0
    big = ChsPulse(1e4 * OMEGA0, BETA, MU, t_center=0.0)
    assert adiabaticity_ratio(big) < 1e-7
    halved = ChsPulse(OMEGA0 / 2, BETA, MU, t_center=0.0)
    assert adiabaticity_ratio(halved) == pytest.approx(1.0, rel=1e-12)
    assert not is_adiabatic(halved)
    assert is_adiabatic(halved, threshold=1.0)


def test_pure_functions_deterministic(nominal_pulse):
    assert bandwidth(nominal_pulse) == bandwidth(nominal_pulse)
    assert adiabaticity_ratio(nominal_pulse) == adiabaticity_ratio(nominal_pulse)
    r1 = chs_drive(0.3e-6, nominal_pulse)
    r2 = chs_drive(0.3e-6, nominal_pulse)
    assert r1 == r2


def test_pulse_validation():
    with pytest.raises(ValueError):
        ChsPulse(0.0, BETA, MU, t_center=0.0)
    with pytest.raises(ValueError):
        ChsPulse(OMEGA0, -BETA, MU, t_center=0.0)
    with pytest.raises(ValueError):
        ChsPulse(OMEGA0, BETA, -0.1, t_center=0.0)
    with pytest.raises(ValueError):
        ChsPulse(OMEGA0, BETA, MU, t_center=0.0, window_half_width=2.0)


def test_sweep_phase_matches_quadrature(nominal_pulse):
    # oracle: trapezoid integration of the instantaneous detuning
    from rose_echo.pulse import chs_detuning
    t_end = 3.7 / BETA
    t = np.linspace(0.0, t_end, 200001)
    expected = np.trapezoid(chs_detuning(t, nominal_pulse), t)
    assert sweep_phase(t_end, nominal_pulse) == pytest.approx(expected, rel=1e-9)


def test_signal_area_and_cap():
    sig = SignalPulse(amplitude=1e4, t_center=0.0, duration=1e-6)
    sigma = 0.25e-6
    assert sig.area() == pytest.approx(1e4 * sigma * math.sqrt(2 * math.pi), rel=1e-12)
    sq = SignalPulse(amplitude=1e4, t_center=0.0, duration=1e-6, shape="square")
    assert sq.area() == pytest.approx(1e-2, rel=1e-12)
    with pytest.raises(ValueError):
        SignalPulse(amplitude=1e7, t_center=0.0, duration=1e-6)


def test_signal_area_matches_envelope_integral():
    sig = signal_for_area(0.05 * math.pi, t_center=0.0, duration=1.6e-6)
    lo, hi = sig.window
    t = np.linspace(lo, hi, 100001)
    integral = np.trapezoid(sig.envelope(t), t)
    # the +-4 sigma truncation keeps all but ~6e-5 of the area
    assert integral == pytest.approx(sig.area(), rel=1e-4)
    assert sig.area() == pytest.approx(0.05 * math.pi, rel=1e-12)


def test_signal_shapes_and_validation():
    with pytest.raises(ValueError):
        SignalPulse(amplitude=1e3, t_center=0.0, duration=1e-6, shape="triangle")
    with pytest.raises(ValueError):
        SignalPulse(amplitude=-1.0, t_center=0.0, duration=1e-6)
    sq = SignalPulse(amplitude=1e4, t_center=0.0, duration=1e-6, shape="square")
    assert sq.envelope(0.0) == 1e4
    assert sq.envelope(0.51e-6) == 0.0


def test_waveform_dump(tmp_path, nominal_pulse):
    f1 = tmp_path / "rabi.csv"
    f2 = tmp_path / "det.csv"
    dump_waveforms(nominal_pulse, f1, f2, n_points=101)
    rows = f1.read_text().strip().splitlines()
    assert rows[0] == "time_s,rabi_rad_per_s"
    assert len(rows) == 102
    t_mid, rabi_mid = map(float, rows[51].split(","))
    assert t_mid == pytest.approx(0.0, abs=1e-15)
    assert rabi_mid == pytest.approx(OMEGA0, rel=1e-9)
