"""Adiabatic rephasing (complex hyperbolic secant) pulses and weak signal pulses.

A CHS pulse has a sech amplitude envelope and a tanh frequency sweep,

    Omega(t) = omega0 * sech(beta * (t - t_center))
    delta(t) = omega_offset + mu * beta * tanh(beta * (t - t_center))

and plays the role of a pi pulse with much better robustness, provided the
adiabatic condition mu * beta**2 << omega0**2 holds.  Its swept bandwidth is
2 * mu * beta.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .modes import ModeLabel, REPHASING_MODE, SIGNAL_MODE

# sech(5) ~ 0.013: the default truncation keeps essentially all pulse energy
DEFAULT_WINDOW_HALF_WIDTH = 5.0
DEFAULT_ADIABATIC_THRESHOLD = 0.25

# arguments beyond this make cosh overflow; the envelope there is < 1e-21 anyway
_COSH_CLIP = 50.0


@dataclass(frozen=True)
class ChsPulse:
    """Complex hyperbolic secant rephasing pulse.

    omega0, beta and omega_offset are angular frequencies (rad/s); mu is the
    dimensionless sweep parameter; window_half_width is the truncation
    half-width in units of 1/beta.
    """

    omega0: float
    beta: float
    mu: float
    t_center: float
    omega_offset: float = 0.0
    mode: ModeLabel = REPHASING_MODE
    window_half_width: float = DEFAULT_WINDOW_HALF_WIDTH

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.window_half_width < 3:
            raise ValueError(
                f"window_half_width must be >= 3, got {self.window_half_width}"
            )

    @property
    def window(self) -> tuple[float, float]:
        """Support of the truncated pulse, (t_start, t_end) in seconds."""
        half = self.window_half_width / self.beta
        return (self.t_center - half, self.t_center + half)


def chs_drive(t, p: ChsPulse):
    """Rabi frequency and instantaneous detuning of a CHS pulse at time t.

    Returns (rabi, instantaneous_detuning) in rad/s.  The envelope is
    truncated to zero outside the pulse window; the sweep value is reported
    everywhere (it is only meaningful while the pulse is on).  Accepts scalar
    or array t.
    """
    t = np.asarray(t, dtype=float)
    x = p.beta * (t - p.t_center)
    inside = np.abs(x) <= p.window_half_width
    xc = np.clip(x, -_COSH_CLIP, _COSH_CLIP)
    rabi = np.where(inside, p.omega0 / np.cosh(xc), 0.0)
    detuning = p.omega_offset + p.mu * p.beta * np.tanh(x)
    if rabi.ndim == 0:
        return float(rabi), float(detuning)
    return rabi, detuning


def chs_rabi_smooth(t, p: ChsPulse):
    """Untruncated sech envelope, for integrators working inside the window.

    Sampling the truncated envelope at a stage time that rounds just past
    the window edge would inject an O(dt) error; integration over exactly
    the window interval must see the smooth function.
    """
    t = np.asarray(t, dtype=float)
    xc = np.clip(p.beta * (t - p.t_center), -_COSH_CLIP, _COSH_CLIP)
    rabi = p.omega0 / np.cosh(xc)
    if rabi.ndim == 0:
        return float(rabi)
    return rabi


def chs_detuning(t, p: ChsPulse):
    """Instantaneous sweep detuning omega_offset + mu*beta*tanh(...)."""
    t = np.asarray(t, dtype=float)
    det = p.omega_offset + p.mu * p.beta * np.tanh(p.beta * (t - p.t_center))
    if det.ndim == 0:
        return float(det)
    return det


def sweep_phase(t, p: ChsPulse):
    """Accumulated sweep phase int_{t_center}^{t} delta(t') dt' in rad.

    Needed to relate the frame following the instantaneous pulse frequency
    back to the fixed line-center frame.  Uses log(cosh) in an
    overflow-safe form.
    """
    t = np.asarray(t, dtype=float)
    x = p.beta * (t - p.t_center)
    logcosh = np.logaddexp(x, -x) - math.log(2.0)
    phase = p.omega_offset * (t - p.t_center) + p.mu * logcosh
    if phase.ndim == 0:
        return float(phase)
    return phase


def bandwidth(p: ChsPulse) -> float:
    """Swept bandwidth 2*mu*beta in rad/s."""
    return 2.0 * p.mu * p.beta


def adiabaticity_ratio(p: ChsPulse) -> float:
    """mu * beta**2 / omega0**2; small values mean safely adiabatic."""
    return p.mu * p.beta**2 / p.omega0**2


def is_adiabatic(p: ChsPulse, threshold: float = DEFAULT_ADIABATIC_THRESHOLD) -> bool:
    return adiabaticity_ratio(p) <= threshold


@dataclass(frozen=True)
class SignalPulse:
    """Weak storage pulse.

    amplitude is the peak Rabi frequency (rad/s).  duration parametrizes the
    envelope: a gaussian has sigma = duration/4 and is truncated at
    +-duration around t_center; a square pulse is on for exactly duration.
    The pulse area must stay below 0.2*pi so the atomic response is linear.
    """

    amplitude: float
    t_center: float
    duration: float
    shape: str = "gaussian"
    mode: ModeLabel = SIGNAL_MODE

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if not self.duration > 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if self.shape not in ("gaussian", "square"):
            raise ValueError(f"shape must be 'gaussian' or 'square', got {self.shape!r}")
        if self.area() >= 0.2 * math.pi:
            raise ValueError(
                f"pulse area {self.area():.3f} rad is outside the weak-excitation "
                f"regime (must be < 0.2*pi)"
            )

    def area(self) -> float:
        """Pulse area amplitude * effective duration, in rad."""
        if self.shape == "square":
            return self.amplitude * self.duration
        sigma = self.duration / 4.0
        return self.amplitude * sigma * math.sqrt(2.0 * math.pi)

    @property
    def window(self) -> tuple[float, float]:
        if self.shape == "square":
            half = self.duration / 2.0
        else:
            half = self.duration  # +-4 sigma
        return (self.t_center - half, self.t_center + half)

    def envelope(self, t):
        """Rabi envelope in rad/s at time t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.window
        inside = (t >= lo) & (t <= hi)
        env = np.where(inside, self.envelope_smooth(t), 0.0)
        if env.ndim == 0:
            return float(env)
        return env

    def envelope_smooth(self, t):
        """Envelope without the window cut, for integration over the window."""
        t = np.asarray(t, dtype=float)
        if self.shape == "square":
            env = np.full_like(t, self.amplitude)
        else:
            sigma = self.duration / 4.0
            env = self.amplitude * np.exp(-0.5 * ((t - self.t_center) / sigma) ** 2)
        if env.ndim == 0:
            return float(env)
        return env


def signal_for_area(area: float, t_center: float, duration: float,
                    shape: str = "gaussian", mode: ModeLabel = SIGNAL_MODE) -> SignalPulse:
    """Build a SignalPulse with a prescribed area (rad)."""
    if shape == "square":
        amplitude = area / duration
    else:
        sigma = duration / 4.0
        amplitude = area / (sigma * math.sqrt(2.0 * math.pi))
    return SignalPulse(amplitude=amplitude, t_center=t_center, duration=duration,
                       shape=shape, mode=mode)


def default_time_step(p: ChsPulse, delta_max: float = 0.0, resolution: float = 50.0) -> float:
    """Integration step resolving the fastest pulse/detuning timescale.

    dt = (1/resolution) * min(1/beta, 2*pi/omega0, 2*pi/|delta|_max).
    """
    scales = [1.0 / p.beta, 2.0 * math.pi / p.omega0]
    if delta_max > 0:
        scales.append(2.0 * math.pi / delta_max)
    return min(scales) / resolution


def dump_waveforms(p: ChsPulse, path_rabi, path_detuning, n_points: int = 2001) -> None:
    """Write (time_s, rabi_rad_per_s) and (time_s, detuning_rad_per_s) CSVs."""
    lo, hi = p.window
    t = np.linspace(lo, hi, n_points)
    rabi, det = chs_drive(t, p)
    with open(path_rabi, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "rabi_rad_per_s"])
        for ti, ri in zip(t, rabi):
            writer.writerow([f"{ti:.12e}", f"{ri:.12e}"])
    with open(path_detuning, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "detuning_rad_per_s"])
        for ti, di in zip(t, det):
            writer.writerow([f"{ti:.12e}", f"{di:.12e}"])
