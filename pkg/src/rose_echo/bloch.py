"""Optical Bloch dynamics of a single detuning class.

State convention: (u, v, w) with u, v the in-phase/quadrature coherence and
w the inversion (-1 ground, +1 excited).  In the rotating frame,

    du/dt = -D*v - Oy*w - u/T2
    dv/dt = +D*u + Ox*w - v/T2
    dw/dt = -Ox*v + Oy*u

where D is the detuning and (Ox, Oy) the two quadratures of the complex
Rabi frequency.  The drive matrix is antisymmetric, so with T2 = inf the
Bloch vector norm is conserved; the complex coherence s = u + i*v obeys
ds/dt = i*D*s + i*(Ox + i*Oy)*w - s/T2 and freely evolves as
s -> s * exp(i*D*t) * exp(-t/T2).

The integrator is fixed-step RK4.  For time-dependent drives the drive is
sampled at the RK4 stage times (start, midpoint, end of each step), which
keeps the full fourth-order convergence on smooth pulses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pulse import ChsPulse, chs_detuning, chs_rabi_smooth, default_time_step


class NonFiniteState(RuntimeError):
    """The Bloch state picked up a NaN or infinity."""


@dataclass(frozen=True)
class BlochState:
    u: float
    v: float
    w: float

    def norm(self) -> float:
        return math.sqrt(self.u**2 + self.v**2 + self.w**2)

    def coherence(self) -> complex:
        return complex(self.u, self.v)


GROUND = BlochState(0.0, 0.0, -1.0)


@dataclass(frozen=True)
class DriveSample:
    """One sample of the drive seen by an atom.

    rabi_x, rabi_y: quadratures of the complex Rabi frequency, rad/s.
    detuning: atom detuning minus the instantaneous pulse detuning, rad/s.
    """

    rabi_x: float
    rabi_y: float
    detuning: float

    def __post_init__(self):
        if not (math.isfinite(self.rabi_x) and math.isfinite(self.rabi_y)
                and math.isfinite(self.detuning)):
            raise ValueError("drive components must be finite")


def _inv_t2(t2: float) -> float:
    if t2 == math.inf:
        return 0.0
    if not t2 > 0:
        raise ValueError(f"t2 must be positive or inf, got {t2}")
    return 1.0 / t2


def bloch_rhs(y: np.ndarray, ox, oy, d, inv_t2: float) -> np.ndarray:
    """Bloch derivative for states y of shape (..., 3); drives broadcast."""
    u = y[..., 0]
    v = y[..., 1]
    w = y[..., 2]
    return np.stack(
        [-d * v - oy * w - inv_t2 * u,
         d * u + ox * w - inv_t2 * v,
         -ox * v + oy * u],
        axis=-1,
    )


def rk4_step(y: np.ndarray, dt: float, drives, inv_t2: float) -> np.ndarray:
    """One RK4 step with drive samples (ox, oy, d) at (t, t+dt/2, t+dt)."""
    (ox0, oy0, d0), (oxm, oym, dm), (ox1, oy1, d1) = drives
    k1 = bloch_rhs(y, ox0, oy0, d0, inv_t2)
    k2 = bloch_rhs(y + 0.5 * dt * k1, oxm, oym, dm, inv_t2)
    k3 = bloch_rhs(y + 0.5 * dt * k2, oxm, oym, dm, inv_t2)
    k4 = bloch_rhs(y + dt * k3, ox1, oy1, d1, inv_t2)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def bloch_step(state: BlochState, drive: DriveSample, dt: float, t2: float) -> BlochState:
    """Advance one RK4 substep with the drive held constant over dt."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    sample = (drive.rabi_x, drive.rabi_y, drive.detuning)
    y = np.array([state.u, state.v, state.w])
    y = rk4_step(y, dt, (sample, sample, sample), _inv_t2(t2))
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(f"state became non-finite: {y}")
    return BlochState(float(y[0]), float(y[1]), float(y[2]))


def evolve(state: BlochState, drive_fn: Callable[[float], DriveSample],
           t_start: float, t_end: float, dt: float, t2: float) -> BlochState:
    """Integrate from t_start to t_end sampling drive_fn at RK4 stage times."""
    if t_end < t_start:
        raise ValueError("t_end must be >= t_start")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    span = t_end - t_start
    if span == 0.0:
        return state
    n = max(1, int(round(span / dt)))
    h = span / n
    inv_t2 = _inv_t2(t2)
    y = np.array([state.u, state.v, state.w])
    for i in range(n):
        t = t_start + i * h
        ds = [drive_fn(t), drive_fn(t + 0.5 * h), drive_fn(t + h)]
        drives = [(d.rabi_x, d.rabi_y, d.detuning) for d in ds]
        y = rk4_step(y, h, drives, inv_t2)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(f"state became non-finite: {y}")
    return BlochState(float(y[0]), float(y[1]), float(y[2]))


def free_evolution(y: np.ndarray, delta: np.ndarray, duration: float, t2: float) -> np.ndarray:
    """Exact drive-free evolution of states (..., 3) with detunings delta.

    The coherence picks up exp(i*delta*duration) and decays with T2; the
    inversion is untouched (T1 effects are not modeled at protocol
    timescales).
    """
    if duration == 0.0:
        return y.copy()
    s = (y[..., 0] + 1j * y[..., 1]) * np.exp(1j * np.asarray(delta) * duration)
    if t2 != math.inf:
        s = s * math.exp(-duration / t2)
    out = np.empty_like(y)
    out[..., 0] = s.real
    out[..., 1] = s.imag
    out[..., 2] = y[..., 2]
    return out


def chs_window_drive(p: ChsPulse, delta):
    """Drive arrays for integrating a CHS pulse in its swept frame.

    Returns a function t -> (ox, oy, d_array) where the detuning is the atom
    detuning minus the instantaneous pulse detuning.  delta may be a scalar
    or an array of atom detunings.
    """
    delta = np.asarray(delta, dtype=float)

    def sample(t: float):
        return chs_rabi_smooth(t, p), 0.0, delta - chs_detuning(t, p)

    return sample


def integrate_pulse(p: ChsPulse, delta, dt: float | None = None, t2: float = math.inf,
                    y0: np.ndarray | None = None) -> np.ndarray:
    """Integrate atoms with detunings delta through one CHS pulse window.

    Vectorized over detunings; returns final states of shape (n, 3).  The
    integration runs in the frame following the instantaneous pulse
    frequency, so callers tracking absolute coherence phases must apply the
    sweep-phase frame correction (see ensemble.run_sequence).
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    if not np.all(np.isfinite(delta)):
        raise ValueError("detunings must be finite")
    if dt is None:
        dmax = float(np.max(np.abs(delta))) if delta.size else 0.0
        dt = default_time_step(p, delta_max=dmax)
    t_lo, t_hi = p.window
    n = max(1, int(round((t_hi - t_lo) / dt)))
    h = (t_hi - t_lo) / n
    inv_t2 = _inv_t2(t2)
    drive = chs_window_drive(p, delta)
    if y0 is None:
        y = np.zeros((delta.size, 3))
        y[:, 2] = -1.0
    else:
        y = np.array(y0, dtype=float)
    for i in range(n):
        t = t_lo + i * h
        drives = [drive(t), drive(t + 0.5 * h), drive(t + h)]
        y = rk4_step(y, h, drives, inv_t2)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("pulse integration produced a non-finite state")
    return y


def inversion_profile(p: ChsPulse, detunings, dt: float | None = None) -> np.ndarray:
    """Final inversion w for ground-state atoms swept by one CHS pulse.

    The per-atom inversion efficiency is (w_final + 1) / 2.
    """
    y = integrate_pulse(p, detunings, dt=dt)
    return y[:, 2].copy()


def evolve_recorded(state: BlochState, drive_fn: Callable[[float], DriveSample],
                    t_start: float, t_end: float, dt: float, t2: float):
    """Like evolve, but returns the whole trajectory (times, states array)."""
    if t_end <= t_start:
        raise ValueError("t_end must be > t_start")
    n = max(1, int(round((t_end - t_start) / dt)))
    h = (t_end - t_start) / n
    inv_t2 = _inv_t2(t2)
    times = t_start + h * np.arange(n + 1)
    traj = np.empty((n + 1, 3))
    traj[0] = (state.u, state.v, state.w)
    y = traj[0].copy()
    for i in range(n):
        t = times[i]
        ds = [drive_fn(t), drive_fn(t + 0.5 * h), drive_fn(t + h)]
        drives = [(d.rabi_x, d.rabi_y, d.detuning) for d in ds]
        y = rk4_step(y, h, drives, inv_t2)
        traj[i + 1] = y
    if not np.all(np.isfinite(traj)):
        raise NonFiniteState("trajectory became non-finite")
    return times, traj


def dump_trajectory(path, times: np.ndarray, traj: np.ndarray) -> None:
    """Debugging CSV of a single-atom trajectory: t, u, v, w."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "u", "v", "w"])
        for t, (u, v, w) in zip(times, traj):
            writer.writerow([f"{t:.12e}", f"{u:.12e}", f"{v:.12e}", f"{w:.12e}"])


def inversion_efficiency(w_final) -> np.ndarray:
    return (np.asarray(w_final) + 1.0) / 2.0
