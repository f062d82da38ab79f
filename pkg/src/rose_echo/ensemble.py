"""Inhomogeneous ensemble dynamics and the full echo sequence.

The sequence simulator integrates every detuning class through signal and
rephasing pulses (analytic free evolution in between) and separates the
macroscopic coherence into phase-matched modes.  Mode bookkeeping is
pathway based: a coherence excited by the signal carries the signal's
optical phase, and every rephasing pulse that conjugates it flips the sign
of that phase dependence while moving the spatial mode index
k -> 2*k_rp - k.  Cycling the signal phase over four values and taking
discrete Fourier harmonics of the macroscopic coherence therefore yields
exactly the decomposition onto emission modes:

    harmonic +1  (linear in signal, even number of conjugations) -> signal mode
    harmonic -1  (linear in signal, odd number of conjugations)  -> 2*k_rp - k_signal
    harmonic  0  (independent of the signal: strong-pulse FIDs)  -> rephasing mode

This is the numerical analogue of the spatial phase-matching filter in the
experiment and needs no 1D propagation grid; absorption and propagation
live entirely in the macroscopic efficiency model.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bloch import NonFiniteState, free_evolution, rk4_step, _inv_t2
from .modes import ModeLabel, echo_mode
from .pulse import (ChsPulse, SignalPulse, chs_detuning, chs_rabi_smooth,
                    default_time_step, is_adiabatic, sweep_phase)

# fixed work-chunk size: results are accumulated in chunk order, so traces
# are bit-identical for any thread count
_CHUNK = 256
_N_PHASE_CYCLES = 4


class EmptyEnsemble(ValueError):
    """The detuning grid has no atoms."""


@dataclass(frozen=True)
class Ensemble:
    """Detuning grid with spectral weights for the inhomogeneous line."""

    detunings: np.ndarray
    weights: np.ndarray
    profile: str = "flat"
    width: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "weights", w)
        if d.size == 0:
            raise EmptyEnsemble("ensemble has no detuning classes")
        if d.shape != w.shape:
            raise ValueError("detunings and weights must have the same length")
        if not np.all(np.isfinite(d)):
            raise ValueError("detunings must be finite")
        if d.size > 1 and not np.all(np.diff(d) > 0):
            raise ValueError("detunings must be strictly increasing")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {total!r})")

    @property
    def n(self) -> int:
        return self.detunings.size

    @classmethod
    def flat(cls, span: float, n_points: int = 801) -> "Ensemble":
        """Uniform weights over detunings in [-span, +span] rad/s."""
        d = np.linspace(-span, span, n_points)
        w = np.full(n_points, 1.0 / n_points)
        w /= w.sum()
        return cls(d, w, profile="flat", width=span)

    @classmethod
    def gaussian(cls, width: float, span: float, n_points: int = 801) -> "Ensemble":
        d = np.linspace(-span, span, n_points)
        w = np.exp(-0.5 * (d / width) ** 2)
        w /= w.sum()
        return cls(d, w, profile="gaussian", width=width)

    @classmethod
    def lorentzian(cls, width: float, span: float, n_points: int = 801) -> "Ensemble":
        d = np.linspace(-span, span, n_points)
        w = 1.0 / (1.0 + (d / width) ** 2)
        w /= w.sum()
        return cls(d, w, profile="lorentzian", width=width)


@dataclass(frozen=True)
class RoseSequence:
    """Signal pulse at t1 followed by two rephasing pulses at t2 and t3."""

    signal: SignalPulse
    rephasing1: ChsPulse
    rephasing2: ChsPulse

    def __post_init__(self):
        if not self.t12 > 0:
            raise ValueError("rephasing1 must come after the signal (t12 > 0)")
        if not self.t23 > self.t12:
            raise ValueError(
                f"t23 must exceed t12 so the echo falls after the last pulse "
                f"(t12={self.t12:.3e}, t23={self.t23:.3e})"
            )
        if self.signal.window[1] > self.rephasing1.window[0]:
            raise ValueError("signal and first rephasing pulse windows overlap")
        if self.rephasing1.window[1] > self.rephasing2.window[0]:
            raise ValueError("rephasing pulse windows overlap")

    @property
    def t12(self) -> float:
        return self.rephasing1.t_center - self.signal.t_center

    @property
    def t23(self) -> float:
        return self.rephasing2.t_center - self.rephasing1.t_center

    @property
    def echo_time(self) -> float:
        """Expected revival time t1 + 2*t23."""
        return self.signal.t_center + 2.0 * self.t23


@dataclass(frozen=True)
class DetectedEcho:
    time: float
    mode: ModeLabel
    peak: float

    def as_dict(self) -> dict:
        return {"time_s": self.time, "mode": self.mode.k, "peak": self.peak}


@dataclass
class EchoTrace:
    """Time-resolved macroscopic coherence per phase-matched mode."""

    times: np.ndarray
    amplitude_per_mode: dict[ModeLabel, np.ndarray]
    detected_echoes: list[DetectedEcho] = field(default_factory=list)

    def __post_init__(self):
        for mode, amp in self.amplitude_per_mode.items():
            if len(amp) != len(self.times):
                raise ValueError(f"amplitude series for mode {mode} has wrong length")

    def peak(self, mode: ModeLabel, t_center: float, half_width: float) -> float:
        """Max |amplitude| in the given mode within t_center +- half_width."""
        sel = np.abs(self.times - t_center) <= half_width
        if not np.any(sel):
            return 0.0
        return float(np.max(np.abs(self.amplitude_per_mode[mode][sel])))

    def window_amplitude(self, mode: ModeLabel, t_center: float,
                         half_width: float) -> float:
        """RMS of |amplitude| over a window around t_center.

        For a fixed echo shape this is proportional to the peak amplitude
        but far less sensitive to additive ripple from dephased pathways,
        which matters when comparing echo strengths across runs.
        """
        sel = np.abs(self.times - t_center) <= half_width
        if not np.any(sel):
            return 0.0
        a = np.abs(self.amplitude_per_mode[mode][sel])
        return float(math.sqrt(np.mean(a**2)))

    def to_csv(self, path) -> None:
        """Write time_s plus one |amplitude| column per mode."""
        modes = sorted(self.amplitude_per_mode)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s"] + [f"abs_amplitude_mode_{m.k:+d}" for m in modes])
            for i, t in enumerate(self.times):
                row = [f"{t:.12e}"]
                row += [f"{abs(self.amplitude_per_mode[m][i]):.12e}" for m in modes]
                writer.writerow(row)

    def echoes_to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump([e.as_dict() for e in self.detected_echoes], fh, indent=2)
            fh.write("\n")


# ---------------------------------------------------------------------------
# sequence integration engine
# ---------------------------------------------------------------------------

def _record_slice(times: np.ndarray, t_a: float, t_b: float) -> slice:
    a = int(np.searchsorted(times, t_a, side="right"))
    b = int(np.searchsorted(times, t_b, side="right"))
    return slice(a, b)


class _ChunkRun:
    """Integrates one chunk of detuning classes through the sequence.

    All phase-cycle copies of the chunk are stacked along the row axis so
    the whole cycle costs a single vectorized pass.
    """

    def __init__(self, seq, delta, weights, t2, dt, n_rephasings,
                 rephasing_model, times, phases):
        self.seq = seq
        self.t2 = t2
        self.dt = dt
        self.n_rephasings = n_rephasings
        self.model = rephasing_model
        self.times = times
        self.phases = np.asarray(phases)
        self.n_phase = self.phases.size
        self.n_atoms = delta.size
        self.delta = np.tile(delta, self.n_phase)
        self.wt = np.tile(weights, self.n_phase)
        self.cosp = np.repeat(np.cos(self.phases), self.n_atoms)
        self.sinp = np.repeat(np.sin(self.phases), self.n_atoms)
        self.inv_t2 = _inv_t2(t2)
        self.S = np.zeros((self.n_phase, times.size), dtype=complex)
        self.s_after_signal = None
        rows = self.delta.size
        self.y = np.zeros((rows, 3))
        self.y[:, 2] = -1.0
        self.t = seq.signal.window[0]

    # -- recording -----------------------------------------------------

    def _weighted_sums(self, s_rows: np.ndarray) -> np.ndarray:
        return (self.wt * s_rows).reshape(self.n_phase, self.n_atoms).sum(axis=1)

    def _record_now(self, idx: int, frame_phase: float = 0.0) -> None:
        s = self.y[:, 0] + 1j * self.y[:, 1]
        if frame_phase != 0.0:
            s = s * np.exp(1j * frame_phase)
        self.S[:, idx] = self._weighted_sums(s)

    def _free_to(self, t_target: float) -> None:
        """Analytic free evolution with exact recording along the way."""
        if t_target < self.t:
            raise ValueError("sequence segments out of order")
        sl = _record_slice(self.times, self.t, t_target)
        if sl.stop > sl.start:
            dts = self.times[sl] - self.t
            s0 = (self.wt * (self.y[:, 0] + 1j * self.y[:, 1])).reshape(
                self.n_phase, self.n_atoms)
            phase = np.exp(1j * np.outer(self.delta[: self.n_atoms], dts))
            if self.inv_t2 != 0.0:
                phase = phase * np.exp(-dts * self.inv_t2)
            self.S[:, sl] += s0 @ phase
        self.y = free_evolution(self.y, self.delta, t_target - self.t, self.t2)
        self.t = t_target

    # -- driven windows --------------------------------------------------

    def _integrate_window(self, t_lo, t_hi, stage_drives, frame_phase_fn=None):
        """RK4 through [t_lo, t_hi]; records samples at crossed grid times."""
        n = max(1, int(round((t_hi - t_lo) / self.dt)))
        h = (t_hi - t_lo) / n
        pending = _record_slice(self.times, t_lo, t_hi)
        next_rec = pending.start
        for i in range(n):
            t0 = t_lo + i * h
            self.y = rk4_step(self.y, h, stage_drives(t0, h), self.inv_t2)
            t_now = t0 + h
            while next_rec < pending.stop and self.times[next_rec] <= t_now:
                fp = frame_phase_fn(t_now) if frame_phase_fn is not None else 0.0
                self._record_now(next_rec, fp)
                next_rec += 1
        if not np.all(np.isfinite(self.y)):
            raise NonFiniteState("sequence integration produced a non-finite state")
        self.t = t_hi

    def _signal_window(self) -> None:
        sig = self.seq.signal
        t_lo, t_hi = sig.window

        def stage_drives(t0, h):
            out = []
            for ts in (t0, t0 + 0.5 * h, t0 + h):
                a = sig.envelope_smooth(ts)
                out.append((a * self.cosp, a * self.sinp, self.delta))
            return out

        self._integrate_window(t_lo, t_hi, stage_drives)
        self.s_after_signal = (self.y[: self.n_atoms, 0]
                               + 1j * self.y[: self.n_atoms, 1]).copy()

    def _chs_window(self, p: ChsPulse) -> None:
        t_lo, t_hi = p.window
        self._free_to(t_lo)
        # hop into the frame following the instantaneous pulse frequency
        self._rotate_coherence(-sweep_phase(t_lo, p))

        def stage_drives(t0, h):
            out = []
            for ts in (t0, t0 + 0.5 * h, t0 + h):
                out.append((chs_rabi_smooth(ts, p), 0.0,
                            self.delta - chs_detuning(ts, p)))
            return out

        self._integrate_window(t_lo, t_hi, stage_drives,
                               frame_phase_fn=lambda t: sweep_phase(t, p))
        self._rotate_coherence(sweep_phase(t_hi, p))

    def _ideal_flip(self, t_pulse: float) -> None:
        """Instantaneous perfect pi rotation: s -> conj(s), w -> -w."""
        self._free_to(t_pulse)
        self.y[:, 1] *= -1.0
        self.y[:, 2] *= -1.0

    def _rotate_coherence(self, angle: float) -> None:
        s = (self.y[:, 0] + 1j * self.y[:, 1]) * np.exp(1j * angle)
        self.y[:, 0] = s.real
        self.y[:, 1] = s.imag

    # -- full sequence -----------------------------------------------------

    def run(self):
        seq = self.seq
        self._signal_window()
        rephasings = [seq.rephasing1, seq.rephasing2][: self.n_rephasings]
        for p in rephasings:
            if self.model == "ideal":
                self._ideal_flip(p.t_center)
            else:
                self._chs_window(p)
        self._free_to(float(self.times[-1]))
        w_final = self.y[: self.n_atoms, 2].copy()
        return self.S, w_final, self.s_after_signal


def _sequence_harmonics(seq: RoseSequence, ens: Ensemble, t2: float, dt: float,
                        n_rephasings: int, rephasing_model: str,
                        times: np.ndarray, threads: int = 1):
    """Phase-cycled run; returns per-harmonic macroscopic traces.

    Output: dict q -> complex trace for q in (+1, -1, 0), plus the final
    inversion and post-signal coherence per detuning class.
    """
    phases = 2.0 * math.pi * np.arange(_N_PHASE_CYCLES) / _N_PHASE_CYCLES
    chunks = [slice(i, min(i + _CHUNK, ens.n)) for i in range(0, ens.n, _CHUNK)]

    def job(sl):
        run = _ChunkRun(seq, ens.detunings[sl], ens.weights[sl], t2, dt,
                        n_rephasings, rephasing_model, times, phases)
        return run.run()

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, chunks))
    else:
        results = [job(sl) for sl in chunks]

    S = np.zeros((phases.size, times.size), dtype=complex)
    w_final = np.empty(ens.n)
    s_after = np.empty(ens.n, dtype=complex)
    for sl, (S_part, w_part, s_part) in zip(chunks, results):
        S += S_part
        w_final[sl] = w_part
        s_after[sl] = s_part

    harmonics = {}
    for q in (+1, -1, 0):
        coeff = np.exp(-1j * q * phases) / phases.size
        harmonics[q] = coeff @ S
    return harmonics, w_final, s_after


def _harmonic_modes(seq: RoseSequence, n_rephasings: int) -> dict[int, ModeLabel]:
    """Map signal-phase harmonic order to the emission mode it radiates into."""
    if (n_rephasings == 2
            and seq.rephasing1.mode != seq.rephasing2.mode):
        raise ValueError("both rephasing pulses must share one propagation mode")
    rp = seq.rephasing1.mode
    return {
        +1: seq.signal.mode,
        -1: echo_mode(seq.signal.mode, rp, 1),
        0: rp,
    }


def detect_echoes(trace_times: np.ndarray, amp_by_mode: dict[ModeLabel, np.ndarray],
                  scan_modes, exclude_windows, merge_half_width: float,
                  rms_factor: float = 5.0) -> list[DetectedEcho]:
    """Local maxima exceeding rms_factor times the quiet-region RMS.

    The quiet region excludes the pulse windows and the neighborhoods of the
    few largest candidates, so a genuine revival does not inflate its own
    noise estimate.  A tiny absolute floor rejects the numerical residue of
    exactly cancelled harmonics.
    """
    floor = 1e-12 * max((np.max(np.abs(a)) for a in amp_by_mode.values()), default=0.0)
    allowed = np.ones(trace_times.size, dtype=bool)
    for lo, hi in exclude_windows:
        allowed &= ~((trace_times >= lo) & (trace_times <= hi))

    found: list[DetectedEcho] = []
    for mode in scan_modes:
        a = np.abs(amp_by_mode[mode])
        interior = np.zeros_like(allowed)
        interior[1:-1] = (a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:])
        cand = np.flatnonzero(interior & allowed)
        if cand.size == 0:
            continue
        cand = cand[np.argsort(a[cand])[::-1]]
        quiet = allowed.copy()
        for idx in cand[:5]:
            quiet &= np.abs(trace_times - trace_times[idx]) > merge_half_width
        rms = math.sqrt(float(np.mean(a[quiet] ** 2))) if np.any(quiet) else 0.0
        threshold = max(rms_factor * rms, floor)
        kept: list[int] = []
        for idx in cand:
            if a[idx] <= threshold:
                break
            if all(abs(trace_times[idx] - trace_times[j]) > merge_half_width
                   for j in kept):
                kept.append(idx)
        for idx in sorted(kept):
            found.append(DetectedEcho(float(trace_times[idx]), mode, float(a[idx])))
    found.sort(key=lambda e: (e.time, e.mode.k))
    return found


def run_sequence(seq: RoseSequence, ens: Ensemble, t2: float, dt: float | None = None,
                 n_rephasings: int = 2, rephasing_model: str = "chs",
                 t_end: float | None = None, dt_out: float | None = None,
                 threads: int = 1) -> EchoTrace:
    """Simulate the full echo sequence over the detuning grid.

    Between pulses the coherence evolves analytically; inside pulse windows
    the Bloch equations are integrated with fixed-step RK4.  The macroscopic
    coherence is separated into phase-matched modes (see module docstring).
    rephasing_model "ideal" replaces the CHS pulses by instantaneous perfect
    pi rotations, which is the reference for rephasing_quality.
    """
    if ens.n == 0:
        raise EmptyEnsemble("ensemble has no detuning classes")
    if n_rephasings not in (1, 2):
        raise ValueError("n_rephasings must be 1 or 2")
    if rephasing_model not in ("chs", "ideal"):
        raise ValueError(f"unknown rephasing_model {rephasing_model!r}")
    for p in (seq.rephasing1, seq.rephasing2)[:n_rephasings]:
        if rephasing_model == "chs" and not is_adiabatic(p):
            warnings.warn(
                f"rephasing pulse at t={p.t_center:.3e}s violates the adiabatic "
                f"condition (mu*beta^2/omega0^2 = {p.mu * p.beta**2 / p.omega0**2:.3g})",
                stacklevel=2,
            )

    beta = seq.rephasing1.beta
    dmax = float(np.max(np.abs(ens.detunings)))
    if dt is None:
        dt = default_time_step(seq.rephasing1, delta_max=dmax)
    if dt_out is None:
        dt_out = (1.0 / beta) / 16.0
    if t_end is None:
        t_end = seq.echo_time + 5.0 / beta
    t_rec0 = seq.signal.window[0]
    n_out = int(math.floor((t_end - t_rec0) / dt_out)) + 1
    times = t_rec0 + dt_out * np.arange(n_out)

    harmonics, _, _ = _sequence_harmonics(
        seq, ens, t2, dt, n_rephasings, rephasing_model, times, threads=threads)

    mode_of = _harmonic_modes(seq, n_rephasings)
    amp: dict[ModeLabel, np.ndarray] = {}
    for q, trace_q in harmonics.items():
        mode = mode_of[q]
        if mode in amp:
            amp[mode] = amp[mode] + trace_q
        else:
            amp[mode] = trace_q.copy()

    # echoes are revivals of the stored signal: scan the signal-linear modes
    scan_modes = sorted({mode_of[+1], mode_of[-1]})
    guard = 0.5 / beta
    if rephasing_model == "ideal":
        windows = [seq.signal.window]
        windows += [(p.t_center - guard, p.t_center + guard)
                    for p in (seq.rephasing1, seq.rephasing2)[:n_rephasings]]
    else:
        windows = [seq.signal.window]
        windows += [p.window for p in (seq.rephasing1, seq.rephasing2)[:n_rephasings]]
    windows = [(lo - guard, hi + guard) for lo, hi in windows]
    echoes = detect_echoes(times, amp, scan_modes, windows,
                           merge_half_width=3.0 / beta)
    return EchoTrace(times=times, amplitude_per_mode=amp, detected_echoes=echoes)


def rephasing_quality(seq: RoseSequence, ens: Ensemble, dt: float | None = None,
                      t2: float = math.inf, rephasing_model: str = "chs",
                      threads: int = 1) -> tuple[float, float]:
    """Population-return and coherence-rephasing efficiency of the CHS pair.

    eta_pop: fraction of population back in the ground state after both
    rephasing pulses, averaged over the detuning classes weighted by how
    strongly the signal excited them.  eta_phase: ratio of the rephased
    macroscopic coherence at the echo peak to the same quantity with
    instantaneous perfect pi pulses (identical signal and T2).  These are
    the microscopic counterparts of the coefficients in the propagation
    model.
    """
    beta = seq.rephasing1.beta
    dmax = float(np.max(np.abs(ens.detunings)))
    if dt is None:
        dt = default_time_step(seq.rephasing1, delta_max=dmax)
    dt_out = (1.0 / beta) / 32.0
    t_lo = seq.echo_time - 3.0 / beta
    n_out = int(math.floor(6.0 / beta / dt_out)) + 1
    times = t_lo + dt_out * np.arange(n_out)

    harm_chs, w_final, s_after = _sequence_harmonics(
        seq, ens, t2, dt, 2, rephasing_model, times, threads=threads)
    harm_ideal, _, _ = _sequence_harmonics(
        seq, ens, t2, dt, 2, "ideal", times, threads=threads)

    peak_chs = float(np.max(np.abs(harm_chs[+1])))
    peak_ideal = float(np.max(np.abs(harm_ideal[+1])))
    eta_phase = peak_chs / peak_ideal if peak_ideal > 0.0 else 0.0

    band = ens.weights * np.abs(s_after) ** 2
    total = band.sum()
    if total > 0.0:
        band = band / total
    else:
        band = ens.weights
    w_mean = float(np.dot(band, w_final))
    eta_pop = min(max((1.0 - w_mean) / 2.0, 0.0), 1.0)
    return eta_pop, eta_phase


def t2_decay_scan(seq_template: RoseSequence, ens: Ensemble, t23_values,
                  t2_true: float, dt: float | None = None,
                  threads: int = 1) -> float:
    """Fit T2 from the echo decay while scanning the rephasing separation.

    Runs the sequence for each t23, measures the signal-mode echo amplitude
    (RMS over a fixed window around the revival, proportional to the peak
    for the unchanging echo shape), and fits A * exp(-2*t23/T2).  Constant
    amplitudes (within 1%) report inf.
    """
    from .model import FitDiverged  # local import keeps module deps one-way

    t23_values = np.asarray(list(t23_values), dtype=float)
    if t23_values.size < 4:
        raise ValueError("need at least 4 values of t23 to fit the decay")
    beta = seq_template.rephasing1.beta
    peaks = []
    for t23 in t23_values:
        rp2 = replace(seq_template.rephasing2,
                      t_center=seq_template.rephasing1.t_center + float(t23))
        seq = RoseSequence(seq_template.signal, seq_template.rephasing1, rp2)
        trace = run_sequence(seq, ens, t2_true, dt=dt, threads=threads)
        if not any(e.mode == seq.signal.mode
                   and abs(e.time - seq.echo_time) <= 2.0 / beta
                   for e in trace.detected_echoes):
            raise FitDiverged(
                f"no signal-mode echo detected at t23 = {t23:.3e} s")
        peaks.append(trace.window_amplitude(seq.signal.mode, seq.echo_time,
                                            2.0 / beta))
    peaks = np.asarray(peaks)
    if not np.all(np.isfinite(peaks)) or np.any(peaks <= 0.0):
        raise FitDiverged("echo peaks are missing or non-finite; cannot fit T2")
    if (peaks.max() - peaks.min()) / peaks.max() < 0.01:
        return math.inf
    slope, _ = np.polyfit(t23_values, np.log(peaks), 1)
    if slope >= 0.0:
        return math.inf
    return float(-2.0 / slope)
