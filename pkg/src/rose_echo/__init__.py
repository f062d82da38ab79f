"""Simulator and analysis toolkit for the ROSE photon-echo quantum memory.

Modules:
    pulse     -- CHS adiabatic rephasing pulses, weak signal pulses
    bloch     -- single-detuning-class optical Bloch integration
    ensemble  -- inhomogeneous line, echo sequences, mode bookkeeping
    model     -- macroscopic efficiency models and the imperfection fit
    cli       -- command-line frontend (rose-echo)
"""

from .modes import ModeLabel, REPHASING_MODE, SIGNAL_MODE, echo_mode
from .pulse import (ChsPulse, SignalPulse, adiabaticity_ratio, bandwidth,
                    chs_drive, default_time_step, is_adiabatic, signal_for_area)
from .bloch import (BlochState, DriveSample, GROUND, NonFiniteState, bloch_step,
                    evolve, inversion_efficiency, inversion_profile)
from .ensemble import (DetectedEcho, EchoTrace, EmptyEnsemble, Ensemble,
                       RoseSequence, rephasing_quality, run_sequence,
                       t2_decay_scan)
from .model import (EfficiencyDataPoint, EfficiencyModel, FitDiverged,
                    InsufficientData, confidence_band, efficiency_approx,
                    efficiency_closed_form, efficiency_ideal, efficiency_ode,
                    efficiency_with_decoherence, fit_efficiency)

__all__ = [
    "ModeLabel", "SIGNAL_MODE", "REPHASING_MODE", "echo_mode",
    "ChsPulse", "SignalPulse", "chs_drive", "bandwidth", "adiabaticity_ratio",
    "is_adiabatic", "signal_for_area", "default_time_step",
    "BlochState", "DriveSample", "GROUND", "NonFiniteState", "bloch_step",
    "evolve", "inversion_profile", "inversion_efficiency",
    "Ensemble", "RoseSequence", "EchoTrace", "DetectedEcho", "EmptyEnsemble",
    "run_sequence", "rephasing_quality", "t2_decay_scan",
    "EfficiencyModel", "EfficiencyDataPoint", "efficiency_ideal",
    "efficiency_with_decoherence", "efficiency_ode", "efficiency_closed_form",
    "efficiency_approx", "fit_efficiency", "confidence_band",
    "FitDiverged", "InsufficientData",
]

__version__ = "0.1.0"
