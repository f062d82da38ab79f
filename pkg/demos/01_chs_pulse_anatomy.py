"""Anatomy of a complex-hyperbolic-secant rephasing pulse.

The pulse that replaces the pi pulse in the echo sequence has a sech
amplitude envelope and a tanh frequency sweep.  This script draws both,
reports the figures of merit (swept bandwidth 2*mu*beta and the
adiabaticity ratio mu*beta^2/omega0^2), and shows how the sweep phase
accumulates across the pulse.
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rose_echo import ChsPulse, adiabaticity_ratio, bandwidth, chs_drive, is_adiabatic
from rose_echo.pulse import sweep_phase

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

TWO_PI = 2 * math.pi

# the operating point: 800 kHz of Rabi frequency, mu = 1, beta = 2pi*400 kHz
pulse = ChsPulse(omega0=TWO_PI * 800e3, beta=TWO_PI * 400e3, mu=1.0, t_center=0.0)

print(f"swept bandwidth : {bandwidth(pulse) / TWO_PI / 1e3:.0f} kHz")
print(f"adiabaticity    : mu*beta^2/omega0^2 = {adiabaticity_ratio(pulse):.3f}"
      f"  ({'adiabatic' if is_adiabatic(pulse) else 'NOT adiabatic'} "
      f"at the 0.25 threshold)")
print(f"pulse window    : +-{pulse.window_half_width}/beta = "
      f"+-{pulse.window_half_width / pulse.beta * 1e6:.2f} us")

t = np.linspace(-2.5e-6, 2.5e-6, 2001)
rabi, detuning = chs_drive(t, pulse)
phase = sweep_phase(t, pulse)

fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
axes[0].plot(t * 1e6, rabi / TWO_PI / 1e3)
axes[0].set_ylabel("Rabi frequency (kHz)")
axes[0].set_title("sech envelope (truncated at the window edges)")
axes[1].plot(t * 1e6, detuning / TWO_PI / 1e3, color="tab:orange")
axes[1].axhline(bandwidth(pulse) / 2 / TWO_PI / 1e3, ls="--", color="gray")
axes[1].axhline(-bandwidth(pulse) / 2 / TWO_PI / 1e3, ls="--", color="gray")
axes[1].set_ylabel("sweep detuning (kHz)")
axes[1].set_title("tanh frequency sweep; dashed lines mark +-mu*beta")
axes[2].plot(t * 1e6, phase, color="tab:green")
axes[2].set_ylabel("sweep phase (rad)")
axes[2].set_xlabel("time (us)")
axes[2].set_title("accumulated sweep phase (frame bookkeeping)")
fig.tight_layout()
fig.savefig(OUT / "chs_pulse_anatomy.png", dpi=150)
print(f"figure saved to {OUT / 'chs_pulse_anatomy.png'}")
