"""Phase-matching mode bookkeeping for echo sequences.

Spatial modes are tracked as integer wavevector indices along the
quasi-counterpropagating axis: +1 for the signal direction, -1 for the
rephasing direction.  Each rephasing pulse conjugates a coherence and maps
its mode index k -> 2*k_rephase - k, which is what silences the
intermediate two-pulse echo (k = -3 is not phase matched) and revives the
final echo back in the signal mode.
"""

from __future__ import annotations

from dataclasses import dataclass

_MODE_RANGE = 3  # one signal + two rephasing pulses cannot leave [-3, 3]


@dataclass(frozen=True, order=True)
class ModeLabel:
    """Wavevector index along the signal/rephasing axis."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int):
            raise TypeError(f"mode index must be an integer, got {self.k!r}")
        if abs(self.k) > _MODE_RANGE:
            raise ValueError(f"mode index {self.k} outside [-3, 3]")

    def __str__(self):
        return f"{self.k:+d}"


SIGNAL_MODE = ModeLabel(+1)
REPHASING_MODE = ModeLabel(-1)


def echo_mode(signal_mode: ModeLabel, rp_mode: ModeLabel, n_rephasings: int) -> ModeLabel:
    """Emission mode of the echo after one or two rephasing pulses.

    Each conjugation maps k -> 2*k_rp - k, so the first echo is emitted at
    2*k_rp - k_signal and the second lands back on k_signal.
    """
    if n_rephasings not in (1, 2):
        raise ValueError(f"n_rephasings must be 1 or 2, got {n_rephasings}")
    first = 2 * rp_mode.k - signal_mode.k
    if n_rephasings == 1:
        return ModeLabel(first)
    return ModeLabel(2 * rp_mode.k - first)
