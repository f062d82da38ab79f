import math

import pytest

from rose_echo import ChsPulse, Ensemble, RoseSequence, signal_for_area

TWO_PI = 2.0 * math.pi

# operating point used throughout: Omega0 = 2pi*800 kHz, mu = 1,
# beta = 2pi*400 kHz, t12 = 4 us, t23 = 8 us
OMEGA0 = TWO_PI * 800e3
BETA = TWO_PI * 400e3
MU = 1.0
T12 = 4e-6
T23 = 8e-6
SIGNAL_DURATION = 1.6e-6
SIGNAL_AREA = 0.05 * math.pi


@pytest.fixture
def nominal_pulse():
    return ChsPulse(omega0=OMEGA0, beta=BETA, mu=MU, t_center=0.0)


def make_sequence(om_scale=1.0, area=SIGNAL_AREA, t23=T23,
                  duration=SIGNAL_DURATION):
    signal = signal_for_area(area, t_center=0.0, duration=duration)
    rp1 = ChsPulse(om_scale * OMEGA0, BETA, MU, t_center=T12)
    rp2 = ChsPulse(om_scale * OMEGA0, BETA, MU, t_center=T12 + t23)
    return RoseSequence(signal, rp1, rp2)


@pytest.fixture
def nominal_sequence():
    return make_sequence()


@pytest.fixture
def ens_fast():
    return Ensemble.flat(2 * MU * BETA, 201)


@pytest.fixture
def ens_medium():
    return Ensemble.flat(2 * MU * BETA, 401)


@pytest.fixture
def ens_full():
    return Ensemble.flat(2 * MU * BETA, 801)
