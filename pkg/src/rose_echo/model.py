"""Macroscopic echo-efficiency models and the imperfection-coefficient fit.

For a forward-retrieved echo from an optically thick medium of depth
alpha*L the ideal efficiency is

    eta = (alpha*L)**2 * exp(-alpha*L),            (ideal)

maximal at alpha*L = 2 (4/e^2 ~ 54%).  Imperfect rephasing is captured by
two phenomenological coefficients in the propagation equation for the echo
amplitude E(z),

    dE/dz = -eta_pop * (alpha/2) * E
            + eta_phase * exp(-2*t23/T2) * alpha * exp(-alpha*z/2) * S0,

where eta_pop damps the echo because unreturned population keeps absorbing
and eta_phase scales the rephased source term.  The efficiency is
(E(L)/S0)**2.  This linear ODE has the exact solution implemented in
efficiency_closed_form, and for alpha*L*(1 - eta_pop) << 1 the standard
approximation

    eta ~ eta_phase**2 (alpha*L)**2 exp(-alpha*L*(1+eta_pop)/2)
          * exp(-4*t23/T2).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


class FitDiverged(RuntimeError):
    """The least-squares optimizer failed to converge."""


class InsufficientData(ValueError):
    """Too few data points for the requested fit."""


@dataclass(frozen=True)
class EfficiencyModel:
    """Parameter set (alpha_L, t23, t2, eta_pop, eta_phase) for the models."""

    alpha_L: float
    t23: float
    t2: float = math.inf
    eta_pop: float = 1.0
    eta_phase: float = 1.0

    def __post_init__(self):
        if self.alpha_L < 0:
            raise ValueError(f"alpha_L must be >= 0, got {self.alpha_L}")
        if not self.t23 > 0:
            raise ValueError(f"t23 must be > 0, got {self.t23}")
        if not self.t2 > 0:
            raise ValueError(f"t2 must be > 0 (or inf), got {self.t2}")
        if not 0.0 <= self.eta_pop <= 1.0:
            raise ValueError(f"eta_pop must be in [0, 1], got {self.eta_pop}")
        if not 0.0 <= self.eta_phase <= 1.0:
            raise ValueError(f"eta_phase must be in [0, 1], got {self.eta_phase}")

    def decoherence_amplitude(self) -> float:
        """exp(-2*t23/T2), the coherence surviving the storage time."""
        if self.t2 == math.inf:
            return 1.0
        return math.exp(-2.0 * self.t23 / self.t2)


@dataclass(frozen=True)
class EfficiencyDataPoint:
    alpha_L: float
    efficiency: float
    sigma_alpha_L: float | None = None
    sigma_efficiency: float | None = None

    def __post_init__(self):
        if self.alpha_L < 0:
            raise ValueError("alpha_L must be >= 0")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be in [0, 1]")
        for s in (self.sigma_alpha_L, self.sigma_efficiency):
            if s is not None and s < 0:
                raise ValueError("uncertainties must be >= 0")


def efficiency_ideal(alpha_L):
    """(alpha*L)**2 * exp(-alpha*L); scalar or array."""
    x = np.asarray(alpha_L, dtype=float)
    if np.any(x < 0):
        raise ValueError("alpha_L must be >= 0")
    out = x**2 * np.exp(-x)
    if out.ndim == 0:
        return float(out)
    return out


def efficiency_with_decoherence(m: EfficiencyModel, use_ideal: bool = True) -> float:
    """Ideal efficiency times exp(-4*t23/T2), or the approximate model."""
    if not use_ideal:
        return efficiency_approx(m)
    return efficiency_ideal(m.alpha_L) * m.decoherence_amplitude() ** 2


def efficiency_ode(m: EfficiencyModel, n_steps: int = 1000) -> float:
    """Fixed-step RK4 integration of the echo propagation equation.

    Integrates dE/dx = -(eta_pop/2) E + eta_phase exp(-2 t23/T2) exp(-x/2)
    in the dimensionless depth x = alpha*z from 0 to alpha*L with E(0) = 0
    and S0 = 1, and returns E(L)**2.
    """
    if n_steps < 100:
        raise ValueError(f"n_steps must be >= 100, got {n_steps}")
    x_end = m.alpha_L
    if x_end == 0.0:
        return 0.0
    b = m.eta_phase * m.decoherence_amplitude()
    a = 0.5 * m.eta_pop
    h = x_end / n_steps

    def rhs(x, e):
        return -a * e + b * math.exp(-0.5 * x)

    e = 0.0
    for i in range(n_steps):
        x = i * h
        k1 = rhs(x, e)
        k2 = rhs(x + 0.5 * h, e + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h, e + 0.5 * h * k2)
        k4 = rhs(x + h, e + h * k3)
        e += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return e**2


def efficiency_closed_form(m: EfficiencyModel) -> float:
    """Exact solution of the propagation equation (internal oracle).

    E(L)/S0 = eta_phase exp(-2 t23/T2) exp(-eta_pop aL/2)
              * (2/(1-eta_pop)) * (1 - exp(-(1-eta_pop) aL/2)),
    continued through eta_pop -> 1 where the factor tends to aL.
    """
    aL = m.alpha_L
    b = m.eta_phase * m.decoherence_amplitude()
    u = 0.5 * (1.0 - m.eta_pop) * aL
    if abs(u) < 5e-7:
        # series of (1 - exp(-u))/u keeps full precision through the limit
        geom = aL * (1.0 - 0.5 * u + u**2 / 6.0)
    else:
        geom = (2.0 / (1.0 - m.eta_pop)) * (1.0 - math.exp(-u))
    amplitude = b * math.exp(-0.5 * m.eta_pop * aL) * geom
    return amplitude**2


def efficiency_approx(m: EfficiencyModel) -> float:
    """Small-(1 - eta_pop) approximation of the closed form.

    eta ~ eta_phase**2 (aL)**2 exp(-aL (1+eta_pop)/2) exp(-4 t23/T2).
    Warns when aL*(1-eta_pop) > 1, where the expansion degrades.
    """
    aL = m.alpha_L
    if aL * (1.0 - m.eta_pop) > 1.0:
        warnings.warn(
            f"alpha_L*(1-eta_pop) = {aL * (1.0 - m.eta_pop):.3g} > 1: the "
            f"approximate efficiency is unreliable here",
            stacklevel=2,
        )
    b = m.eta_phase * m.decoherence_amplitude()
    return b**2 * aL**2 * math.exp(-0.5 * aL * (1.0 + m.eta_pop))


def confidence_band(alpha_L_grid, t23: float, t2_low: float, t2_high: float):
    """Ideal-with-decoherence curves for the two T2 bounds.

    Returns (low_curve, high_curve): the efficiency evaluated with t2_low
    and t2_high respectively (t2_low yields the lower curve).
    """
    if not t2_low <= t2_high:
        raise ValueError("t2_low must be <= t2_high")
    grid = np.asarray(alpha_L_grid, dtype=float)
    ideal = efficiency_ideal(grid)

    def factor(t2):
        return 1.0 if t2 == math.inf else math.exp(-4.0 * t23 / t2)

    return ideal * factor(t2_low), ideal * factor(t2_high)


def read_data_csv(path) -> list[EfficiencyDataPoint]:
    """Load efficiency data: header alpha_L, efficiency[, sigma_alpha_L, sigma_efficiency]."""
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"alpha_L", "efficiency"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"data CSV must have columns alpha_L, efficiency (got {reader.fieldnames})")
        for row in reader:
            sa = row.get("sigma_alpha_L")
            se = row.get("sigma_efficiency")
            points.append(EfficiencyDataPoint(
                alpha_L=float(row["alpha_L"]),
                efficiency=float(row["efficiency"]),
                sigma_alpha_L=float(sa) if sa not in (None, "") else None,
                sigma_efficiency=float(se) if se not in (None, "") else None,
            ))
    return points


def fit_efficiency(data, t23: float, t2: float,
                   weighted: bool | None = None) -> tuple[float, float, float]:
    """Least-squares fit of (eta_pop, eta_phase) to efficiency-vs-depth data.

    Minimizes sum_i (efficiency_approx(alpha_L_i) - eta_i)**2 over the unit
    square with a bounded trust-region optimizer from a fixed start, so the
    result is deterministic.  T2 and t23 stay fixed, following the standard
    procedure of measuring T2 separately.  With weighted=True (default when
    every point carries sigma_efficiency) residuals are scaled by 1/sigma.
    Returns (eta_pop, eta_phase, residual_sum_of_squares).
    """
    data = list(data)
    if len(data) < 3:
        raise InsufficientData(f"need at least 3 data points, got {len(data)}")
    aL = np.array([p.alpha_L for p in data])
    eff = np.array([p.efficiency for p in data])
    sigmas = [p.sigma_efficiency for p in data]
    have_sigmas = all(s is not None and s > 0 for s in sigmas)
    if weighted is None:
        weighted = have_sigmas
    if weighted and not have_sigmas:
        raise ValueError("weighted fit requested but sigma_efficiency missing")
    w = 1.0 / np.array(sigmas, dtype=float) if weighted else np.ones_like(eff)

    decay2 = 1.0 if t2 == math.inf else math.exp(-4.0 * t23 / t2)

    def model(params):
        eta_pop, eta_phase = params
        return eta_phase**2 * aL**2 * np.exp(-0.5 * aL * (1.0 + eta_pop)) * decay2

    def residuals(params):
        return w * (model(params) - eff)

    result = least_squares(residuals, x0=(0.9, 0.9), bounds=([0.0, 0.0], [1.0, 1.0]),
                           method="trf", xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not result.success:
        raise FitDiverged(f"least-squares fit failed: {result.message}")
    eta_pop, eta_phase = result.x
    rss = float(np.sum((model(result.x) - eff) ** 2))
    return float(eta_pop), float(eta_phase), rss


def fit_report(data, t23: float, t2: float, weighted: bool | None = None) -> dict:
    """Fit and package the result for JSON output."""
    eta_pop, eta_phase, rss = fit_efficiency(data, t23, t2, weighted=weighted)
    sigmas_present = all(p.sigma_efficiency is not None and p.sigma_efficiency > 0
                         for p in data)
    return {
        "eta_pop": eta_pop,
        "eta_phase": eta_phase,
        "residual": rss,
        "n_points": len(list(data)),
        "t2_s": t2 if t2 != math.inf else None,
        "t23_s": t23,
        "weighted": bool(weighted) if weighted is not None else sigmas_present,
    }
