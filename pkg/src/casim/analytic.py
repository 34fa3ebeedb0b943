"""Closed-form plate-plate Casimir pressure with thermal and conductivity corrections."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .constants import CODATA, ZETA3, PhysConstants


class ConductivityValidityWarning(UserWarning):
    """The first-order conductivity expansion is being used outside its range."""


@dataclass(frozen=True)
class AnalyticParams:
    r: float  # plate separation, m
    temperature: float = 0.0  # K
    plasma_frequency: float | None = None  # rad / s
    constants: PhysConstants = field(default=CODATA)

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"separation must be positive, got {self.r!r}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be non-negative, got {self.temperature!r}")
        if self.plasma_frequency is not None and not self.plasma_frequency > 0:
            raise ValueError(f"plasma frequency must be positive, got {self.plasma_frequency!r}")


def ideal_pressure(r, constants: PhysConstants = CODATA):
    """Attractive pressure (N/m^2) between perfectly conducting plates at distance ``r``."""
    if not r > 0:
        raise ValueError(f"separation must be positive, got {r!r}")
    return math.pi**2 * constants.hbar_c / (240.0 * r**4)


def thermal_xi(temperature, r, constants: PhysConstants = CODATA):
    return constants.k_boltzmann * temperature * r / constants.hbar_c


def _f_low(xi):
    return xi**3 / (2 * math.pi) * ZETA3 - xi**4 * math.pi**2 / 45


def _f_high(xi):
    return xi / (8 * math.pi) * ZETA3 - math.pi**2 / 720


def thermal_function(xi):
    """Piecewise thermal correction term; the branches meet at ``xi = 0.5``."""
    return _f_low(xi) if xi <= 0.5 else _f_high(xi)


def temperature_factor(temperature, r, constants: PhysConstants = CODATA):
    if not temperature >= 0:
        raise ValueError(f"temperature must be non-negative, got {temperature!r}")
    if not r > 0:
        raise ValueError(f"separation must be positive, got {r!r}")
    xi = thermal_xi(temperature, r, constants)
    return 1.0 + 720.0 / math.pi**2 * thermal_function(xi)


def conductivity_factor(plasma_frequency, r, constants: PhysConstants = CODATA):
    """Finite-conductivity factor; warns when the expansion parameter is large."""
    if not plasma_frequency > 0 or not r > 0:
        raise ValueError("plasma frequency and separation must be positive")
    q = constants.c / (plasma_frequency * r)
    if 16.0 * q / 3.0 > 0.5:
        warnings.warn(f"c/(omega_p r) = {q:.3g} is outside the perturbative range",
                      ConductivityValidityWarning, stacklevel=2)
    return 1.0 - 16.0 / 3.0 * q + 24.0 * q * q


def corrected_pressure(p: AnalyticParams):
    c = p.constants
    cond = 1.0 if p.plasma_frequency is None else conductivity_factor(p.plasma_frequency, p.r, c)
    return ideal_pressure(p.r, c) * temperature_factor(p.temperature, p.r, c) * cond


def per_area(force_per_length, plate_height):
    """Convert a force per unit length (N/m) into a pressure using the plate height (m)."""
    if not plate_height > 0:
        raise ValueError("plate height must be positive")
    return force_per_length / plate_height


def normalization_factor(numeric_pressure, p: AnalyticParams):
    """Ratio of an additive plate-plate pressure to the corrected closed form.

    Dividing additive results by this factor reproduces the closed form at
    the calibration separation.
    """
    if not numeric_pressure > 0:
        raise ValueError(f"numeric pressure must be positive, got {numeric_pressure!r}")
    return numeric_pressure / corrected_pressure(p)


def sweep_rows(r_min, r_max, steps, temperature=300.0, plasma_frequency=None):
    """Rows ``(r, ideal, temp_factor, cond_factor, corrected)`` over a linear sweep."""
    if not r_min > 0 or not r_max >= r_min or steps < 1:
        raise ValueError("need 0 < r_min <= r_max and steps >= 1")
    if steps == 1:
        rs = [r_min]
    else:
        rs = [r_min + (r_max - r_min) * i / (steps - 1) for i in range(steps)]
    rows = []
    for r in rs:
        p = AnalyticParams(r, temperature, plasma_frequency)
        cond = 1.0 if plasma_frequency is None else conductivity_factor(plasma_frequency, r)
        rows.append((r, ideal_pressure(r), temperature_factor(temperature, r), cond, corrected_pressure(p)))
    return rows
