"""Physical constants (CODATA 2018, SI units)."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysConstants:
    hbar: float = 1.054571817e-34  # J s
    c: float = 2.99792458e8  # m / s
    k_boltzmann: float = 1.380649e-23  # J / K

    @property
    def hbar_c(self) -> float:
        return self.hbar * self.c


CODATA = PhysConstants()

HBAR = CODATA.hbar
C_LIGHT = CODATA.c
K_BOLTZMANN = CODATA.k_boltzmann
HBAR_C = CODATA.hbar_c

# Apery's constant, zeta(3)
ZETA3 = 1.2020569031595942

UM = 1e-6
