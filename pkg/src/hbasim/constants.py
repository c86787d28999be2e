"""Physical constants and fixed numeric factors.

Values are the exact SI-2019 definitions (identical in CODATA 2018).
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = 6.62607015e-34      # J s
    c: float = 299792458.0         # m / s
    k: float = 1.380649e-23        # J / K
    N_A: float = 6.02214076e23     # 1 / mol


CONSTANTS = PhysicalConstants()

H = CONSTANTS.h
C = CONSTANTS.c
K_B = CONSTANTS.k
N_A = CONSTANTS.N_A

#: speed of light in cm/s, used for wavenumbers in cm^-1
C_CM = C * 100.0

#: 1 Goeppert-Mayer in cm^4 s / photon
GM = 1e-50

#: Gaussian-beam factor of the two-photon fluorescence signal, sqrt(2) * (ln 2 / pi)**1.5
GAUSSIAN_2P_PREFACTOR = math.sqrt(2.0) * (math.log(2.0) / math.pi) ** 1.5

#: decadic molar extinction (M^-1 cm^-1) -> cross section (cm^2)
EPSILON_TO_SIGMA = 3.82e-21

DEFAULT_TEMPERATURE = 298.15
