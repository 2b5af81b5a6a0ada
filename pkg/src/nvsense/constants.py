"""Physical constants for NV-center sensing.

All frequencies are angular (rad/s); gyromagnetic ratios are signed and
expressed in rad/s/T.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants as sc

TWO_PI = 2.0 * np.pi

# Hz*cm/V -> rad/s per V/m
_HZ_CM_PER_V = TWO_PI * 1e-2

GAMMA_N = {
    "1H": TWO_PI * 42.577e6,
    "13C": TWO_PI * 10.7084e6,
    "14N": TWO_PI * 3.077e6,
    "15N": -TWO_PI * 4.316e6,
    "19F": TWO_PI * 40.078e6,
    "31P": TWO_PI * 17.235e6,
}


@dataclass(frozen=True)
class PhysicalConstants:
    """Constant table. ``D_zfs`` is the room-temperature (298 K) value."""

    D_zfs: float = TWO_PI * 2.87e9
    C_T: float = TWO_PI * -71.9e3
    T_ref: float = 298.0
    gamma_nv: float = -TWO_PI * 28.04e9
    gamma_e: float = -TWO_PI * 28.03e9
    gamma_n_map: dict = field(default_factory=lambda: dict(GAMMA_N))
    A_par_N14: float = -TWO_PI * 2.165e6
    A_perp_N14: float = -TWO_PI * 2.633e6
    P_quad_N14: float = -TWO_PI * 4.946e6
    A_par_N15: float = TWO_PI * 3.03e6
    A_perp_N15: float = TWO_PI * 3.65e6
    d_par: float = 0.35 * _HZ_CM_PER_V
    d_perp: float = 17.0 * _HZ_CM_PER_V
    mu0: float = sc.mu_0
    hbar: float = sc.hbar
    kB: float = sc.k
    N_A: float = sc.N_A

    def __post_init__(self):
        if not self.gamma_nv < 0:
            raise ValueError("gamma_nv must be negative")

    def zfs(self, temperature: float) -> float:
        """Zero-field splitting at ``temperature`` (K), linear in T."""
        return self.D_zfs + self.C_T * (temperature - self.T_ref)

    def gamma_n(self, isotope: str) -> float:
        try:
            return self.gamma_n_map[isotope]
        except KeyError:
            raise ValueError(f"unknown isotope {isotope!r}") from None

    def dipolar_prefactor(self, g1: float, g2: float) -> float:
        """mu0*g1*g2*hbar/(4 pi), multiply by r^-3 to get rad/s."""
        return self.mu0 / (4 * np.pi) * g1 * g2 * self.hbar


DEFAULT = PhysicalConstants()

# relative permittivity of diamond (configuration default, not fitted)
KAPPA_DIAMOND = 5.7
