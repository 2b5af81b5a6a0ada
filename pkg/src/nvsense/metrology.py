"""Sensitivity, readout noise, polarisation and spatial-resolution calculators.

Every sensitivity is reported with an explicit unit string; the fluctuation
mode carries squared field units.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .constants import DEFAULT, PhysicalConstants

UNITS = {
    ("field", "pol"): "T/Hz^0.5",
    ("field", "fluc"): "T^2/Hz^0.5",
    ("spin", "pol"): "spins/Hz^0.5",
    ("spin", "fluc"): "spins^2/Hz^0.5",
}


@dataclass(frozen=True)
class PhotonModel:
    n0: float
    n1: float

    def __post_init__(self):
        if not (self.n0 >= self.n1 >= 0) or self.n0 == 0:
            raise ValueError("need n0 >= n1 >= 0 and n0 > 0")

    @classmethod
    def from_contrast(cls, n_avg: float, C: float) -> "PhotonModel":
        if not (0 <= C <= 1) or n_avg <= 0:
            raise ValueError("need 0 <= C <= 1 and n_avg > 0")
        return cls(n_avg * (1 + C), n_avg * (1 - C))

    @property
    def n_avg(self) -> float:
        return 0.5 * (self.n0 + self.n1)

    @property
    def contrast(self) -> float:
        return (self.n0 - self.n1) / (self.n0 + self.n1)


def readout_fidelity(photon: PhotonModel) -> float:
    """(1 + 1/(n_avg C^2))^{-1/2}."""
    nc2 = photon.n_avg * photon.contrast**2
    return float(1 / np.sqrt(1 + 1 / nc2)) if nc2 > 0 else 0.0


def readout_fidelity_counts(n0: float, n1: float) -> float:
    """(1 + 2(n0 + n1)/(n0 - n1)^2)^{-1/2}."""
    if n0 == n1:
        return 0.0
    return float(1 / np.sqrt(1 + 2 * (n0 + n1) / (n0 - n1) ** 2))


def photon_moments(p: float, n0: float, n1: float):
    """Mean and variance of the two-level Poisson mixture."""
    mean = p * n0 + (1 - p) * n1
    var = p * (1 - p) * (n0 - n1) ** 2 + mean
    return mean, var


@dataclass(frozen=True)
class SensitivityBudget:
    T_accu: float
    T_ini: float = 0.0
    T_read: float = 0.0
    xi: float = 1.0
    F_read: float = 1.0
    F_ini: float = 1.0
    d: Optional[float] = None
    gamma_tar: Optional[float] = None
    P: float = 1.0

    def __post_init__(self):
        if self.T_accu <= 0 or self.T_ini < 0 or self.T_read < 0:
            raise ValueError("times must be nonnegative and T_accu positive")
        for name in ("xi", "F_read", "F_ini"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if abs(self.P) > 1:
            raise ValueError("|P| must be <= 1")
        if self.d is not None and self.d <= 0:
            raise ValueError("d must be positive")

    @property
    def T_ir(self) -> float:
        return self.T_ini + self.T_read

    @property
    def overhead(self) -> float:
        """sqrt(1 + T_ir/T_accu) / (xi F_read F_ini)."""
        return np.sqrt(1 + self.T_ir / self.T_accu) / (self.xi * self.F_read * self.F_ini)


def _mode(mode: str):
    if mode not in ("pol", "fluc"):
        raise ValueError("mode must be 'pol' or 'fluc'")


def magnetic_sensitivity(budget: SensitivityBudget, mode: str = "pol",
                         const: PhysicalConstants = DEFAULT) -> float:
    """eta_pol in T/sqrt(Hz) or eta_fluc in T^2/sqrt(Hz)."""
    _mode(mode)
    g = abs(const.gamma_nv)
    if mode == "pol":
        return float(budget.overhead / (g * np.sqrt(budget.T_accu)))
    return float(2 * budget.overhead / (g**2 * budget.T_accu**1.5))


def spin_number_sensitivity(budget: SensitivityBudget, mode: str = "pol",
                            const: PhysicalConstants = DEFAULT) -> float:
    """Spin-number sensitivity at distance ``budget.d``; the pol mode uses |P|."""
    _mode(mode)
    if budget.d is None or budget.gamma_tar is None:
        raise ValueError("spin sensitivity needs d and gamma_tar")
    k = const.mu0 * const.hbar * abs(const.gamma_nv * budget.gamma_tar)
    if mode == "pol":
        if budget.P == 0:
            raise ValueError("polarisation signal vanishes for P = 0")
        return float(2 * np.sqrt(2) * np.pi**2 / k * budget.d**3 / np.sqrt(budget.T_accu)
                     * budget.overhead / abs(budget.P))
    return float((4 * np.pi**2 / k) ** 2 * budget.d**6 / budget.T_accu**1.5 * budget.overhead)


def sensitivity_report(budget: SensitivityBudget, const: PhysicalConstants = DEFAULT):
    """Rows of (quantity, value, unit)."""
    rows = [(f"eta_{m}", magnetic_sensitivity(budget, m, const), UNITS[("field", m)])
            for m in ("pol", "fluc")]
    if budget.d is not None and budget.gamma_tar is not None:
        for m in ("pol", "fluc"):
            if m == "pol" and budget.P == 0:
                continue
            rows.append((f"eta_spin_{m}", spin_number_sensitivity(budget, m, const), UNITS[("spin", m)]))
        if budget.P < 0:
            rows.append(("polarization_sign", -1.0, "1"))
    return rows


def readout_limited_scaling(photon: PhotonModel, T_read: float) -> float:
    """sqrt(T_read + T_read/(n_avg C^2)), the T_read >> T_accu behaviour of the spin sensitivity."""
    nc2 = photon.n_avg * photon.contrast**2
    return float(np.sqrt(T_read + T_read / nc2))


def single_shot_feasible(g_s: float, gamma_relax: float, sigma_R: float, threshold: float = 10.0):
    """(g_s/(2 gamma) >= threshold sigma_R, ratio g_s/(2 gamma sigma_R))."""
    ratio = g_s / (2 * gamma_relax * sigma_R)
    return bool(ratio >= threshold), float(ratio)


def qdyne_precision(g_s: float, T_exp: float, T2: float, T_LO: float) -> float:
    """Frequency precision; T_exp^{-3/2} up to the clock stability time T_LO, T_exp^{-1/2} beyond."""
    return float(1 / (g_s * min(T_exp, T_LO) * np.sqrt(T_exp * T2)))


@dataclass(frozen=True)
class GradientModel:
    gradient: tuple                 # dB/dr along each axis (T/m)
    t_s: float
    gamma: float
    direction: tuple = (0.0, 0.0, 1.0)


def gradient_resolution(model: GradientModel) -> float:
    """delta r = 2 pi / (t_s |gamma| |n . grad B|) in m."""
    n = np.asarray(model.direction, dtype=float)
    n = n / np.linalg.norm(n)
    g = abs(np.dot(n, np.asarray(model.gradient, dtype=float)))
    if g == 0 or model.t_s <= 0:
        raise ValueError("gradient along n and t_s must be nonzero")
    return float(2 * np.pi / (model.t_s * abs(model.gamma) * g))


def nv_self_gradient(d: float, theta: float, const: PhysicalConstants = DEFAULT) -> float:
    """Dipolar field gradient of the NV electron at distance d, polar angle theta (T/m).

    The angular radicand cos^2(1 + 5 cos 2 theta) changes sign past
    cos 2 theta = -1/5; its magnitude is used.
    """
    ang = np.cos(theta) ** 2 * (1 + 5 * np.cos(2 * theta))
    return float(3 * const.mu0 * abs(const.gamma_e) * const.hbar / (4 * np.pi * d**4) * np.sqrt(abs(ang)))


def polarization(kind: str, *, gamma: float = None, B0: float = None, T: float = None,
                 N: float = None, const: PhysicalConstants = DEFAULT) -> float:
    """Boltzmann |gamma| B0 hbar/(2 k_B T) or statistical 1/sqrt(N)."""
    if kind == "boltzmann":
        if T is None or T <= 0:
            raise ValueError("temperature must be positive")
        return float(abs(gamma) * B0 * const.hbar / (2 * const.kB * T))
    if kind == "statistical":
        if N is None or N < 1:
            raise ValueError("N must be >= 1")
        return float(1 / np.sqrt(N))
    raise ValueError("kind must be 'boltzmann' or 'statistical'")


def statistical_crossover(gamma: float, B0: float, T: float, const: PhysicalConstants = DEFAULT) -> float:
    """Spin number where 1/sqrt(N) equals the Boltzmann polarisation."""
    return float(polarization("boltzmann", gamma=gamma, B0=B0, T=T, const=const) ** -2)


PROFILES = {
    # ambient shallow NV, conventional fluorescence readout
    "paper-ambient-shallow": SensitivityBudget(
        T_accu=50e-6, T_ini=48e-6, T_read=2e-6, xi=0.5, F_read=0.04, F_ini=0.7,
        d=5e-9, gamma_tar=DEFAULT.gamma_n("1H"), P=1.0),
    # best-case shallow NV: 2.4 ms coherence, 4 Mcounts/s collection
    # (1.2 photons in a 0.3 us window), proton at 10 nm
    "paper-best-shallow": SensitivityBudget(
        T_accu=2.4e-3, T_ini=1e-6, T_read=0.3e-6, xi=0.5,
        F_read=readout_fidelity(PhotonModel.from_contrast(1.2, 0.3)), F_ini=1.0,
        d=10e-9, gamma_tar=DEFAULT.gamma_n("1H"), P=1.0),
}


def profile(name: str, **overrides) -> SensitivityBudget:
    if name not in PROFILES:
        raise KeyError(f"unknown profile {name!r}")
    return replace(PROFILES[name], **overrides)
