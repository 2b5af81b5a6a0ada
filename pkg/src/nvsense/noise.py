"""Noise spectral densities, decoherence integrals and relaxometry."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .constants import DEFAULT, KAPPA_DIAMOND, PhysicalConstants
from .oracle import OUProcess
from .sequences import build_sequence, filter_function_numeric

PI = np.pi


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class Lorentzian:
    B: float            # tesla
    tau_c: float        # s
    omega0: float = 0.0


@dataclass(frozen=True)
class White:
    level: float        # rad^2/s


@dataclass
class NoiseSpectrum:
    """S(w) = sum_i gamma^2 B_i^2/pi * tau_i/(1 + ((w - w0_i) tau_i)^2) + sum S0."""

    components: list = field(default_factory=list)
    gamma: float = DEFAULT.gamma_nv

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        for c in self.components:
            if isinstance(c, Lorentzian):
                out = out + self.gamma**2 * c.B**2 / PI * c.tau_c / (1 + ((w - c.omega0) * c.tau_c) ** 2)
            else:
                out = out + c.level
        return out

    @property
    def lorentzians(self):
        return [c for c in self.components if isinstance(c, Lorentzian)]

    @property
    def white_level(self) -> float:
        return sum(c.level for c in self.components if isinstance(c, White))

    def ou_processes(self) -> list:
        """OU field processes whose trajectories reproduce this spectrum.

        The stationary variance is (1/(2 pi gamma^2)) int S dw = B_i^2/(2 pi).
        """
        return [OUProcess(c.B**2 / (2 * PI), c.tau_c) for c in self.lorentzians]

    def to_csv(self, omega_grid) -> str:
        w = np.asarray(omega_grid, dtype=float)
        s = self(w)
        rows = ["omega_hz,S"] + [f"{wi / (2 * PI):.10g},{si:.10g}" for wi, si in zip(w, s)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class IonBathModel:
    c_ion: float            # mol/L
    d: float                # m
    gamma_ion: float        # rad/s/T
    f_vib: float = 0.0      # Hz
    D_diff: float = 0.0     # m^2/s
    viscosity: float = np.inf   # Pa s
    temperature: float = 298.0
    omega0: float = 0.0


@dataclass(frozen=True)
class SurfaceBathModel:
    sigma: float    # spins/m^2
    d: float


@dataclass(frozen=True)
class DielectricModel:
    kappa_ext: float = 1.0
    kappa_d: float = KAPPA_DIAMOND


def ion_linewidth(model: IonBathModel, const: PhysicalConstants = DEFAULT) -> dict:
    """Linewidth terms (Hz) of the ion fluctuation spectrum."""
    f_dip = model.c_ion * 77e9
    f_trans = model.D_diff * (3 / (4 * model.d)) ** 2
    f_rot = 0.0 if np.isinf(model.viscosity) else const.kB * model.temperature / (4 * model.d**3 * model.viscosity)
    terms = dict(f_dip=f_dip, f_vib=model.f_vib, f_trans=f_trans, f_rot=f_rot)
    terms["f_ion"] = sum(terms.values())
    return terms


def ion_field_variance(model: IonBathModel, const: PhysicalConstants = DEFAULT) -> float:
    """<B_perp^2> (T^2) from an ion concentration (mol/L) at depth d."""
    k = const.mu0 * const.hbar / (4 * PI) * model.gamma_ion
    return 21e3 * PI * const.N_A * model.c_ion / (16 * model.d**3) * k**2


def ion_psd(model: IonBathModel, const: PhysicalConstants = DEFAULT) -> NoiseSpectrum:
    """Single Lorentzian with angular half width 2 pi f_ion."""
    terms = ion_linewidth(model, const)
    if terms["f_ion"] <= 0:
        warnings.warn("degenerate ion linewidth f_ion = 0", RuntimeWarning)
        return NoiseSpectrum([], gamma=const.gamma_nv)
    tau = 1.0 / (2 * PI * terms["f_ion"])
    B = np.sqrt(ion_field_variance(model, const))
    return NoiseSpectrum([Lorentzian(B, tau, model.omega0)], gamma=const.gamma_nv)


def surface_rms(model: SurfaceBathModel, const: PhysicalConstants = DEFAULT) -> float:
    if model.d <= 0:
        raise ValueError("depth must be positive")
    k = const.mu0 * abs(const.gamma_e) * const.hbar / (4 * PI)
    return float(np.sqrt(k**2 * PI / 4 * model.sigma / model.d**4))


def diffusion_broadening(D_diff: float, d: float) -> float:
    """1/T_D = D_diff (3/(4d))^2."""
    if D_diff < 0 or d <= 0:
        raise ValueError("need D_diff >= 0 and d > 0")
    return D_diff * (3 / (4 * d)) ** 2


def dielectric_screening(model: DielectricModel) -> float:
    if np.isinf(model.kappa_ext):
        return 0.0
    return (model.kappa_d + 1) / (model.kappa_d + model.kappa_ext)


def _lorentz_chi(c: Lorentzian, gamma: float, seq, t: float, rel: float) -> float:
    """(1/pi) int S_c(w) F(w)/w^2 dw for one Lorentzian.

    The positive axis is cut into panels no wider than one filter period
    2 pi/t, refined around the Lorentzian centre, and each panel gets a
    fixed Gauss-Legendre rule. ``rel`` sets the rule order.
    """
    amp = gamma**2 * c.B**2 / PI
    width = 1.0 / c.tau_c
    period = 2 * PI / t
    w0 = abs(c.omega0)
    band = 40 * (seq.N + 1) * period
    w_max = max(band, w0 + 40 * min(width, band))
    edges = np.arange(0.0, w_max + period, period)
    core = w0 + width * np.sinh(np.linspace(-6.0, 6.0, 121))
    edges = np.unique(np.concatenate([edges, core[(core > 0) & (core < edges[-1])]]))
    order = 24 if rel >= 1e-6 else 48
    x, wt = np.polynomial.legendre.leggauss(order)
    mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
    w = (mid[:, None] + half[:, None] * x[None, :]).ravel()

    def S(v):
        return amp * c.tau_c / (1 + ((v - c.omega0) * c.tau_c) ** 2)

    small = w * t < 1e-6
    g = np.empty_like(w)
    g[~small] = filter_function_numeric(seq, w[~small]) / w[~small] ** 2
    # removable singularity: F/w^2 -> t^2/2 for Ramsey, -> 0 for echoes
    g[small] = t**2 / 2 if seq.kind == "ramsey" else 0.0
    # S is not symmetric when omega0 != 0; fold the negative axis onto w > 0
    vals = ((S(w) + S(-w)) * g).reshape(len(mid), order)
    total = float(np.sum(vals @ wt * half))
    # tail: F averages to its mean over fast oscillations
    W = edges[-1]
    f_mean = float(np.mean(filter_function_numeric(seq, np.linspace(W - 4 * period, W, 400))))
    u = lambda y: (S(W / y) + S(-W / y)) / W       # w = W/y maps [W, inf) onto (0, 1]
    total += f_mean * integrate.quad(u, 0.0, 1.0, epsabs=0, epsrel=1e-10, limit=200)[0]
    if not np.isfinite(total):
        raise QuadratureError("decoherence integral did not converge")
    return total / PI


def chi(spectrum: NoiseSpectrum, kind: str, t: float, N: int = 1, level: int = 1, rel: float = 1e-4) -> float:
    """chi(t) = (1/pi) int S F/w^2 dw.

    White components use Parseval: int F/w^2 dw = pi t for any +-1 toggling
    function, so they contribute S0 t.
    """
    if t == 0:
        return 0.0
    seq = build_sequence(kind, t, N, level=level)
    total = spectrum.white_level * t
    for c in spectrum.lorentzians:
        total += _lorentz_chi(c, spectrum.gamma, seq, t, rel)
    return total


def decoherence(spectrum: NoiseSpectrum, kind: str, t_grid, N: int = 1, level: int = 1, rel: float = 1e-4):
    """xi(t) = exp(-chi(t)/2) over ``t_grid``."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    chis = np.array([chi(spectrum, kind, t, N, level, rel) for t in t_grid])
    return np.exp(-chis / 2)


def decoherence_csv(t_grid, xi) -> str:
    rows = ["t_s,xi"] + [f"{t:.10g},{x:.12g}" for t, x in zip(t_grid, xi)]
    return "\n".join(rows) + "\n"


def ou_chi_exact(B: float, tau_c: float, gamma: float, seq) -> float:
    """Phase variance for OU noise computed in the time domain.

    Uses the covariance (gamma^2 B^2 / 2 pi) exp(-|s - s'|/tau_c) implied by the
    spectrum normalisation; independent of the frequency-domain quadrature.
    """
    var = gamma**2 * B**2 / (2 * PI)
    segs = seq.toggling_segments()
    total = 0.0
    for a1, b1, s1 in segs:
        for a2, b2, s2 in segs:
            total += s1 * s2 * _exp_kernel(a1, b1, a2, b2, tau_c)
    return var * total


def _exp_kernel(a1, b1, a2, b2, tau):
    """int_{a1}^{b1} int_{a2}^{b2} exp(-|s - u|/tau) du ds."""
    if b1 - a1 <= 0 or b2 - a2 <= 0:
        return 0.0
    if (a1, b1) == (a2, b2):
        L = b1 - a1
        return 2 * tau * L - 2 * tau**2 * (1 - np.exp(-L / tau))
    if a2 >= b1:
        gap = a2 - b1
        return tau**2 * (1 - np.exp(-(b1 - a1) / tau)) * (1 - np.exp(-(b2 - a2) / tau)) * np.exp(-gap / tau)
    if a1 >= b2:
        return _exp_kernel(a2, b2, a1, b1, tau)
    raise ValueError("segments overlap partially")


def relaxometry_population(t, gamma_plus: float, gamma_minus: float):
    gamma_plus = np.asarray(gamma_plus, dtype=float)
    gamma_minus = np.asarray(gamma_minus, dtype=float)
    if np.any(gamma_plus < 0) or np.any(gamma_minus < 0):
        raise ValueError("rates must be nonnegative")
    t = np.asarray(t, dtype=float)
    return (2 + np.exp(-gamma_minus * t) + np.exp(-gamma_plus * t)
            + 2 * np.exp(-(gamma_minus + gamma_plus) * t)) / 6


def _overlap(spectrum: NoiseSpectrum, w_nv: float, gamma2: float) -> float:
    def f(w):
        return gamma2 / (2 * (gamma2**2 + (w_nv - w) ** 2)) * float(spectrum(w))

    centres = [w_nv] + [c.omega0 for c in spectrum.lorentzians]
    widths = [gamma2] + [1 / c.tau_c for c in spectrum.lorentzians]
    lo = min(centres) - 1e4 * max(widths)
    hi = max(centres) + 1e4 * max(widths)
    pts = sorted({p for c, wd in zip(centres, widths) for p in (c - 5 * wd, c, c + 5 * wd) if lo < p < hi})
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            edges = [lo] + pts + [hi]
            for a, b in zip(edges[:-1], edges[1:]):
                total += integrate.quad(f, a, b, epsrel=1e-8, epsabs=0, limit=400)[0]
            total += integrate.quad(f, -np.inf, lo, epsrel=1e-8, limit=200)[0]
            total += integrate.quad(f, hi, np.inf, epsrel=1e-8, limit=200)[0]
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return total


def gamma1_vs_field(B0_grid, spectrum_at, gamma2: float, gamma1_int: float = 0.0,
                    const: PhysicalConstants = DEFAULT):
    """Gamma_1^+ and Gamma_1^- over a field grid.

    ``spectrum_at(B0)`` returns the NoiseSpectrum at that field (a fixed
    spectrum may be passed directly). omega_NV^+- = D +- gamma_NV B0.
    """
    if gamma2 <= 0:
        raise ValueError("Gamma_2 must be positive")
    B0_grid = np.atleast_1d(np.asarray(B0_grid, dtype=float))
    get = spectrum_at if callable(spectrum_at) and not isinstance(spectrum_at, NoiseSpectrum) else (lambda b: spectrum_at)
    D = const.D_zfs
    plus, minus = [], []
    for b in B0_grid:
        s = get(b)
        plus.append(gamma1_int + _overlap(s, D + const.gamma_nv * b, gamma2))
        minus.append(gamma1_int + _overlap(s, D - const.gamma_nv * b, gamma2))
    return np.array(plus), np.array(minus)


def crossover_field(const: PhysicalConstants = DEFAULT, gamma_tar: float | None = None) -> float:
    """B0 = D/(|gamma_NV| + |gamma_tar|) where the NV and target lines cross."""
    g = const.gamma_e if gamma_tar is None else gamma_tar
    return const.D_zfs / (abs(const.gamma_nv) + abs(g))
