"""Sequential weak measurements of a precessing nuclear spin."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from ..oracle import NV_INDEX, apply_unitary, nv_reduced, pulse_unitary, unitary
from ..sequences import build_sequence
from ..spin_core import embed, spin_operators


def measurement_strength(a_perp: float, t_s: float) -> float:
    """beta = a_perp t_s / pi."""
    return abs(a_perp) * t_s / np.pi


def gamma_beta(a_perp: float, t_s: float, t_L: float) -> float:
    """Measurement-induced dephasing a_perp^2 t_s^2 / (pi^2 t_L)."""
    return measurement_strength(a_perp, t_s) ** 2 / t_L


def gamma_gamma(a_par: float, t_optical: float, t_L: float) -> float:
    """Optical-readout dephasing scale a_par^2 t_opt^2 / (2 t_L)."""
    return a_par**2 * t_optical**2 / (2 * t_L)


@dataclass
class TrackingTrace:
    times: np.ndarray
    mx: np.ndarray          # <2 I_x> in the frame rotating at omega_L
    my: np.ndarray
    p_img: np.ndarray       # per-cycle imaginary readout probability
    rate: float             # fitted decay of the transverse magnitude (1/s)
    rate_err: float


def _block_unitary(omega_L, a_par, a_perp, N, tau):
    """Full NV(spin-1) + nucleus CPMG block including both pi/2 pulses (imag readout)."""
    dims = [3, 2]
    ix, iy, iz = (embed(o, 1, dims) for o in spin_operators(0.5))
    sz = embed(spin_operators(1)[2], 0, dims)
    h = omega_L * iz + sz @ (a_par * iz + a_perp * ix)
    u = np.eye(6, dtype=complex)
    seq = build_sequence("cpmg", N=N, tau=tau)
    els = seq.body_elements()
    for el in els:
        if el.kind == "pulse":
            u = pulse_unitary(dims, el.channel, el.axis, el.angle) @ u
        else:
            u = unitary(h, el.duration) @ u
    # imaginary readout: closing pi/2 about y
    u = pulse_unitary(dims, "mw", 90.0, np.pi / 2) @ u
    return u, h


def tracking_oracle(a_perp: float, t_s: float, t_L: float, omega_L: float = 2 * np.pi * 1e6,
                    a_par: float = 0.0, detuning: float | None = None, n_cycles: int = 400) -> TrackingTrace:
    """Unconditional sequential-measurement evolution of one nuclear spin.

    Each cycle: NV reset to |0>, resonant CPMG block of length t_s with an
    imaginary readout, NV measured (dephased and traced out), then free
    nuclear precession for t_L - t_s. ``detuning`` (rad/s) sets the apparent
    precession of the nucleus at the sampling rate; by default it is a small
    fraction of 1/t_L so the tracked signal oscillates slowly.
    The nucleus starts along +x.
    """
    if t_L < t_s:
        raise ValueError("t_L must be >= t_s")
    tau = np.pi / omega_L
    N = max(2, int(round(t_s / tau / 2)) * 2)
    t_s = N * tau
    u_blk, _ = _block_unitary(omega_L, a_par, a_perp, N, tau)
    det = 2 * np.pi / (40 * t_L) if detuning is None else detuning
    phase = (omega_L + det) * (t_L - t_s)
    ix, iy, iz = spin_operators(0.5)
    u_free = unitary(iz, phase)
    nv0 = np.zeros((3, 3))
    nv0[NV_INDEX[0], NV_INDEX[0]] = 1
    rho_n = np.eye(2) / 2 + ix
    mx, my, p = [], [], []
    for k in range(n_cycles):
        rho = apply_unitary(np.kron(nv0, rho_n), u_blk)
        red = nv_reduced(rho, [3, 2])
        p.append(red[NV_INDEX[0], NV_INDEX[0]].real)
        # trace out the NV (unconditional measurement)
        rho_n = np.einsum("iaib->ab", rho.reshape(3, 2, 3, 2))
        rho_n = apply_unitary(rho_n, u_free)
        # transverse components in the frame rotating at omega_L (free-evolution phase only)
        ang = (k + 1) * (omega_L * t_L) % (2 * np.pi)
        cx = 2 * np.trace(rho_n @ ix).real
        cy = 2 * np.trace(rho_n @ iy).real
        mx.append(cx * np.cos(ang) + cy * np.sin(ang))
        my.append(-cx * np.sin(ang) + cy * np.cos(ang))
    times = t_L * np.arange(1, n_cycles + 1)
    mag = np.hypot(mx, my)
    (g, a0), cov = curve_fit(lambda t, g, a: a * np.exp(-g * t), times, mag,
                             p0=[gamma_beta(a_perp, t_s, t_L), 1.0])
    return TrackingTrace(times, np.array(mx), np.array(my), np.array(p), float(g),
                         float(np.sqrt(cov[0, 0])))


def weak_measurement(a_perp: float, a_par: float, t_s: float, t_L: float, t_optical: float = 0.0,
                     simulate: bool = True, **kw) -> dict:
    out = {"beta": measurement_strength(a_perp, t_s),
           "gamma_beta": gamma_beta(a_perp, t_s, t_L),
           "gamma_gamma": gamma_gamma(a_par, t_optical, t_L)}
    if simulate:
        out["trace"] = tracking_oracle(a_perp, t_s, t_L, a_par=a_par, **kw)
        out["gamma_sim"] = out["trace"].rate
    return out
