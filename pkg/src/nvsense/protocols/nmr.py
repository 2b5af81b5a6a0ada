"""Nuclear-spin detection: DD, ENDOR, Hartmann-Hahn, 2D correlation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..oracle import (NV_INDEX, apply_unitary, nv_reduced, propagate, pulse_unitary,
                      run_sequence, unitary)
from ..sequences import build_sequence, resonance_spacing
from ..spin_core import SpinSystem, TargetSpin, embed, spin_operators

SMALL_ANGLE = 0.3


class SmallAngleWarning(UserWarning):
    pass


def dd_rotation_angle(a_perp, N: int, tau: float):
    """Nuclear rotation angle a_perp N tau / pi at resonance."""
    return np.asarray(a_perp, dtype=float) * N * tau / np.pi


def dd_nmr_signal(spins, N: int, tau: float, mode: str = "real", polarizations=None) -> float:
    """Small-signal DD-NMR population.

    ``spins`` is a list of (a_par, a_perp) in rad/s. real: 1 - 1/4 sum phi_i^2;
    imag: 1/2 + 1/2 sum P_i phi_i with phi_i = a_perp,i N tau / pi. P_i is the
    transverse polarisation along the coupling direction.
    """
    a_perp = np.array([s[1] for s in spins], dtype=float) if len(spins) else np.zeros(0)
    phi = dd_rotation_angle(a_perp, N, tau)
    if np.any(np.abs(phi) > SMALL_ANGLE):
        warnings.warn("small-angle approximation violated (phi > 0.3 rad)", SmallAngleWarning)
    if mode == "real":
        return float(1 - 0.25 * np.sum(phi**2))
    if mode == "imag":
        P = np.zeros_like(phi) if polarizations is None else np.asarray(polarizations, dtype=float)
        return float(0.5 + 0.5 * np.sum(P * phi))
    raise ValueError("mode must be 'real' or 'imag'")


def dd_projection_exact(phis) -> float:
    """1/2 + 1/2 prod cos(2 phi_j) for unpolarised nuclei, phi_j the half rotation angle."""
    return float(0.5 + 0.5 * np.prod(np.cos(2 * np.asarray(phis, dtype=float))))


def controlled_rotation_oracle(thetas, axes) -> float:
    """Real readout after ideal branch-dependent rotations.

    Branch m_s = 0 rotates nucleus j by theta_j about axes[j], branch m_s = 1
    by theta_j about -axes[j]; nuclei start maximally mixed.
    """
    n = len(thetas)
    dims = [2] * n
    u0 = np.eye(2**n, dtype=complex)
    u1 = np.eye(2**n, dtype=complex)
    for j, (th, ax) in enumerate(zip(thetas, axes)):
        ax = np.asarray(ax, dtype=float) / np.linalg.norm(ax)
        ops = spin_operators(0.5)
        gen = embed(sum(a * o for a, o in zip(ax, ops)), j, dims)
        u0 = unitary(gen, th) @ u0
        u1 = unitary(-gen, th) @ u1
    rho_n = np.eye(2**n) / 2**n
    # NV starts in |+>; project back on |+> after the branch evolutions
    overlap = np.trace(u0 @ rho_n @ u1.conj().T)
    return float(0.5 + 0.5 * overlap.real)


def nmr_system(omega_L, spins):
    """NV spin-1 plus spin-1/2 nuclei with H = sum w_L I_z + S_z (a_par I_z + a_perp I_x)."""
    spins = list(spins)
    omega_L = np.broadcast_to(np.asarray(omega_L, dtype=float), (len(spins),))
    targets = [TargetSpin("1H", hyperfine_override=(a, b, 0.0)) for a, b in spins]
    system = SpinSystem(targets=targets)
    dims = system.dims
    sz = embed(spin_operators(1)[2], 0, dims)
    h = np.zeros((system.dim,) * 2, dtype=complex)
    for k, ((a_par, a_perp), wl) in enumerate(zip(spins, omega_L), start=1):
        ix, _, iz = (embed(o, k, dims) for o in spin_operators(0.5))
        h += wl * iz + sz @ (a_par * iz + a_perp * ix)
    return system, h


def nuclear_state(polarizations, axis="x"):
    """Product state rho = prod (1 + 2 P I_axis)/2."""
    ops = dict(zip("xyz", spin_operators(0.5)))
    rho = np.ones((1, 1))
    for P in polarizations:
        rho = np.kron(rho, np.eye(2) / 2 + P * ops[axis])
    return rho


def dd_nmr_oracle(omega_L, spins, N: int, tau: float, mode: str = "real", polarizations=None,
                  pol_axis: str = "x") -> float:
    """Exact CPMG evolution of the NV-nuclear secular Hamiltonian.

    The phase convention is xi = e^{-i phi}, so a positive imaginary signal
    needs nuclear polarisation along -``pol_axis``; P_i > 0 prepares that state.
    """
    system, h = nmr_system(omega_L, spins)
    rho_n = None
    if polarizations is not None:
        rho_n = nuclear_state(-np.asarray(polarizations, dtype=float), pol_axis)
    seq = build_sequence("cpmg", N=N, tau=tau)
    nv0 = np.zeros((3, 3))
    nv0[NV_INDEX[0], NV_INDEX[0]] = 1
    init = None if rho_n is None else np.kron(nv0, rho_n)
    return run_sequence(system, seq, mode, hamiltonian=h, initial=init)


def endor_signal(a_par, N: int, tau: float, mode: str = "real", polarizations=None) -> float:
    """real: 1 - 1/4 sum (a_par N tau/2)^2; imag: 1/2 + 1/2 sum P (a_par N tau/2).

    N counts echo periods, each with a synchronous MW and RF pi pulse.
    """
    x = np.atleast_1d(np.asarray(a_par, dtype=float)) * N * tau / 2
    if mode == "real":
        return float(1 - 0.25 * np.sum(x**2))
    if mode == "imag":
        P = np.zeros_like(x) if polarizations is None else np.asarray(polarizations, dtype=float)
        return float(0.5 + 0.5 * np.sum(P * x))
    raise ValueError("mode must be 'real' or 'imag'")


def endor_oracle(omega_L, a_par, N: int, tau: float, mode: str = "real", polarizations=None) -> float:
    a_par = np.atleast_1d(a_par)
    system, h = nmr_system(omega_L, [(a, 0.0) for a in a_par])
    init = None
    if polarizations is not None:
        nv0 = np.zeros((3, 3))
        nv0[NV_INDEX[0], NV_INDEX[0]] = 1
        # P > 0 along -z, as for the DD oracle
        init = np.kron(nv0, nuclear_state(-np.asarray(polarizations, dtype=float), "z"))
    seq = build_sequence("endor", N=N, tau=tau, rf_channel="rf:all")
    return run_sequence(system, seq, mode, hamiltonian=h, initial=init)


# --- Hartmann-Hahn ---------------------------------------------------------

def hh_transition(a_hyp: float, theta: float, t_s: float, denominator: float = 4.0) -> float:
    """sin^2(|a_hyp| t_s sin(theta) / denominator).

    The default denominator 4 is what exact rotating-frame evolution gives
    for a spin-locked (0, +1) NV; pass 8 for the halved-rate form.
    """
    return float(np.sin(abs(a_hyp) * t_s * np.sin(theta) / denominator) ** 2)


def hh_resonance(omega_e: float, omega_L: float, tol: float = 0.0):
    det = omega_e - omega_L
    return abs(det) <= tol, det


def hh_matched_drive(omega_L: float, a_hyp: float, theta: float) -> float:
    """Drive strength matching the nuclear frequency shifted by the static half of the coupling."""
    return float(np.hypot(omega_L + abs(a_hyp) * np.cos(theta) / 2, abs(a_hyp) * np.sin(theta) / 2))


def hh_oracle(a_hyp: float, theta: float, omega_L: float, omega_e: float, t_grid):
    """Spin-locked NV (levels 0, +1) coupled to one nucleus, rotating frame of the drive.

    H = Omega_e S_x' + w_L I_z + P_{+1} (a cos(theta) I_z + a sin(theta) I_x),
    with S_x' the pseudo-spin on (0, +1) and P_{+1} the m_s = +1 projector.
    The NV starts along +x', the nucleus in |down>. Returns the probability of
    finding the NV along -x' at each time.
    """
    x2 = np.zeros((3, 3), dtype=complex)
    i0, i1 = NV_INDEX[0], NV_INDEX[+1]
    x2[i0, i1] = x2[i1, i0] = 0.5
    proj = np.zeros((3, 3))
    proj[i1, i1] = 1
    ix, _, iz = spin_operators(0.5)
    h = omega_e * np.kron(x2, np.eye(2)) + omega_L * np.kron(np.eye(3), iz)
    h = h + abs(a_hyp) * np.kron(proj, np.cos(theta) * iz + np.sin(theta) * ix)
    plus = np.zeros(3, dtype=complex)
    plus[[i0, i1]] = 1 / np.sqrt(2)
    minus = np.zeros(3, dtype=complex)
    minus[i0], minus[i1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    psi0 = np.kron(plus, np.array([0, 1], dtype=complex))
    w, v = np.linalg.eigh(h)
    c0 = v.conj().T @ psi0
    pm = np.kron(np.outer(minus, minus.conj()), np.eye(2))
    out = []
    for t in np.atleast_1d(t_grid):
        psi = v @ (np.exp(-1j * w * t) * c0)
        out.append(float(np.real(psi.conj() @ pm @ psi)))
    return np.array(out)


# --- ensemble signals -------------------------------------------------------

@dataclass(frozen=True)
class SampleModel:
    density: float              # spins/m^3
    d: float                    # NV depth (m)
    polarization: float = 0.0
    species: str = "1H"
    orientation: str = "100"    # surface normal: "100" or "111"

    def __post_init__(self):
        if self.density < 0 or abs(self.polarization) > 1 or self.d <= 0:
            raise ValueError("invalid sample model")


def _kernel(const, species):
    return const.mu0 * const.hbar * abs(const.gamma_n(species) * const.gamma_e)


def ensemble_signal(sample: SampleModel, N: int, tau: float, protocol: str = "dd",
                    mode: str = "fluc", const=None) -> float:
    """Half-space ensemble signals.

    dd ([100]): S_fluc = 5 pi rho/(96 d^3) (K N tau/4pi^2)^2,
                S_pol = P sqrt(2) pi rho/3 (K N tau/4pi^2);
    endor ([111]): S_fluc = pi rho/(16 d^3) (K N tau/8pi)^2,
                   S_pol = P 2 pi rho/3 (K N tau/8pi); K = mu0 hbar gamma_n gamma_e.
    """
    from ..constants import DEFAULT
    const = DEFAULT if const is None else const
    K = _kernel(const, sample.species)
    rho, d, t = sample.density, sample.d, N * tau
    if protocol == "dd":
        if sample.orientation != "100":
            raise ValueError("DD ensemble form holds for a [100] surface")
        k = K * t / (4 * np.pi**2)
        if mode == "fluc":
            return 5 * np.pi * rho / (96 * d**3) * k**2
        return sample.polarization * np.sqrt(2) * np.pi * rho / 3 * k
    if protocol == "endor":
        if sample.orientation != "111":
            raise ValueError("ENDOR ensemble form holds for a [111] surface")
        k = K * t / (8 * np.pi)
        if mode == "fluc":
            return np.pi * rho / (16 * d**3) * k**2
        return sample.polarization * 2 * np.pi * rho / 3 * k
    raise ValueError("protocol must be 'dd' or 'endor'")


def nv_axis_for(orientation: str):
    """NV axis and an in-plane reference direction for a surface normal along z."""
    if orientation == "111":
        return np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    t0 = np.arccos(1 / np.sqrt(3))
    return np.array([np.sin(t0), 0.0, np.cos(t0)]), np.array([np.cos(t0), 0.0, -np.sin(t0)])


def _shell_points(a, z0, r_in, r_out):
    """Cubic-lattice points (pitch a, layers z0 + (k + 1/2) a) with r_in <= r < r_out."""
    n_xy = int(np.ceil(r_out / a))
    g = np.arange(-n_xy, n_xy + 1) * a
    X, Y = np.meshgrid(g, g, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    z = z0 + 0.5 * a
    while z < r_out:
        r2 = X**2 + Y**2 + z**2
        m = (r2 >= r_in**2) & (r2 < r_out**2)
        if m.any():
            yield np.stack([X[m], Y[m], np.full(m.sum(), z)], axis=1)
        z += a


def lattice_sum(sample: SampleModel, N: int, tau: float, protocol: str = "dd", mode: str = "fluc",
                radius: float | None = None, const=None) -> float:
    """Discrete-spin sum of the single-spin small-angle signals.

    Spins sit on a simple cubic lattice of pitch rho^{-1/3} out to 2d; beyond
    that, shells of doubling radius use doubling pitch with each site
    weighted by rho a^3. The polarised kernels converge only logarithmically
    in the cutoff, hence the large default ``radius`` of 1000 d.
    Polarisation is taken along -x of the NV frame for DD.
    """
    from ..constants import DEFAULT
    const = DEFAULT if const is None else const
    if protocol not in ("dd", "endor") or mode not in ("fluc", "pol"):
        raise ValueError("unknown protocol or mode")
    a0 = sample.density ** (-1 / 3)
    R = 1000 * sample.d if radius is None else radius
    K = _kernel(const, sample.species) / (4 * np.pi)
    axis, ref = nv_axis_for(sample.orientation)
    t = N * tau
    edges = [0.0, min(2 * sample.d, R)]
    while edges[-1] < R:
        edges.append(min(2 * edges[-1], R))
    total = 0.0
    for level in range(len(edges) - 1):
        a = a0 * 2**level
        w = sample.density * a**3
        for pos in _shell_points(a, sample.d, edges[level], edges[level + 1]):
            r = np.linalg.norm(pos, axis=1)
            c = pos @ axis / r
            k = K / r**3
            if protocol == "dd":
                perp = pos - np.outer(pos @ axis, axis)
                pn = np.linalg.norm(perp, axis=1)
                cphi = np.divide(-(perp @ ref), pn, out=np.zeros_like(pn), where=pn > 0)
                x = 3 * k * np.sqrt(1 - c**2) * c * t / np.pi
                if mode == "pol":
                    x = x * cphi
            else:
                x = k * (3 * c**2 - 1) * t / 2
            total += w * (0.25 * np.sum(x**2) if mode == "fluc" else 0.5 * sample.polarization * np.sum(x))
    return float(total)


# --- 2D correlation -----------------------------------------------------------

def two_d_nmr(omega, J: float, t1_grid, t2_grid, a_perp: float = 2 * np.pi * 5e3,
              phi_read: float = 0.2, polarization: float = 1.0, window: bool = True):
    """Homonuclear correlation map from exact evolution.

    Two nuclei with rotating-frame offsets ``omega`` and scalar coupling
    J I1.I2 (rad/s). Blocks: DD polarisation transfer modelled as the ideal
    nuclear pi/2 pulse, free t1, mixing pi/2, free t2, and a DD readout block
    coupling the NV to sum I_x (real part of the imag readout). Axial components are
    removed and a Hann apodisation along both axes suppresses truncation leakage unless
    ``window`` is False. Returns (f1, f2, |spectrum|, signal).
    """
    t1_grid = np.asarray(t1_grid, dtype=float)
    t2_grid = np.asarray(t2_grid, dtype=float)
    dims = [3, 2, 2]
    I = [[embed(o, k, dims) for o in spin_operators(0.5)] for k in (1, 2)]
    hn = omega[0] * I[0][2] + omega[1] * I[1][2]
    hn = hn + J * sum(I[0][a] @ I[1][a] for a in range(3))
    sz = embed(spin_operators(1)[2], 0, dims)
    # effective readout coupling (2 a_perp/pi) S_z I_x over time phi_read*pi/a_perp
    h_read = (2 * a_perp / np.pi) * (sz - 0.5 * np.eye(12)) @ (I[0][0] + I[1][0])
    t_read = phi_read * np.pi / a_perp
    u_read = unitary(h_read, t_read)
    p90 = pulse_unitary(dims, "rf:all", 90.0, np.pi / 2)
    nv_open = pulse_unitary(dims, "mw", 0.0, np.pi / 2)
    nv_close = pulse_unitary(dims, "mw", 90.0, np.pi / 2)
    nv0 = np.zeros((3, 3))
    nv0[NV_INDEX[0], NV_INDEX[0]] = 1
    rho0 = np.kron(nv0, nuclear_state([polarization] * 2, "z"))
    rho0 = apply_unitary(rho0, p90)
    w, v = np.linalg.eigh(hn)
    sig = np.zeros((len(t1_grid), len(t2_grid)))
    for i, t1 in enumerate(t1_grid):
        u1 = (v * np.exp(-1j * w * t1)) @ v.conj().T
        r1 = apply_unitary(apply_unitary(rho0, u1), p90)
        for j, t2 in enumerate(t2_grid):
            u2 = (v * np.exp(-1j * w * t2)) @ v.conj().T
            r = apply_unitary(r1, u2)
            r = apply_unitary(r, nv_open)
            r = apply_unitary(r, u_read)
            r = apply_unitary(r, nv_close)
            sig[i, j] = nv_reduced(r, dims)[NV_INDEX[0], NV_INDEX[0]].real
    if len(t1_grid) < 2 or len(t2_grid) < 2:
        return np.zeros(1), np.zeros(1), np.zeros((1, 1)), sig
    # drop axial (single-time) components before the transform
    s = sig - sig.mean(axis=0, keepdims=True) - sig.mean(axis=1, keepdims=True) + sig.mean()
    if window:
        s = s * np.outer(np.hanning(len(t1_grid)), np.hanning(len(t2_grid)))
    spec = np.abs(np.fft.fftshift(np.fft.fft2(s)))
    f1 = np.fft.fftshift(np.fft.fftfreq(len(t1_grid), t1_grid[1] - t1_grid[0]))
    f2 = np.fft.fftshift(np.fft.fftfreq(len(t2_grid), t2_grid[1] - t2_grid[0]))
    return f1, f2, spec, sig


def peak_amplitude(f1, f2, spec, x: float, y: float, halfwidth: int = 1) -> float:
    """Max |spectrum| in a small window around (x, y) Hz."""
    i = int(np.argmin(np.abs(f1 - x)))
    j = int(np.argmin(np.abs(f2 - y)))
    win = spec[max(i - halfwidth, 0):i + halfwidth + 1, max(j - halfwidth, 0):j + halfwidth + 1]
    return float(win.max())


__all__ = ["dd_nmr_signal", "dd_projection_exact", "controlled_rotation_oracle", "dd_nmr_oracle",
           "endor_signal", "endor_oracle", "hh_transition", "hh_resonance", "hh_matched_drive", "hh_oracle",
           "SampleModel", "ensemble_signal", "lattice_sum", "two_d_nmr", "peak_amplitude",
           "resonance_spacing", "propagate"]
