"""Spin species, field environment and Hamiltonian builders.

Basis ordering is NV (m_s = +1, 0, -1) followed by the nitrogen nucleus
(only in :func:`nv_ground_hamiltonian`) and then the targets in list order.
All Hamiltonians are in rad/s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .constants import DEFAULT, PhysicalConstants

DEFAULT_DIM_CAP = 3 * 2**8
FERMI_CONTACT_RANGE = 2e-9


class DimensionError(ValueError):
    pass


def spin_operators(s: float):
    """Return (Sx, Sy, Sz) for spin ``s`` in the descending-m basis."""
    dim = int(round(2 * s + 1))
    m = s - np.arange(dim)
    sp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        sp[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sx = (sp + sp.conj().T) / 2
    sy = (sp - sp.conj().T) / 2j
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


def embed(op: np.ndarray, index: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` on subsystem ``index`` of a tensor product space."""
    mats = [op if k == index else np.eye(d) for k, d in enumerate(dims)]
    return reduce(np.kron, mats)


def assert_hermitian(h: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    scale = max(np.abs(h).max(), 1.0)
    if np.abs(h - h.conj().T).max() > rtol * scale:
        raise ValueError("Hamiltonian is not Hermitian")
    return h


@dataclass(frozen=True)
class FieldEnvironment:
    B0: tuple = (0.0, 0.0, 0.0)
    E: tuple = (0.0, 0.0, 0.0)
    strain: tuple = (0.0, 0.0, 0.0)
    temperature: float = 298.0

    def __post_init__(self):
        for name in ("B0", "E", "strain"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, tuple(float(x) for x in v))
        if not (np.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError("temperature must be positive")

    @property
    def Pi(self) -> np.ndarray:
        return np.asarray(self.E) + np.asarray(self.strain)

    def field_axis(self) -> np.ndarray:
        b = np.asarray(self.B0)
        n = np.linalg.norm(b)
        return b / n if n > 0 else np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class TargetSpin:
    species: str = "electron"          # "electron" or a nuclear isotope, e.g. "1H"
    spin: float = 0.5
    position: tuple = (0.0, 0.0, 0.0)
    hyperfine_override: Optional[tuple] = None   # (a_par, a_perp, a_iso)
    quadrupole: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.spin not in (0.5, 1, 1.0):
            raise ValueError("spin must be 1/2 or 1")
        pos = np.asarray(self.position, dtype=float)
        object.__setattr__(self, "position", tuple(pos))
        if self.hyperfine_override is None and np.linalg.norm(pos) == 0:
            raise ValueError("target needs a nonzero position or a hyperfine override")

    @property
    def dim(self) -> int:
        return int(round(2 * self.spin + 1))

    @property
    def is_electron(self) -> bool:
        return self.species == "electron"

    def gamma(self, const: PhysicalConstants) -> float:
        return const.gamma_e if self.is_electron else const.gamma_n(self.species)


@dataclass(frozen=True)
class SpinSystem:
    constants: PhysicalConstants = DEFAULT
    environment: FieldEnvironment = field(default_factory=FieldEnvironment)
    nv_nitrogen_isotope: Optional[int] = None
    targets: tuple = ()
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.nv_nitrogen_isotope not in (None, 14, 15):
            raise ValueError("nitrogen isotope must be 14, 15 or None")
        if self.dim > self.dim_cap:
            raise DimensionError(f"Hilbert dimension {self.dim} exceeds cap {self.dim_cap}")

    @property
    def target_dims(self) -> list[int]:
        return [t.dim for t in self.targets]

    @property
    def dims(self) -> list[int]:
        return [3] + self.target_dims

    @property
    def dim(self) -> int:
        n = {None: 1, 14: 3, 15: 2}[self.nv_nitrogen_isotope]
        return 3 * n * int(np.prod(self.target_dims, dtype=int))


def nv_ground_hamiltonian(system: SpinSystem) -> np.ndarray:
    """NV ground-state Hamiltonian including the intrinsic nitrogen and E/strain terms.

    Targets are not included; the result lives on the NV (+ nitrogen) space.
    """
    c, env = system.constants, system.environment
    sx, sy, sz = spin_operators(1)
    iso = system.nv_nitrogen_isotope
    if iso is None:
        dims = [3]
    else:
        dims = [3, 3 if iso == 14 else 2]
    S = [embed(o, 0, dims) for o in (sx, sy, sz)]
    eye = np.eye(int(np.prod(dims)))
    B = np.asarray(env.B0)
    Pi = env.Pi
    D = c.zfs(env.temperature)

    h = D * S[2] @ S[2] + c.gamma_nv * sum(B[k] * S[k] for k in range(3))
    h = h + c.d_par * Pi[2] * (S[2] @ S[2] - 2.0 / 3.0 * eye)
    h = h + c.d_perp * Pi[0] * (S[1] @ S[1] - S[0] @ S[0])
    h = h + c.d_perp * Pi[1] * (S[0] @ S[1] + S[1] @ S[0])
    if iso is not None:
        ix, iy, iz = (embed(o, 1, dims) for o in spin_operators(1 if iso == 14 else 0.5))
        if iso == 14:
            a_par, a_perp, gam = c.A_par_N14, c.A_perp_N14, c.gamma_n("14N")
            h = h + c.P_quad_N14 * iz @ iz
        else:
            a_par, a_perp, gam = c.A_par_N15, c.A_perp_N15, c.gamma_n("15N")
        h = h + a_par * S[2] @ iz + a_perp * (S[0] @ ix + S[1] @ iy)
        h = h - gam * (B[0] * ix + B[1] * iy + B[2] * iz)
    return assert_hermitian(h)


def dipolar_coupling(r_vec, gamma1: float, gamma2: float,
                     axis=(0.0, 0.0, 1.0), const: PhysicalConstants = DEFAULT):
    """Point-dipole coupling between two moments.

    Returns ``(tensor, secular)``: the 3x3 tensor T with H = S1 . T . S2 and
    the secular scalar H_dip = k (1 - 3 cos^2 theta), theta from ``axis``.
    """
    r = np.asarray(r_vec, dtype=float)
    dist = np.linalg.norm(r)
    if dist == 0:
        raise ValueError("zero-length displacement")
    n = r / dist
    k = const.dipolar_prefactor(gamma1, gamma2) / dist**3
    tensor = k * (np.eye(3) - 3.0 * np.outer(n, n))
    ax = np.asarray(axis, dtype=float)
    cos_t = n @ ax / np.linalg.norm(ax)
    return tensor, k * (1.0 - 3.0 * cos_t**2)


def _polar(position, axis):
    r = np.asarray(position, dtype=float)
    dist = np.linalg.norm(r)
    z = axis / np.linalg.norm(axis)
    cos_t = np.clip(r @ z / dist, -1.0, 1.0)
    # azimuth in a frame whose x axis is fixed by z (x along lab x unless degenerate)
    ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    ex = ref - (ref @ z) * z
    ex /= np.linalg.norm(ex)
    ey = np.cross(z, ex)
    phi = np.arctan2(r @ ey, r @ ex)
    return dist, cos_t, phi, (ex, ey, z)


def hyperfine_components(target: TargetSpin, system: SpinSystem):
    """Return (a_par, a_perp, phi) for a nuclear target, in rad/s.

    a_par = k(3cos^2 theta - 1) + a_iso, a_perp = 3k sin theta cos theta with
    k = mu0 gamma_e gamma_n hbar / (4 pi r^3). ``phi`` is the azimuth of the
    perpendicular component (zero for overrides).
    """
    c = system.constants
    if target.hyperfine_override is not None:
        a_par, a_perp, a_iso = target.hyperfine_override
        return a_par + a_iso, a_perp, 0.0
    dist, cos_t, phi, _ = _polar(target.position, system.environment.field_axis())
    if dist < FERMI_CONTACT_RANGE:
        raise ValueError("positions closer than 2 nm need a hyperfine override")
    k = c.dipolar_prefactor(c.gamma_e, target.gamma(c)) / dist**3
    sin_t = np.sqrt(1.0 - cos_t**2)
    return k * (3 * cos_t**2 - 1), 3 * k * sin_t * cos_t, phi


def larmor(target: TargetSpin, system: SpinSystem) -> float:
    """omega_L = gamma_n |B0| (rad/s)."""
    return target.gamma(system.constants) * np.linalg.norm(system.environment.B0)


def secular_nmr_hamiltonian(system: SpinSystem) -> np.ndarray:
    """omega_L sum I_z + S_z sum (a_par I_z + a_perp I_perp), NV spin-1 times nuclei.

    The nitrogen of the NV is not included. I_perp points along the target's
    azimuth, so the result equals minus the secular projection of the full
    dipolar Hamiltonian built by :func:`full_nmr_hamiltonian`.
    """
    if any(t.is_electron for t in system.targets):
        raise ValueError("secular NMR form requires nuclear targets only")
    dims = system.dims
    sz = embed(spin_operators(1)[2], 0, dims)
    h = np.zeros((system.dim,) * 2, dtype=complex)
    for j, t in enumerate(system.targets, start=1):
        ix, iy, iz = (embed(o, j, dims) for o in spin_operators(t.spin))
        a_par, a_perp, phi = hyperfine_components(t, system)
        h += larmor(t, system) * iz
        h += sz @ (a_par * iz + a_perp * (np.cos(phi) * ix + np.sin(phi) * iy))
    return assert_hermitian(h)


def full_nmr_hamiltonian(system: SpinSystem, gamma_s: Optional[float] = None,
                         include_zfs: bool = False) -> np.ndarray:
    """Full point-dipole NV-nuclear Hamiltonian with nuclear Zeeman and nuclear-nuclear terms.

    Uses -gamma_n B.I for the nuclear Zeeman term. The Fermi-contact term is
    taken as zero. ``gamma_s`` defaults to gamma_e.
    """
    c, env = system.constants, system.environment
    gamma_s = c.gamma_e if gamma_s is None else gamma_s
    dims = system.dims
    _, _, z = _polar((0, 0, 1.0), env.field_axis())[3]
    S = [embed(o, 0, dims) for o in spin_operators(1)]
    h = np.zeros((system.dim,) * 2, dtype=complex)
    if include_zfs:
        h += c.zfs(env.temperature) * S[2] @ S[2]
        h += c.gamma_nv * sum(env.B0[k] * S[k] for k in range(3))
    ops = []
    for j, t in enumerate(system.targets, start=1):
        I = [embed(o, j, dims) for o in spin_operators(t.spin)]
        ops.append(I)
        g = t.gamma(c)
        h -= g * sum(env.B0[k] * I[k] for k in range(3))
        tensor, _ = dipolar_coupling(t.position, gamma_s, g, const=c)
        h += sum(tensor[a, b] * S[a] @ I[b] for a in range(3) for b in range(3))
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            ti, tj = system.targets[i], system.targets[j]
            r = np.subtract(tj.position, ti.position)
            tensor, _ = dipolar_coupling(r, ti.gamma(c), tj.gamma(c), const=c)
            h += sum(tensor[a, b] * ops[i][a] @ ops[j][b] for a in range(3) for b in range(3))
    return assert_hermitian(h)


def secular_projection(h: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Keep only blocks diagonal in the NV S_z basis (first subsystem)."""
    n_rest = int(np.prod(dims[1:], dtype=int))
    out = np.zeros_like(h)
    for m in range(dims[0]):
        sl = slice(m * n_rest, (m + 1) * n_rest)
        out[sl, sl] = h[sl, sl]
    return out


def dq_transition_frequencies(environment: FieldEnvironment, Pi_perp: float, Pi_par: float,
                              const: PhysicalConstants = DEFAULT, regime: float = 10.0):
    """Single- and double-quantum transition frequencies (Hz) under electric field/strain.

    f_{0->+-1} = D/2pi + d_par Pi_par/2pi +- (|gamma| B_z/2pi + (d_perp Pi_perp)^2/(4 pi |gamma| B_z))
    f_{-1->+1} = 2 (|gamma| B_z/2pi + (d_perp Pi_perp)^2/(4 pi |gamma| B_z))
    """
    zeeman = abs(const.gamma_nv * environment.B0[2])
    stark = const.d_perp * abs(Pi_perp)
    if zeeman == 0 or zeeman < regime * stark:
        raise ValueError("regime violation: need |gamma B_z| >> d_perp Pi_perp")
    split = zeeman / (2 * np.pi) + stark**2 / (4 * np.pi * zeeman)
    centre = (const.zfs(environment.temperature) + const.d_par * Pi_par) / (2 * np.pi)
    return (centre + split, centre - split), 2 * split
