"""Channel realizations for the BS / IRS / user geometry.

All powers are in milliwatts.  Channels follow the usual downlink
convention: user ``k`` receives ``(h_kᴴ + r_kᴴ Θ G) x``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class Geometry:
    bs: tuple[float, float, float] = (5.0, 0.0, 0.0)
    irs: tuple[float, float, float] = (0.0, 50.0, 0.0)
    user_center: tuple[float, float, float] = (50.0, 5.0, 0.0)
    user_radius: float = 3.0
    irs_rows: int = 5  # elements along y; the z count grows with M
    spacing: float = 0.5  # in wavelengths

    def irs_shape(self, m: int) -> tuple[int, int]:
        if m % self.irs_rows:
            raise ValueError(f"M={m} is not a multiple of M_y={self.irs_rows}")
        return self.irs_rows, m // self.irs_rows


@dataclass(frozen=True)
class PathLossParams:
    rho0_db: float = -30.0
    d0: float = 1.0
    alpha_direct: float = 3.5
    alpha_bs_irs: float = 2.2
    alpha_irs_user: float = 2.2

    def __post_init__(self):
        if min(self.alpha_direct, self.alpha_bs_irs, self.alpha_irs_user) <= 0:
            raise ValueError("path-loss exponents must be positive")


@dataclass(frozen=True)
class FadingParams:
    rician_bs_irs_db: float = 3.0
    rician_irs_user_db: float = 3.0
    bandwidth_hz: float = 1e6
    noise_density_dbm_hz: float = -150.0

    @property
    def k_bs_irs(self) -> float:
        return db_to_linear(self.rician_bs_irs_db)

    @property
    def k_irs_user(self) -> float:
        return db_to_linear(self.rician_irs_user_db)

    @property
    def noise_power(self) -> float:
        """σ² = B·N0 in mW."""
        return dbm_to_mw(self.noise_density_dbm_hz) * self.bandwidth_hz


@dataclass(frozen=True)
class ChannelSet:
    """One realization: ``h`` is K×N (row k is h_k), ``G`` is M×N,
    ``r`` is K×M (row k is r_k)."""

    h: np.ndarray
    G: np.ndarray
    r: np.ndarray
    user_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    seed: int | None = None

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def N(self) -> int:
        return self.h.shape[1]

    @property
    def M(self) -> int:
        return self.G.shape[0]

    def scaled(self, factor: float) -> "ChannelSet":
        return ChannelSet(self.h * factor, self.G * factor, self.r * factor,
                          self.user_positions, self.seed)

    # Flat record: h (K×N), G (M×N), r (K×M), each row-major, as [re, im] pairs.
    def to_record(self) -> dict:
        def flat(a):
            a = np.asarray(a, dtype=complex).ravel()
            return np.column_stack([a.real, a.imag]).tolist()

        return {"K": self.K, "N": self.N, "M": self.M, "seed": self.seed,
                "h": flat(self.h), "G": flat(self.G), "r": flat(self.r),
                "user_positions": np.asarray(self.user_positions).tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "ChannelSet":
        K, N, M = rec["K"], rec["N"], rec["M"]

        def unflat(x, shape):
            a = np.asarray(x, dtype=float).reshape(-1, 2)
            return (a[:, 0] + 1j * a[:, 1]).reshape(shape)

        pos = np.asarray(rec.get("user_positions", []), dtype=float).reshape(-1, 3)
        return cls(unflat(rec["h"], (K, N)), unflat(rec["G"], (M, N)),
                   unflat(rec["r"], (K, M)), pos, rec.get("seed"))

    def dumps(self) -> str:
        return json.dumps(self.to_record())


def path_loss(d: float, alpha: float, params: PathLossParams = PathLossParams()) -> float:
    """Linear power gain ρ0·(d/d0)^(−α); distances below d0 clamp to d0."""
    if d <= 0:
        raise ValueError("distance must be positive")
    d = max(d, params.d0)
    return db_to_linear(params.rho0_db) * (d / params.d0) ** (-alpha)


def ula_steering(n: int, direction: np.ndarray, spacing: float = 0.5) -> np.ndarray:
    """ULA along x; ``direction`` is a unit vector."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * spacing * idx * direction[0])


def upa_steering(rows: int, cols: int, direction: np.ndarray, spacing: float = 0.5) -> np.ndarray:
    """UPA in the y–z plane, y index fastest-varying within each z column."""
    iy, iz = np.meshgrid(np.arange(rows), np.arange(cols), indexing="xy")
    phase = iy.ravel() * direction[1] + iz.ravel() * direction[2]
    return np.exp(-2j * np.pi * spacing * phase)


def _unit(a, b) -> tuple[np.ndarray, float]:
    d = np.asarray(b, float) - np.asarray(a, float)
    n = float(np.linalg.norm(d))
    return d / n, n


def sample_user_positions(rng: np.random.Generator, k: int, geometry: Geometry) -> np.ndarray:
    # uniform by area in the disk at z = 0
    rad = geometry.user_radius * np.sqrt(rng.uniform(size=k))
    ang = rng.uniform(0.0, 2 * np.pi, size=k)
    c = np.asarray(geometry.user_center, float)
    return np.column_stack([c[0] + rad * np.cos(ang), c[1] + rad * np.sin(ang), np.full(k, c[2])])


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def los_components(n: int, m: int, positions: np.ndarray, geometry: Geometry):
    """Deterministic LoS parts ``(G_los, r_los)`` with unit-modulus entries."""
    if m == 0:
        return np.zeros((0, n), complex), np.zeros((len(positions), 0), complex)
    rows, cols = geometry.irs_shape(m)
    u_bi, _ = _unit(geometry.bs, geometry.irs)
    a_bs = ula_steering(n, u_bi, geometry.spacing)
    a_irs_in = upa_steering(rows, cols, u_bi, geometry.spacing)
    g_los = np.outer(a_irs_in, a_bs.conj())
    r_los = np.empty((len(positions), m), complex)
    for k, p in enumerate(positions):
        u_iu, _ = _unit(geometry.irs, p)
        r_los[k] = upa_steering(rows, cols, u_iu, geometry.spacing)
    return g_los, r_los


def sample_channels(n: int, m: int, k: int, seed: int,
                    geometry: Geometry = Geometry(),
                    pl: PathLossParams = PathLossParams(),
                    fading: FadingParams = FadingParams()) -> ChannelSet:
    """Draw one realization.

    Independent streams are used for user positions, direct links, the
    BS–IRS link and the IRS–user links, so the direct channels of a seed do
    not depend on M.
    """
    if m:
        geometry.irs_shape(m)
    ss = np.random.SeedSequence(seed)
    pos_rng, h_rng, g_rng, r_rng = (np.random.default_rng(s) for s in ss.spawn(4))
    positions = sample_user_positions(pos_rng, k, geometry)

    h = np.empty((k, n), complex)
    for i, p in enumerate(positions):
        _, d = _unit(geometry.bs, p)
        h[i] = np.sqrt(path_loss(d, pl.alpha_direct, pl)) * _cn(h_rng, n)

    g_los, r_los = los_components(n, m, positions, geometry)
    kbi, kiu = fading.k_bs_irs, fading.k_irs_user
    _, d_bi = _unit(geometry.bs, geometry.irs)
    G = np.sqrt(path_loss(d_bi, pl.alpha_bs_irs, pl) / (kbi + 1)) * (
        np.sqrt(kbi) * g_los + _cn(g_rng, (m, n)))

    r = np.empty((k, m), complex)
    for i, p in enumerate(positions):
        _, d_iu = _unit(geometry.irs, p)
        r[i] = np.sqrt(path_loss(d_iu, pl.alpha_irs_user, pl) / (kiu + 1)) * (
            np.sqrt(kiu) * r_los[i] + _cn(r_rng, m))
    return ChannelSet(h, G, r, positions, seed)


def combined_matrix(cs: ChannelSet, k: int) -> np.ndarray:
    """H_k = [diag(r_kᴴ) G; h_kᴴ], so that vᴴ H_k = h_kᴴ + r_kᴴ diag(u) G
    when v = [u 1]ᴴ (i.e. v is the conjugate of the IRS coefficients)."""
    cs_r = cs.r[k].conj()
    return np.vstack([cs_r[:, None] * cs.G, cs.h[k].conj()[None, :]])


def combined_matrices(cs: ChannelSet) -> np.ndarray:
    """Stack of all H_k, shape (K, M+1, N)."""
    return np.stack([combined_matrix(cs, k) for k in range(cs.K)])
