"""NOMA semantics: decoding orders, SINRs, rates and the feasibility audit.

Received powers are expressed in noise-normalized units (divided by σ²)
throughout; rates are in bits/s/Hz.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, combined_matrices, dbm_to_mw

MAX_EXHAUSTIVE_USERS = 7
EPS_FLOOR_MW = 1e-12


@dataclass(frozen=True)
class IrsModel:
    kind: str = "ideal"  # "ideal" | "continuous" | "discrete"
    bits: int = 0

    def __post_init__(self):
        if self.kind not in ("ideal", "continuous", "discrete"):
            raise ValueError(f"unknown IRS model {self.kind!r}")
        if self.kind == "discrete" and self.bits < 1:
            raise ValueError("discrete IRS needs at least one resolution bit")

    @classmethod
    def discrete(cls, bits: int) -> "IrsModel":
        return cls("discrete", bits)

    def __str__(self):
        return f"discrete({self.bits})" if self.kind == "discrete" else self.kind


@dataclass(frozen=True)
class Instance:
    N: int
    M: int
    K: int
    P_T: float  # mW
    sigma2: float  # mW
    irs: IrsModel = IrsModel()

    def __post_init__(self):
        if self.N < 1 or self.K < 1 or self.M < 0:
            raise ValueError("need N, K >= 1 and M >= 0")
        if self.P_T <= 0 or self.sigma2 <= 0:
            raise ValueError("power budget and noise power must be positive")

    @classmethod
    def from_dbm(cls, N, M, K, p_dbm=10.0, noise_dbm=-90.0, irs=IrsModel()):
        return cls(N, M, K, dbm_to_mw(p_dbm), dbm_to_mw(noise_dbm), irs)

    def with_irs(self, irs: IrsModel) -> "Instance":
        return Instance(self.N, self.M, self.K, self.P_T, self.sigma2, irs)


@dataclass(frozen=True)
class DecodingOrder:
    """``sequence[p]`` is the user decoded at position ``p`` (0-based)."""

    sequence: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.sequence) != list(range(len(self.sequence))):
            raise ValueError(f"{self.sequence} is not a permutation")

    @classmethod
    def identity(cls, k: int) -> "DecodingOrder":
        return cls(tuple(range(k)))

    @property
    def K(self) -> int:
        return len(self.sequence)

    @property
    def position(self) -> tuple[int, ...]:
        """Ω(k) for each user k (0-based)."""
        pos = [0] * self.K
        for p, k in enumerate(self.sequence):
            pos[k] = p
        return tuple(pos)

    def later(self, k: int) -> list[int]:
        """Users decoded after k, i.e. k's interferers."""
        return list(self.sequence[self.position[k] + 1:])

    def pairs(self) -> list[tuple[int, int]]:
        """All (k, j) with Ω(k) <= Ω(j)."""
        pos = self.position
        return [(k, j) for k in range(self.K) for j in range(self.K) if pos[k] <= pos[j]]

    def sic_pairs(self) -> list[tuple[int, int]]:
        """All (k, j) with Ω(k) < Ω(j)."""
        pos = self.position
        return [(k, j) for k in range(self.K) for j in range(self.K) if pos[k] < pos[j]]

    def fairness_chain(self) -> list[tuple[int, int]]:
        """Adjacent (earlier, later) user pairs along the decoding sequence."""
        s = self.sequence
        return [(s[p], s[p + 1]) for p in range(self.K - 1)]

    def __str__(self):
        return "-".join(str(k) for k in self.sequence)


@dataclass
class BeamformingSolution:
    """``w`` is K×N (row k is w_k); ``v`` has length M+1 with v[-1] = 1."""

    w: np.ndarray
    v: np.ndarray

    def copy(self) -> "BeamformingSolution":
        return BeamformingSolution(self.w.copy(), self.v.copy())

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))

    @property
    def irs_coefficients(self) -> np.ndarray:
        """u = conj(v[:M])."""
        return self.v[:-1].conj()

    def to_record(self) -> dict:
        def flat(a):
            a = np.asarray(a, complex).ravel()
            return np.column_stack([a.real, a.imag]).tolist()
        return {"w_shape": list(self.w.shape), "w": flat(self.w), "v": flat(self.v)}

    @classmethod
    def from_record(cls, rec: dict) -> "BeamformingSolution":
        def unflat(x):
            a = np.asarray(x, float).reshape(-1, 2)
            return a[:, 0] + 1j * a[:, 1]
        return cls(unflat(rec["w"]).reshape(rec["w_shape"]), unflat(rec["v"]))


@dataclass
class SlackState:
    """Arrays indexed ``[k, j]``; NaN where Ω(k) > Ω(j)."""

    S: np.ndarray
    I: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name in ("S", "I"):
            a = getattr(self, name)
            vals = a[~np.isnan(a)]
            if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
                raise ValueError(f"slack {name} must be finite and positive")


def received_power(sol: BeamformingSolution, cs: ChannelSet, sigma2: float,
                   hs: np.ndarray | None = None) -> np.ndarray:
    """g[j, k] = |vᴴ H_j w_k|² / σ²."""
    if hs is None:
        hs = combined_matrices(cs)
    eff = np.einsum("m,jmn->jn", sol.v.conj(), hs)
    return np.abs(eff @ sol.w.T) ** 2 / sigma2


def _sinr_from_gains(g: np.ndarray, order: DecodingOrder, k: int, j: int) -> float:
    pos = order.position
    if pos[k] > pos[j]:
        raise ValueError(f"user {j} cannot decode user {k}: Ω({k}) > Ω({j})")
    interference = sum(g[j, i] for i in order.later(k))
    return float(g[j, k] / (interference + 1.0))


def sinr(sol, cs, order: DecodingOrder, k: int, j: int, sigma2: float) -> float:
    return _sinr_from_gains(received_power(sol, cs, sigma2), order, k, j)


def rate_from_sinr(s: float) -> float:
    return math.log2(1.0 + s)


def rate(sol, cs, order, k, j, sigma2) -> float:
    return rate_from_sinr(sinr(sol, cs, order, k, j, sigma2))


def rates_from_gains(g: np.ndarray, order: DecodingOrder) -> np.ndarray:
    """R[k, j] = R_{k→j}; NaN where undefined."""
    K = order.K
    out = np.full((K, K), np.nan)
    for k, j in order.pairs():
        out[k, j] = rate_from_sinr(_sinr_from_gains(g, order, k, j))
    return out


def sum_rate_from_gains(g: np.ndarray, order: DecodingOrder) -> float:
    return float(sum(rate_from_sinr(_sinr_from_gains(g, order, k, k)) for k in range(order.K)))


def sum_rate(sol, cs, order, sigma2) -> float:
    return sum_rate_from_gains(received_power(sol, cs, sigma2), order)


def phase_grid(bits: int) -> np.ndarray:
    return 2 * np.pi * np.arange(2 ** bits) / 2 ** bits


def circular_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


@dataclass
class FeasibilityReport:
    """Worst violation per constraint family (0 when satisfied)."""

    sic: float
    fairness: float
    power: float
    reflection: float
    irs_model: str
    tol: float
    sum_rate: float = float("nan")
    details: dict = field(default_factory=dict)

    @property
    def worst(self) -> float:
        return max(self.sic, self.fairness, self.power, self.reflection)

    @property
    def feasible(self) -> bool:
        return self.worst <= self.tol

    def to_record(self) -> dict:
        return {"sic": self.sic, "fairness": self.fairness, "power": self.power,
                "reflection": self.reflection, "irs_model": self.irs_model,
                "tol": self.tol, "sum_rate": self.sum_rate, "worst": self.worst,
                "feasible": self.feasible}

    def to_text(self) -> str:
        status = "FEASIBLE" if self.feasible else "INFEASIBLE"
        return "\n".join([
            f"feasibility audit ({self.irs_model}, tol={self.tol:g}): {status}",
            f"  sum rate          {self.sum_rate:.6f} bit/s/Hz",
            f"  SIC decoding      {self.sic:.3e}",
            f"  rate fairness     {self.fairness:.3e}",
            f"  transmit power    {self.power:.3e}",
            f"  IRS element set   {self.reflection:.3e}",
        ])


def reflection_violation(v: np.ndarray, irs: IrsModel) -> float:
    v = np.asarray(v, complex)
    worst = float(abs(v[-1] - 1.0))
    u = v[:-1]
    if u.size == 0:
        return worst
    mod = np.abs(u)
    if irs.kind == "ideal":
        worst = max(worst, float(np.max(mod - 1.0)))
    else:
        worst = max(worst, float(np.max(np.abs(mod - 1.0))))
    if irs.kind == "discrete":
        ang = np.angle(u)
        grid = phase_grid(irs.bits)
        dist = np.min(circular_distance(ang[:, None], grid[None, :]), axis=1)
        worst = max(worst, float(np.max(dist)))
    return max(worst, 0.0)


def audit(sol: BeamformingSolution, cs: ChannelSet, order: DecodingOrder,
          instance: Instance, tol: float = 1e-6, hs=None) -> FeasibilityReport:
    """Check SIC, fairness, power and IRS-set membership.

    SIC is measured in bits (R_{k→k} − R_{k→j}), fairness in
    noise-normalized received power, power relative to P_T.
    """
    g = received_power(sol, cs, instance.sigma2, hs)
    R = rates_from_gains(g, order)
    sic = 0.0
    for k, j in order.sic_pairs():
        sic = max(sic, R[k, k] - R[k, j])
    fair = 0.0
    for a, b in order.fairness_chain():
        fair = max(fair, float(np.max(g[:, b] - g[:, a])))
    power = max(0.0, (sol.power - instance.P_T) / instance.P_T)
    refl = reflection_violation(sol.v, instance.irs)
    return FeasibilityReport(float(sic), fair, power, refl, str(instance.irs), tol,
                             float(np.nansum(np.diag(R))))


def enumerate_orders(k: int) -> list[DecodingOrder]:
    if k > MAX_EXHAUSTIVE_USERS:
        raise ValueError(f"K={k} gives {math.factorial(k)} orders; "
                         f"exhaustive search is limited to K <= {MAX_EXHAUSTIVE_USERS}, "
                         "use a fixed order instead")
    return [DecodingOrder(p) for p in itertools.permutations(range(k))]


def slack_from_gains(g: np.ndarray, order: DecodingOrder, floor: float) -> SlackState:
    K = order.K
    S = np.full((K, K), np.nan)
    I = np.full((K, K), np.nan)
    R = np.full((K, K), np.nan)
    for k, j in order.pairs():
        S[k, j] = 1.0 / max(g[j, k], floor)
        I[k, j] = sum(g[j, i] for i in order.later(k)) + 1.0
        R[k, j] = math.log2(1.0 + 1.0 / (S[k, j] * I[k, j]))
    return SlackState(S, I, R)


def slack_from_solution(sol, cs, order, sigma2, eps_floor: float = EPS_FLOOR_MW,
                        hs=None) -> SlackState:
    """Slacks at equality, in noise-normalized units (I includes the unit noise)."""
    g = received_power(sol, cs, sigma2, hs)
    return slack_from_gains(g, order, eps_floor / sigma2)
