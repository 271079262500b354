"""SCA surrogates and the convex subproblem builders.

Builders work in noise-normalized units: ``hs`` holds the combined
matrices H_k / σ, so the noise term in every interference constraint is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conic import (HERMITIAN, SYMMETRIC, Affine, ConicProgram,
                    epigraph_log_reciprocal_product, reciprocal_bound)
from .noma import DecodingOrder, SlackState

LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class RateSurrogate:
    """Affine lower bound const + slope_s·S + slope_i·I of log2(1 + 1/(S·I))."""

    const: float
    slope_s: float
    slope_i: float

    def __call__(self, S, I):
        return self.const + self.slope_s * S + self.slope_i * I

    def affine(self, S: Affine, I: Affine) -> Affine:
        return S * self.slope_s + I * self.slope_i + self.const


def rate_surrogate(s_l: float, i_l: float) -> RateSurrogate:
    if not (s_l > 0 and i_l > 0):
        raise ValueError("expansion point must be strictly positive")
    f = math.log2(1.0 + 1.0 / (s_l * i_l))
    ds = -LOG2E / (s_l + s_l * s_l * i_l)
    di = -LOG2E / (i_l + i_l * i_l * s_l)
    return RateSurrogate(f - ds * s_l - di * i_l, ds, di)


@dataclass(frozen=True)
class QuadraticSurrogate:
    """λ(v) = 2 Re(c · aᴴv) − |c|² with c = v_lᴴ a; a lower bound of |vᴴa|²."""

    a: np.ndarray
    c: complex

    def __call__(self, v) -> float:
        return float(2 * np.real(self.c * np.vdot(self.a, v)) - abs(self.c) ** 2)


def quadratic_surrogate(v_l, a) -> QuadraticSurrogate:
    a = np.asarray(a, complex)
    return QuadraticSurrogate(a, complex(np.vdot(v_l, a)))


@dataclass
class TaylorPoint:
    S: np.ndarray
    I: np.ndarray
    v: np.ndarray | None = None

    @classmethod
    def from_slacks(cls, slacks: SlackState, v=None) -> "TaylorPoint":
        return cls(slacks.S.copy(), slacks.I.copy(), None if v is None else np.asarray(v, complex))

    def __post_init__(self):
        vals = np.concatenate([self.S[~np.isnan(self.S)], self.I[~np.isnan(self.I)]])
        if np.any(vals <= 0):
            raise ValueError("Taylor point slacks must be positive")
        if self.v is not None and abs(self.v[-1] - 1) > 1e-9:
            raise ValueError("last entry of v must be 1")


@dataclass
class Built:
    """A program together with handles on its named variables."""

    program: ConicProgram
    R: dict = field(default_factory=dict)
    S: dict = field(default_factory=dict)
    I: dict = field(default_factory=dict)
    W: list = field(default_factory=list)  # block indices (active)
    V: int | None = None  # block index (SROCR passive)
    v_re: list = field(default_factory=list)  # scalar expressions (ideal passive)
    v_im: list = field(default_factory=list)
    t: Affine | None = None
    n_sic: int = 0
    n_fair: int = 0


def _slack_vars(p, b: Built, order: DecodingOrder, tp: TaylorPoint):
    for k, j in order.pairs():
        b.R[k, j] = p.scalar(f"R_{k}_{j}")
        b.S[k, j] = p.scalar(f"S_{k}_{j}")
        b.I[k, j] = p.scalar(f"I_{k}_{j}")
        sur = rate_surrogate(tp.S[k, j], tp.I[k, j])
        p.leq(b.R[k, j], sur.affine(b.S[k, j], b.I[k, j]), label=f"rate {k}->{j}")


SIC_MODES = ("strict", "slack")


def _sic(p, b: Built, order: DecodingOrder, tp: TaylorPoint, mode: str, gain_kk, interf_kk,
         shift: Affine | None = None):
    """SIC rows R_{k→j} >= log2(1 + 1/(S·I)).

    ``slack`` feeds the epigraph with the (S_kk, I_kk) slacks, which the
    solver may inflate freely whenever SIC binds.  ``strict`` feeds it
    with fresh variables bounded above by the true quantities: S̃ through
    the tangent cut gain_kk <= 2g_l − g_l²·S̃ of 1/S̃ (``gain_kk`` is a
    callback emitting that cut) and Ĩ <= the interference lower bound.
    """
    if mode not in SIC_MODES:
        raise ValueError(f"unknown SIC mode {mode!r}")
    args = {}
    for k in sorted({k for k, _ in order.sic_pairs()}):
        if mode == "slack":
            args[k] = (b.S[k, k], b.I[k, k])
            continue
        st = p.scalar(f"Sx_{k}")
        it = p.scalar(f"Ix_{k}")
        g_l = 1.0 / tp.S[k, k]
        gain_kk(k, st * (-g_l * g_l) + 2.0 * g_l)
        p.leq(it, interf_kk(k), label=f"sic interference {k}")
        args[k] = (st, it)
    for k, j in order.sic_pairs():
        r = b.R[k, j] if shift is None else b.R[k, j] - shift
        epigraph_log_reciprocal_product(p, *args[k], r, label=f"sic {k}->{j}")
        b.n_sic += 1


# Weight of the sum-rate tie-breaker in the restoration objective.  With the
# margin capped, the leftover freedom goes to the sum rate, which keeps the
# optimal W_k rank-one as in the ordinary active step.
RESTORATION_RATE_WEIGHT = 1e-2


def _fairness_row(p, b: Built, diff: Affine, margin: float, label: str):
    """diff >= margin, rescaled to unit coefficient size.

    Users sharing a beam give rows whose coefficients are round-off sized;
    rescaling the homogeneous row leaves its feasible set unchanged but keeps
    the solver well conditioned.  An identically zero row holds for every
    point and is skipped.
    """
    scale = max([abs(c) for c in diff.terms.values()]
                + [float(np.max(np.abs(c))) for c in diff.blocks.values()] + [0.0])
    if scale == 0.0 and margin <= 0.0:
        return
    if margin == 0.0:
        diff = diff / scale
    p.geq(diff, margin, label=label)
    b.n_fair += 1


def _objective(p, b: Built, order: DecodingOrder):
    total = sum((b.R[k, k] for k in range(order.K)), Affine())
    if b.t is not None:
        p.maximize(b.t + total * RESTORATION_RATE_WEIGHT)
    else:
        p.maximize(total)


def build_active(hs: np.ndarray, order: DecodingOrder, v: np.ndarray, tp: TaylorPoint,
                 p_max: float, restoration: bool = False, t_cap: float = 0.05,
                 fair_margin: float = 0.0, sic: str = "strict",
                 rank_penalty: tuple[float, np.ndarray] | None = None) -> Built:
    """Active beamforming subproblem for fixed ``v`` with the rank-one
    constraints on W_k dropped.

    With ``restoration`` the objective becomes the largest uniform SIC
    margin t (capped at ``t_cap`` bits), used to repair initial points.
    ``rank_penalty = (mu, U)`` subtracts mu/P_T · Σ Tr(W_k (I − u_k u_kᴴ)),
    the linearization of Tr(W_k) − λmax(W_k) at the rows u_k of U.
    """
    K, _, N = hs.shape
    p = ConicProgram()
    b = Built(p)
    a = np.einsum("m,jmn->jn", np.asarray(v).conj(), hs).conj()  # a_j = H_jᴴ v
    Q = [np.outer(a[j], a[j].conj()) for j in range(K)]
    b.W = [p.block(f"W_{k}", N, HERMITIAN) for k in range(K)]
    gain = [[Affine.trace(b.W[k], Q[j]) for j in range(K)] for k in range(K)]  # gain[k][j]
    _slack_vars(p, b, order, tp)
    for k, j in order.pairs():
        reciprocal_bound(p, b.S[k, j], gain[k][j], label=f"signal {k}->{j}")
        interf = sum((gain[i][j] for i in order.later(k)), Affine()) + 1.0
        p.geq(b.I[k, j], interf, label=f"interference {k}->{j}")
    if restoration:
        b.t = p.scalar("t")
        p.leq(b.t, t_cap, label="restoration cap")
    _sic(p, b, order, tp, sic,
         lambda k, ub: p.leq(gain[k][k], ub, label=f"sic signal {k}"),
         lambda k: sum((gain[i][k] for i in order.later(k)), Affine()) + 1.0, b.t)
    for j in range(K):
        for hi, lo in order.fairness_chain():
            _fairness_row(p, b, gain[hi][j] - gain[lo][j], fair_margin, f"fairness {hi}>{lo}@{j}")
    p.leq(sum((Affine.trace(b.W[k], np.eye(N)) for k in range(K)), Affine()), p_max,
          label="power")
    _objective(p, b, order)
    if rank_penalty is not None:
        mu, U = rank_penalty
        for k in range(K):
            u = U[k] / np.linalg.norm(U[k])
            p.objective = p.objective - Affine.trace(
                b.W[k], np.eye(N) - np.outer(u, u.conj())) * (mu / p_max)
    return b


def _inner(b: Built, a: np.ndarray) -> tuple[Affine, Affine]:
    """Real and imaginary parts of vᴴa as affine functions of (Re v, Im v)."""
    re, im = Affine(), Affine()
    for m, am in enumerate(a):
        ir = next(iter(b.v_re[m].terms))
        ii = next(iter(b.v_im[m].terms))
        re.terms[ir] = am.real
        re.terms[ii] = am.imag
        im.terms[ir] = am.imag
        im.terms[ii] = -am.real
    return re, im


def build_passive_ideal(hs: np.ndarray, order: DecodingOrder, w: np.ndarray,
                        tp: TaylorPoint, fair_margin: float = 0.0, sic: str = "strict") -> Built:
    """Passive subproblem over v with |v_m| <= 1 (ideal IRS)."""
    K, M1, _ = hs.shape
    p = ConicProgram()
    b = Built(p)
    b.v_re = [p.scalar(f"vre_{m}") for m in range(M1)]
    b.v_im = [p.scalar(f"vim_{m}") for m in range(M1)]
    p.eq(b.v_re[-1], 1.0, label="v last re")
    p.eq(b.v_im[-1], 0.0, label="v last im")
    avec = np.einsum("jmn,kn->kjm", hs, w)  # avec[k, j] = H_j w_k
    parts = {}
    lam = {}
    for k in range(K):
        for j in range(K):
            parts[k, j] = _inner(b, avec[k, j])
            q = quadratic_surrogate(tp.v, avec[k, j])
            re, im = parts[k, j]
            lam[k, j] = (re * q.c.real + im * q.c.imag) * 2.0 - abs(q.c) ** 2
    _slack_vars(p, b, order, tp)
    for k, j in order.pairs():
        reciprocal_bound(p, b.S[k, j], lam[k, j], label=f"signal {k}->{j}")
        zs = [z for i in order.later(k) for z in parts[i, j]]
        p.rsoc(b.I[k, j] - 1.0, Affine.constant(1.0), zs, label=f"interference {k}->{j}")
    _sic(p, b, order, tp, sic,
         lambda k, ub: p.rsoc(ub, Affine.constant(1.0), list(parts[k, k]), label=f"sic signal {k}"),
         lambda k: sum((lam[i, k] for i in order.later(k)), Affine()) + 1.0)
    for j in range(K):
        for hi, lo in order.fairness_chain():
            if np.array_equal(w[hi], w[lo]) and fair_margin <= 0.0:
                continue  # a shared beam satisfies the row for every v
            p.rsoc(lam[hi, j] - fair_margin, Affine.constant(1.0), list(parts[lo, j]),
                   label=f"fairness {hi}>{lo}@{j}")
            b.n_fair += 1
    for m in range(M1 - 1):
        p.soc(Affine.constant(1.0), [b.v_re[m], b.v_im[m]], label=f"amplitude {m}")
    _objective(p, b, order)
    return b


def build_passive_srocr(hs: np.ndarray, order: DecodingOrder, w: np.ndarray, tp: TaylorPoint,
                        omega: float, u_max: np.ndarray | None,
                        symmetry: str = HERMITIAN, fair_margin: float = 0.0,
                        sic: str = "strict") -> Built:
    """Lifted passive subproblem over V = v vᴴ with unit diagonal and the
    eigenvector-fraction constraint u_maxᴴ V u_max >= ω Tr(V)."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError("omega must lie in [0, 1]")
    K, M1, _ = hs.shape
    p = ConicProgram()
    b = Built(p)
    b.V = p.block("V", M1, symmetry)
    avec = np.einsum("jmn,kn->kjm", hs, w)

    def coeff(x):
        c = np.outer(x, x.conj())
        return c.real.astype(complex) if symmetry == SYMMETRIC else c

    gain = {(k, j): Affine.trace(b.V, coeff(avec[k, j])) for k in range(K) for j in range(K)}
    for m in range(M1):
        e = np.zeros((M1, M1), complex)
        e[m, m] = 1.0
        p.eq(Affine.trace(b.V, e), 1.0, label=f"unit diagonal {m}")
    _slack_vars(p, b, order, tp)
    for k, j in order.pairs():
        reciprocal_bound(p, b.S[k, j], gain[k, j], label=f"signal {k}->{j}")
        interf = sum((gain[i, j] for i in order.later(k)), Affine()) + 1.0
        p.geq(b.I[k, j], interf, label=f"interference {k}->{j}")
    _sic(p, b, order, tp, sic,
         lambda k, ub: p.leq(gain[k, k], ub, label=f"sic signal {k}"),
         lambda k: sum((gain[i, k] for i in order.later(k)), Affine()) + 1.0)
    for j in range(K):
        for hi, lo in order.fairness_chain():
            _fairness_row(p, b, gain[hi, j] - gain[lo, j], fair_margin, f"fairness {hi}>{lo}@{j}")
    if omega > 0:
        u = np.asarray(u_max, complex)
        u = u / np.linalg.norm(u)
        c = np.outer(u, u.conj())
        if symmetry == SYMMETRIC:
            c = c.real.astype(complex)
        p.geq(Affine.trace(b.V, c - omega * np.eye(M1)), 0.0, label="eigen fraction")
    _objective(p, b, order)
    return b
