"""Comparison schemes: SDR with Gaussian randomization, random phases,
no IRS, and IRS-aided TDMA."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import (AOSettings, Problem, RunTrace, _ao, _solve, _start, quantize_phases,
                         random_irs_vector, v_from_lifted)
from .channel import ChannelSet, combined_matrix
from .conic import HERMITIAN
from .noma import BeamformingSolution, DecodingOrder, Instance, IrsModel, audit
from .numerics import residual_ratio
from .subproblems import build_passive_srocr

SDR_RANK_TOL = 1e-5


def gaussian_candidates(V: np.ndarray, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Unit-modulus vectors from the phases of samples of CN(0, V), rotated
    so the last entry is 1."""
    vals, vecs = np.linalg.eigh(0.5 * (V + V.conj().T))
    L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    out = []
    for _ in range(n):
        z = (rng.standard_normal(V.shape[0]) + 1j * rng.standard_normal(V.shape[0])) / math.sqrt(2)
        xi = L @ z
        ph = np.angle(xi) - np.angle(xi[-1])
        v = np.exp(1j * ph)
        v[-1] = 1.0
        out.append(v)
    return out


def sdr_passive_step(prob: Problem, sol: BeamformingSolution, settings: AOSettings,
                     trace: RunTrace, n_randomizations: int, rng: np.random.Generator):
    built = build_passive_srocr(prob.hs, prob.order, sol.w, prob.taylor(sol), 0.0, None,
                                HERMITIAN, sic=settings.sic)
    res = _solve(built, settings, trace, "sdr")
    if not res.ok:
        return None
    V = res.blocks[built.V]
    trace.srocr_ratio.append(float(np.linalg.eigvalsh(V)[-1] / np.real(np.trace(V))))
    if residual_ratio(V) <= SDR_RANK_TOL:
        return BeamformingSolution(sol.w.copy(), v_from_lifted(V, trace))
    best, best_rate = None, -math.inf
    for v in gaussian_candidates(V, n_randomizations, rng):
        cand = BeamformingSolution(sol.w.copy(), v)
        rep = prob.audit(cand, settings.audit_tol)
        if rep.feasible and rep.sum_rate > best_rate:
            best, best_rate = cand, rep.sum_rate
    if best is None:
        trace.flags.append("sdr randomization found no feasible candidate")
    return best


def sdr_baseline(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                 settings: AOSettings | None = None, seed: int = 0,
                 n_randomizations: int = 100):
    """AO with the passive step solved as a plain SDR (ω = 0) and Gaussian
    randomization whenever the relaxation is not rank-one."""
    if instance.irs.kind != "continuous":
        raise ValueError("the SDR baseline works on the continuous unit-modulus model")
    settings = settings or AOSettings()
    trace = RunTrace()
    prob, sol = _start(instance, cs, order, settings, seed, trace)
    rng = np.random.default_rng([seed, 1])
    sol = _ao(prob, sol, lambda p, s, t: sdr_passive_step(p, s, settings, t, n_randomizations, rng),
              settings, trace)
    return sol, trace


def random_phase_baseline(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                          settings: AOSettings | None = None, seed: int = 0):
    """Random unit-modulus IRS phases kept fixed; only {w_k} is optimized."""
    settings = settings or AOSettings()
    trace = RunTrace()
    v = random_irs_vector(instance.with_irs(IrsModel("continuous")), np.random.default_rng(seed))
    prob, sol = _start(instance, cs, order, settings, seed, trace, v0=v)
    sol = _ao(prob, sol, None, settings, trace)
    return sol, trace


def no_irs_instance(instance: Instance) -> Instance:
    """The reflection-free vector v = [0, …, 0, 1] is audited against the
    amplitude-bounded model, the only one that contains it."""
    return instance.with_irs(IrsModel("ideal"))


def no_irs_baseline(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                    settings: AOSettings | None = None, seed: int = 0):
    """BS-only NOMA: v = [0, …, 0, 1] removes every reflected path."""
    settings = settings or AOSettings()
    trace = RunTrace()
    v = np.zeros(instance.M + 1, complex)
    v[-1] = 1.0
    prob, sol = _start(no_irs_instance(instance), cs, order, settings, seed, trace, v0=v)
    sol = _ao(prob, sol, None, settings, trace)
    return sol, trace


def single_user_channels(cs: ChannelSet, k: int) -> ChannelSet:
    return ChannelSet(cs.h[k:k + 1], cs.G, cs.r[k:k + 1], cs.user_positions[k:k + 1], cs.seed)


def align_phases(b: np.ndarray) -> np.ndarray:
    """v maximizing |vᴴ b| over unit-modulus v with v_{M+1} = 1: every
    reflected term is rotated onto the phase of the direct term."""
    v = np.exp(1j * (np.angle(b[:-1]) - np.angle(b[-1])))
    return np.concatenate([v, [1.0 + 0j]])


def mrt_alignment(instance: Instance, Hk: np.ndarray, v0: np.ndarray, tol: float = 1e-4,
                  max_iter: int = 200):
    """Single-user alternation: MRT for w, per-element phase alignment for v.

    Returns ``(w, v, gain)`` with gain = |vᴴ H_k w|² (not noise-normalized).
    """
    v = np.asarray(v0, complex)
    gain = 0.0
    w = None
    for _ in range(max_iter):
        c = Hk.conj().T @ v  # (vᴴH_k)ᴴ
        nrm = np.linalg.norm(c)
        w = math.sqrt(instance.P_T) * c / nrm if nrm > 0 else np.zeros(Hk.shape[1], complex)
        v = align_phases(Hk @ w)
        if instance.irs.kind == "discrete":
            v = quantize_phases(v, instance.irs.bits)
        new = float(abs(np.vdot(v, Hk @ w)) ** 2)
        if abs(new - gain) <= tol * max(new, 1e-300):
            gain = new
            break
        gain = new
    # finish on the MRT beam of the final v, i.e. gain = P_T‖c‖²
    c = Hk.conj().T @ v
    nrm = np.linalg.norm(c)
    if nrm > 0:
        w = math.sqrt(instance.P_T) * c / nrm
        gain = float(abs(np.vdot(v, Hk @ w)) ** 2)
    return w, v, gain


@dataclass
class OmaResult:
    sum_rate: float
    rates: list
    solutions: list  # per-slot BeamformingSolution (single-user)
    reports: list = field(default_factory=list)


def oma_baseline(instance: Instance, cs: ChannelSet, seed: int = 0) -> OmaResult:
    """Equal-length TDMA slots, each with its own single-user IRS design."""
    rng = np.random.default_rng(seed)
    rates, sols, reports = [], [], []
    single = Instance(instance.N, instance.M, 1, instance.P_T, instance.sigma2, instance.irs)
    for k in range(cs.K):
        Hk = combined_matrix(cs, k)
        v0 = random_irs_vector(instance, rng)
        w, v, gain = mrt_alignment(instance, Hk, v0)
        sol = BeamformingSolution(w[None, :], v)
        rates.append(math.log2(1.0 + gain / instance.sigma2))
        sols.append(sol)
        reports.append(audit(sol, single_user_channels(cs, k), DecodingOrder.identity(1), single))
    return OmaResult(float(np.mean(rates)), rates, sols, reports)


def single_user_reference(instance: Instance, cs: ChannelSet, n_starts: int = 8,
                          seed: int = 0) -> float:
    """Reference rate for K = 1.

    N = 1 is closed form: with MRT the gain is P_T(|h| + Σ_m |r_m G_m|)²,
    attained by unit-amplitude aligned phases.  For N > 1 the best of
    several MRT/alignment fixed points is returned.
    """
    if cs.K != 1:
        raise ValueError("single-user reference needs K = 1")
    Hk = combined_matrix(cs, 0)
    if cs.N == 1:
        b = Hk[:, 0]
        amp = abs(b[-1]) + float(np.sum(np.abs(b[:-1])))
        return math.log2(1.0 + instance.P_T * amp ** 2 / instance.sigma2)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_starts):
        v0 = np.concatenate([np.exp(1j * rng.uniform(0, 2 * np.pi, cs.M)), [1.0]])
        _, _, gain = mrt_alignment(instance.with_irs(IrsModel("continuous")), Hk, v0,
                                   tol=1e-12, max_iter=2000)
        best = max(best, gain)
    return math.log2(1.0 + best / instance.sigma2)
