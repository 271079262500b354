"""Alternating optimization drivers, the SROCR engine and the decoding-order search."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelSet, combined_matrices
from .conic import HERMITIAN, SYMMETRIC, SolverSettings, Status, solve
from .noma import (BeamformingSolution, DecodingOrder, FeasibilityReport, Instance, IrsModel,
                   SlackState, audit, circular_distance, enumerate_orders, phase_grid,
                   received_power, slack_from_solution, sum_rate_from_gains)
from .numerics import leading_eigpair, residual_ratio
from .subproblems import (Built, TaylorPoint, build_active, build_passive_ideal,
                          build_passive_srocr)

log = logging.getLogger(__name__)

RETRY_SOLVER = SolverSettings(tol=1e-7, max_iter=400)


class InitializationError(RuntimeError):
    """No SIC/fairness-feasible starting point was found for an order."""


@dataclass
class AOSettings:
    xi: float = 1e-2
    max_iter: int = 50
    retries: int = 1
    audit_tol: float = 1e-6
    sic: str = "strict"
    solver: SolverSettings = field(default_factory=SolverSettings)
    restoration_iters: int = 30
    restoration_cap: float = 0.05  # bits of SIC margin sought by restoration
    passive_inner: int = 20  # SCA refreshes per ideal passive step
    passive_xi: float = 1e-4

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SrocrSettings:
    eps1: float = 1e-3
    eps2: float = 1e-3
    delta0: float = 0.1
    delta_min: float = 1e-6
    max_iter: int = 100

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("eps1 and eps2 must be positive")
        if not 0.0 < self.delta0 <= 1.0:
            raise ValueError("delta0 must lie in (0, 1]")


@dataclass
class RunTrace:
    objectives: list = field(default_factory=list)  # true sum rate, index 0 = initial point
    statuses: list = field(default_factory=list)
    omega: list = field(default_factory=list)  # one trajectory per SROCR call
    srocr_ratio: list = field(default_factory=list)  # terminal λmax/Tr per SROCR call
    srocr_converged: list = field(default_factory=list)
    rank_residuals: list = field(default_factory=list)
    projection: list = field(default_factory=list)
    times: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def tick(self, stage: str, dt: float):
        self.times[stage] = self.times.get(stage, 0.0) + dt

    def to_record(self) -> dict:
        return {k: getattr(self, k) for k in (
            "objectives", "statuses", "omega", "srocr_ratio", "srocr_converged",
            "rank_residuals", "projection", "times", "flags", "iterations", "converged")}


class Problem:
    """Channels plus order, with cached combined matrices."""

    def __init__(self, instance: Instance, cs: ChannelSet, order: DecodingOrder):
        if order.K != cs.K or cs.N != instance.N or cs.M != instance.M:
            raise ValueError("instance, channels and order disagree on dimensions")
        self.instance, self.cs, self.order = instance, cs, order
        self.hs_raw = combined_matrices(cs)
        self.hs = self.hs_raw / math.sqrt(instance.sigma2)  # noise-normalized

    def rate(self, sol: BeamformingSolution) -> float:
        g = received_power(sol, self.cs, self.instance.sigma2, self.hs_raw)
        return sum_rate_from_gains(g, self.order)

    def audit(self, sol, tol: float = 1e-6) -> FeasibilityReport:
        return audit(sol, self.cs, self.order, self.instance, tol, self.hs_raw)

    def slacks(self, sol) -> SlackState:
        return slack_from_solution(sol, self.cs, self.order, self.instance.sigma2,
                                   hs=self.hs_raw)

    def taylor(self, sol) -> TaylorPoint:
        return TaylorPoint.from_slacks(self.slacks(sol), sol.v)


def _solve(built: Built, settings: AOSettings, trace: RunTrace, stage: str):
    """Solve with a bounded number of retries on numerical trouble."""
    attempts = [settings.solver] + [RETRY_SOLVER] * settings.retries
    for n, s in enumerate(attempts):
        t0 = time.perf_counter()
        res = solve(built.program, s)
        trace.tick(stage, time.perf_counter() - t0)
        trace.statuses.append(f"{stage}:{res.status.value}" + (f":retry{n}" if n else ""))
        if res.ok or res.status is Status.INFEASIBLE:
            return res
    return res


def repair_fairness(prob: Problem, sol: BeamformingSolution) -> BeamformingSolution:
    """Scale later-decoded beams down until every fairness row holds.

    Walking the chain in decoding order, w_b is shrunk by the smallest
    factor that brings g[j, b] under g[j, a] at every receiver j.  Shrinking
    only the later beam never breaks an earlier row or the power budget;
    solver round-off makes such violations of order 1e-8 relative.
    """
    w = sol.w.copy()
    for a, b in prob.order.fairness_chain():
        g = received_power(BeamformingSolution(w, sol.v), prob.cs, prob.instance.sigma2,
                           prob.hs_raw)
        over = g[:, b] > g[:, a]
        if np.any(over):
            scale = float(np.min(np.sqrt(g[over, a] / g[over, b])))
            w[b] *= scale * (1.0 - 1e-12)
    return BeamformingSolution(w, sol.v.copy())


def _accept(prob: Problem, incumbent, inc_rate: float, cand, settings: AOSettings,
            trace: RunTrace, stage: str):
    """Keep ``cand`` only if it is audit-feasible and does not lower the sum rate."""
    if cand is None:
        return incumbent, inc_rate
    rep = prob.audit(cand, settings.audit_tol)
    if not rep.feasible and rep.fairness > settings.audit_tol:
        fixed = repair_fairness(prob, cand)
        frep = prob.audit(fixed, settings.audit_tol)
        if frep.feasible:
            trace.flags.append(f"fairness repaired ({rep.fairness:.1e})")
            cand, rep = fixed, frep
    if rep.feasible and rep.sum_rate >= inc_rate:
        return cand, rep.sum_rate
    trace.flags.append(f"rejected {stage} (worst {rep.worst:.2e}, rate {rep.sum_rate:.6f})")
    return incumbent, inc_rate


RANK_TOL = 1e-5
RANK_PENALTIES = (0.1, 1.0, 10.0, 100.0, 1000.0)


def extract_w(res, built: Built) -> tuple[np.ndarray, list[float]]:
    rows, resid = [], []
    for idx in built.W:
        x = res.blocks[idx]
        lam, u = leading_eigpair(x)
        resid.append(residual_ratio(x))
        rows.append(math.sqrt(max(lam, 0.0)) * u)
    return np.array(rows), resid


SHARED_BEAM_TOL = 1e-5


def merge_shared_beams(w: np.ndarray, order: DecodingOrder, tol: float = SHARED_BEAM_TOL):
    """Replace adjacent-order beams that agree to ``tol`` (relative) by their
    average.  Such pairs appear when fairness binds at every receiver; left
    apart by round-off they make the next passive program degenerate.
    Averaging never increases the total power."""
    w = w.copy()
    for a, b in order.fairness_chain():
        scale = max(np.linalg.norm(w[a]), np.linalg.norm(w[b]))
        if scale > 0 and np.linalg.norm(w[a] - w[b]) <= tol * scale:
            w[a] = w[b] = 0.5 * (w[a] + w[b])
    return w


def active_step(prob: Problem, sol: BeamformingSolution, settings: AOSettings, trace: RunTrace,
                restoration: bool = False):
    """One active-beamforming solve.

    ``trace.rank_residuals`` records the residuals of the plain relaxation.
    When that relaxation is not tight (some W_k of rank > 1, which can happen
    once fairness rows bind) the step is re-solved with a growing linearized
    rank penalty until every W_k is rank-one.
    """
    tp = prob.taylor(sol)

    def run(penalty):
        built = build_active(prob.hs, prob.order, sol.v, tp, prob.instance.P_T,
                             restoration=restoration, t_cap=settings.restoration_cap,
                             sic=settings.sic, rank_penalty=penalty)
        return built, _solve(built, settings, trace, "restore" if restoration else "active")

    built, res = run(None)
    if not res.ok:
        return None, res
    w, resid = extract_w(res, built)
    trace.rank_residuals.extend(resid)
    for mu in RANK_PENALTIES:
        if max(resid) <= RANK_TOL:
            break
        built, pres = run((mu, w))
        if not pres.ok:
            break
        res = pres
        w, resid = extract_w(res, built)
    if max(resid) > RANK_TOL:
        trace.flags.append(f"rank refinement incomplete ({max(resid):.1e})")
    return BeamformingSolution(merge_shared_beams(w, prob.order), sol.v.copy()), res


def _common_direction_start(prob: Problem, v: np.ndarray, d: np.ndarray | None = None):
    """Equal power P_T/K along one direction, by default matched to the
    first-decoded user's combined channel."""
    K, N = prob.order.K, prob.instance.N
    if d is None:
        a = prob.hs_raw[prob.order.sequence[0]].conj().T @ v  # H_kᴴ v
        nrm = np.linalg.norm(a)
        d = a / nrm if nrm > 0 else np.eye(N)[0].astype(complex)
    w = np.tile(d * math.sqrt(prob.instance.P_T / K), (K, 1))
    return BeamformingSolution(w, np.asarray(v, complex))


N_DIRECTION_SAMPLES = 2000


def gain_consistent_direction(prob: Problem, v: np.ndarray, rng: np.random.Generator):
    """Unit direction d whose gains |a_jᴴd|² ascend along the decoding order.

    With a common beam and equal powers SINR_{k→j} grows with the observer's
    gain, so such a d satisfies SIC, and fairness holds with equality.  The
    matched directions are tried first, then random ones; among qualifying
    candidates the one with the largest sum rate wins.  ``None`` if none
    qualifies.
    """
    N = prob.instance.N
    a = np.einsum("m,jmn->jn", v.conj(), prob.hs_raw).conj()
    cands = [x / np.linalg.norm(x) for x in a if np.linalg.norm(x) > 0]
    z = rng.standard_normal((N_DIRECTION_SAMPLES, N)) + 1j * rng.standard_normal((N_DIRECTION_SAMPLES, N))
    cands += list(z / np.linalg.norm(z, axis=1, keepdims=True))
    D = np.array(cands)
    c = np.abs(D @ a.conj().T) ** 2  # c[d, j] = |a_jᴴ d|²
    seq = list(prob.order.sequence)
    ok = np.all(np.diff(c[:, seq], axis=1) >= 0, axis=1)
    best, best_rate = None, -math.inf
    for i in np.flatnonzero(ok):
        sol = _common_direction_start(prob, v, D[i])
        r = prob.rate(sol)
        if r > best_rate:
            best, best_rate = D[i], r
    return best


def random_irs_vector(instance: Instance, rng: np.random.Generator) -> np.ndarray:
    theta = rng.uniform(0.0, 2 * np.pi, instance.M)
    v = np.concatenate([np.exp(1j * theta), [1.0 + 0j]])
    if instance.irs.kind == "discrete":
        v = quantize_phases(v, instance.irs.bits)
    return v


def restore(prob: Problem, sol: BeamformingSolution, settings: AOSettings, trace: RunTrace):
    """SCA pass maximizing the uniform SIC margin t over {w_k} until the
    audit passes.  Returns ``None`` if it stalls."""
    best_t = -math.inf
    for _ in range(settings.restoration_iters):
        cand, res = active_step(prob, sol, settings, trace, restoration=True)
        if cand is None:
            return None
        rep = prob.audit(cand, settings.audit_tol)
        if rep.feasible:
            return cand
        t = res.objective
        if t <= best_t + 1e-6:
            return None
        best_t, sol = t, cand
    return None


def initialize(instance: Instance, cs: ChannelSet, order: DecodingOrder, seed: int,
               settings: AOSettings | None = None, trace: RunTrace | None = None,
               v0: np.ndarray | None = None):
    """Random-phase IRS, equal-power common-direction beamformers, and a
    restoration pass if that point violates SIC or fairness."""
    settings = settings or AOSettings()
    trace = trace if trace is not None else RunTrace()
    prob = Problem(instance, cs, order)
    rng = np.random.default_rng(seed)
    v = random_irs_vector(instance, rng) if v0 is None else np.asarray(v0, complex)
    sol = _common_direction_start(prob, v)
    if not prob.audit(sol, settings.audit_tol).feasible:
        d = gain_consistent_direction(prob, v, rng)
        if d is not None:
            trace.flags.append("searched direction")
            sol = _common_direction_start(prob, v, d)
    if not prob.audit(sol, settings.audit_tol).feasible:
        trace.flags.append("restoration")
        restored = restore(prob, sol, settings, trace)
        if restored is None:
            trace.flags.append("initialization infeasible")
            raise InitializationError(f"no feasible start found for order {order}")
        sol = restored
    return sol, prob.slacks(sol)


def _ao(prob: Problem, sol: BeamformingSolution, passive, settings: AOSettings,
        trace: RunTrace, active: bool = True) -> BeamformingSolution:
    rate = prob.rate(sol)
    trace.objectives.append(rate)
    for it in range(settings.max_iter):
        prev = rate
        if active:
            cand, _ = active_step(prob, sol, settings, trace)
            sol, rate = _accept(prob, sol, rate, cand, settings, trace, "active")
        if passive is not None:
            cand = passive(prob, sol, trace)
            sol, rate = _accept(prob, sol, rate, cand, settings, trace, "passive")
        trace.objectives.append(rate)
        trace.iterations = it + 1
        if rate - prev < settings.xi * max(abs(prev), 1e-12):
            trace.converged = True
            break
    return sol


def _start(instance, cs, order, settings, seed, trace, v0=None):
    t0 = time.perf_counter()
    sol, _ = initialize(instance, cs, order, seed, settings, trace, v0)
    trace.tick("init", time.perf_counter() - t0)
    return Problem(instance, cs, order), sol


def _passive_ideal_once(prob: Problem, sol: BeamformingSolution, settings: AOSettings,
                        trace: RunTrace):
    built = build_passive_ideal(prob.hs, prob.order, sol.w, prob.taylor(sol), sic=settings.sic)
    res = _solve(built, settings, trace, "passive")
    if not res.ok:
        return None
    v = np.array([res.value(r) + 1j * res.value(i) for r, i in zip(built.v_re, built.v_im)])
    mod = np.abs(v[:-1])
    over = mod > 1.0
    v[:-1][over] /= mod[over]  # clip solver round-off past the unit circle
    v[-1] = 1.0
    return BeamformingSolution(sol.w.copy(), v)


def passive_ideal_step(prob: Problem, sol: BeamformingSolution, settings: AOSettings,
                       trace: RunTrace):
    """Passive block for the ideal IRS: up to ``settings.passive_inner`` SCA
    refreshes with w fixed, each guarded, until the fractional gain drops
    below ``settings.passive_xi``.  A single linearized step moves v only a
    little, so one refresh per outer iteration stalls the ξ rule early."""
    best, rate = None, prob.rate(sol)
    for _ in range(settings.passive_inner):
        cand = _passive_ideal_once(prob, sol, settings, trace)
        prev = rate
        sol, rate = _accept(prob, sol, rate, cand, settings, trace, "passive inner")
        if sol is cand:
            best = cand
        if best is None or rate - prev < settings.passive_xi * max(abs(prev), 1e-12):
            break
    return best


def algorithm1_ideal(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                     settings: AOSettings | None = None, seed: int = 0):
    """Alternating SCA for the ideal IRS (amplitudes in [0, 1])."""
    if instance.irs.kind != "ideal":
        raise ValueError("algorithm1_ideal requires the ideal IRS model")
    settings = settings or AOSettings()
    trace = RunTrace()
    prob, sol = _start(instance, cs, order, settings, seed, trace)
    sol = _ao(prob, sol, lambda p, s, t: passive_ideal_step(p, s, settings, t), settings, trace)
    return sol, trace


def srocr_engine(builder: Callable[[float, np.ndarray | None], Built], V_init: np.ndarray,
                 settings: SrocrSettings, trace: RunTrace, ao: AOSettings | None = None,
                 history: list | None = None):
    """Sequential rank-one constraint relaxation.

    ``builder(omega, u_max)`` returns the passive program.  Returns the
    last successful V (``V_init`` if even ω = 0 fails) and a converged flag.
    Every successful iterate is appended to ``history`` when one is given.
    """
    ao = ao or AOSettings()
    traj = []
    trace.omega.append(traj)

    def run(omega, u):
        built = builder(omega, u)
        res = _solve(built, ao, trace, "srocr")
        return (res.blocks[built.V], res.objective) if res.ok else (None, None)

    V, obj = run(0.0, None)
    if V is None:
        trace.srocr_ratio.append(float("nan"))
        trace.srocr_converged.append(False)
        return V_init, False
    traj.append(0.0)
    if history is not None:
        history.append(V)
    omega = 0.0
    lam, u = leading_eigpair(V)
    ratio = lam / np.real(np.trace(V))
    delta = min(settings.delta0, max(1.0 - ratio, settings.delta_min))
    converged = False
    for _ in range(settings.max_iter):
        if ratio >= 1.0 - settings.eps1 and abs(1.0 - omega) <= settings.eps1:
            converged = True
            break
        new_omega = min(1.0, ratio + delta)
        V_new, obj_new = run(new_omega, u)
        if V_new is None:
            delta /= 2.0
            if delta < settings.delta_min:
                trace.flags.append("srocr non-converged")
                break
            continue
        change = abs(obj_new - obj)
        V, obj, omega = V_new, obj_new, new_omega
        traj.append(omega)
        if history is not None:
            history.append(V)
        lam, u = leading_eigpair(V)
        ratio = lam / np.real(np.trace(V))
        if abs(1.0 - omega) <= settings.eps1 and change <= settings.eps2:
            converged = True
            break
    trace.srocr_ratio.append(float(ratio))
    trace.srocr_converged.append(converged)
    return V, converged


def v_from_lifted(V: np.ndarray, trace: RunTrace | None = None) -> np.ndarray:
    """Leading factor of V, rotated so the last entry is real positive and
    projected onto unit modulus."""
    lam, u = leading_eigpair(V)
    f = math.sqrt(max(lam, 0.0)) * u
    if abs(f[-1]) > 0:
        f = f * (abs(f[-1]) / f[-1])
    mod = np.abs(f)
    out = np.where(mod > 0, f / np.where(mod > 0, mod, 1.0), 1.0 + 0j)
    out[-1] = 1.0
    dist = float(np.max(np.abs(out - f))) if f.size else 0.0
    if trace is not None:
        trace.projection.append(dist)
    if dist > 1e-3:
        log.debug("unit-modulus projection moved v by %.3e", dist)
    return out


def quantize_phases(v, bits: int) -> np.ndarray:
    """Snap every entry but the last to the circularly nearest B-bit phase."""
    v = np.asarray(v, complex).copy()
    grid = phase_grid(bits)
    ang = np.angle(v[:-1])
    idx = np.argmin(circular_distance(ang[:, None], grid[None, :]), axis=1)
    v[:-1] = np.exp(1j * grid[idx])
    v[-1] = 1.0
    return v


def best_candidate(prob: Problem, sol: BeamformingSolution, vs: list, settings: AOSettings):
    """IRS vector among ``vs`` (terminal SROCR iterate first) with the largest
    audited sum rate; the terminal one when none is feasible."""
    best, best_rate = None, -math.inf
    seen = []
    for v in vs:
        if any(np.array_equal(v, x) for x in seen):
            continue
        seen.append(v)
        cand = BeamformingSolution(sol.w.copy(), v)
        rep = prob.audit(cand, settings.audit_tol)
        if rep.feasible and rep.sum_rate > best_rate:
            best, best_rate = cand, rep.sum_rate
    return best if best is not None else BeamformingSolution(sol.w.copy(), vs[0])


def passive_srocr_step(prob: Problem, sol: BeamformingSolution, settings: AOSettings,
                       srocr: SrocrSettings, trace: RunTrace, symmetry: str = HERMITIAN,
                       finish: Callable[[np.ndarray], np.ndarray] | None = None):
    tp = prob.taylor(sol)

    def builder(omega, u):
        return build_passive_srocr(prob.hs, prob.order, sol.w, tp, omega, u, symmetry,
                                   sic=settings.sic)

    V0 = np.outer(sol.v, sol.v.conj())
    hist: list = []
    V, _ = srocr_engine(builder, V0, srocr, trace, settings, hist)
    finish = finish or (lambda v: v)
    vs = [finish(v_from_lifted(V, trace))] + [finish(v_from_lifted(X)) for X in hist[:-1]]
    return best_candidate(prob, sol, vs, settings)


def algorithm3_nonideal(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                        settings: AOSettings | None = None,
                        srocr: SrocrSettings | None = None, seed: int = 0):
    """Alternating SCA/SROCR for unit-modulus continuous or discrete phases."""
    irs = instance.irs
    if irs.kind not in ("continuous", "discrete"):
        raise ValueError("algorithm3_nonideal requires a continuous or discrete IRS model")
    settings = settings or AOSettings()
    srocr = srocr or SrocrSettings()
    trace = RunTrace()
    prob, sol = _start(instance, cs, order, settings, seed, trace)
    finish = (lambda v: quantize_phases(v, irs.bits)) if irs.kind == "discrete" else None
    sol = _ao(prob, sol, lambda p, s, t: passive_srocr_step(p, s, settings, srocr, t,
                                                           HERMITIAN, finish),
              settings, trace)
    return sol, trace


def _sign_round(v: np.ndarray) -> np.ndarray:
    r = np.real(v)
    r = r * (1.0 if r[-1] >= 0 else -1.0)
    out = np.where(r >= 0, 1.0, -1.0).astype(complex)
    out[-1] = 1.0
    return out


def one_bit_srocr(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                  settings: AOSettings | None = None, srocr: SrocrSettings | None = None,
                  seed: int = 0):
    """1-bit IRS: SROCR on the real-symmetric lift, then sign rounding."""
    if instance.irs.kind != "discrete" or instance.irs.bits != 1:
        raise ValueError("one_bit_srocr requires the 1-bit discrete IRS model")
    settings = settings or AOSettings()
    srocr = srocr or SrocrSettings()
    trace = RunTrace()
    prob, sol = _start(instance, cs, order, settings, seed, trace)

    def passive(p, s, t):
        tp = p.taylor(s)

        def builder(omega, u):
            return build_passive_srocr(p.hs, p.order, s.w, tp, omega, u, SYMMETRIC,
                                       sic=settings.sic)

        hist: list = []
        V, _ = srocr_engine(builder, np.outer(s.v, s.v.conj()).real, srocr, t, settings, hist)
        vs = []
        for X in [V] + hist[:-1]:
            lam, u = leading_eigpair(np.real(X))
            vs.append(_sign_round(math.sqrt(max(lam, 0.0)) * u))
        return best_candidate(p, s, vs, settings)

    sol = _ao(prob, sol, passive, settings, trace)
    return sol, trace


def run_for_model(instance: Instance, cs: ChannelSet, order: DecodingOrder,
                  settings: AOSettings | None = None, srocr: SrocrSettings | None = None,
                  seed: int = 0, one_bit: str = "quantize"):
    """Dispatch on the IRS model; ``one_bit='srocr'`` selects the BQP route for B = 1."""
    irs = instance.irs
    if irs.kind == "ideal":
        return algorithm1_ideal(instance, cs, order, settings, seed)
    if irs.kind == "discrete" and irs.bits == 1 and one_bit == "srocr":
        return one_bit_srocr(instance, cs, order, settings, srocr, seed)
    return algorithm3_nonideal(instance, cs, order, settings, srocr, seed)


@dataclass
class OrderSearchResult:
    order: DecodingOrder
    solution: BeamformingSolution
    sum_rate: float
    trace: RunTrace
    per_order: dict = field(default_factory=dict)  # str(order) -> sum rate
    skipped: list = field(default_factory=list)


def default_order(cs: ChannelSet) -> DecodingOrder:
    """Decode users by ascending direct-channel strength (weakest first)."""
    return DecodingOrder(tuple(int(k) for k in np.argsort(np.linalg.norm(cs.h, axis=1),
                                                           kind="stable")))


def order_search(instance: Instance, cs: ChannelSet, settings: AOSettings | None = None,
                 seed: int = 0, mode="exhaustive", runner=None) -> OrderSearchResult:
    """Best sum rate over decoding orders.

    ``mode`` is ``"exhaustive"``, ``"fixed"`` or a :class:`DecodingOrder`.
    ``"fixed"`` runs the default order, falling back to the next order in
    lexicographic sequence only when an order admits no feasible start.  ``runner(instance, cs, order, seed)`` returns
    ``(solution, trace)``; by default it dispatches on the IRS model.
    """
    runner = runner or (lambda i, c, o, s: run_for_model(i, c, o, settings, None, s))
    first_only = mode == "fixed"
    if mode == "exhaustive":
        orders = enumerate_orders(cs.K)
    elif mode == "fixed":
        d = default_order(cs)
        orders = [d] + [o for o in enumerate_orders(cs.K) if o != d]
    elif isinstance(mode, DecodingOrder):
        orders = [mode]
    else:
        raise ValueError(f"unknown order mode {mode!r}")
    best = None
    per, skipped = {}, []
    for o in orders:
        try:
            sol, tr = runner(instance, cs, o, seed)
        except InitializationError:
            skipped.append(str(o))
            continue
        r = Problem(instance, cs, o).rate(sol)
        per[str(o)] = r
        if best is None or r > best[2]:
            best = (o, sol, r, tr)
        if first_only:
            break
    if best is None:
        raise RuntimeError(f"every decoding order was initialization-infeasible: {skipped}")
    return OrderSearchResult(best[0], best[1], best[2], best[3], per, skipped)
