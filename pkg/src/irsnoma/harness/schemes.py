"""Scheme dispatch: one (scheme, instance, channels, seed) -> Outcome."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import algorithms as alg
from .. import baselines as bl
from ..channel import ChannelSet
from ..noma import BeamformingSolution, DecodingOrder, Instance, IrsModel
from .config import parse_scheme


@dataclass
class Outcome:
    sum_rate: float
    iterations: int
    worst: float
    flag: str = "ok"
    irs: str = ""
    order: tuple = ()
    solutions: list = field(default_factory=list)  # BeamformingSolution per slot
    objectives: list = field(default_factory=list)
    converged: bool = True
    srocr_ratio: list = field(default_factory=list)  # terminal λmax/Tr per SROCR call
    srocr_converged: list = field(default_factory=list)

    def dump(self) -> dict:
        return {"irs": self.irs, "order": list(self.order), "sum_rate": self.sum_rate,
                "solutions": [s.to_record() for s in self.solutions]}


def _irs_for(scheme: str, bits: int | None, cfg_bits: int) -> IrsModel:
    if scheme == "ideal":
        return IrsModel("ideal")
    if scheme == "discrete":
        return IrsModel.discrete(bits if bits is not None else cfg_bits)
    if scheme == "one-bit-srocr":
        return IrsModel.discrete(1)
    return IrsModel("continuous")


def depends_on_bits(scheme: str) -> bool:
    return scheme in ("discrete",)


def _fixed(instance, cs, seed, runner) -> tuple:
    res = alg.order_search(instance, cs, seed=seed, mode="fixed", runner=runner)
    flag = "ok" if not res.skipped else f"order fallback ({len(res.skipped)} skipped)"
    return res.solution, res.trace, res.order, flag


def _order_runner(order_irs: str):
    if order_irs == "ideal":
        return lambda i, c, o, s: alg.algorithm1_ideal(i, c, o, seed=s)
    return lambda i, c, o, s: alg.algorithm3_nonideal(i, c, o, seed=s)


def random_order(K: int, seed: int) -> DecodingOrder:
    rng = np.random.default_rng([seed, 7])
    return DecodingOrder(tuple(int(k) for k in rng.permutation(K)))


def run_scheme(name: str, params: dict, cs: ChannelSet, seed: int,
               order_irs: str = "continuous") -> Outcome:
    """Run one scheme on one channel realization and audit the result."""
    scheme, bits = parse_scheme(name)
    irs = _irs_for(scheme, bits, params["B"])
    if scheme in ("noma-exhaustive", "noma-random-order"):
        irs = IrsModel(order_irs)
    inst = Instance.from_dbm(params["N"], params["M"], params["K"], params["P_T"], irs=irs)

    if scheme == "oma":
        res = bl.oma_baseline(inst, cs, seed)
        worst = max(r.worst for r in res.reports)
        return Outcome(res.sum_rate, 1, worst, "ok" if worst <= 1e-6 else "infeasible",
                       str(irs), (), res.solutions)

    runners = {
        "ideal": lambda i, c, o, s: alg.algorithm1_ideal(i, c, o, seed=s),
        "continuous": lambda i, c, o, s: alg.algorithm3_nonideal(i, c, o, seed=s),
        "discrete": lambda i, c, o, s: alg.algorithm3_nonideal(i, c, o, seed=s),
        "one-bit-srocr": lambda i, c, o, s: alg.one_bit_srocr(i, c, o, seed=s),
        "sdr": lambda i, c, o, s: bl.sdr_baseline(i, c, o, seed=s),
        "random-phase": lambda i, c, o, s: bl.random_phase_baseline(i, c, o, seed=s),
        "no-irs": lambda i, c, o, s: bl.no_irs_baseline(i, c, o, seed=s),
    }
    audit_inst = bl.no_irs_instance(inst) if scheme == "no-irs" else inst
    flag = "ok"
    if scheme == "noma-exhaustive":
        res = alg.order_search(inst, cs, seed=seed, mode="exhaustive",
                               runner=_order_runner(order_irs))
        sol, trace, order = res.solution, res.trace, res.order
    elif scheme == "noma-random-order":
        order = random_order(cs.K, seed)
        try:
            sol, trace = _order_runner(order_irs)(inst, cs, order, seed)
        except alg.InitializationError:
            # the zero beamformer is feasible for every order
            sol = BeamformingSolution(np.zeros((cs.K, cs.N), complex),
                                      alg.random_irs_vector(inst, np.random.default_rng(seed)))
            trace, flag = alg.RunTrace(), "ok (order without feasible start, zero beams)"
    else:
        sol, trace, order, flag = _fixed(audit_inst, cs, seed, runners[scheme])
    rep = alg.Problem(audit_inst, cs, order).audit(sol)
    if not rep.feasible:
        flag = "infeasible"
    return Outcome(rep.sum_rate, trace.iterations, rep.worst, flag, str(audit_inst.irs),
                   tuple(order.sequence), [sol], list(trace.objectives), bool(trace.converged),
                   list(trace.srocr_ratio), list(trace.srocr_converged))


def audit_dump(rec: dict, tol: float = 1e-6) -> tuple[bool, float]:
    """Re-verify one persisted solution record; returns (passed, worst)."""
    from ..noma import audit as audit_fn

    cs = ChannelSet.from_record(rec["channels"])
    p = rec["params"]
    kind = rec["irs"]
    if kind.startswith("discrete"):
        irs = IrsModel.discrete(int(kind[kind.index("(") + 1:-1]))
    else:
        irs = IrsModel(kind)
    sols = [BeamformingSolution.from_record(s) for s in rec["solutions"]]
    worst = 0.0
    if rec["scheme"] == "oma":
        single = Instance.from_dbm(p["N"], p["M"], 1, p["P_T"], irs=irs)
        for k, sol in enumerate(sols):
            r = audit_fn(sol, bl.single_user_channels(cs, k), DecodingOrder.identity(1), single, tol)
            worst = max(worst, r.worst)
    else:
        inst = Instance.from_dbm(p["N"], p["M"], p["K"], p["P_T"], irs=irs)
        r = audit_fn(sols[0], cs, DecodingOrder(tuple(rec["order"])), inst, tol)
        worst = r.worst
        if not math.isclose(r.sum_rate, rec["sum_rate"], rel_tol=1e-9, abs_tol=1e-9):
            return False, worst
    return worst <= tol, worst
