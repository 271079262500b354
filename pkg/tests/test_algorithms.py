import math

import numpy as np
import pytest

from irsnoma import algorithms as alg
from irsnoma.channel import Geometry, combined_matrix, sample_channels
from irsnoma.noma import (BeamformingSolution, DecodingOrder, Instance, IrsModel, audit, enumerate_orders,
                          received_power)
from irsnoma.subproblems import build_passive_srocr

from oracles import one_bit_grid_oracle


def inst_for(N, M, K, irs="ideal", bits=0):
    model = IrsModel.discrete(bits) if irs == "discrete" else IrsModel(irs)
    return Instance.from_dbm(N, M, K, irs=model)


def test_settings_validation():
    with pytest.raises(ValueError):
        alg.AOSettings(xi=0)
    with pytest.raises(ValueError):
        alg.SrocrSettings(delta0=0)
    with pytest.raises(ValueError):
        alg.SrocrSettings(eps1=-1)


def test_quantize_examples():
    v = np.array([np.exp(0.4j * np.pi), np.exp(1.9j * np.pi), np.exp(0.6j * np.pi), 1])
    q = alg.quantize_phases(v, 1)
    np.testing.assert_allclose(q, [1, 1, -1, 1], atol=1e-12)
    on = np.array([np.exp(0.5j * np.pi), -1, 1])
    np.testing.assert_allclose(alg.quantize_phases(on, 2), on, atol=1e-12)
    assert alg.quantize_phases(v, 3)[-1] == 1


def test_single_user_init_is_mrt_at_full_power():
    cs = sample_channels(3, 10, 1, seed=0)
    inst = inst_for(3, 10, 1)
    sol, slacks = alg.initialize(inst, cs, DecodingOrder.identity(1), seed=0)
    assert sol.power == pytest.approx(inst.P_T, rel=1e-12)
    a = combined_matrix(cs, 0).conj().T @ sol.v
    assert abs(np.vdot(a / np.linalg.norm(a), sol.w[0] / np.linalg.norm(sol.w[0]))) == pytest.approx(1)


def test_gain_consistent_two_user_init_passes_directly():
    # order the users by their gain along the matched common direction
    for seed in range(5):
        cs = sample_channels(2, 10, 2, seed=seed)
        inst = inst_for(2, 10, 2, "continuous")
        v = alg.random_irs_vector(inst, np.random.default_rng(seed))
        order0 = DecodingOrder((0, 1))
        sol = alg._common_direction_start(alg.Problem(inst, cs, order0), v)
        g = received_power(sol, cs, inst.sigma2)[:, 0]
        order = DecodingOrder(tuple(int(i) for i in np.argsort(g)))
        trace = alg.RunTrace()
        s, _ = alg.initialize(inst, cs, order, seed, trace=trace, v0=v)
        if order.sequence[0] == 0:  # matched to the first-decoded user
            assert "searched direction" not in trace.flags
        assert alg.Problem(inst, cs, order).audit(s).feasible


def test_init_deterministic_and_feasible_for_all_orders():
    cs = sample_channels(2, 10, 3, seed=4)
    inst = inst_for(2, 10, 3, "continuous")
    for order in enumerate_orders(3):
        a, sa = alg.initialize(inst, cs, order, seed=1)
        b, sb = alg.initialize(inst, cs, order, seed=1)
        assert np.array_equal(a.w, b.w) and np.array_equal(a.v, b.v)
        assert alg.Problem(inst, cs, order).audit(a).feasible
        assert np.all(np.abs(np.abs(a.v) - 1) < 1e-12)


def test_discrete_init_on_grid():
    inst = inst_for(2, 10, 2, "discrete", 2)
    v = alg.random_irs_vector(inst, np.random.default_rng(0))
    ang = np.mod(np.angle(v[:-1]), np.pi / 2)
    assert np.all(np.minimum(ang, np.pi / 2 - ang) < 1e-12)


def test_algorithm1_converges_and_is_monotone():
    cs = sample_channels(2, 30, 4, seed=0)
    inst = inst_for(2, 30, 4)
    order = alg.default_order(cs)
    sol, tr = alg.algorithm1_ideal(inst, cs, order, seed=0)
    assert tr.converged and tr.iterations <= 15
    assert np.min(np.diff(tr.objectives)) >= -1e-6
    rep = audit(sol, cs, order, inst)
    assert rep.feasible and rep.sum_rate == pytest.approx(tr.objectives[-1])
    again, _ = alg.algorithm1_ideal(inst, cs, order, seed=0)
    assert np.array_equal(again.w, sol.w) and np.array_equal(again.v, sol.v)


def test_algorithm1_requires_ideal():
    cs = sample_channels(2, 5, 2, seed=0)
    with pytest.raises(ValueError):
        alg.algorithm1_ideal(inst_for(2, 5, 2, "continuous"), cs, DecodingOrder.identity(2))
    with pytest.raises(ValueError):
        alg.algorithm3_nonideal(inst_for(2, 5, 2), cs, DecodingOrder.identity(2))
    with pytest.raises(ValueError):
        alg.one_bit_srocr(inst_for(2, 5, 2, "discrete", 2), cs, DecodingOrder.identity(2))


def _srocr_setup(seed=0, M=5):
    cs = sample_channels(2, M, 2, seed=seed)
    inst = inst_for(2, M, 2, "continuous")
    order = alg.default_order(cs)
    sol, _ = alg.initialize(inst, cs, order, seed=seed)
    prob = alg.Problem(inst, cs, order)
    tp = prob.taylor(sol)
    return prob, sol, lambda om, u: build_passive_srocr(prob.hs, order, sol.w, tp, om, u)


def test_srocr_engine_terminates_with_rank_one():
    prob, sol, builder = _srocr_setup()
    tr = alg.RunTrace()
    V, conv = alg.srocr_engine(builder, np.outer(sol.v, sol.v.conj()), alg.SrocrSettings(), tr)
    assert conv
    lam = np.linalg.eigvalsh(V)[-1]
    assert lam / np.trace(V).real >= 1 - 1e-3
    traj = tr.omega[0]
    assert traj[0] == 0.0 and traj[-1] >= 1 - 1e-3
    assert all(b >= a for a, b in zip(traj, traj[1:]))


def test_srocr_engine_confirmation_solve_when_already_rank_one():
    prob, sol, builder = _srocr_setup(seed=1)
    tr = alg.RunTrace()
    alg.srocr_engine(builder, np.outer(sol.v, sol.v.conj()), alg.SrocrSettings(), tr)
    # relaxation already tight: a single confirmation solve at ω = 1
    assert tr.srocr_ratio[0] >= 1 - 1e-3
    assert tr.omega[0] == [0.0, 1.0]


def test_srocr_engine_step_halving_and_underflow():
    prob, sol, builder = _srocr_setup()
    calls = []

    def failing(omega, u):
        calls.append(omega)
        b = builder(omega, u)
        if omega > 0:  # make every tightened program infeasible
            b.program.geq(b.R[0, 0], 1e9)
        return b

    tr = alg.RunTrace()
    s = alg.SrocrSettings(delta0=0.1, delta_min=1e-8)
    V, conv = alg.srocr_engine(failing, np.eye(6), s, tr)
    assert not conv and "srocr non-converged" in tr.flags
    assert calls[0] == 0.0 and len(calls) > 2
    assert np.all(np.diff(calls[1:]) <= 0)  # ω targets shrink as δ halves
    assert V.shape == (6, 6) and tr.omega[0] == [0.0]


def test_srocr_engine_returns_init_when_relaxation_fails():
    prob, sol, builder = _srocr_setup()

    def broken(omega, u):
        b = builder(omega, u)
        b.program.geq(b.R[0, 0], 1e9)
        return b

    V0 = np.outer(sol.v, sol.v.conj())
    tr = alg.RunTrace()
    V, conv = alg.srocr_engine(broken, V0, alg.SrocrSettings(), tr)
    assert not conv and V is V0


def test_v_from_lifted_normalizes_last_entry():
    rng = np.random.default_rng(0)
    v = np.exp(1j * rng.uniform(0, 6, 5))
    V = np.outer(v, v.conj()) * np.exp(0j)
    out = alg.v_from_lifted(V)
    assert out[-1] == 1
    np.testing.assert_allclose(out, v * np.conj(v[-1]), atol=1e-10)


def test_algorithm3_small_instance():
    cs = sample_channels(2, 5, 3, seed=2)
    for irs, bits in (("continuous", 0), ("discrete", 2)):
        inst = inst_for(2, 5, 3, irs, bits)
        order = alg.default_order(cs)
        sol, tr = alg.algorithm3_nonideal(inst, cs, order, seed=2)
        rep = audit(sol, cs, order, inst)
        assert rep.feasible
        d = np.diff(tr.objectives)
        assert np.min(d) >= (0.0 if irs == "discrete" else -1e-6)
        assert all(r >= 1 - 1e-3 for r, c in zip(tr.srocr_ratio, tr.srocr_converged) if c)


def test_one_bit_toy_matches_oracle():
    geo = Geometry(irs_rows=2)
    for seed in range(3):
        cs = sample_channels(1, 2, 2, seed=seed, geometry=geo)
        inst = inst_for(1, 2, 2, "discrete", 1)
        order = alg.default_order(cs)
        sol, tr = alg.one_bit_srocr(inst, cs, order, seed=seed)
        rep = audit(sol, cs, order, inst)
        assert rep.feasible
        assert np.all(np.isin(sol.v.real, [-1.0, 1.0])) and np.all(sol.v.imag == 0)
        ref = one_bit_grid_oracle(cs, inst, order)
        assert rep.sum_rate >= 0.98 * ref
        assert rep.sum_rate <= ref * (1 + 1e-3) + 1e-9


def test_order_search_properties():
    cs = sample_channels(2, 10, 2, seed=3)
    inst = inst_for(2, 10, 2)
    res = alg.order_search(inst, cs, seed=3)
    assert set(res.per_order) == {"0-1", "1-0"}
    for o in enumerate_orders(2):
        single = alg.order_search(inst, cs, seed=3, mode=o)
        assert res.sum_rate >= single.sum_rate - 1e-12
    fixed = alg.order_search(inst, cs, seed=3, mode="fixed")
    assert fixed.order == alg.default_order(cs) or fixed.skipped
    one = sample_channels(2, 10, 1, seed=3)
    r1 = alg.order_search(inst_for(2, 10, 1), one, seed=3)
    direct, _ = alg.algorithm1_ideal(inst_for(2, 10, 1), one, DecodingOrder.identity(1), seed=3)
    assert r1.sum_rate == pytest.approx(alg.Problem(inst_for(2, 10, 1), one,
                                                    DecodingOrder.identity(1)).rate(direct))
    with pytest.raises(ValueError):
        alg.order_search(inst, cs, mode="bogus")


def test_order_search_reports_skips():
    cs = sample_channels(2, 5, 2, seed=0)
    inst = inst_for(2, 5, 2)

    def picky(i, c, o, s):
        if o.sequence == (0, 1):
            raise alg.InitializationError("no start")
        return alg.algorithm1_ideal(i, c, o, seed=s)

    res = alg.order_search(inst, cs, runner=picky)
    assert res.skipped == ["0-1"] and res.order.sequence == (1, 0)

    def never(i, c, o, s):
        raise alg.InitializationError("no start")

    with pytest.raises(RuntimeError):
        alg.order_search(inst, cs, runner=never)


def test_shared_beam_merge():
    order = DecodingOrder((0, 1, 2))
    w = np.array([[1.0, 1j], [1.0 + 1e-8, 1j], [0.3, 0.1]])
    m = alg.merge_shared_beams(w, order)
    assert np.array_equal(m[0], m[1]) and np.array_equal(m[2], w[2])
    assert np.sum(np.abs(m) ** 2) <= np.sum(np.abs(w) ** 2)


def test_repair_fairness_shrinks_only_later_beams():
    cs = sample_channels(2, 10, 3, seed=2)
    inst = inst_for(2, 10, 3, "continuous")
    order = DecodingOrder((2, 0, 1))
    prob = alg.Problem(inst, cs, order)
    v = alg.random_irs_vector(inst, np.random.default_rng(2))
    d = np.array([1.0, 0.5j]) / np.linalg.norm([1.0, 0.5])
    w = np.array([d * (1 + 1e-6), d * (1 + 2e-6), d]) * 0.1  # rows indexed by user
    sol = BeamformingSolution(w, v)
    assert prob.audit(sol).fairness > 0
    fixed = alg.repair_fairness(prob, sol)
    g = received_power(fixed, cs, inst.sigma2)
    for a, b in order.fairness_chain():
        assert np.all(g[:, b] <= g[:, a])
    np.testing.assert_array_equal(fixed.w[2], w[2])
    assert np.all(np.linalg.norm(fixed.w, axis=1) <= np.linalg.norm(w, axis=1))
    assert prob.audit(fixed).fairness == 0.0


def test_best_candidate_prefers_feasible_highest_rate():
    cs = sample_channels(2, 10, 2, seed=1)
    inst = inst_for(2, 10, 2, "continuous")
    order = alg.default_order(cs)
    sol, _ = alg.initialize(inst, cs, order, seed=1)
    prob = alg.Problem(inst, cs, order)
    rng = np.random.default_rng(0)
    vs = [alg.random_irs_vector(inst, rng) for _ in range(4)]
    bad = vs[0] * 2.0
    bad[-1] = 1.0
    rates = [prob.audit(BeamformingSolution(sol.w, v)) for v in vs]
    got = alg.best_candidate(prob, sol, [bad] + vs, alg.AOSettings())
    feas = [r.sum_rate for r in rates if r.feasible]
    assert feas
    assert prob.rate(got) == pytest.approx(max(feas), rel=1e-12)
    only_bad = alg.best_candidate(prob, sol, [bad], alg.AOSettings())
    np.testing.assert_array_equal(only_bad.v, bad)


def test_ideal_passive_inner_loop_never_hurts():
    cs = sample_channels(2, 10, 3, seed=5)
    inst = inst_for(2, 10, 3)
    order = alg.default_order(cs)
    _, single = alg.algorithm1_ideal(inst, cs, order, alg.AOSettings(passive_inner=1), seed=5)
    _, inner = alg.algorithm1_ideal(inst, cs, order, seed=5)
    assert np.all(np.diff(inner.objectives) >= -1e-6)
    assert inner.objectives[1] >= single.objectives[1] - 1e-9
