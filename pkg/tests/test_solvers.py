import numpy as np
import pytest

from fwlab.constraints import (
    Box,
    L1Ball,
    PartitionMatroid,
    PartitionMatroidPolytope,
    Simplex,
)
from fwlab.problems import (
    Modular,
    MultilinearProblem,
    Quadratic,
    make_coverage,
    multilinear_exact,
)
from fwlab.rng import RngStream
from fwlab.solvers import (
    Schedule,
    bcg,
    dbg,
    deterministic_fw,
    fw_gap,
    oblivious_sfw,
    one_sfw,
    scg_baseline,
)


def test_schedule_presets():
    s = Schedule.preset("convex_min", 10)
    assert s.rho(2) == 1.0 and s.rho(3) == 0.5
    assert s.eta(4) == 0.25
    s2 = Schedule.preset("nonconvex_min", 8)
    assert s2.rho(2) == 1.0
    assert s2.eta(1) == pytest.approx(8 ** (-2 / 3))
    s3 = Schedule.preset("dr_submodular_max", 5)
    assert s3.eta(3) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        Schedule.preset("bogus", 5)


def test_fw_gap_examples():
    box = Box(np.full(2, -1.0), np.full(2, 1.0))
    assert fw_gap(np.zeros(2), box, np.zeros(2)) == 0.0
    assert fw_gap(np.array([1.0, 0.0]), box, np.zeros(2)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fw_gap(np.ones(2), box, np.array([2.0, 0.0]))


def test_fw_gap_nonnegative_random():
    rng = RngStream(1)
    sets = [L1Ball(1.5, 5), Box.unit(5), Simplex(2.0, 5),
            PartitionMatroidPolytope([[0, 1, 2], [3, 4]], [1, 1], 5)]
    for s in sets:
        for _ in range(250):
            # random feasible point: convex combination of vertices
            x = np.zeros(5)
            for _ in range(4):
                x += s.lmo_min(rng.normal(size=5)) / 4
            g = rng.normal(size=5)
            assert fw_gap(g, s, x) >= 0.0


def test_fw_gap_stationary_quadratic():
    # interior constrained minimizer: gradient 0 there
    p = Quadratic(np.array([0.1, 0.1]))
    s = L1Ball(1.0, 2)
    assert fw_gap(p.exact_grad(p.target), s, p.target) <= 1e-8


def test_deterministic_fw_simplex_quadratic():
    d = 4
    s = Simplex(1.0, d)
    tr = deterministic_fw(lambda x: x, s, 100,
                          value_oracle=lambda x: 0.5 * float(x @ x))
    # optimum is the uniform point, value 1/(2d)
    val = 0.5 * float(tr.output @ tr.output)
    assert val - 1.0 / (2 * d) <= 0.02
    # trace objective non-increasing after the first couple of steps
    objs = [r.objective for r in tr.records]
    assert all(objs[k + 1] <= objs[k] + 1e-12 for k in range(2, len(objs) - 1))


def test_deterministic_fw_linear_one_step():
    s = Simplex(1.0, 3)
    c = np.array([3.0, 1.0, 2.0])
    tr = deterministic_fw(lambda x: c, s, 1, step_rule=1.0)
    assert np.array_equal(tr.output, s.lmo_min(c))


def test_deterministic_fw_t0_returns_start():
    s = Simplex(1.0, 3)
    tr = deterministic_fw(lambda x: x, s, 0)
    assert np.array_equal(tr.output, s.lmo_min(np.zeros(3)))


def test_one_sfw_noiseless_quadratic_descends():
    p = Quadratic(np.full(3, 0.2), noise_sigma=0.0)
    s = L1Ball(2.0, 3)
    tr = oblivious_sfw(p, s, Schedule.preset("convex_min", 500), RngStream(2),
                       log_points=[1, 500])
    assert tr.records[-1].objective <= tr.records[0].objective
    assert tr.records[-1].objective <= 1e-3


def test_one_sample_accounting():
    p = Quadratic(np.zeros(3), noise_sigma=1.0)
    s = L1Ball(1.0, 3)
    T = 64
    tr = oblivious_sfw(p, s, Schedule.preset("convex_min", T), RngStream(3))
    assert tr.meta["oracle_calls"] == T
    pm = MultilinearProblem(Modular(np.ones(3)))
    poly = PartitionMatroidPolytope([[0, 1, 2]], [1], 3)
    tr2 = one_sfw(pm, poly, Schedule.preset("dr_submodular_max", T),
                  "exact_hessian", RngStream(4))
    assert tr2.meta["oracle_calls"] == T


def test_dr_mode_output_is_vertex_average():
    # cardinality function: every base is optimal with F = sum of budgets
    pm = MultilinearProblem(Modular(np.ones(4)))
    poly = PartitionMatroidPolytope([[0, 1], [2, 3]], [1, 1], 4)
    T = 100
    tr = one_sfw(pm, poly, Schedule.preset("dr_submodular_max", T),
                 "exact_hessian", RngStream(5))
    assert np.allclose(tr.output, tr.meta["vertex_average"], atol=1e-12)
    assert multilinear_exact(pm.f, tr.output) == pytest.approx(2.0, abs=1e-9)


def test_nonconvex_output_rule_reproducible():
    p = Quadratic(np.full(3, 0.1), noise_sigma=0.5)
    s = L1Ball(1.0, 3)
    sched = Schedule.preset("nonconvex_min", 40)
    t1 = oblivious_sfw(p, s, sched, RngStream(6))
    t2 = oblivious_sfw(p, s, sched, RngStream(6))
    assert t1.output_rule == "uniform_random_iterate"
    assert t1.meta["output_index"] == t2.meta["output_index"]
    assert np.array_equal(t1.output, t2.output)


def test_oblivious_rejects_nonoblivious():
    pm = MultilinearProblem(Modular(np.ones(2)))
    poly = PartitionMatroidPolytope([[0, 1]], [1], 2)
    with pytest.raises(ValueError):
        oblivious_sfw(pm, poly, Schedule.preset("dr_submodular_max", 5), RngStream(0))


def test_scg_baseline_runs_and_descends():
    p = Quadratic(np.full(4, 0.2), noise_sigma=0.2)
    s = L1Ball(2.0, 4)
    tr = scg_baseline(p, s, Schedule.preset("convex_min", 800), RngStream(7),
                      log_points=[1, 800])
    assert tr.records[-1].objective < tr.records[0].objective
    assert tr.records[-1].objective < 0.01


def test_solver_reproducibility_bitwise():
    p = Quadratic(np.full(3, 0.3), noise_sigma=1.0)
    s = L1Ball(1.0, 3)
    a = oblivious_sfw(p, s, Schedule.preset("convex_min", 50), RngStream(8))
    b = oblivious_sfw(p, s, Schedule.preset("convex_min", 50), RngStream(8))
    assert np.array_equal(a.output, b.output)


def test_infeasible_start_rejected():
    p = Quadratic(np.zeros(2))
    s = L1Ball(1.0, 2)
    with pytest.raises(ValueError):
        oblivious_sfw(p, s, Schedule.preset("convex_min", 5), RngStream(9),
                      x1=np.array([2.0, 2.0]))


# --- zeroth-order solvers --------------------------------------------------

def test_bcg_linear_near_lp_optimum():
    d = 4
    c = np.array([1.0, 3.0, 2.0, 0.5])
    poly = PartitionMatroidPolytope([[0, 1], [2, 3]], [1, 1], d)
    opt = float(poly.lmo_max(c) @ c)
    out = bcg(lambda y: float(c @ np.clip(y, 0, 1)), poly, Box.unit(d),
              200, 0.01, d, RngStream(10))
    assert poly.contains(out, tol=1e-8)
    assert float(c @ out) >= opt - 0.05 * opt


def test_bcg_single_step_is_shifted_vertex():
    d = 2
    poly = PartitionMatroidPolytope([[0, 1]], [1], d)
    delta = 0.05
    out = bcg(lambda y: float(np.sum(y)), poly, Box.unit(d), 1, delta, 2,
              RngStream(11))
    # output = v_1 + delta*1 with v_1 a vertex of the shrunk set
    assert poly.contains(out, tol=1e-8)
    assert np.sum(out) == pytest.approx(1.0, abs=1e-9)


def test_bcg_iterates_stay_in_shrunk_domain():
    rng = RngStream(12)
    f = make_coverage(4, 3, rng)
    poly = PartitionMatroidPolytope([[0, 1], [2, 3]], [1, 1], 4)
    delta = 0.05
    seen = []
    out = bcg(lambda y: multilinear_exact(f, np.clip(y, 0, 1)), poly,
              Box.unit(4), 50, delta, 4, RngStream(13),
              log_fn=lambda t, x, g: seen.append(x.copy()))
    for x in seen:
        assert np.all(x >= -1e-9) and np.all(x <= 1 - 2 * delta + 1e-9)
        assert poly.contains(x + delta, tol=1e-8)
    assert poly.contains(out, tol=1e-8)


def test_dbg_modular_exact():
    w = np.array([1.0, 5.0, 2.0, 4.0, 3.0, 6.0])
    f = Modular(w)
    m = PartitionMatroid([[0, 1, 2], [3, 4, 5]], [1, 1], 6)
    S = dbg(f, m, 60, 0.05, 10, 1, RngStream(14))
    assert m.is_base(S)
    assert f(S) == pytest.approx(5.0 + 6.0)


def test_dbg_zero_budgets():
    f = Modular(np.ones(4))
    m = PartitionMatroid([[0, 1], [2, 3]], [0, 0], 4)
    S = dbg(f, m, 10, 0.05, 5, 1, RngStream(15))
    assert not S.any()


def test_dbg_validates_args():
    f = Modular(np.ones(2))
    m = PartitionMatroid([[0, 1]], [1], 2)
    with pytest.raises(ValueError):
        dbg(f, m, 10, 0.05, 0, 1, RngStream(0))
    with pytest.raises(ValueError):
        dbg(f, m, 10, 0.7, 5, 1, RngStream(0))
