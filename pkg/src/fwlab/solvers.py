"""Projection-free optimization drivers.

All drivers share the skeleton: estimate a gradient, call the constraint
set's linear oracle, move toward (minimization: x + eta (v - x)) or along
(monotone maximization: x + eta v) the returned vertex.  The momentum
solvers consume exactly one stochastic sample per iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import FeasibleSet, shrink_translate
from .estimators import (
    GradEstimatorState,
    grad_diff_delta,
    momentum_update,
    two_point_gradient,
    variation_exact_hessian,
    variation_grad_diff,
    variation_oblivious,
)
from .problems import StochasticProblem
from .rng import RngStream, check_finite

__all__ = [
    "Schedule",
    "IterationRecord",
    "SolveTrace",
    "fw_gap",
    "one_sfw",
    "oblivious_sfw",
    "scg_baseline",
    "deterministic_fw",
    "bcg",
    "dbg",
]

MEMBERSHIP_TOL = 1e-9
MC_OBJECTIVE_SAMPLES = 2048
_OUTPUT_STREAM = 0xA11
_MC_STREAM = 0x0B5


@dataclass
class Schedule:
    """Step/momentum schedule for the momentum Frank-Wolfe family.

    Modes: ``convex_min`` (rho_t = 1/(t-1), eta_t = 1/t, last iterate),
    ``nonconvex_min`` (rho_t = (t-1)^{-2/3}, eta_t = T^{-2/3}, uniform
    random iterate), ``dr_submodular_max`` (rho_t = 1/(t-1), eta_t = 1/T,
    start at 0, additive update).
    """

    T: int
    mode: str
    alpha: float
    rho_fn: object
    eta_fn: object

    @classmethod
    def preset(cls, mode: str, T: int) -> "Schedule":
        T = int(T)
        if T < 1:
            raise ValueError("T must be >= 1")
        if mode == "convex_min":
            return cls(T, mode, 1.0, lambda t: (t - 1.0) ** -1.0, lambda t: 1.0 / t)
        if mode == "nonconvex_min":
            return cls(T, mode, 2.0 / 3.0, lambda t: (t - 1.0) ** (-2.0 / 3.0),
                       lambda t: T ** (-2.0 / 3.0))
        if mode == "dr_submodular_max":
            return cls(T, mode, 1.0, lambda t: (t - 1.0) ** -1.0, lambda t: 1.0 / T)
        raise ValueError(f"unknown schedule mode {mode!r}")

    def rho(self, t: int) -> float:
        r = float(self.rho_fn(t))
        if t >= 2 and not 0.0 < r <= 1.0:
            raise ValueError(f"rho_{t}={r} outside (0,1]")
        return min(r, 1.0)

    def eta(self, t: int) -> float:
        e = float(self.eta_fn(t))
        if not 0.0 < e <= 1.0:
            raise ValueError(f"eta_{t}={e} outside (0,1]")
        return e


@dataclass
class IterationRecord:
    t: int
    objective: float | None = None
    fw_gap: float | None = None
    est_error: float | None = None
    oracle_calls: int = 0
    cum_bits: int | None = None
    wall_ms: float = 0.0


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)
    output: np.ndarray | None = None
    output_rule: str = "last"
    snapshots: dict = field(default_factory=dict)  # t -> (x_t, d_t)
    meta: dict = field(default_factory=dict)


def fw_gap(grad: np.ndarray, set_: FeasibleSet, x: np.ndarray) -> float:
    """G(x) = max_{v in K} <v - x, -grad> = <x - lmo_min(grad), grad>."""
    x = check_finite(x, "gap point")
    if not set_.contains(x, tol=MEMBERSHIP_TOL * 10):
        raise ValueError("fw_gap requires a feasible point")
    v = set_.lmo_min(grad)
    g = float((x - v) @ grad)
    if g < -1e-9:
        raise ValueError(f"negative FW gap {g}")
    return max(g, 0.0)


def _default_log_points(T: int, n: int = 64):
    if T <= n:
        return set(range(1, T + 1))
    pts = np.unique(np.geomspace(1, T, num=n).astype(int))
    return set(pts.tolist()) | {T}


def _objective(p: StochasticProblem, x, mc_rng: RngStream):
    if p.has("exact_reference"):
        return p.exact_value(x)
    tot = 0.0
    for _ in range(MC_OBJECTIVE_SAMPLES):
        s = p.sample(x, mc_rng)
        tot += p.value(x, s)
    p.samples_drawn -= MC_OBJECTIVE_SAMPLES  # logging must not count
    return tot / MC_OBJECTIVE_SAMPLES


def _assert_member(set_: FeasibleSet, x, what: str):
    if not set_.contains(x, tol=MEMBERSHIP_TOL * 10):
        raise ValueError(f"{what} left the feasible set")


def _start_point(set_: FeasibleSet, mode: str, x1):
    if x1 is not None:
        x1 = check_finite(x1, "start point")
        _assert_member(set_, x1, "start point")
        return x1.copy()
    if mode == "dr_submodular_max":
        x0 = np.zeros(set_.dim)
        _assert_member(set_, x0, "origin start (DR mode needs 0 in the set)")
        return x0
    return set_.lmo_min(np.zeros(set_.dim))


def _log(trace, t, p, set_, x, d, sched, log_points, mc_rng, t0,
         keep_snapshots):
    if t not in log_points:
        return
    obj = _objective(p, x, mc_rng)
    gap = err = None
    if p.has("exact_reference"):
        g = p.exact_grad(x)
        if sched.mode != "dr_submodular_max":
            gap = fw_gap(g, set_, x)
        if d is not None:
            err = float(np.sum((g - d) ** 2))
    trace.records.append(IterationRecord(
        t=t, objective=obj, fw_gap=gap, est_error=err,
        oracle_calls=p.samples_drawn,
        wall_ms=1000.0 * (time.perf_counter() - t0)))
    if keep_snapshots:
        trace.snapshots[t] = (x.copy(), None if d is None else d.copy())


def _momentum_fw(p: StochasticProblem, set_: FeasibleSet, sched: Schedule,
                 rng: RngStream, variation, x1=None, log_points=None,
                 keep_snapshots=False) -> SolveTrace:
    """Shared driver: ``variation(t, x_t, x_prev, it_rng)`` returns
    (delta_tilde, sample_for_g or None); plain momentum passes Delta = 0."""
    T = sched.T
    log_points = _default_log_points(T) if log_points is None else set(log_points)
    mc_rng = rng.child(_MC_STREAM)
    t0 = time.perf_counter()
    trace = SolveTrace(meta={"mode": sched.mode, "T": T})
    base_samples = p.samples_drawn
    p.samples_drawn = 0

    dr = sched.mode == "dr_submodular_max"
    x = _start_point(set_, sched.mode, x1)
    iterates = [x.copy()] if sched.mode == "nonconvex_min" else None
    vertex_sum = np.zeros(set_.dim)

    it = rng.child(1)
    s1 = p.sample(x, it.child(1))
    state = GradEstimatorState(d=p.one_sample_grad(x, s1), t=1)
    x_prev = None
    for t in range(1, T + 1):
        if t >= 2:
            it = rng.child(t)
            dt, sample = variation(t, x, x_prev, it)
            if sample is None:
                sample = p.sample(x, it.child(1))
            g_new = p.one_sample_grad(x, sample)
            state = momentum_update(state, dt, g_new, sched.rho(t))
        if p.samples_drawn != t:
            raise RuntimeError("one-sample accounting violated")
        _log(trace, t, p, set_, x, state.d, sched, log_points, mc_rng, t0,
             keep_snapshots)
        v = set_.lmo_max(state.d) if dr else set_.lmo_min(state.d)
        eta = sched.eta(t)
        x_prev = x
        x = x + eta * v if dr else x + eta * (v - x)
        vertex_sum += v
        _assert_member(set_, x, f"iterate {t + 1}")
        if iterates is not None:
            iterates.append(x.copy())

    trace.meta["oracle_calls"] = p.samples_drawn
    p.samples_drawn += base_samples
    if sched.mode == "nonconvex_min":
        idx = int(rng.child(_OUTPUT_STREAM).integers(1, T + 2))
        trace.output = iterates[idx - 1]
        trace.output_rule = "uniform_random_iterate"
        trace.meta["output_index"] = idx
    else:
        trace.output = x
        trace.output_rule = "last"
    if dr:
        trace.meta["vertex_average"] = vertex_sum / T
    return trace


def one_sfw(p: StochasticProblem, set_: FeasibleSet, sched: Schedule,
            option: str, rng: RngStream, x1=None, log_points=None,
            keep_snapshots=False, constants=None, probe_clip=None,
            delta_fn=None) -> SolveTrace:
    """Momentum Frank-Wolfe with one stochastic sample per iteration.

    ``option`` picks the variation estimator: "exact_hessian" uses the
    one-sample Hessian estimate, "grad_diff" its finite-difference
    approximation with radius delta_t = sqrt(3) eta_{t-1} Lbar / (D L2 (1+B))
    (or ``delta_fn(t)`` if given; ``constants`` supplies B, G, L, L2).
    """
    if option not in ("exact_hessian", "grad_diff"):
        raise ValueError(f"unknown option {option!r}")
    if option == "grad_diff" and delta_fn is None:
        if constants is None:
            raise ValueError("grad_diff needs problem constants or delta_fn")
        D = set_.diameter()
        delta_fn = lambda t: grad_diff_delta(sched.eta(t - 1), constants, D)

    def variation(t, x, x_prev, it):
        if option == "exact_hessian":
            est = variation_exact_hessian(p, x, x_prev, it.child(0), it.child(1))
        else:
            est = variation_grad_diff(p, x, x_prev, delta_fn(t), it.child(0),
                                      it.child(1), probe_clip=probe_clip)
        return est.delta_tilde, est.sample

    return _momentum_fw(p, set_, sched, rng, variation, x1, log_points,
                        keep_snapshots)


def oblivious_sfw(p: StochasticProblem, set_: FeasibleSet, sched: Schedule,
                  rng: RngStream, x1=None, log_points=None,
                  keep_snapshots=False) -> SolveTrace:
    """Momentum Frank-Wolfe with the same-sample gradient difference
    (valid only when the sample law does not depend on x)."""
    if p.mode != "oblivious":
        raise ValueError("oblivious_sfw requires an oblivious problem")

    def variation(t, x, x_prev, it):
        s = p.sample(x, it.child(1))
        est = variation_oblivious(p, x, x_prev, s)
        return est.delta_tilde, s

    return _momentum_fw(p, set_, sched, rng, variation, x1, log_points,
                        keep_snapshots)


def scg_baseline(p: StochasticProblem, set_: FeasibleSet, sched: Schedule,
                 rng: RngStream, x1=None, log_points=None,
                 keep_snapshots=False) -> SolveTrace:
    """Momentum-only baseline: d_t = (1-rho_t) d_{t-1} + rho_t g_t."""

    def variation(t, x, x_prev, it):
        return np.zeros(p.dim), None

    return _momentum_fw(p, set_, sched, rng, variation, x1, log_points,
                        keep_snapshots)


def deterministic_fw(grad_oracle, set_: FeasibleSet, T: int,
                     step_rule="two_over_t_plus_two", x1=None,
                     value_oracle=None) -> SolveTrace:
    """Classical Frank-Wolfe with an exact gradient oracle."""
    x = x1.copy() if x1 is not None else set_.lmo_min(np.zeros(set_.dim))
    _assert_member(set_, x, "start point")
    trace = SolveTrace(meta={"mode": "deterministic"})
    t0 = time.perf_counter()
    for k in range(1, int(T) + 1):
        g = grad_oracle(x)
        v = set_.lmo_min(g)
        eta = 2.0 / (k + 2.0) if step_rule == "two_over_t_plus_two" else float(step_rule)
        obj = None if value_oracle is None else float(value_oracle(x))
        trace.records.append(IterationRecord(
            t=k, objective=obj, fw_gap=fw_gap(g, set_, x),
            wall_ms=1000.0 * (time.perf_counter() - t0)))
        x = x + eta * (v - x)
        _assert_member(set_, x, f"iterate {k + 1}")
    trace.output = x
    return trace


def bcg(value_oracle, set_: FeasibleSet, box, T: int, delta: float,
        batch_fn, rng: RngStream, log_fn=None) -> np.ndarray:
    """Zeroth-order continuous greedy for monotone DR maximization.

    Works on the shrunk-translated set K' = (X'_delta intersect K) - delta 1
    so every two-point probe delta 1 + x_t +/- delta u stays inside the
    function's box domain.  rho_t = 2/(t+3)^{2/3}; the update x += v/T
    averages T vertices of K'; the output is shifted back by delta 1.
    """
    if not 0 < delta:
        raise ValueError("delta must be positive")
    T = int(T)
    kp = shrink_translate(set_, box, delta)
    if isinstance(batch_fn, int):
        b, batch_fn = batch_fn, lambda t: b
    shift = delta * np.ones(set_.dim)
    x = np.zeros(set_.dim)
    gbar = np.zeros(set_.dim)
    for t in range(1, T + 1):
        rho = 2.0 / (t + 3.0) ** (2.0 / 3.0)
        g = two_point_gradient(lambda y: value_oracle(y + shift), x, delta,
                               int(batch_fn(t)), rng.child(t))
        gbar = (1.0 - rho) * gbar + rho * g
        v = kp.lmo_max(gbar)
        x = x + v / T
        if not kp.contains(x, tol=1e-8):
            raise AssertionError("BCG iterate left the shrunk set")
        if log_fn is not None:
            log_fn(t, x, gbar)
    out = x + shift
    _assert_member(set_, out, "BCG output")
    return out


def dbg(f, m, T: int, delta: float, l: int, batch, rng: RngStream):
    """Discrete zeroth-order greedy: continuous greedy on the multilinear
    extension with each value query replaced by the average of ``l``
    sampled f(S), S drawn coordinate-independently from the query point,
    followed by value-preserving rounding to a matroid base."""
    from .constraints import pipage_round
    from .problems import Modular

    if l < 1:
        raise ValueError("sample count l must be >= 1")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    d = m.ground_size
    if all(b == 0 for b in m.budgets):
        return np.zeros(d, dtype=bool)
    from .constraints import Box as _Box

    set_ = m.polytope()
    box = _Box.unit(d)
    oracle_rng = rng.child(0xD1)

    def value_oracle(y):
        q = np.clip(y, 0.0, 1.0)
        draws = oracle_rng.random((l, d)) < q[None, :]
        return float(np.mean(f.batch(draws)))

    x = bcg(value_oracle, set_, box, T, delta, batch, rng.child(0xD2))
    return pipage_round(x, m, f, rng.child(0xD3))
