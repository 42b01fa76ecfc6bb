"""Gradient estimation machinery.

Momentum averaging with an additive variation correction:

    d_t = (1 - rho_t)(d_{t-1} + Delta_t) + rho_t * g_t

where Delta_t estimates the gradient variation grad F(x_t) - grad F(x_{t-1}).
Three variation estimators are provided: the one-sample Hessian estimator
(exact Hessian-vector products plus score-function terms), its
gradient-difference approximation (no second-order oracle needed), and the
oblivious same-sample gradient difference.  The two-point sphere estimator
serves the purely zeroth-order solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import Sample, StochasticProblem
from .rng import RngStream, check_finite, sample_unit_ball, sample_unit_sphere

__all__ = [
    "GradEstimatorState",
    "VariationEstimate",
    "momentum_update",
    "hessian_estimate_apply",
    "variation_exact_hessian",
    "variation_grad_diff",
    "variation_oblivious",
    "two_point_gradient",
    "smoothed_value_mc",
    "lbar_constant",
    "grad_diff_delta",
]


@dataclass
class GradEstimatorState:
    d: np.ndarray
    t: int


@dataclass
class VariationEstimate:
    delta_tilde: np.ndarray
    a: float
    sample: Sample | None
    option: str  # "exact_hessian" | "grad_diff" | "oblivious"
    clamped: bool = False


def momentum_update(state: GradEstimatorState, delta_tilde: np.ndarray,
                    g_new: np.ndarray, rho: float) -> GradEstimatorState:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho={rho} outside [0,1]")
    d = (1.0 - rho) * (state.d + delta_tilde) + rho * g_new
    return GradEstimatorState(d=check_finite(d, "momentum estimate"), t=state.t + 1)


def hessian_estimate_apply(p: StochasticProblem, x: np.ndarray, s: Sample,
                           u: np.ndarray) -> np.ndarray:
    """One-sample Hessian-vector estimate applied to u.

    Five terms; with z drawn from p(.;x) the expectation is the true
    Hessian-vector product grad^2 F(x) u, because the second derivative of
    the density satisfies
    grad^2 p = p (grad log p grad log p^T + grad^2 log p).
    """
    u = check_finite(u, "hessian direction")
    val = p.value(x, s)
    gF = p.grad(x, s)
    lg = p.logp_grad(x, s)
    lg_u = float(lg @ u)
    out = (
        val * lg_u * lg
        + p.hess_vec(x, s, u)
        + lg_u * gF
        + val * p.logp_hess_vec(x, s, u)
        + float(gF @ u) * lg
    )
    return check_finite(out, "hessian estimate")


def _interp_point(p, x_t, x_prev, rng_a, a):
    if a is None:
        a = float(rng_a.uniform())
    if not 0.0 <= a <= 1.0:
        raise ValueError("interpolation weight outside [0,1]")
    return a, a * np.asarray(x_t, float) + (1.0 - a) * np.asarray(x_prev, float)


def variation_exact_hessian(p: StochasticProblem, x_t, x_prev,
                            rng_a: RngStream, rng_z: RngStream,
                            a: float | None = None,
                            sample: Sample | None = None) -> VariationEstimate:
    """Delta_t = one-sample Hessian estimate at a random interpolation point.

    Draws a ~ U[0,1], sets x(a) = a x_t + (1-a) x_prev, samples z ~ p(.;x(a))
    and applies the estimator to u = x_t - x_prev.  Unbiased for
    grad F(x_t) - grad F(x_prev) by the fundamental theorem of calculus.
    ``a``/``sample`` may be supplied to couple runs sample-for-sample.
    """
    a, xa = _interp_point(p, x_t, x_prev, rng_a, a)
    if sample is None:
        sample = p.sample(xa, rng_z)
    u = np.asarray(x_t, float) - np.asarray(x_prev, float)
    if not np.any(u):
        return VariationEstimate(np.zeros(p.dim), a, sample, "exact_hessian")
    dt = hessian_estimate_apply(p, xa, sample, u)
    return VariationEstimate(dt, a, sample, "exact_hessian")


def variation_grad_diff(p: StochasticProblem, x_t, x_prev, delta: float,
                        rng_a: RngStream, rng_z: RngStream,
                        a: float | None = None,
                        sample: Sample | None = None,
                        probe_clip: tuple | None = None) -> VariationEstimate:
    """Gradient-difference variant: second-order oracles replaced by
    central differences of first-order oracles along u = x_t - x_prev.

    phi(delta; psi) = [grad psi(x + delta u) - grad psi(x - delta u)] / (2 delta)
    approximates grad^2 psi(x) u with error at most L2 * delta * ||u||^2.
    ``probe_clip`` = (lo, hi) clamps probe points into the oracle domain
    (flagged on the result).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    a, xa = _interp_point(p, x_t, x_prev, rng_a, a)
    if sample is None:
        sample = p.sample(xa, rng_z)
    u = np.asarray(x_t, float) - np.asarray(x_prev, float)
    if not np.any(u):
        return VariationEstimate(np.zeros(p.dim), a, sample, "grad_diff")

    xp, xm = xa + delta * u, xa - delta * u
    clamped = False
    if probe_clip is not None:
        lo, hi = probe_clip
        cp, cm = np.clip(xp, lo, hi), np.clip(xm, lo, hi)
        clamped = bool(np.any(cp != xp) or np.any(cm != xm))
        xp, xm = cp, cm

    val = p.value(xa, sample)
    gF = p.grad(xa, sample)
    lg = p.logp_grad(xa, sample)
    lg_u = float(lg @ u)
    phi_F = (p.grad(xp, sample) - p.grad(xm, sample)) / (2.0 * delta)
    phi_lp = (p.logp_grad(xp, sample) - p.logp_grad(xm, sample)) / (2.0 * delta)
    dt = val * lg_u * lg + phi_F + lg_u * gF + val * phi_lp + float(gF @ u) * lg
    return VariationEstimate(check_finite(dt, "grad-diff estimate"), a, sample,
                             "grad_diff", clamped)


def variation_oblivious(p: StochasticProblem, x_t, x_prev,
                        sample: Sample) -> VariationEstimate:
    """Delta_t = grad F(x_t; z) - grad F(x_prev; z) at a shared sample.

    Only valid for oblivious problems: when the sample law depends on x the
    shared-z difference is biased.
    """
    if p.mode != "oblivious":
        raise ValueError("same-sample gradient difference requires an oblivious problem")
    dt = p.grad(np.asarray(x_t, float), sample) - p.grad(np.asarray(x_prev, float), sample)
    return VariationEstimate(check_finite(dt, "oblivious difference"), 1.0,
                             sample, "oblivious")


def two_point_gradient(value_oracle, x: np.ndarray, delta: float,
                       batch: int, rng: RngStream) -> np.ndarray:
    """Sphere-sampling gradient of the delta-smoothed function:

    (1/B) sum_i (d / (2 delta)) [F(x + delta u_i) - F(x - delta u_i)] u_i
    with u_i uniform on the unit sphere.  Unbiased for the smoothed
    gradient; the value oracle itself may be stochastic.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if batch < 1:
        raise ValueError("batch must be >= 1")
    x = check_finite(x, "two-point center")
    d = x.size
    g = np.zeros(d)
    for _ in range(batch):
        u = sample_unit_sphere(rng, d)
        g += (value_oracle(x + delta * u) - value_oracle(x - delta * u)) * u
    return (d / (2.0 * delta)) * g / batch


def smoothed_value_mc(value_oracle, x: np.ndarray, delta: float,
                      n_samples: int, rng: RngStream) -> tuple[float, float]:
    """Monte-Carlo mean of F over the delta-ball around x, with its SE."""
    x = check_finite(x, "smoothing center")
    if delta == 0.0:
        return float(value_oracle(x)), 0.0
    vals = np.array([
        value_oracle(x + delta * sample_unit_ball(rng, x.size))
        for _ in range(n_samples)
    ])
    se = float(np.std(vals, ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else np.inf
    return float(np.mean(vals)), se


def lbar_constant(B: float, G: float, L: float) -> float:
    """sqrt(4 B^2 G^4 + 16 G^4 + 4 L^2 + 4 B^2 L^2), the combined smoothness
    constant of the one-sample Hessian estimator."""
    return float(np.sqrt(4 * B**2 * G**4 + 16 * G**4 + 4 * L**2 + 4 * B**2 * L**2))


def grad_diff_delta(eta_prev: float, constants: dict, D: float) -> float:
    """Finite-difference radius schedule delta_t = sqrt(3) eta_{t-1} Lbar /
    (D L2 (1 + B)), keeping the approximation error of the same order as
    the momentum noise floor."""
    B, G, L, L2 = (constants[k] for k in ("B", "G", "L", "L2"))
    if L2 <= 0 or D <= 0:
        raise ValueError("need positive D and L2")
    return float(np.sqrt(3.0) * eta_prev * lbar_constant(B, G, L) / (D * L2 * (1.0 + B)))
