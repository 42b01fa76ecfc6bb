"""Benchmark problems and their stochastic oracle bundles.

Two oracle modes exist.  Oblivious problems draw z from a fixed law (a
data-row index, a noise vector); the gradient sample ∇F̃(x;z) is unbiased
for ∇F(x) directly.  Non-oblivious problems draw z from p(z;x): here only
the multilinear family, where z is a random subset with independent
inclusion probabilities x_i, F̃(x;z) = f(z) is x-free, and all gradient
information flows through the log-density derivatives.

Small-d exact oracles (full subset enumeration) back every estimator test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import NumericsError, RngStream, check_finite

__all__ = [
    "Sample",
    "StochasticProblem",
    "Quadratic",
    "NQP",
    "LogisticL1",
    "RobustLRMR",
    "MultilinearProblem",
    "FiniteSumProblem",
    "SetFunction",
    "Modular",
    "FacilityLocation",
    "Coverage",
    "ConcaveOverModular",
    "LogDet",
    "TableSetFunction",
    "make_facility_location",
    "make_coverage",
    "make_concave_over_modular",
    "make_logdet",
    "make_random_bounded",
    "multilinear_exact",
    "multilinear_value",
    "multilinear_grad_hess",
    "estimate_constants",
    "EnumerationBudgetError",
]

BERNOULLI_EPS = 1e-9
ENUM_MAX_D = 20


class EnumerationBudgetError(ValueError):
    """Exact multilinear enumeration requested beyond the 2^20 budget."""


@dataclass
class Sample:
    """One stochastic oracle draw.

    ``z`` is instance-defined (row index, subset indicator, noise vector);
    ``logp_grad`` is ∇_x log p(z;x) evaluated at the sampling point, zero
    for oblivious problems.
    """

    z: object
    logp_grad: np.ndarray | None = None


class StochasticProblem:
    """Oracle bundle; subclasses fill in the capability methods.

    ``samples_drawn`` counts calls to :meth:`sample`, giving the one-sample
    accounting used by solver tests.
    """

    dim: int
    mode: str  # "oblivious" or "nonoblivious"
    capabilities: frozenset
    constants: dict

    def __init__(self):
        self.samples_drawn = 0

    # --- sampling ------------------------------------------------------
    def sample(self, x: np.ndarray, rng: RngStream) -> Sample:
        self.samples_drawn += 1
        return self._sample(np.asarray(x, dtype=float), rng)

    def _sample(self, x, rng) -> Sample:
        raise NotImplementedError

    # --- per-sample oracles -------------------------------------------
    def value(self, x: np.ndarray, s: Sample) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray, s: Sample) -> np.ndarray:
        raise NotImplementedError

    def hess_vec(self, x: np.ndarray, s: Sample, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def logp_grad(self, x: np.ndarray, s: Sample) -> np.ndarray:
        if self.mode == "oblivious":
            return np.zeros(self.dim)
        raise NotImplementedError

    def logp_hess_vec(self, x: np.ndarray, s: Sample, u: np.ndarray) -> np.ndarray:
        if self.mode == "oblivious":
            return np.zeros(self.dim)
        raise NotImplementedError

    def one_sample_grad(self, x: np.ndarray, s: Sample) -> np.ndarray:
        """Unbiased one-sample gradient: ∇F̃(x;z) + F̃(x;z)∇log p(z;x)."""
        g = self.grad(x, s)
        if self.mode == "nonoblivious":
            g = g + self.value(x, s) * self.logp_grad(x, s)
        return g

    # --- exact reference (tests / logging) ----------------------------
    def exact_value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def exact_grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def has(self, cap: str) -> bool:
        return cap in self.capabilities


class Quadratic(StochasticProblem):
    """F(x) = 0.5‖x − x*‖² with additive Gaussian gradient noise.

    F̃(x;z) = 0.5‖x − x*‖² + z·x, z ∼ N(0, σ²I), so ∇F̃ = (x − x*) + z and
    the Hessian is the identity for every z.
    """

    mode = "oblivious"
    capabilities = frozenset(
        {"value", "gradient", "hessian_vec", "exact_reference"}
    )

    def __init__(self, target: np.ndarray, noise_sigma: float = 0.0):
        super().__init__()
        self.target = check_finite(target, "quadratic target")
        self.noise_sigma = float(noise_sigma)
        self.dim = self.target.size
        self.constants = {"L": 1.0, "L2": 0.0}

    def _sample(self, x, rng):
        if self.noise_sigma == 0.0:
            return Sample(z=np.zeros(self.dim))
        return Sample(z=self.noise_sigma * rng.normal(size=self.dim))

    def value(self, x, s):
        return 0.5 * float(np.sum((x - self.target) ** 2)) + float(s.z @ x)

    def grad(self, x, s):
        return (x - self.target) + s.z

    def hess_vec(self, x, s, u):
        return np.asarray(u, dtype=float).copy()

    def exact_value(self, x):
        return 0.5 * float(np.sum((x - self.target) ** 2))

    def exact_grad(self, x):
        return x - self.target


class NQP(StochasticProblem):
    """Non-convex quadratic F(x) = ½xᵀHx + bᵀx with entrywise non-positive H.

    H entries are negated absolute standard normals and b = −Hᵀ1, which
    makes ∇F = ½(H+Hᵀ)x + b non-negative on [0,1]^d (monotone DR structure).
    Stochastic gradients add N(0, σ²I) noise.
    """

    mode = "oblivious"
    capabilities = frozenset(
        {"value", "gradient", "hessian_vec", "exact_reference"}
    )

    def __init__(self, dim: int, rng: RngStream, noise_sigma: float = 0.0,
                 H: np.ndarray | None = None):
        super().__init__()
        self.dim = int(dim)
        if H is None:
            H = -np.abs(rng.normal(size=(self.dim, self.dim)))
        H = check_finite(H, "NQP matrix")
        if np.any(H > 0):
            raise ValueError("NQP requires entrywise non-positive H")
        self.H = H
        self.b = -H.T @ np.ones(self.dim)
        self.Hsym = 0.5 * (H + H.T)
        self.noise_sigma = float(noise_sigma)
        L = float(np.linalg.norm(self.Hsym, 2))
        self.constants = {"L": L, "L2": 0.0}

    def _sample(self, x, rng):
        if self.noise_sigma == 0.0:
            return Sample(z=np.zeros(self.dim))
        return Sample(z=self.noise_sigma * rng.normal(size=self.dim))

    def value(self, x, s):
        return self.exact_value(x) + float(s.z @ x)

    def grad(self, x, s):
        return self.exact_grad(x) + s.z

    def hess_vec(self, x, s, u):
        return self.Hsym @ np.asarray(u, dtype=float)

    def exact_value(self, x):
        return 0.5 * float(x @ self.H @ x) + float(self.b @ x)

    def exact_grad(self, x):
        return self.Hsym @ x + self.b


def _sigmoid(t):
    out = np.empty_like(t, dtype=float)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class LogisticL1(StochasticProblem):
    """Binary logistic loss F(w) = (1/n) Σ log(1 + exp(−y_i w·a_i)).

    Samples are uniform row indices (oblivious).  Built from arrays or a
    dense CSV whose first column is the ±1 label.
    """

    mode = "oblivious"
    capabilities = frozenset(
        {"value", "gradient", "hessian_vec", "exact_reference"}
    )

    def __init__(self, features: np.ndarray, labels: np.ndarray):
        super().__init__()
        self.A = check_finite(features, "feature matrix")
        self.y = check_finite(labels, "labels")
        if self.A.ndim != 2 or self.y.shape != (self.A.shape[0],):
            raise ValueError("features must be (n,d); labels length n")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be +/-1")
        self.n, self.dim = self.A.shape
        # per-row smoothness <= ||a||^2 / 4
        self.constants = {
            "L": float(np.max(np.sum(self.A**2, axis=1))) / 4.0,
            "B": float(np.log(2) + np.max(np.linalg.norm(self.A, axis=1)) * 10),
        }

    @classmethod
    def from_csv(cls, path: str) -> "LogisticL1":
        try:
            raw = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as e:
            raise ValueError(f"bad logistic CSV {path!r}: {e}") from e
        if raw.shape[1] < 2:
            raise ValueError("logistic CSV needs a label column plus features")
        return cls(raw[:, 1:], raw[:, 0])

    def _sample(self, x, rng):
        return Sample(z=int(rng.integers(self.n)))

    def _margin(self, x, i):
        return -self.y[i] * float(self.A[i] @ x)

    def value(self, x, s):
        return float(np.logaddexp(0.0, self._margin(x, s.z)))

    def grad(self, x, s):
        i = s.z
        sig = _sigmoid(np.array([self._margin(x, i)]))[0]
        return -self.y[i] * sig * self.A[i]

    def hess_vec(self, x, s, u):
        i = s.z
        sig = _sigmoid(np.array([self._margin(x, i)]))[0]
        return sig * (1 - sig) * float(self.A[i] @ u) * self.A[i]

    def exact_value(self, x):
        return float(np.mean(np.logaddexp(0.0, -self.y * (self.A @ x))))

    def exact_grad(self, x):
        sig = _sigmoid(-self.y * (self.A @ x))
        return -(self.A.T @ (self.y * sig)) / self.n

    def component_value(self, x, i):
        return float(np.logaddexp(0.0, self._margin(x, i)))

    def component_grad(self, x, i):
        return self.grad(x, Sample(z=int(i)))


class RobustLRMR(StochasticProblem):
    """Robust low-rank matrix recovery on observed entries.

    The variable is a rows×cols matrix flattened to a vector; the loss per
    observed entry is ψ(r) = 1 − exp(−r²/2σ) with residual r = X_ij − R_ij,
    averaged over the observation set.  Samples are uniform observation
    indices.
    """

    mode = "oblivious"
    capabilities = frozenset(
        {"value", "gradient", "hessian_vec", "exact_reference"}
    )

    def __init__(self, rows: int, cols: int, observed: np.ndarray, sigma: float = 1.0):
        super().__init__()
        self.rows, self.cols = int(rows), int(cols)
        self.dim = self.rows * self.cols
        obs = np.asarray(observed, dtype=float)
        if obs.ndim != 2 or obs.shape[1] != 3:
            raise ValueError("observed must be (k,3) rows of (i, j, rating)")
        self.idx = (obs[:, 0].astype(int) * self.cols + obs[:, 1].astype(int))
        if np.any(self.idx < 0) or np.any(self.idx >= self.dim):
            raise ValueError("observation index out of range")
        self.ratings = obs[:, 2]
        self.sigma = float(sigma)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        self.n_obs = self.idx.size
        self.constants = {"B": 1.0}

    @classmethod
    def from_csv(cls, path: str, rows: int, cols: int, sigma: float = 1.0):
        try:
            raw = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as e:
            raise ValueError(f"bad ratings CSV {path!r}: {e}") from e
        return cls(rows, cols, raw, sigma)

    def _psi(self, r):
        return 1.0 - np.exp(-(r**2) / (2.0 * self.sigma))

    def _psi_d1(self, r):
        return (r / self.sigma) * np.exp(-(r**2) / (2.0 * self.sigma))

    def _psi_d2(self, r):
        e = np.exp(-(r**2) / (2.0 * self.sigma))
        return e * (1.0 / self.sigma - r**2 / self.sigma**2)

    def _sample(self, x, rng):
        return Sample(z=int(rng.integers(self.n_obs)))

    def value(self, x, s):
        r = x[self.idx[s.z]] - self.ratings[s.z]
        return float(self._psi(r))

    def grad(self, x, s):
        k = s.z
        g = np.zeros(self.dim)
        g[self.idx[k]] = self._psi_d1(x[self.idx[k]] - self.ratings[k])
        return g

    def hess_vec(self, x, s, u):
        k = s.z
        out = np.zeros(self.dim)
        out[self.idx[k]] = self._psi_d2(x[self.idx[k]] - self.ratings[k]) * u[self.idx[k]]
        return out

    def exact_value(self, x):
        return float(np.mean(self._psi(x[self.idx] - self.ratings)))

    def exact_grad(self, x):
        g = np.zeros(self.dim)
        np.add.at(g, self.idx, self._psi_d1(x[self.idx] - self.ratings) / self.n_obs)
        return g


# --------------------------------------------------------------------------
# set functions and multilinear extensions
# --------------------------------------------------------------------------


class SetFunction:
    """Real-valued function of subsets of a ground set of size d.

    Subsets are boolean membership vectors.  ``bound`` is (an upper bound
    on) sup_S |f(S)|; ``monotone`` flags instances known nondecreasing.
    """

    ground_size: int
    monotone = False

    def __call__(self, members: np.ndarray) -> float:
        raise NotImplementedError

    def batch(self, masks: np.ndarray) -> np.ndarray:
        """Evaluate f on each row of a (k, d) boolean mask array."""
        return np.array([self(m) for m in masks])

    @property
    def bound(self) -> float:
        raise NotImplementedError


class Modular(SetFunction):
    def __init__(self, weights):
        self.w = check_finite(weights, "modular weights")
        self.ground_size = self.w.size
        self.monotone = bool(np.all(self.w >= 0))

    def __call__(self, members):
        return float(self.w[np.asarray(members, dtype=bool)].sum())

    def batch(self, masks):
        return np.asarray(masks, dtype=float) @ self.w

    @property
    def bound(self):
        return float(np.sum(np.abs(self.w)))


class FacilityLocation(SetFunction):
    """f(S) = Σ_clients max_{i∈S} W[client, i], with f(∅) = 0."""

    monotone = True

    def __init__(self, W):
        self.W = check_finite(W, "facility weights")
        if np.any(self.W < 0):
            raise ValueError("facility weights must be non-negative")
        self.ground_size = self.W.shape[1]

    def __call__(self, members):
        members = np.asarray(members, dtype=bool)
        if not members.any():
            return 0.0
        return float(np.sum(np.max(self.W[:, members], axis=1)))

    def batch(self, masks):
        masks = np.asarray(masks, dtype=bool)
        scores = np.where(masks[:, None, :], self.W[None, :, :], 0.0)
        return scores.max(axis=2).sum(axis=1)

    @property
    def bound(self):
        return float(np.sum(np.max(self.W, axis=1)))


class Coverage(SetFunction):
    """Probabilistic coverage f(S) = Σ_j (1 − ∏_{a∈S}(1 − p_a(j)))."""

    monotone = True

    def __init__(self, P):
        # P[a, j]: probability element a covers topic j
        self.P = check_finite(P, "coverage probabilities")
        if np.any(self.P < 0) or np.any(self.P > 1):
            raise ValueError("coverage probabilities must lie in [0,1]")
        self.ground_size = self.P.shape[0]

    def __call__(self, members):
        members = np.asarray(members, dtype=bool)
        miss = np.prod(1.0 - self.P[members], axis=0)
        return float(np.sum(1.0 - miss))

    def batch(self, masks):
        masks = np.asarray(masks, dtype=bool)
        factors = np.where(masks[:, :, None], 1.0 - self.P[None, :, :], 1.0)
        return np.sum(1.0 - factors.prod(axis=1), axis=1)

    @property
    def bound(self):
        return float(self.P.shape[1])


class ConcaveOverModular(SetFunction):
    """f(S) = Σ_users sqrt(Σ_{j∈S} r[user, j])."""

    monotone = True

    def __init__(self, R):
        self.R = check_finite(R, "ratings")
        if np.any(self.R < 0):
            raise ValueError("ratings must be non-negative")
        self.ground_size = self.R.shape[1]

    def __call__(self, members):
        members = np.asarray(members, dtype=float)
        return float(np.sum(np.sqrt(self.R @ members)))

    def batch(self, masks):
        return np.sqrt(self.R @ np.asarray(masks, dtype=float).T).sum(axis=0)

    @property
    def bound(self):
        return float(np.sum(np.sqrt(np.sum(self.R, axis=1))))


class TableSetFunction(SetFunction):
    """Set function given by an explicit table of 2^d values.

    Subset index is the bitmask sum of 2^i over members; handy for random
    bounded instances in property tests.
    """

    def __init__(self, values: np.ndarray, monotone: bool = False):
        self.values = check_finite(values, "set-function table")
        d = int(np.log2(self.values.size))
        if 2**d != self.values.size:
            raise ValueError("table length must be a power of two")
        self.ground_size = d
        self.monotone = monotone
        self._pows = (2 ** np.arange(d)).astype(np.int64)

    def __call__(self, members):
        idx = int(np.asarray(members, dtype=bool) @ self._pows)
        return float(self.values[idx])

    def batch(self, masks):
        idx = np.asarray(masks, dtype=np.int64) @ self._pows
        return self.values[idx]

    @property
    def bound(self):
        return float(np.max(np.abs(self.values)))


class LogDet(SetFunction):
    """f(S) = log det(I + Sigma[S, S]) for a PSD kernel Sigma."""

    monotone = True

    def __init__(self, Sigma):
        Sigma = check_finite(Sigma, "kernel")
        if not np.allclose(Sigma, Sigma.T, atol=1e-10):
            raise ValueError("kernel must be symmetric")
        evals = np.linalg.eigvalsh(Sigma)
        if evals.min() < -1e-8:
            raise ValueError("kernel must be positive semidefinite")
        self.Sigma = Sigma
        self.ground_size = Sigma.shape[0]
        self._bound = float(np.sum(np.log1p(np.maximum(evals, 0.0))))

    def __call__(self, members):
        members = np.asarray(members, dtype=bool)
        if not members.any():
            return 0.0
        sub = self.Sigma[np.ix_(members, members)]
        sign, logdet = np.linalg.slogdet(np.eye(sub.shape[0]) + sub)
        return float(logdet)

    @property
    def bound(self):
        return self._bound


# --- exact multilinear oracles --------------------------------------------

_mask_cache: dict[int, np.ndarray] = {}


def _all_masks(d: int) -> np.ndarray:
    if d not in _mask_cache:
        ints = np.arange(2**d, dtype=np.uint32)
        _mask_cache[d] = (ints[:, None] >> np.arange(d)[None, :]) & 1 == 1
    return _mask_cache[d]


def _all_values(f: SetFunction) -> np.ndarray:
    # cached on the instance: set functions are immutable after construction
    vals = getattr(f, "_enum_vals", None)
    if vals is None:
        if f.ground_size > ENUM_MAX_D:
            raise EnumerationBudgetError(
                f"d={f.ground_size} exceeds enumeration budget {ENUM_MAX_D}"
            )
        vals = f.batch(_all_masks(f.ground_size))
        f._enum_vals = vals
    return vals


def _subset_weights(x: np.ndarray, masks: np.ndarray) -> np.ndarray:
    return np.where(masks, x[None, :], 1.0 - x[None, :]).prod(axis=1)


def multilinear_exact(f: SetFunction, x: np.ndarray) -> float:
    """Exact multilinear extension F(x) = Σ_S f(S) Π x_i Π (1−x_j)."""
    x = check_finite(x, "multilinear point")
    d = f.ground_size
    if x.shape != (d,):
        raise ValueError("dimension mismatch")
    return float(_all_values(f) @ _subset_weights(x, _all_masks(d)))


def multilinear_grad_hess(f: SetFunction, x: np.ndarray, want_hess: bool = True):
    """(F, gradF, hessF) of the multilinear extension by coordinate pinning.

    ∂F/∂x_i = F(x|x_i=1) − F(x|x_i=0); the mixed second derivative pins two
    coordinates (the diagonal is zero by multilinearity).
    """
    x = check_finite(x, "multilinear point")
    d = f.ground_size
    masks = _all_masks(d)
    vals = _all_values(f)

    def F_pinned(pins):
        y = x.copy()
        for i, b in pins:
            y[i] = b
        return float(vals @ _subset_weights(y, masks))

    F = F_pinned([])
    grad = np.array([F_pinned([(i, 1.0)]) - F_pinned([(i, 0.0)]) for i in range(d)])
    if not want_hess:
        return F, grad, None
    hess = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1, d):
            hij = (
                F_pinned([(i, 1.0), (j, 1.0)])
                - F_pinned([(i, 1.0), (j, 0.0)])
                - F_pinned([(i, 0.0), (j, 1.0)])
                + F_pinned([(i, 0.0), (j, 0.0)])
            )
            hess[i, j] = hess[j, i] = hij
    return F, grad, hess


def multilinear_value(f: SetFunction, x: np.ndarray, rng: RngStream | None = None,
                      n_samples: int = 200) -> float:
    """F(x): exact enumeration when d fits the budget, else sample average."""
    d = f.ground_size
    if d <= ENUM_MAX_D:
        return multilinear_exact(f, x)
    if rng is None:
        raise ValueError("rng required for sampled multilinear values")
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    draws = rng.random((n_samples, d)) < x[None, :]
    return float(np.mean(f.batch(draws)))


class MultilinearProblem(StochasticProblem):
    """Non-oblivious oracle for a multilinear extension.

    z is a subset drawn with independent inclusion probabilities x_i
    (clamped into [ε, 1−ε]).  F̃(x;z) = f(z) does not depend on x, so the
    gradient and Hessian of F̃ vanish and the score-function terms carry
    everything.
    """

    mode = "nonoblivious"
    capabilities = frozenset(
        {"value", "gradient", "hessian_vec", "logp_grad", "logp_hess_vec",
         "exact_reference"}
    )

    def __init__(self, f: SetFunction):
        super().__init__()
        self.f = f
        self.dim = f.ground_size
        self.constants = {"B": f.bound}

    def _probs(self, x):
        if np.any(x < -1e-6) or np.any(x > 1 + 1e-6):
            raise ValueError("multilinear sampling point outside [0,1]^d")
        return np.clip(x, BERNOULLI_EPS, 1.0 - BERNOULLI_EPS)

    def _sample(self, x, rng):
        q = self._probs(x)
        z = rng.random(self.dim) < q
        lg = np.where(z, 1.0 / q, -1.0 / (1.0 - q))
        return Sample(z=z, logp_grad=lg)

    def value(self, x, s):
        return float(self.f(s.z))

    def grad(self, x, s):
        return np.zeros(self.dim)

    def hess_vec(self, x, s, u):
        return np.zeros(self.dim)

    def logp_grad(self, x, s):
        q = self._probs(x)
        z = np.asarray(s.z, dtype=bool)
        return np.where(z, 1.0 / q, -1.0 / (1.0 - q))

    def logp_hess_vec(self, x, s, u):
        q = self._probs(x)
        z = np.asarray(s.z, dtype=bool)
        diag = np.where(z, -1.0 / q**2, -1.0 / (1.0 - q) ** 2)
        return diag * np.asarray(u, dtype=float)

    def exact_value(self, x):
        return multilinear_exact(self.f, x)

    def exact_grad(self, x):
        _, g, _ = multilinear_grad_hess(self.f, x, want_hess=False)
        return g

    def domain_constants(self, lo: float, hi: float) -> dict:
        """Analytic (B, G, L, L2) valid when iterates stay in [lo, hi]^d.

        The bounds cover the score-function terms: the log-density gradient
        has coordinates at most m = max(1/lo, 1/(1−hi)) in magnitude, its
        Hessian diagonal at most m², and the third derivative at most 2m³.
        """
        if not 0 < lo < hi < 1:
            raise ValueError("need 0 < lo < hi < 1")
        m = max(1.0 / lo, 1.0 / (1.0 - hi))
        d = self.dim
        B = self.f.bound
        return {
            "B": B,
            "G": B * m * np.sqrt(d),
            "L": B * m * m * (1 + d),
            "L2": 2 * B * m**3 * (1 + d) ** 1.5,
        }


class FiniteSumProblem:
    """Deterministic finite sum f(x) = (1/N) Σ f_i(x) for the simulator.

    Built from any StochasticProblem exposing component oracles, or from an
    explicit list of (value_fn, grad_fn) pairs.
    """

    def __init__(self, dim: int, value_fns, grad_fns):
        if len(value_fns) != len(grad_fns) or not value_fns:
            raise ValueError("need matching nonempty component lists")
        self.dim = int(dim)
        self.value_fns = list(value_fns)
        self.grad_fns = list(grad_fns)
        self.n = len(value_fns)

    @classmethod
    def from_logistic(cls, p: LogisticL1) -> "FiniteSumProblem":
        vals = [lambda x, i=i: p.component_value(x, i) for i in range(p.n)]
        grads = [lambda x, i=i: p.component_grad(x, i) for i in range(p.n)]
        return cls(p.dim, vals, grads)

    @classmethod
    def from_quadratics(cls, targets: np.ndarray) -> "FiniteSumProblem":
        targets = check_finite(targets, "targets")
        vals = [
            lambda x, t=t: 0.5 * float(np.sum((x - t) ** 2)) for t in targets
        ]
        grads = [lambda x, t=t: x - t for t in targets]
        return cls(targets.shape[1], vals, grads)

    def component_grad(self, x, i):
        return self.grad_fns[i](x)

    def batch_grad(self, x, idx):
        g = np.zeros(self.dim)
        for i in idx:
            g += self.grad_fns[i](x)
        return g / max(len(idx), 1)

    def full_grad(self, x):
        return self.batch_grad(x, range(self.n))

    def value(self, x):
        return float(np.mean([f(x) for f in self.value_fns]))


def make_facility_location(d: int, n_clients: int, rng: RngStream) -> FacilityLocation:
    return FacilityLocation(rng.uniform(0.0, 1.0, size=(n_clients, d)))


def make_coverage(d: int, n_topics: int, rng: RngStream) -> Coverage:
    return Coverage(rng.uniform(0.0, 0.8, size=(d, n_topics)))


def make_concave_over_modular(d: int, n_users: int, rng: RngStream) -> ConcaveOverModular:
    return ConcaveOverModular(rng.uniform(0.0, 5.0, size=(n_users, d)))


def make_logdet(d: int, rng: RngStream) -> LogDet:
    A = rng.normal(size=(d, d))
    return LogDet(A @ A.T / d)


def make_random_bounded(d: int, rng: RngStream, scale: float = 1.0) -> TableSetFunction:
    return TableSetFunction(rng.uniform(-scale, scale, size=2**d))


def estimate_constants(p: StochasticProblem, probe_points, rng: RngStream,
                       n_samples: int = 100) -> dict:
    """Probe-based (B, G) estimates with a 1.2 safety factor, flagged.

    Used where no closed form exists; draws ``n_samples`` z per probe point
    and tracks the largest |F̃| and ‖one-sample gradient‖ seen.
    """
    B = G = 0.0
    for x in probe_points:
        x = np.asarray(x, dtype=float)
        for _ in range(n_samples):
            s = p.sample(x, rng)
            B = max(B, abs(p.value(x, s)))
            G = max(G, float(np.linalg.norm(p.one_sample_grad(x, s))))
    return {"B": 1.2 * B, "G": 1.2 * G, "estimated": True}
