"""Deterministic in-process master-worker simulator for quantized
Frank-Wolfe.

Rounds are grouped into periods.  The first round of a period is an anchor
where every worker computes a (near-)exact local gradient; later rounds
send only the recursive gradient difference evaluated on a local
mini-batch.  Every exchanged vector goes through the two-stage quantizer
(worker up-link, master down-link after averaging) and is charged to an
exact bit ledger.  All workers execute the Frank-Wolfe step locally, so
replicas stay bit-identical; the simulator asserts this each round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import FeasibleSet
from .problems import FiniteSumProblem, StochasticProblem
from .quantize import UNQUANTIZED, decode, encode_partition, message_bits
from .rng import RngStream, check_finite
from .solvers import IterationRecord, SolveTrace, fw_gap

__all__ = [
    "QfwConfig",
    "BitLedger",
    "run_qfw",
    "run_snc_qfw",
    "schedule_from_theorem",
    "RAW_BITS_PER_COORD",
]

RAW_BITS_PER_COORD = 32
LEVEL_CAP = 2**16
_WORKER_STREAM = 0x700
_MASTER_STREAM = 0x600
_OUTPUT_STREAM = 0xA11


@dataclass
class BitLedger:
    entries: list = field(default_factory=list)  # (round, direction, bits)
    cum_up: int = 0
    cum_down: int = 0

    def charge(self, round_, direction: str, bits: int):
        self.entries.append((round_, direction, int(bits)))
        if direction == "up":
            self.cum_up += int(bits)
        else:
            self.cum_down += int(bits)

    @property
    def total(self) -> int:
        return self.cum_up + self.cum_down


@dataclass
class QfwConfig:
    """Simulator schedule bundle.

    ``setting`` is one of finite_convex, stoch_convex, finite_nonconvex,
    stoch_nonconvex; ``mode`` is quantized, unquantized, or fl (local-update
    heuristic with end-of-round model averaging, no guarantee).  The
    callables take the period index i (1-based) and inner index k.
    """

    M: int
    setting: str
    period_fn: object          # i -> p_i
    anchor_batch_fn: object    # i -> batch size at k=1 (None = all local)
    inner_batch_fn: object     # (i, k) -> mini-batch size for k >= 2
    eta_fn: object             # (i, k, t) -> step size
    s1_fn: object              # (i, k) -> up-link levels (UNQUANTIZED = raw)
    s2_fn: object              # (i, k) -> down-link levels
    mode: str = "quantized"
    fl_local_steps: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("need at least one worker")
        if self.setting not in (
            "finite_convex", "stoch_convex", "finite_nonconvex", "stoch_nonconvex"
        ):
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.mode not in ("quantized", "unquantized", "fl"):
            raise ValueError(f"unknown mode {self.mode!r}")


def _cap_levels(s: float) -> int:
    return max(1, min(int(math.ceil(s)), LEVEL_CAP))


def schedule_from_theorem(setting: str, n_total: int, M: int, d: int,
                          constants: dict | None = None, T: int | None = None,
                          mode: str = "quantized") -> QfwConfig:
    """Theorem-prescribed periods, batches, steps, and quantization levels.

    Fractional quantities are rounded up and floored at 1; levels are
    additionally capped at 2^16.
    """
    if n_total % M != 0:
        raise ValueError(f"component count {n_total} not divisible by M={M}")
    n_local = n_total // M

    if setting == "finite_convex":
        period = lambda i: 2 ** (i - 1)
        anchor = lambda i: None  # all local components
        inner = lambda i, k: max(1, math.ceil(2 ** (i - 1) / M))
        eta = lambda i, k, t: 2.0 / (2 ** (i - 1) + k)
        s1 = lambda i, k: _cap_levels(
            math.sqrt(d * (2 ** (i - 1)) ** 2 / M) if k == 1
            else math.sqrt(d * 2 ** (i - 1) / M))
        s2 = lambda i, k: _cap_levels(
            math.sqrt(d * (2 ** (i - 1)) ** 2) if k == 1
            else math.sqrt(d * 2 ** (i - 1)))
    elif setting == "stoch_convex":
        if constants is None or not {"sigma", "L", "D"} <= constants.keys():
            raise ValueError("stoch_convex needs constants sigma, L, D")
        sg, L, D = constants["sigma"], constants["L"], constants["D"]
        period = lambda i: 2 ** (i - 1)
        anchor = lambda i: max(
            1, math.ceil(sg**2 * (2 ** (i - 1)) ** 2 / (M * L**2 * D**2)))
        inner = lambda i, k: max(1, math.ceil(2 ** (i - 1) / M))
        eta = lambda i, k, t: 2.0 / (2 ** (i - 1) + k)
        s1 = lambda i, k: _cap_levels(
            math.sqrt(d * (2 ** (i - 1)) ** 2 / M) if k == 1
            else math.sqrt(d * 2 ** (i - 1) / M))
        s2 = lambda i, k: _cap_levels(
            math.sqrt(d * (2 ** (i - 1)) ** 2) if k == 1
            else math.sqrt(d * 2 ** (i - 1)))
    elif setting in ("finite_nonconvex", "stoch_nonconvex"):
        if T is None:
            raise ValueError("nonconvex schedules need the horizon T")
        p = max(1, math.ceil(math.sqrt(n_total)))
        period = lambda i: p
        anchor = lambda i: None
        inner = lambda i, k: max(1, math.ceil(math.sqrt(n_total) / M))
        eta = lambda i, k, t: T ** (-0.5)
        s1 = lambda i, k: _cap_levels(
            math.sqrt(T * d / M) if k == 1
            else math.sqrt(d) * n_total**0.25 / math.sqrt(M))
        s2 = lambda i, k: _cap_levels(
            math.sqrt(T * d) if k == 1 else math.sqrt(d) * n_total**0.25)
    else:
        raise ValueError(f"unknown setting {setting!r}")

    return QfwConfig(M=M, setting=setting, period_fn=period,
                     anchor_batch_fn=anchor, inner_batch_fn=inner,
                     eta_fn=eta, s1_fn=s1, s2_fn=s2, mode=mode)


def _send(vec: np.ndarray, s: int, rng: RngStream, ledger: BitLedger,
          round_: int, direction: str):
    """Quantize-and-transmit one vector; returns what the receiver decodes."""
    if s == UNQUANTIZED:
        ledger.charge(round_, direction, RAW_BITS_PER_COORD * vec.size)
        return vec.copy()
    msg = encode_partition(vec, s, rng)
    ledger.charge(round_, direction, message_bits(msg))
    return decode(msg)


@dataclass
class _Worker:
    worker_id: int
    components: np.ndarray  # global component indices owned
    x: np.ndarray
    gbar: np.ndarray
    rng: RngStream


def _round_schedule(cfg: QfwConfig, T: int):
    """Yield (t, i, k) for rounds 1..T under the period structure."""
    t, i = 1, 1
    while t <= T:
        p = int(cfg.period_fn(i))
        if p < 1:
            raise ValueError("empty period")
        for k in range(1, p + 1):
            if t > T:
                return
            yield t, i, k
            t += 1
        i += 1


def run_qfw(problem: FiniteSumProblem, set_: FeasibleSet, cfg: QfwConfig,
            T: int, rng: RngStream, log_points=None):
    """Quantized distributed Frank-Wolfe on a finite sum.

    Returns (SolveTrace, BitLedger).  The N components are partitioned
    evenly across the M workers; anchors with ``anchor_batch_fn -> None``
    use every local component (exact local gradient), inner rounds draw
    mini-batches with replacement from the local partition.
    """
    N, M, d = problem.n, cfg.M, problem.dim
    if N % M != 0:
        raise ValueError(f"component count {N} not divisible by M={M}")
    n_local = N // M
    if cfg.mode == "fl":
        return _run_fl(problem, set_, cfg, T, rng, log_points)

    x0 = set_.lmo_min(np.zeros(d))
    workers = [
        _Worker(m, np.arange(m * n_local, (m + 1) * n_local), x0.copy(),
                np.zeros(d), rng.child(_WORKER_STREAM + m))
        for m in range(M)
    ]
    master_rng = rng.child(_MASTER_STREAM)
    ledger = BitLedger()
    trace = SolveTrace(meta={"setting": cfg.setting, "M": M, "T": T,
                             "mode": cfg.mode})
    nonconvex = cfg.setting.endswith("nonconvex")
    iterates = [x0.copy()]
    if log_points is None:
        log_points = set(range(1, T + 1)) if T <= 256 else None
    for t, i, k in _round_schedule(cfg, T):
        x = workers[0].x
        x_prev = iterates[-2] if len(iterates) >= 2 else x
        s1, s2 = int(cfg.s1_fn(i, k)), int(cfg.s2_fn(i, k))

        decoded = []
        for w in workers:
            if k == 1:
                ab = cfg.anchor_batch_fn(i)
                if ab is None:
                    idx = w.components
                else:
                    idx = w.components[w.rng.integers(n_local, size=int(ab))]
                g = problem.batch_grad(w.x, idx)
            else:
                sz = int(cfg.inner_batch_fn(i, k))
                idx = w.components[w.rng.integers(n_local, size=sz)]
                g = problem.batch_grad(w.x, idx) - problem.batch_grad(x_prev, idx)
            decoded.append(_send(g, s1, w.rng, ledger, t, "up"))

        gtilde = np.zeros(d)
        for gm in decoded:  # fixed worker order: bitwise determinism
            gtilde += gm
        gtilde /= M
        broadcast = _send(gtilde, s2, master_rng, ledger, t, "down")

        hashes = set()
        for w in workers:
            w.gbar = broadcast.copy() if k == 1 else w.gbar + broadcast
            eta = float(cfg.eta_fn(i, k, t))
            v = set_.lmo_min(w.gbar)
            w.x = w.x + eta * (v - w.x)
            hashes.add((w.x.tobytes(), w.gbar.tobytes()))
        if len(hashes) != 1:
            raise AssertionError("replica divergence across workers")
        iterates.append(workers[0].x.copy())

        if log_points is None or t in log_points:
            xo = workers[0].x
            gap = fw_gap(problem.full_grad(xo), set_, xo) if nonconvex else None
            trace.records.append(IterationRecord(
                t=t, objective=problem.value(xo), fw_gap=gap,
                cum_bits=ledger.total))
    if nonconvex:
        idx = int(rng.child(_OUTPUT_STREAM).integers(len(iterates)))
        trace.output = iterates[idx]
        trace.output_rule = "uniform_random_iterate"
    else:
        trace.output = workers[0].x
        trace.output_rule = "last"
    trace.meta["cum_bits_up"] = ledger.cum_up
    trace.meta["cum_bits_down"] = ledger.cum_down
    return trace, ledger


def _run_fl(problem, set_, cfg, T, rng, log_points):
    """Local-update heuristic: each worker runs local FW steps on its own
    components, then the master averages the models (no guarantee)."""
    N, M, d = problem.n, cfg.M, problem.dim
    n_local = N // M
    x0 = set_.lmo_min(np.zeros(d))
    workers = [
        _Worker(m, np.arange(m * n_local, (m + 1) * n_local), x0.copy(),
                np.zeros(d), rng.child(_WORKER_STREAM + m))
        for m in range(M)
    ]
    ledger = BitLedger()
    trace = SolveTrace(meta={"setting": cfg.setting, "M": M, "T": T,
                             "mode": "fl", "guarantee": "none"})
    for t in range(1, T + 1):
        for w in workers:
            for j in range(cfg.fl_local_steps):
                g = problem.batch_grad(w.x, w.components)
                v = set_.lmo_min(g)
                eta = float(cfg.eta_fn(1, 1, t))
                w.x = w.x + eta * (v - w.x)
            ledger.charge(t, "up", RAW_BITS_PER_COORD * d)
        avg = np.zeros(d)
        for w in workers:
            avg += w.x
        avg /= M
        ledger.charge(t, "down", RAW_BITS_PER_COORD * d)
        for w in workers:
            w.x = avg.copy()
        if log_points is None or t in log_points:
            trace.records.append(IterationRecord(
                t=t, objective=problem.value(avg), cum_bits=ledger.total))
    trace.output = workers[0].x
    return trace, ledger


def run_snc_qfw(p: StochasticProblem, set_: FeasibleSet, cfg: QfwConfig,
                T: int, n_surrogate: int, rng: RngStream, log_points=None):
    """Stochastic non-convex wrapper: draw ``n_surrogate`` samples once,
    build the finite-sum surrogate (1/n) sum f(x; z_i), and run the
    finite-sum simulator on it with the nonconvex schedules."""
    if n_surrogate % cfg.M != 0:
        raise ValueError("surrogate size must be divisible by worker count")
    x0 = set_.lmo_min(np.zeros(p.dim))
    srng = rng.child(0x5A)
    samples = [p.sample(x0, srng) for _ in range(n_surrogate)]
    vals = [lambda x, s=s: p.value(x, s) for s in samples]
    grads = [lambda x, s=s: p.grad(x, s) for s in samples]
    surrogate = FiniteSumProblem(p.dim, vals, grads)
    trace, ledger = run_qfw(surrogate, set_, cfg, T, rng, log_points)
    trace.meta["surrogate_n"] = n_surrogate
    if p.has("exact_reference") and trace.output is not None:
        trace.meta["true_gap"] = fw_gap(p.exact_grad(trace.output), set_,
                                        trace.output)
        trace.meta["surrogate_gap"] = fw_gap(surrogate.full_grad(trace.output),
                                             set_, trace.output)
    return trace, ledger, surrogate
