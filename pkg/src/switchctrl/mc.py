"""Monte Carlo estimation of terminal moments with reproducible parallelism.

Every trajectory draws from its own counter-based stream keyed by
``(seed, trajectory index)``, so the sample set is a pure function of the
seed and the worker count can never change it.  Per-trajectory results are
written into an array indexed by trajectory and reduced in fixed order
(numpy pairwise summation), making aggregates bit-identical across worker
counts.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import SwitchSystem
from .pdmp import FeedbackDualControl, sample_mode_path, simulate_dual, simulate_forward
from .synth import null_bound, piecewise_null_policy


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one trajectory: Philox keyed by (seed, index)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)])
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error and the reproducibility inputs."""

    mean: float
    std_error: float
    n_samples: int
    seed: int
    dt: float

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("need at least two samples")


def _run_indexed(values: np.ndarray, worker: Callable[[int], float],
                 n_workers: int) -> None:
    n = values.size
    if n_workers <= 1:
        for i in range(n):
            values[i] = worker(i)
        return

    def fill(chunk):
        for i in chunk:
            values[i] = worker(i)

    chunks = [range(w, n, n_workers) for w in range(n_workers)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        list(pool.map(fill, chunks))


def estimate_terminal(system: SwitchSystem, x0, policy, T: float,
                      n_samples: int, seed: int, dt: float,
                      func: Callable[[np.ndarray], float],
                      start_mode: int = 0,
                      n_workers: int = 1) -> McEstimate:
    """Mean of ``func(X_T)`` over independent jump paths under ``policy``."""
    x0 = np.asarray(x0, dtype=float)

    def one(i: int) -> float:
        path = sample_mode_path(system, start_mode, T, trajectory_rng(seed, i))
        xT = simulate_forward(system, x0, policy, path, dt, record=False)
        return float(func(xT))

    values = np.empty(n_samples)
    _run_indexed(values, one, n_workers)
    mean = float(np.sum(values) / n_samples)
    std = float(values.std(ddof=1))
    return McEstimate(mean, std / math.sqrt(n_samples), n_samples, seed, dt)


def estimate_terminal_msq(system: SwitchSystem, x0, policy, T: float,
                          n_samples: int, seed: int, dt: float,
                          start_mode: int = 0,
                          n_workers: int = 1) -> McEstimate:
    """Mean squared terminal norm E|X_T|^2, the null-control figure of merit."""
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    return estimate_terminal(system, x0, policy, T, n_samples, seed, dt,
                             lambda xT: float(xT @ xT), start_mode, n_workers)


@dataclass(frozen=True)
class BoundCheck:
    N: int
    estimate: McEstimate
    bound: float
    bound_checked: bool
    passed: bool | None


@dataclass(frozen=True)
class NullBoundReport:
    """Per-N restart-policy estimates against the closed-form bound.

    When the commuting hypothesis fails the bound is still reported but
    not asserted (``bound_checked`` false); only the monotone decrease of
    the estimates is checked in that case.
    """

    checks: tuple[BoundCheck, ...]
    commuting: bool
    monotone_ok: bool

    @property
    def all_passed(self) -> bool:
        ok = all(c.passed for c in self.checks if c.passed is not None)
        return ok and self.monotone_ok


#: Absolute slack on the bound comparison: steering leaves a residual of
#: order 1e-8 |x0| per segment, so |X_T|^2 carries ~1e-12 |x0|^2 even on
#: realizations where the exact construction hits zero (and the bound and
#: standard error both vanish on jump-free systems).
BOUND_FLOOR = 1e-12


def null_bound_check(system: SwitchSystem, x0, T: float,
                     N_values: Sequence[int], n_samples: int, seed: int,
                     dt: float = 1e-2, start_mode: int = 0,
                     n_workers: int = 1) -> NullBoundReport:
    """Estimate E|X_T|^2 under the N-restart policy for each N and compare
    with ``exp(2 a0 T) |x0|^2 (1 - exp(-c0 T / N))``.

    A per-N check passes when the estimate stays below bound + 3 standard
    errors (plus a fixed numerical floor); estimates must also be
    nonincreasing in N within joint 3-sigma noise.  Synthesis refusals
    propagate.
    """
    x0 = np.asarray(x0, dtype=float)
    checks = []
    commuting = True
    warned = False
    for N in N_values:
        policy = piecewise_null_policy(system, int(N), T)
        commuting = policy.commuting
        if not commuting and not warned:
            warnings.warn(
                "commuting hypothesis fails: the closed-form bound is "
                "reported but not asserted; only monotone decrease is checked",
                stacklevel=2,
            )
            warned = True
        est = estimate_terminal_msq(system, x0, policy, T, n_samples, seed, dt,
                                    start_mode, n_workers)
        bound = null_bound(system, x0, T, int(N))
        slack = 3.0 * est.std_error + BOUND_FLOOR * float(x0 @ x0)
        passed = (est.mean <= bound + slack) if commuting else None
        checks.append(BoundCheck(int(N), est, bound, commuting, passed))
    monotone_ok = True
    for a, b in zip(checks, checks[1:]):
        joint = 3.0 * math.hypot(a.estimate.std_error, b.estimate.std_error)
        if b.estimate.mean > a.estimate.mean + joint + BOUND_FLOOR * float(x0 @ x0):
            monotone_ok = False
    return NullBoundReport(tuple(checks), commuting, monotone_ok)


def dual_kernel_residual(system: SwitchSystem, F, y0, T: float,
                         n_paths: int, seed: int, dt: float,
                         start_mode: int = 0) -> float:
    """Largest |B0(start)* Y_t| over paths and grid times under the witness
    feedback; small values exhibit a kernel-confined dual family."""
    bstar = system.modes[start_mode].B0.T
    ctrl = FeedbackDualControl(F)
    worst = 0.0
    for i in range(n_paths):
        path = sample_mode_path(system, start_mode, T, trajectory_rng(seed, i))
        traj = simulate_dual(system, y0, ctrl, path, dt, record=True)
        vals = np.linalg.norm(traj.states @ bstar.T, axis=1)
        worst = max(worst, float(vals.max()))
    return worst
