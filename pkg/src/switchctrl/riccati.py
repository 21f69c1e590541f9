"""Penalty Riccati flows and the kernel-viability test for constant systems.

For a constant-coefficient system, whether a dual state can be kept inside
``ker(B*)`` is encoded by the large-penalty limit of quadratic forms
``<K_T^N y, y>``: the matrices solve a forward Riccati flow whose source
``N P`` penalizes the component orthogonal to the kernel, and ``y`` is
viable exactly when the forms stay bounded as ``N`` grows.  Boundedness in
the limit is not decidable from finitely many ``N``, so the verdict here
is a numerical heuristic (plateau against fitted growth) and is labeled as
such wherever it is reported; the algebraic criteria remain authoritative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import ConstantSystem
from .subspace import DEFAULT_RANK_TOL, image, kernel

#: Default penalty ladder for the viability test.
DEFAULT_N_LIST = (1.0, 10.0, 100.0, 1000.0)


class RiccatiPositivityError(RuntimeError):
    """(I + K) stopped being positive definite; the step size is too large."""

    def __init__(self, t: float, dt: float):
        self.t = t
        self.dt = dt
        super().__init__(f"I + K lost positive definiteness at t={t:.6g} (dt={dt:g})")


@dataclass(frozen=True)
class RiccatiRun:
    """One integrated penalty flow: symmetric PSD K on a uniform grid, K(0) = 0."""

    N: float
    grid: np.ndarray
    K: np.ndarray  # (len(grid), n, n)

    def terminal_form(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(y @ self.K[-1] @ y)


def _rhs_builder(csystem: ConstantSystem, N: float, perp: np.ndarray, dt: float):
    A = csystem.A
    n = csystem.n
    eye = np.eye(n)
    marks = [(w, np.asarray(c)) for w, c in csystem.marks if w > 0.0]

    def rhs(K, t):
        val = -K @ A.T - A @ K + N * perp
        if marks:
            try:
                ch = cho_factor(eye + K, check_finite=False)
            except np.linalg.LinAlgError:
                raise RiccatiPositivityError(t, dt) from None
            S = np.zeros((n, n))
            for w, c in marks:
                S += w * (c.T @ cho_solve(ch, c, check_finite=False))
            val = val - K @ S @ K
        return val

    return rhs


def integrate_riccati(csystem: ConstantSystem, N: float, T: float,
                      dt: float | None = None,
                      rank_tol: float = DEFAULT_RANK_TOL) -> RiccatiRun:
    """Integrate the penalty flow forward from K(0) = 0 on [0, T].

    Classical fourth-order steps with symmetry re-enforced after every
    step; ``(I + K)`` is inverted by a symmetric (Cholesky) solve.  The
    default step is ``1e-4 T``; a positivity failure triggers one
    automatic retry at half the step before the error propagates.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if N <= 0:
        raise ValueError("the penalty weight must be positive")
    if dt is None:
        dt = 1e-4 * T
    perp = image(csystem.B, rank_tol).projector()
    try:
        return _integrate(csystem, N, T, dt, perp)
    except RiccatiPositivityError:
        return _integrate(csystem, N, T, dt / 2.0, perp)


def _integrate(csystem, N, T, dt, perp):
    steps = max(1, int(math.ceil(T / dt - 1e-12)))
    h = T / steps
    rhs = _rhs_builder(csystem, N, perp, h)
    n = csystem.n
    K = np.zeros((n, n))
    out = np.empty((steps + 1, n, n))
    out[0] = K
    for i in range(steps):
        t = i * h
        k1 = rhs(K, t)
        k2 = rhs(K + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(K + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(K + h * k3, t + h)
        K = K + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        K = 0.5 * (K + K.T)
        out[i + 1] = K
    return RiccatiRun(float(N), np.linspace(0.0, T, steps + 1), out)


@dataclass(frozen=True)
class ViabilityReport:
    """Outcome of the heuristic boundedness test.

    ``table`` holds the (N, <K_T^N y, y>) pairs; ``fitted_power`` the
    global slope of log q against log N, ``local_powers`` the per-rung
    slopes.  ``verdict`` is one of ``viable``, ``nonviable``,
    ``indeterminate``.
    """

    verdict: str
    table: tuple[tuple[float, float], ...]
    fitted_power: float | None
    local_powers: tuple[float, ...]
    last_ratio: float | None
    in_kernel: bool
    notes: tuple[str, ...]


def viability_test(csystem: ConstantSystem, y, T: float,
                   N_list=DEFAULT_N_LIST,
                   growth_tol: float = 0.05,
                   power_threshold: float = 0.5,
                   decay_factor: float = 2.0 / 3.0,
                   dt: float | None = None,
                   rank_tol: float = DEFAULT_RANK_TOL) -> ViabilityReport:
    """Classify a kernel vector as viable or nonviable under the penalty ladder.

    Decision rule, on the local growth exponents
    ``p_k = log(q_{k+1}/q_k) / log(N_{k+1}/N_k)``:

    * ``viable`` when the final ratio stays below ``1 + growth_tol`` (the
      forms have plateaued), or when the final exponent has dropped below
      ``power_threshold`` *and* below ``decay_factor`` times its maximum:
      a bounded sequence drives its exponent to zero, and on desk-scale
      ladders the decay is visible long before the ratio itself settles.
    * ``nonviable`` when the final exponent still reaches
      ``power_threshold``: sustained power growth in the penalty weight.
    * ``indeterminate`` otherwise; reported, never guessed.

    A vector outside ``ker(B*)`` is nonviable outright.  All intermediate
    quantities land in the report; the verdict is a numerical heuristic.
    """
    y = np.asarray(y, dtype=float).reshape(csystem.n)
    if len(N_list) < 3:
        raise ValueError("need at least three penalty weights")
    if sorted(N_list) != list(N_list):
        raise ValueError("penalty weights must be increasing")
    ker = kernel(csystem.B.T, rank_tol)
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        table = tuple((float(N), 0.0) for N in N_list)
        return ViabilityReport("viable", table, None, (), None, True,
                               ("zero vector: quadratic forms vanish identically",))
    if not ker.contains_vector(y, tol=1e-8):
        return ViabilityReport("nonviable", (), None, (), None, False,
                               ("vector lies outside ker(B*)",))

    qs = []
    for N in N_list:
        run = integrate_riccati(csystem, float(N), T, dt, rank_tol)
        qs.append(max(run.terminal_form(y), 0.0))
    table = tuple((float(N), q) for N, q in zip(N_list, qs))

    floor = 1e-12 * ynorm * ynorm
    if max(qs) <= floor:
        return ViabilityReport("viable", table, None, (), None, True,
                               ("quadratic forms vanish",))
    logN = np.log(np.asarray(N_list, dtype=float))
    logq = np.log(np.maximum(qs, floor))
    local = tuple(float(p) for p in np.diff(logq) / np.diff(logN))
    power = float(np.polyfit(logN, logq, 1)[0])
    last_ratio = qs[-1] / max(qs[-2], floor)
    notes = [f"last ratio {last_ratio:.4g}", f"fitted power {power:.4g}",
             "local powers " + ", ".join(f"{p:.4g}" for p in local),
             "heuristic verdict: algebraic criteria remain authoritative"]
    p_last, p_max = local[-1], max(local)
    if last_ratio <= 1.0 + growth_tol:
        verdict = "viable"
        notes.append("plateau reached")
    elif p_last >= power_threshold:
        verdict = "nonviable"
        notes.append("sustained power growth in the penalty weight")
    elif p_last <= decay_factor * p_max:
        verdict = "viable"
        notes.append("growth exponent decaying: forms saturate")
    else:
        verdict = "indeterminate"
        notes.append("growth falls between the plateau and power thresholds")
    return ViabilityReport(verdict, table, power, local, last_ratio, True,
                           tuple(notes))


def riccati_csv(runs, fh) -> None:
    """Write (N, t, vec(K)) rows for a list of runs."""
    if not runs:
        return
    n = runs[0].K.shape[1]
    header = "N,t," + ",".join(f"k{i + 1}{j + 1}" for i in range(n) for j in range(n))
    fh.write(header + "\n")
    for run in runs:
        for t, K in zip(run.grid, run.K):
            cells = [format(run.N, ".16e"), format(t, ".16e")]
            cells += [format(v, ".16e") for v in K.ravel()]
            fh.write(",".join(cells) + "\n")
