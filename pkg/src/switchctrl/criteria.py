"""Algebraic controllability criteria built from invariant-subspace fixed points.

Each criterion produces, per starting mode, a *witness* subspace inside
``ker(B0*)``; the criterion passes exactly when the witness is the zero
subspace.  All largest-subspace computations run the same decreasing
fixed-point iteration from their seed, so every verdict carries the full
inclusion chain down to stabilization.

Criterion names
---------------
``nec1``
    per-mode invariance of the compensated adjoint drift (necessary),
``nec2``
    strict invariance over modes accessible in ``k`` jumps, intersected
    over ``k`` (necessary),
``suf1``
    per-mode iteration with the augmented jump image held fixed at
    ``ker(B0*)`` (sufficient),
``crit_equiv``
    strict invariance for constant-coefficient systems (necessary and
    sufficient, for both approximate and approximate null-controllability),
``crit_cont_switch``
    plain adjoint invariance when no state jumps occur (necessary and
    sufficient),
``det_kalman``
    controllability of the per-mode deterministic pair, reported for
    information only and never folded into the stochastic verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import ConstantSystem, SwitchSystem
from .pdmp import effective_drift
from .subspace import (
    DEFAULT_RANK_TOL,
    Subspace,
    image,
    kernel,
    numerical_rank,
    orthonormalize,
    preimage,
)


class RefusalError(ValueError):
    """A criterion or synthesis step refused its input; ``code`` says why."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}" + (f": {detail}" if detail else ""))


class WitnessInfeasibleError(RuntimeError):
    """Feedback-witness synthesis did not reach the required residual.

    This contradicts strict invariance of the witness subspace and signals
    an inconsistent numerical-rank decision upstream.
    """


@dataclass(frozen=True)
class ModeVerdict:
    """Per-mode outcome: the witness subspace and its stabilized chain."""

    passed: bool
    witness: Subspace
    chain: tuple[Subspace, ...]


@dataclass(frozen=True)
class CriterionVerdict:
    name: str
    per_mode: Mapping[str, ModeVerdict]
    overall: bool
    details: Mapping[str, object] = field(default_factory=dict)

    def witness(self, mode_id: str) -> Subspace:
        return self.per_mode[mode_id].witness


# --------------------------------------------------------------------------
# primitive computations
# --------------------------------------------------------------------------


def kalman_rank(A, B, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank of the controllability matrix [B, AB, ..., A^(n-1)B]."""
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape[0] != A.shape[0]:
        B = B.T
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return numerical_rank(np.hstack(blocks), rank_tol)


def _observability_chain(M, Bstar, rank_tol) -> tuple[Subspace, ...]:
    """Decreasing chain V_j = ker[Bstar; Bstar M; ...; Bstar M^j], j = 0..n.

    Row blocks are rescaled to unit norm (which leaves every kernel
    unchanged) so that growing powers of M cannot drown out early blocks.
    The last step is a Cayley-Hamilton repeat, so the chain always ends
    with two equal entries.
    """
    M = np.asarray(M, dtype=float)
    Bstar = np.atleast_2d(np.asarray(Bstar, dtype=float))
    n = M.shape[0]
    rows = []
    chain = []
    R = Bstar
    for _ in range(n + 1):
        norm = np.linalg.norm(R, 2)
        rows.append(R / norm if norm > 0 else R)
        chain.append(kernel(np.vstack(rows), rank_tol, scale=1.0))
        R = R @ M
    return tuple(chain)


def unobservable_subspace(M, Bstar, rank_tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Largest M-invariant subspace contained in ker(Bstar).

    Equals the intersection of ker(Bstar M^k) over k < n.
    """
    return _observability_chain(M, Bstar, rank_tol)[-1]


def invariant_fixpoint(M, seed: Subspace, rank_tol: float = DEFAULT_RANK_TOL):
    """Largest M-invariant subspace of ``seed`` by decreasing iteration.

    Independent route to :func:`unobservable_subspace` when seeded at
    ``ker(Bstar)``; kept separate so the two can cross-check each other.
    """
    V = seed
    chain = [V]
    for _ in range(seed.ambient_dim + 1):
        W = V.intersect(preimage(M, V, rank_tol), rank_tol)
        chain.append(W)
        if W.dim == V.dim:
            break
        V = W
    return chain[-1], tuple(chain)


def accessible_modes(system: SwitchSystem, start: int, k: int) -> frozenset[int]:
    """Modes reachable from ``start`` by some chain of at most ``k`` positive
    transition probabilities (the start itself counts as zero steps)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    acc = {start}
    frontier = {start}
    for _ in range(k):
        frontier = {
            int(j)
            for i in frontier
            for j in np.flatnonzero(system.Q[i] > 1e-12)
        }
        if frontier <= acc:
            # a stalled union can never grow again
            break
        acc |= frontier
    return frozenset(acc)


Generator = tuple[np.ndarray, Sequence[np.ndarray]]


def strict_invariant_fixpoint(
    generators: Sequence[Generator],
    seed: Subspace,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> tuple[Subspace, tuple[Subspace, ...]]:
    """Largest V inside ``seed`` with A* V <= V + sum_j C*_j V for every generator.

    ``generators`` lists per-mode pairs ``(Astar, [Cstar_1, ...])``; the
    image term is rebuilt from the shrinking V at every round (strict
    invariance).  The iteration is monotone decreasing and reaches its
    fixed point in at most ``dim(seed)`` strict steps; the returned chain
    ends with the stabilized repeat.
    """
    V = seed
    chain = [V]
    for _ in range(seed.ambient_dim + 1):
        W = V
        for Astar, cstars in generators:
            target = V
            if V.dim:
                cols = [Cs @ V.basis for Cs in cstars]
                if cols:
                    target = orthonormalize(np.hstack([V.basis] + cols), rank_tol)
            W = W.intersect(preimage(np.asarray(Astar, float), target, rank_tol),
                            rank_tol)
        chain.append(W)
        if W.dim == V.dim:
            break
        V = W
    return chain[-1], tuple(chain)


def _mode_generator(system: SwitchSystem, i: int) -> Generator:
    # Adjoint drift plus the adjoint jump matrices of every positive-rate
    # outgoing edge; a silent mode (rate 0) carries the zero jump measure,
    # so its image term is empty and only plain invariance remains.
    cstars = [system.C[(i, j)].T for j in system.support(i)]
    return (system.modes[i].A.T, cstars)


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------


def nec1_check(system: SwitchSystem, rank_tol: float = DEFAULT_RANK_TOL) -> CriterionVerdict:
    """Necessary test: no nontrivial invariant subspace of the compensated
    adjoint drift may survive inside ker(B0*), for any starting mode.

    The witness route (observability kernel) is cross-checked against the
    Kalman rank of the non-transposed pair; ``details['consistent']``
    records the agreement.
    """
    per_mode = {}
    ranks = {}
    consistent = True
    for i, mode in enumerate(system.modes):
        drift = effective_drift(system, i)
        chain = _observability_chain(drift.T, mode.B0.T, rank_tol)
        witness = chain[-1]
        rank = kalman_rank(drift, mode.B0, rank_tol)
        ranks[mode.id] = rank
        if (rank == system.n) != witness.is_zero:
            consistent = False
        per_mode[mode.id] = ModeVerdict(witness.is_zero, witness, chain)
    overall = all(v.passed for v in per_mode.values())
    return CriterionVerdict("nec1", per_mode, overall,
                            {"kalman_ranks": ranks, "consistent": consistent})


def nec2_check(system: SwitchSystem, rank_tol: float = DEFAULT_RANK_TOL) -> CriterionVerdict:
    """Necessary test: the decreasing chain of largest strictly invariant
    subspaces over k-step accessible modes must hit {0}.

    The chain per starting mode lists V_0 .. V_{|E|}; accessibility
    stabilizes after |E| - 1 steps, so the tail repeats and the last entry
    is the full intersection V_inf.
    """
    per_mode = {}
    for i, mode in enumerate(system.modes):
        seed = kernel(mode.B0.T, rank_tol)
        chain = []
        for k in range(system.n_modes + 1):
            gens = [_mode_generator(system, j)
                    for j in sorted(accessible_modes(system, i, k))]
            vk, _ = strict_invariant_fixpoint(gens, seed, rank_tol)
            chain.append(vk)
        witness = chain[-1]
        per_mode[mode.id] = ModeVerdict(witness.is_zero, witness, tuple(chain))
    overall = all(v.passed for v in per_mode.values())
    return CriterionVerdict("nec2", per_mode, overall,
                            {"b0_mode_varying": system.b0_mode_varying()})


def suf1_check(system: SwitchSystem, rank_tol: float = DEFAULT_RANK_TOL) -> CriterionVerdict:
    """Sufficient test: iterate inside ker(B0*) with the augmented image
    (C* + I) applied to the whole kernel, held fixed across rounds.

    A pass on every starting mode certifies approximate null-controllability.
    Silent modes (rate 0) evolve deterministically forever, so they reduce
    to the plain invariance test of the adjoint drift.
    """
    per_mode = {}
    n = system.n
    for i, mode in enumerate(system.modes):
        astar = mode.A.T
        ker = kernel(mode.B0.T, rank_tol)
        if mode.rate <= 0.0:
            chain = _observability_chain(astar, mode.B0.T, rank_tol)
            witness = chain[-1]
            per_mode[mode.id] = ModeVerdict(witness.is_zero, witness, chain)
            continue
        cols = [(system.C[(i, j)].T + np.eye(n)) @ ker.basis for j in system.support(i)]
        fixed_image = image(np.hstack(cols), rank_tol) if (cols and ker.dim) \
            else Subspace.zero(n)
        V = ker.intersect(preimage(astar, ker.sum(fixed_image, rank_tol), rank_tol),
                          rank_tol)
        chain = [V]
        for _ in range(n + 1):
            W = V.intersect(
                preimage(astar, V.sum(fixed_image, rank_tol), rank_tol), rank_tol)
            chain.append(W)
            if W.dim == V.dim:
                break
            V = W
        witness = chain[-1]
        per_mode[mode.id] = ModeVerdict(witness.is_zero, witness, tuple(chain))
    overall = all(v.passed for v in per_mode.values())
    return CriterionVerdict("suf1", per_mode, overall)


def crit_equiv_check(csystem: ConstantSystem,
                     rank_tol: float = DEFAULT_RANK_TOL) -> CriterionVerdict:
    """Constant-coefficient equivalence test (necessary and sufficient).

    The verdict decides approximate controllability and approximate
    null-controllability at once: both hold exactly when the largest
    strictly invariant subspace of ker(B*) is trivial.
    """
    seed = kernel(csystem.B.T, rank_tol)
    gens = [(csystem.A.T, [c.T for _, c in csystem.marks])]
    witness, chain = strict_invariant_fixpoint(gens, seed, rank_tol)
    verdict = ModeVerdict(witness.is_zero, witness, chain)
    return CriterionVerdict("crit_equiv", {"constant": verdict}, witness.is_zero)


def _plain_invariance_verdict(system: SwitchSystem, name: str,
                              rank_tol: float) -> CriterionVerdict:
    per_mode = {}
    ranks = {}
    for mode in system.modes:
        chain = _observability_chain(mode.A.T, mode.B0.T, rank_tol)
        witness = chain[-1]
        ranks[mode.id] = kalman_rank(mode.A, mode.B0, rank_tol)
        per_mode[mode.id] = ModeVerdict(witness.is_zero, witness, chain)
    overall = all(v.passed for v in per_mode.values())
    return CriterionVerdict(name, per_mode, overall, {"kalman_ranks": ranks})


def crit_cont_switch_check(system: SwitchSystem,
                           rank_tol: float = DEFAULT_RANK_TOL) -> CriterionVerdict:
    """Continuous-switching equivalence test (necessary and sufficient).

    Only defined for systems whose state never jumps: every jump matrix
    must vanish, otherwise the check refuses with the offending edges.
    Passing means each pair (A(mode), B0(mode)) is controllable.
    """
    ids = system.mode_ids
    offending = [f"{ids[i]}->{ids[j]}" for (i, j), c in sorted(system.C.items())
                 if np.any(c)]
    if offending:
        raise RefusalError("C-nonzero", ", ".join(offending))
    return _plain_invariance_verdict(system, "crit_cont_switch", rank_tol)


def det_kalman_check(system: SwitchSystem,
                     rank_tol: float = DEFAULT_RANK_TOL) -> CriterionVerdict:
    """Controllability of each mode's deterministic pair (A, B0).

    Informational only: the counterexample systems show it is logically
    independent of the stochastic criteria, so it never contributes to the
    overall verdict.
    """
    return _plain_invariance_verdict(system, "det_kalman", rank_tol)


# --------------------------------------------------------------------------
# feedback witness
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FeedbackWitness:
    """Certificate that the strictly invariant chain limit is feedback invariant.

    ``F`` maps edges (i, j) to n-by-n matrices with range inside ``v_inf``
    such that, for every accessible mode i and every witness vector v,
    ``A*(i) v + sum_j weight(i, j) C*(i, j) F[i, j] v`` stays in ``v_inf``
    (residual at most ``residual``).  Feeding ``v(theta) = F Y`` to the
    dual simulation keeps it inside ``v_inf`` and therefore inside
    ker(B0*), which is exactly how a nonzero chain limit defeats
    null-controllability.
    """

    start_mode: str
    v_inf: Subspace
    F: Mapping[tuple[int, int], np.ndarray]
    accessible: tuple[int, ...]
    residual: float


def feedback_witness(system: SwitchSystem, start: int,
                     rank_tol: float = DEFAULT_RANK_TOL,
                     residual_tol: float = 1e-8) -> FeedbackWitness | None:
    """Build per-edge feedback matrices certifying a nonzero chain limit.

    Returns ``None`` when the limit subspace is trivial.  The unknown
    feedback values are solved per witness basis vector by least squares
    over coefficients in the witness subspace; a residual above
    ``residual_tol`` raises :class:`WitnessInfeasibleError` because strict
    invariance guarantees an exact solution.
    """
    mode0 = system.modes[start]
    seed = kernel(mode0.B0.T, rank_tol)
    acc = tuple(sorted(accessible_modes(system, start, system.n_modes)))
    gens = [_mode_generator(system, j) for j in acc]
    v_inf, _ = strict_invariant_fixpoint(gens, seed, rank_tol)
    if v_inf.is_zero:
        return None

    n = system.n
    P = v_inf.basis
    r = v_inf.dim
    perp = np.eye(n) - v_inf.projector()
    F: dict[tuple[int, int], np.ndarray] = {}
    worst = 0.0
    for i in acc:
        astar = system.modes[i].A.T
        rhs = -perp @ astar @ P  # (n, r): off-subspace part to cancel
        sup = system.support(i)
        if not sup:
            worst = max(worst, float(np.linalg.norm(rhs, 2)))
            continue
        blocks = [system.edge_weight(i, j) * (perp @ system.C[(i, j)].T @ P)
                  for j in sup]
        M = np.hstack(blocks)  # (n, r * |sup|)
        sol, _, _, _ = np.linalg.lstsq(M, rhs, rcond=None)
        worst = max(worst, float(np.linalg.norm(M @ sol - rhs, 2)))
        for pos, j in enumerate(sup):
            coef = sol[pos * r:(pos + 1) * r]  # (r, r) coefficients in the basis
            F[(i, j)] = P @ coef @ P.T
    if worst > residual_tol:
        raise WitnessInfeasibleError(
            f"feedback residual {worst:.3e} exceeds {residual_tol:.1e}; "
            "numerical rank decisions are inconsistent"
        )
    return FeedbackWitness(mode0.id, v_inf, F, acc, worst)
