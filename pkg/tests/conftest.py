"""Shared test helpers: random system generators used by the property suites."""

import numpy as np

from switchctrl.model import Mode, SwitchSystem


def random_stochastic_matrix(rng, k):
    """Row-stochastic matrix with zero diagonal and a sparse support."""
    Q = rng.random((k, k))
    np.fill_diagonal(Q, 0.0)
    Q[rng.random((k, k)) < 0.3] = 0.0
    np.fill_diagonal(Q, 0.0)
    for i in range(k):
        if Q[i].sum() == 0.0:
            j = (i + 1 + int(rng.integers(0, k - 1))) % k
            Q[i, j] = 1.0
    return Q / Q.sum(axis=1, keepdims=True)


def random_input_matrix(rng, n, d):
    roll = rng.random()
    if roll < 0.35:
        # full row rank when possible: well-spread random entries
        return rng.standard_normal((n, d)) + np.eye(n, d)
    if roll < 0.7:
        # structured rank deficiency: control enters the first row only
        B = np.zeros((n, d))
        B[0, :] = 1.0
        return B
    return rng.standard_normal((n, d)) * (rng.random((n, d)) < 0.5)


def random_switch_system(rng, max_n=4, max_modes=3, zero_jump_prob=0.25):
    """Valid random switch system with modest entries.

    Mixes rank-deficient and full-rank inputs, occasional silent modes,
    occasional zero jump matrices, and (rarely) mode-dependent inputs.
    """
    n = int(rng.integers(1, max_n + 1))
    d = int(rng.integers(1, n + 1))
    k = int(rng.integers(2, max_modes + 1))
    Q = random_stochastic_matrix(rng, k)
    shared_b = random_input_matrix(rng, n, d)
    vary_b = rng.random() < 0.1
    modes = []
    for i in range(k):
        rate = 0.0 if rng.random() < 0.1 else float(rng.uniform(0.2, 2.0))
        B0 = random_input_matrix(rng, n, d) if vary_b else shared_b
        modes.append(
            Mode(
                id=str(i),
                embedding=np.array([float(i)]),
                rate=rate,
                A=rng.standard_normal((n, n)),
                B0=B0,
            )
        )
    C = {}
    for i in range(k):
        for j in range(k):
            if Q[i, j] > 0:
                if rng.random() < zero_jump_prob:
                    C[(i, j)] = np.zeros((n, n))
                else:
                    C[(i, j)] = 0.7 * rng.standard_normal((n, n))
    return SwitchSystem(n=n, d=d, m=1, beta=np.zeros(1), modes=tuple(modes),
                        Q=Q, C=C)


def pytest_configure(config):
    # rerun-stable property tests: hypothesis draws from a fixed sequence
    from hypothesis import settings

    settings.register_profile("repeatable", deadline=None, derandomize=True)
    settings.load_profile("repeatable")
