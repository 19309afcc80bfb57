import itertools

import numpy as np
import pytest

from rake_select.channel import SystemConfig, build_mai_signature, draw_realization


def make_instance(K=5, L=10, M=3, N_c=None, ebn0_db=20.0, energies=None, seed=11, trial=0):
    energies = (1.0,) * K if energies is None else tuple(energies)
    cfg = SystemConfig(
        K=K, L=L, M=M, N_c=N_c or L + 5, energies=energies, sigma_n2=energies[0] / 10 ** (ebn0_db / 10), seed=seed
    )
    real = draw_realization(cfg, trial)
    return cfg, real, build_mai_signature(cfg, real)


def brute_mai(cfg, real):
    """Double loop over (l, m) straight from the collision definition."""
    L, K = cfg.L, cfg.K
    S = np.zeros((L, K - 1))
    c, d, a = real.th_codes, real.polarities, real.alphas
    for k in range(1, K):
        for l in range(L):
            acc = 0.0
            for m in range(L):
                if c[k] + m == c[0] + l:
                    acc += a[k, m]
            S[l, k - 1] = d[0] * d[k] * acc
    return S


def dense_exact_sinr(indices, cfg, real, sig):
    """SINR through the explicit M x L selection matrix and a dense inverse."""
    L = cfg.L
    idx = sorted(indices)
    X = np.zeros((len(idx), L))
    for r, i in enumerate(idx):
        X[r, i] = 1.0
    A2 = np.diag(cfg.energies[1:])
    S = sig.s_mai
    a1 = real.alphas[0]
    R = np.eye(len(idx)) + X @ S @ A2 @ S.T @ X.T / cfg.sigma_n2
    v = X @ a1
    return cfg.E1 / cfg.sigma_n2 * v @ np.linalg.inv(R) @ v


def enumerate_best(cfg, real, sig):
    """Independent subset enumerator: dense inverse per subset, first strict maximum wins."""
    best, best_set = -np.inf, None
    for s in itertools.combinations(range(cfg.L), cfg.M):
        v = dense_exact_sinr(s, cfg, real, sig)
        if v > best * (1 + 1e-13):
            best, best_set = v, s
    return best_set, best


def binary_optimum(P, q, M):
    L = q.size
    best = np.inf
    for s in itertools.combinations(range(L), M):
        x = np.zeros(L)
        x[list(s)] = 1.0
        best = min(best, x @ P @ x - q @ x)
    return best


def random_pd(rng, L, rank=None, shift=0.05):
    rank = rank or L
    A = rng.standard_normal((L, rank))
    P = A @ A.T / rank + shift * np.eye(L)
    q = rng.uniform(0.05, 1.0, L)
    return 0.5 * (P + P.T), q


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
