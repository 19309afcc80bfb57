"""Chip-level TH-IR multiuser channel model.

Draws per-trial scenario realizations (multipath gains, time-hopping offsets,
polarity chips) and assembles the multiple-access interference signature seen
by the fingers of user 1. One frame per symbol is assumed throughout, so each
user carries a single TH offset and a single polarity chip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised when a system configuration violates its invariants."""


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters.

    ``energies[0]`` is the desired user's bit energy; all quantities are linear.
    """

    K: int
    L: int
    M: int
    N_c: int
    energies: tuple[float, ...]
    sigma_n2: float
    decay_lambda: float = 0.1
    lognormal_sigma2: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if not 1 <= self.M <= self.L:
            raise ConfigError(f"M must satisfy 1 <= M <= L, got M={self.M}, L={self.L}")
        if self.N_c - self.L < 1:
            raise ConfigError(
                f"N_c must exceed L so the TH range is nonempty, got N_c={self.N_c}, L={self.L}"
            )
        if len(self.energies) != self.K:
            raise ConfigError(f"expected {self.K} energies, got {len(self.energies)}")
        if any(not e > 0 for e in self.energies):
            raise ConfigError(f"energies must be strictly positive, got {self.energies}")
        if not self.sigma_n2 > 0:
            raise ConfigError(f"sigma_n2 must be strictly positive, got {self.sigma_n2}")
        if not self.decay_lambda >= 0:
            raise ConfigError(f"decay_lambda must be >= 0, got {self.decay_lambda}")
        if not self.lognormal_sigma2 > 0:
            raise ConfigError(f"lognormal_sigma2 must be > 0, got {self.lognormal_sigma2}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")

    @property
    def N_T(self) -> int:
        """Size of the TH offset alphabet; offsets never push a path past the frame."""
        return self.N_c - self.L

    @property
    def E1(self) -> float:
        return self.energies[0]

    @property
    def ebn0_db(self) -> float:
        """Desired-user E1/sigma_n2 in dB."""
        return 10.0 * np.log10(self.E1 / self.sigma_n2)


@dataclass(frozen=True, eq=False)
class ScenarioRealization:
    alphas: np.ndarray  # (K, L) signed path gains
    th_codes: np.ndarray  # (K,) chip offsets in [0, N_T)
    polarities: np.ndarray  # (K,) in {-1, +1}

    def __post_init__(self):
        for arr in (self.alphas, self.th_codes, self.polarities):
            arr.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, ScenarioRealization):
            return NotImplemented
        return (
            np.array_equal(self.alphas, other.alphas)
            and np.array_equal(self.th_codes, other.th_codes)
            and np.array_equal(self.polarities, other.polarities)
        )


@dataclass(frozen=True, eq=False)
class MaiSignature:
    """Interference seen by user 1's paths.

    ``s_mai[l, j]`` is the signed gain of interferer ``j + 2`` that lands on
    path ``l`` of user 1 (zero if nothing collides); ``a_mai[j]`` is that
    interferer's amplitude sqrt(E_k).
    """

    s_mai: np.ndarray
    a_mai: np.ndarray
    weighted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "weighted", self.s_mai * self.a_mai[None, :])

    @property
    def L(self) -> int:
        return self.s_mai.shape[0]

    def covariance(self) -> np.ndarray:
        """MAI covariance across all L paths, S_mai A^2 S_mai^T."""
        w = self.weighted
        return w @ w.T


def lognormal_mu(L: int, decay_lambda: float, sigma2: float) -> np.ndarray:
    """Log-mean of each tap magnitude for a unit-energy exponential power profile."""
    lam = decay_lambda
    if lam == 0:
        log_omega0 = -np.log(L)
    else:
        log_omega0 = np.log(-np.expm1(-lam)) - np.log(-np.expm1(-lam * L))
    return 0.5 * (log_omega0 - lam * np.arange(L) - 2.0 * sigma2)


def expected_tap_powers(L: int, decay_lambda: float) -> np.ndarray:
    """Omega_0 * exp(-lambda * (l - 1)), normalized to sum to one."""
    p = np.exp(-decay_lambda * np.arange(L))
    return p / p.sum()


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based generator for one trial; independent of draw order."""
    if trial_index < 0:
        raise ValueError(f"trial_index must be nonnegative, got {trial_index}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial_index])))


def draw_realization(cfg: SystemConfig, trial_index: int) -> ScenarioRealization:
    """Draw channel gains, TH offsets and polarities for every user.

    Depends only on ``(cfg.seed, trial_index)`` and the shape parameters
    ``K``, ``L``, ``N_c``; noise level, energies and ``M`` do not enter, so sweeps
    over those reuse the same realizations.
    """
    rng = trial_rng(cfg.seed, trial_index)
    K, L = cfg.K, cfg.L
    mu = lognormal_mu(L, cfg.decay_lambda, cfg.lognormal_sigma2)
    mags = rng.lognormal(mean=np.broadcast_to(mu, (K, L)), sigma=np.sqrt(cfg.lognormal_sigma2))
    signs = 2 * rng.integers(0, 2, size=(K, L)) - 1
    th_codes = rng.integers(0, cfg.N_T, size=K)
    polarities = 2 * rng.integers(0, 2, size=K) - 1
    return ScenarioRealization(alphas=signs * mags, th_codes=th_codes, polarities=polarities)


def collision_indicator(c1: int, c_k: int, l: int, m: int) -> int:
    """1 if path ``m`` of a user with offset ``c_k`` shares a chip with path ``l`` of user 1.

    Path indices are zero-based.
    """
    return int(c_k + m == c1 + l)


def build_mai_signature(cfg: SystemConfig, real: ScenarioRealization) -> MaiSignature:
    K, L = cfg.K, cfg.L
    s_mai = np.zeros((L, K - 1))
    c1, d1 = real.th_codes[0], real.polarities[0]
    paths = np.arange(L)
    for j, k in enumerate(range(1, K)):
        # path l of user 1 meets path m = c1 + l - c_k of user k, if it exists
        m = c1 + paths - real.th_codes[k]
        hit = (m >= 0) & (m < L)
        s_mai[hit, j] = d1 * real.polarities[k] * real.alphas[k, m[hit]]
    a_mai = np.sqrt(np.asarray(cfg.energies[1:], dtype=float))
    s_mai.setflags(write=False)
    a_mai.setflags(write=False)
    return MaiSignature(s_mai=s_mai, a_mai=a_mai)
