"""Monte Carlo comparison of finger selectors.

Every trial draws one realization and runs all requested selectors on it, so
selectors are compared pairwise on identical channels. Realizations depend
only on (seed, trial index); sweeping Eb/N0 or M therefore reuses the same
channels at every sweep point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import SystemConfig, build_mai_signature, draw_realization
from .selectors import DEFAULT_BUDGET, SelectorKind, run_selectors, subset_count
from .sinr import build_sinr_problem

log = logging.getLogger(__name__)

SWEEP_EBN0 = "ebn0_db"
SWEEP_FINGERS = "M"
SWEEP_PARAMS = (SWEEP_EBN0, SWEEP_FINGERS)

DEFAULT_TRIALS = 500
DEFAULT_EBN0_GRID = (0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0)
DEFAULT_M_GRID = (2, 4, 6, 8, 10, 15, 20, 30)


def sigma_for_ebn0(E1: float, ebn0_db: float) -> float:
    """Noise variance giving E1 / sigma_n2 = Eb/N0."""
    return E1 / 10.0 ** (ebn0_db / 10.0)


@dataclass(frozen=True)
class ExperimentPlan:
    base: SystemConfig
    trials: int
    selectors: tuple[SelectorKind, ...]
    scenario_name: str = "custom"
    sweep_param: Optional[str] = None
    sweep_values: tuple[float, ...] = ()
    exhaustive_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "selectors", tuple(SelectorKind(s) for s in self.selectors))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.selectors:
            raise ValueError("at least one selector is required")
        if len(set(self.selectors)) != len(self.selectors):
            raise ValueError(f"duplicate selectors in {[s.value for s in self.selectors]}")
        if self.sweep_param is None:
            if self.sweep_values:
                raise ValueError("sweep values given without a sweep parameter")
        elif self.sweep_param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.sweep_param!r}; expected one of {SWEEP_PARAMS}")
        elif not self.sweep_values:
            raise ValueError(f"sweep over {self.sweep_param} has no values")
        # validates every point against the base config
        for cfg in self.point_configs():
            pass

    def points(self) -> list[Optional[float]]:
        return list(self.sweep_values) if self.sweep_param else [None]

    def config_at(self, value) -> SystemConfig:
        if self.sweep_param == SWEEP_EBN0:
            return replace(self.base, sigma_n2=sigma_for_ebn0(self.base.E1, float(value)))
        if self.sweep_param == SWEEP_FINGERS:
            if float(value) != int(value):
                raise ValueError(f"M sweep values must be integers, got {value}")
            return replace(self.base, M=int(value))
        return self.base

    def point_configs(self) -> list[SystemConfig]:
        return [self.config_at(v) for v in self.points()]


@dataclass(frozen=True)
class PointStats:
    sweep_value: Optional[float]
    selector: SelectorKind
    mean_linear: float
    mean_db: float
    stderr_linear: float
    trials: int
    solver_failures: int


@dataclass(frozen=True, eq=False)
class AggregateResult:
    plan: ExperimentPlan
    rows: tuple[PointStats, ...]
    # per sweep point: selector -> per-trial exact SINR (linear), trial order
    per_trial: dict = field(repr=False, default_factory=dict)

    def row(self, sweep_value, selector) -> PointStats:
        selector = SelectorKind(selector)
        for r in self.rows:
            if r.sweep_value == sweep_value and r.selector is selector:
                return r
        raise KeyError((sweep_value, selector.value))

    def means_db(self, selector) -> np.ndarray:
        selector = SelectorKind(selector)
        return np.array([r.mean_db for r in self.rows if r.selector is selector])


def summarize(sweep_value, selector, values: Sequence[float], failures: int) -> PointStats:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return PointStats(
        sweep_value=sweep_value,
        selector=SelectorKind(selector),
        mean_linear=mean,
        mean_db=10.0 * math.log10(mean),
        stderr_linear=stderr,
        trials=int(arr.size),
        solver_failures=int(failures),
    )


def run_trial(cfg: SystemConfig, trial_index: int, selectors, budget: int = DEFAULT_BUDGET):
    """One realization through every selector; returns selector -> SelectionOutcome."""
    real = draw_realization(cfg, trial_index)
    sig = build_mai_signature(cfg, real)
    alpha1 = real.alphas[0]
    prob = build_sinr_problem(sig, cfg.E1, cfg.sigma_n2, alpha1, cfg.M)
    return run_selectors(selectors, sig, cfg.E1, cfg.sigma_n2, alpha1, cfg.M, prob=prob, budget=budget)


def run_experiment(plan: ExperimentPlan, progress=None) -> AggregateResult:
    """Average exact SINR per selector at every sweep point.

    ``progress``, if given, is called as ``progress(point_index, n_points)``
    after each sweep point.
    """
    if SelectorKind.EXHAUSTIVE in plan.selectors:
        for cfg in plan.point_configs():
            # fail before any work is done
            count = subset_count(cfg.L, cfg.M)
            if count > plan.exhaustive_budget:
                from .selectors import BudgetExceeded

                raise BudgetExceeded(cfg.L, cfg.M, count, plan.exhaustive_budget)

    rows = []
    per_trial = {}
    points = plan.points()
    for p, value in enumerate(points):
        cfg = plan.config_at(value)
        sinrs = {k: np.empty(plan.trials) for k in plan.selectors}
        failures = {k: 0 for k in plan.selectors}
        for t in range(plan.trials):
            outcomes = run_trial(cfg, t, plan.selectors, plan.exhaustive_budget)
            for k, out in outcomes.items():
                sinrs[k][t] = out.exact_sinr
                failures[k] += int(out.flagged)
        for k in plan.selectors:
            rows.append(summarize(value, k, sinrs[k], failures[k]))
        per_trial[value] = sinrs
        log.info("%s: point %s=%s done (%d/%d)", plan.scenario_name, plan.sweep_param, value, p + 1, len(points))
        if progress is not None:
            progress(p, len(points))
    return AggregateResult(plan=plan, rows=tuple(rows), per_trial=per_trial)


_DEFAULT_SELECTORS = (
    SelectorKind.CONVENTIONAL,
    SelectorKind.SPHERE,
    SelectorKind.HYPERCUBE,
    SelectorKind.HYBRID_SPHERE,
    SelectorKind.HYBRID_HYPERCUBE,
)


def scenario_1(trials: int = DEFAULT_TRIALS, seed: int = 1, ebn0_grid=DEFAULT_EBN0_GRID) -> ExperimentPlan:
    """SINR vs Eb/N0: 5 equal-energy users, L=15, M=5, N_c=20."""
    base = SystemConfig(
        K=5, L=15, M=5, N_c=20, energies=(1.0,) * 5, sigma_n2=sigma_for_ebn0(1.0, ebn0_grid[0]),
        decay_lambda=0.1, lognormal_sigma2=0.5, seed=seed,
    )
    return ExperimentPlan(
        base=base,
        trials=trials,
        selectors=(SelectorKind.CONVENTIONAL, SelectorKind.EXHAUSTIVE) + _DEFAULT_SELECTORS[1:],
        scenario_name="fig3",
        sweep_param=SWEEP_EBN0,
        sweep_values=tuple(float(v) for v in ebn0_grid),
    )


def scenario_2(trials: int = DEFAULT_TRIALS, seed: int = 1, m_grid=DEFAULT_M_GRID) -> ExperimentPlan:
    """SINR vs M at Eb/N0 = 20 dB with L=50, N_c=75; no exhaustive search."""
    base = SystemConfig(
        K=5, L=50, M=int(m_grid[0]), N_c=75, energies=(1.0,) * 5, sigma_n2=sigma_for_ebn0(1.0, 20.0),
        decay_lambda=0.1, lognormal_sigma2=0.5, seed=seed,
    )
    return ExperimentPlan(
        base=base,
        trials=trials,
        selectors=_DEFAULT_SELECTORS,
        scenario_name="fig4",
        sweep_param=SWEEP_FINGERS,
        sweep_values=tuple(int(m) for m in m_grid),
    )


def scenario_3(trials: int = DEFAULT_TRIALS, seed: int = 1, m_grid=DEFAULT_M_GRID) -> ExperimentPlan:
    """MAI-limited SINR vs M: 10 users, interferers 10 dB stronger, otherwise as scenario 2."""
    base = SystemConfig(
        K=10, L=50, M=int(m_grid[0]), N_c=75, energies=(1.0,) + (10.0,) * 9, sigma_n2=sigma_for_ebn0(1.0, 20.0),
        decay_lambda=0.1, lognormal_sigma2=0.5, seed=seed,
    )
    return ExperimentPlan(
        base=base,
        trials=trials,
        selectors=_DEFAULT_SELECTORS,
        scenario_name="fig5",
        sweep_param=SWEEP_FINGERS,
        sweep_values=tuple(int(m) for m in m_grid),
    )


PRESETS = {"fig3": scenario_1, "fig4": scenario_2, "fig5": scenario_3}
