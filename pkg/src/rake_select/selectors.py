"""Finger-selection strategies.

Each selector maps one link instance to ``M`` path indices and reports the
exact MMSE SINR of that choice. The relaxation-based selectors round the
relaxed optimizer to its ``M`` largest entries; the hybrids keep whichever of
the rounded and conventional choices has the higher exact SINR.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import qp
from .channel import MaiSignature
from .sinr import (
    SinrProblem,
    approx_sinr,
    build_sinr_problem,
    exact_sinr,
    exact_sinr_many,
    per_path_sinrs,
)

DEFAULT_BUDGET = 2_000_000
_CHUNK = 50_000


class SelectorKind(str, enum.Enum):
    CONVENTIONAL = "conventional"
    EXHAUSTIVE = "exhaustive"
    SPHERE = "sphere"
    HYPERCUBE = "hypercube"
    SPHERE_DUAL = "sphere_dual"
    HYPERCUBE_DUAL = "hypercube_dual"
    HYBRID_SPHERE = "hybrid_sphere"
    HYBRID_HYPERCUBE = "hybrid_hypercube"

    @property
    def relaxed_base(self) -> Optional["SelectorKind"]:
        """The relaxation a hybrid kind is built on."""
        return {
            SelectorKind.HYBRID_SPHERE: SelectorKind.SPHERE,
            SelectorKind.HYBRID_HYPERCUBE: SelectorKind.HYPERCUBE,
        }.get(self)


RELAXED_KINDS = (
    SelectorKind.SPHERE,
    SelectorKind.HYPERCUBE,
    SelectorKind.SPHERE_DUAL,
    SelectorKind.HYPERCUBE_DUAL,
)


class BudgetExceeded(RuntimeError):
    def __init__(self, L: int, M: int, count: int, budget: int):
        super().__init__(f"exhaustive search over C({L}, {M}) = {count} subsets exceeds budget {budget}")
        self.count = count
        self.budget = budget


@dataclass(frozen=True, eq=False)
class SelectionOutcome:
    indices: tuple[int, ...]
    exact_sinr: float
    approx_objective: float
    solver: Optional[Union[qp.SolverResult, qp.DualResult]] = None
    # True when the underlying solver did not certify convergence
    flagged: bool = False

    @property
    def M(self) -> int:
        return len(self.indices)

    def indicator(self, L: int) -> np.ndarray:
        x = np.zeros(L)
        x[list(self.indices)] = 1.0
        return x


def top_m(values, M: int) -> tuple[int, ...]:
    """Indices of the M largest entries, ties going to the lower index, sorted."""
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    return tuple(sorted(int(i) for i in order[:M]))


def _outcome(indices, sig, E1, sigma_n2, alpha1, prob: Optional[SinrProblem], solver=None, flagged=False):
    indices = tuple(int(i) for i in indices)
    sinr = exact_sinr(list(indices), sig, E1, sigma_n2, alpha1)
    approx = approx_sinr(list(indices), prob) if prob is not None else float("nan")
    return SelectionOutcome(indices, sinr, approx, solver, flagged)


def select_conventional(sig: MaiSignature, E1, sigma_n2, alpha1, M: int, prob: Optional[SinrProblem] = None):
    """Pick the M paths with the largest single-finger SINR."""
    chosen = top_m(per_path_sinrs(sig, E1, sigma_n2, alpha1), M)
    return _outcome(chosen, sig, E1, sigma_n2, alpha1, prob)


def subset_count(L: int, M: int) -> int:
    return math.comb(L, M)


def select_exhaustive(
    sig: MaiSignature,
    E1,
    sigma_n2,
    alpha1,
    M: int,
    prob: Optional[SinrProblem] = None,
    budget: int = DEFAULT_BUDGET,
):
    """Maximize the exact SINR over all C(L, M) subsets.

    Subsets are visited in lexicographic order and the first maximizer wins.
    """
    L = len(alpha1)
    count = subset_count(L, M)
    if count > budget:
        raise BudgetExceeded(L, M, count, budget)
    best_val, best = -np.inf, None
    combos = itertools.combinations(range(L), M)
    while True:
        chunk = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, _CHUNK)), dtype=np.intp
        ).reshape(-1, M)
        if chunk.size == 0:
            break
        vals = exact_sinr_many(chunk, sig, E1, sigma_n2, alpha1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best = vals[k], chunk[k]
    return _outcome(best, sig, E1, sigma_n2, alpha1, prob)


def qp_spec(prob: SinrProblem, kind: qp.ConstraintKind) -> qp.QpSpec:
    return qp.QpSpec(P_scaled=prob.P_scaled, q=prob.q, M=prob.M, kind=kind)


def run_relaxation(kind: SelectorKind, prob: SinrProblem):
    if kind is SelectorKind.SPHERE:
        return qp.solve_sphere(qp_spec(prob, qp.ConstraintKind.SPHERE))
    if kind is SelectorKind.HYPERCUBE:
        return qp.solve_hypercube(qp_spec(prob, qp.ConstraintKind.HYPERCUBE))
    if kind is SelectorKind.SPHERE_DUAL:
        return qp.solve_sphere_dual(qp_spec(prob, qp.ConstraintKind.SPHERE))
    if kind is SelectorKind.HYPERCUBE_DUAL:
        return qp.solve_hypercube_dual(qp_spec(prob, qp.ConstraintKind.HYPERCUBE))
    raise ValueError(f"{kind.value} is not a relaxation")


def select_relaxed(
    kind: SelectorKind, prob: SinrProblem, sig: MaiSignature, alpha1, polish: bool = False
) -> SelectionOutcome:
    """Solve one relaxation and keep the M largest entries of its optimizer.

    A solver that stops at its iteration limit still has its last iterate
    rounded; the outcome is flagged. ``polish`` turns on a single-swap local
    search on the exact SINR after rounding (off by default).
    """
    kind = SelectorKind(kind)
    res = run_relaxation(kind, prob)
    chosen = top_m(res.x_star, prob.M)
    if polish:
        chosen = swap_polish(chosen, sig, prob.E1, prob.sigma_n2, alpha1)
    return _outcome(chosen, sig, prob.E1, prob.sigma_n2, alpha1, prob, solver=res, flagged=not res.converged)


def swap_polish(indices, sig, E1, sigma_n2, alpha1, max_rounds: int = 100) -> tuple[int, ...]:
    """Best-improvement single swaps on the exact SINR until none helps."""
    L = len(alpha1)
    current = tuple(sorted(indices))
    value = exact_sinr(list(current), sig, E1, sigma_n2, alpha1)
    for _ in range(max_rounds):
        outside = [j for j in range(L) if j not in current]
        cands = [
            tuple(sorted(current[:i] + current[i + 1:] + (j,))) for i in range(len(current)) for j in outside
        ]
        if not cands:
            break
        vals = exact_sinr_many(np.array(cands), sig, E1, sigma_n2, alpha1)
        k = int(np.argmax(vals))
        if vals[k] <= value * (1 + 1e-12):
            break
        current, value = cands[k], vals[k]
    return current


def select_hybrid(
    relaxed: SelectionOutcome, conventional: SelectionOutcome, sig=None, E1=None, sigma_n2=None, alpha1=None
) -> SelectionOutcome:
    """Keep the higher exact-SINR choice; the relaxed one wins ties.

    Outcomes already carry their exact SINR; when the instance is passed it
    is recomputed for both.
    """
    r_val, c_val = relaxed.exact_sinr, conventional.exact_sinr
    if sig is not None:
        r_val = exact_sinr(list(relaxed.indices), sig, E1, sigma_n2, alpha1)
        c_val = exact_sinr(list(conventional.indices), sig, E1, sigma_n2, alpha1)
    return relaxed if r_val >= c_val else conventional


def run_selectors(
    kinds,
    sig: MaiSignature,
    E1: float,
    sigma_n2: float,
    alpha1,
    M: int,
    prob: Optional[SinrProblem] = None,
    budget: int = DEFAULT_BUDGET,
) -> dict[SelectorKind, SelectionOutcome]:
    """Run several selectors on one instance, sharing the pieces hybrids reuse."""
    if prob is None:
        prob = build_sinr_problem(sig, E1, sigma_n2, alpha1, M)
    cache: dict[SelectorKind, SelectionOutcome] = {}

    def get(kind: SelectorKind) -> SelectionOutcome:
        if kind in cache:
            return cache[kind]
        if kind is SelectorKind.CONVENTIONAL:
            out = select_conventional(sig, E1, sigma_n2, alpha1, M, prob)
        elif kind is SelectorKind.EXHAUSTIVE:
            out = select_exhaustive(sig, E1, sigma_n2, alpha1, M, prob, budget=budget)
        elif kind in RELAXED_KINDS:
            out = select_relaxed(kind, prob, sig, alpha1)
        else:
            relaxed = get(kind.relaxed_base)
            out = select_hybrid(relaxed, get(SelectorKind.CONVENTIONAL))
            out = SelectionOutcome(out.indices, out.exact_sinr, out.approx_objective, relaxed.solver, relaxed.flagged)
        cache[kind] = out
        return out

    return {SelectorKind(k): get(SelectorKind(k)) for k in kinds}
