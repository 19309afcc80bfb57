"""Quick self-check: a small randomized property suite runnable from the CLI."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import qp
from .channel import SystemConfig, build_mai_signature, draw_realization
from .selectors import SelectorKind, run_selectors
from .sinr import build_sinr_problem, exact_sinr


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _instances(n, K=5, L=10, M=3, ebn0_db=20.0, seed=2024):
    cfg = SystemConfig(K=K, L=L, M=M, N_c=L + 5, energies=(1.0,) * K, sigma_n2=10 ** (-ebn0_db / 10), seed=seed)
    for t in range(n):
        real = draw_realization(cfg, t)
        yield cfg, build_mai_signature(cfg, real), real.alphas[0]


def check_exhaustive(n=30) -> Check:
    bad = 0
    for cfg, sig, a1 in _instances(n):
        out = run_selectors([SelectorKind.EXHAUSTIVE], sig, cfg.E1, cfg.sigma_n2, a1, cfg.M)[SelectorKind.EXHAUSTIVE]
        best = max(exact_sinr(list(s), sig, cfg.E1, cfg.sigma_n2, a1) for s in itertools.combinations(range(cfg.L), cfg.M))
        bad += abs(out.exact_sinr - best) > 1e-10 * best
    return Check("exhaustive matches enumeration", bad == 0, f"{bad}/{n} mismatches")


def check_dominance(n=60) -> Check:
    kinds = [SelectorKind.CONVENTIONAL, SelectorKind.EXHAUSTIVE, SelectorKind.HYBRID_SPHERE, SelectorKind.HYBRID_HYPERCUBE]
    bad = 0
    for cfg, sig, a1 in _instances(n, L=12, M=4):
        o = run_selectors(kinds, sig, cfg.E1, cfg.sigma_n2, a1, cfg.M)
        ex, cv = o[SelectorKind.EXHAUSTIVE].exact_sinr, o[SelectorKind.CONVENTIONAL].exact_sinr
        for h in kinds[2:]:
            v = o[h].exact_sinr
            bad += not (ex >= v * (1 - 1e-12) and v >= cv * (1 - 1e-12))
    return Check("exhaustive >= hybrid >= conventional", bad == 0, f"{bad} violations")


def check_solvers(n=40) -> Check:
    rng = np.random.default_rng(7)
    worst_kkt, worst_gap = 0.0, 0.0
    for _ in range(n):
        L = int(rng.integers(4, 20))
        A = rng.standard_normal((L, L))
        P = A @ A.T / L + 0.1 * np.eye(L)
        q = rng.uniform(0.1, 2.0, L)
        M = int(rng.integers(1, L))
        for kind in qp.ConstraintKind:
            spec = qp.QpSpec(P, q, M, kind)
            p = qp.solve(spec)
            d = qp.solve_dual(spec)
            worst_kkt = max(worst_kkt, p.kkt.max() if p.converged else np.inf)
            worst_gap = max(worst_gap, abs(p.objective - d.dual_objective) / (1 + abs(p.objective)))
    ok = worst_kkt <= 1e-8 and worst_gap <= 1e-5
    return Check("primal KKT and dual gap", ok, f"max KKT {worst_kkt:.1e}, max rel gap {worst_gap:.1e}")


def check_k1_closed_form() -> Check:
    cfg = SystemConfig(K=1, L=8, M=3, N_c=12, energies=(1.0,), sigma_n2=0.1, seed=5)
    real = draw_realization(cfg, 0)
    sig = build_mai_signature(cfg, real)
    a1 = real.alphas[0]
    prob = build_sinr_problem(sig, cfg.E1, cfg.sigma_n2, a1, cfg.M)
    out = run_selectors([SelectorKind.CONVENTIONAL], sig, cfg.E1, cfg.sigma_n2, a1, cfg.M, prob=prob)
    expect = np.sort(a1**2)[-3:].sum() / cfg.sigma_n2
    got = out[SelectorKind.CONVENTIONAL].exact_sinr
    return Check("single-user closed form", abs(got - expect) <= 1e-12 * expect, f"{got:.12g} vs {expect:.12g}")


def run_all() -> list[Check]:
    return [check_k1_closed_form(), check_exhaustive(), check_dominance(), check_solvers()]
