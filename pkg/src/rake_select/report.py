"""Result files and single-instance diagnostics."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .channel import build_mai_signature, draw_realization
from .config import emit_config
from .montecarlo import AggregateResult, ExperimentPlan
from .qp import DualResult, SolverResult
from .selectors import RELAXED_KINDS, SelectorKind, run_selectors
from .sinr import RIDGE_EPS, build_sinr_problem, per_path_sinrs

CSV_HEADER = (
    "scenario",
    "sweep_param",
    "sweep_value",
    "selector",
    "mean_sinr_linear",
    "mean_sinr_db",
    "stderr_linear",
    "trials",
    "solver_failures",
)


def _num(x) -> str:
    return "" if x is None else format(x, ".12g")


def results_csv(result: AggregateResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    plan = result.plan
    for r in result.rows:
        w.writerow(
            [
                plan.scenario_name,
                plan.sweep_param or "none",
                _num(r.sweep_value),
                r.selector.value,
                _num(r.mean_linear),
                _num(r.mean_db),
                _num(r.stderr_linear),
                r.trials,
                r.solver_failures,
            ]
        )
    return buf.getvalue()


def config_hash(plan: ExperimentPlan) -> str:
    return hashlib.sha256(emit_config(plan).encode("utf-8")).hexdigest()


def manifest(plan: ExperimentPlan) -> dict:
    return {
        "tool": "rake-select",
        "version": __version__,
        "scenario": plan.scenario_name,
        "seed": plan.base.seed,
        "config_sha256": config_hash(plan),
        "ridge_eps": RIDGE_EPS,
        "trials": plan.trials,
        "sweep_param": plan.sweep_param,
        "sweep_values": list(plan.sweep_values),
        "selectors": [s.value for s in plan.selectors],
    }


PLOT_SCRIPT = '''\
"""Plot mean SINR per selector from results.csv (written by rake-select)."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = list(csv.DictReader(open(here / "results.csv", newline="")))
curves = defaultdict(list)
for r in rows:
    x = float(r["sweep_value"]) if r["sweep_value"] else 0.0
    curves[r["selector"]].append((x, float(r["mean_sinr_db"])))

param = rows[0]["sweep_param"] if rows else "none"
fig, ax = plt.subplots(figsize=(6, 4.5))
for name, pts in curves.items():
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
ax.set_xlabel({"ebn0_db": "Eb/N0 (dB)", "M": "number of fingers M"}.get(param, param))
ax.set_ylabel("average SINR (dB)")
ax.set_title(rows[0]["scenario"] if rows else "")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else str(here / "results.png")
fig.savefig(out, dpi=150)
print(out)
'''


def emit_results(result: AggregateResult, out_dir) -> dict:
    """Write results.csv, manifest.json, config.toml and plot_results.py."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "results.csv": results_csv(result),
        "manifest.json": json.dumps(manifest(result.plan), indent=2, sort_keys=True) + "\n",
        "config.toml": emit_config(result.plan),
        "plot_results.py": PLOT_SCRIPT,
    }
    paths = {}
    for name, text in files.items():
        path = out / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths[name] = path
    return paths


def _fmt_vec(v, fmt="{:.4g}") -> str:
    return "[" + ", ".join(fmt.format(x) for x in np.asarray(v).ravel()) + "]"


def solve_instance(
    plan: ExperimentPlan, trial_index: int = 0, sweep_index: int = 0, seed: Optional[int] = None
) -> tuple[str, dict]:
    """Run every configured selector plus both dual solvers on one realization.

    Returns the text report and the selector -> outcome map.
    """
    points = plan.points()
    cfg = plan.config_at(points[sweep_index])
    if seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed)
    real = draw_realization(cfg, trial_index)
    sig = build_mai_signature(cfg, real)
    alpha1 = real.alphas[0]
    prob = build_sinr_problem(sig, cfg.E1, cfg.sigma_n2, alpha1, cfg.M)
    kinds = list(plan.selectors)
    for k in RELAXED_KINDS:
        if k not in kinds:
            kinds.append(k)
    outcomes = run_selectors(kinds, sig, cfg.E1, cfg.sigma_n2, alpha1, cfg.M, prob=prob, budget=plan.exhaustive_budget)

    eig = np.linalg.eigvalsh(prob.P_scaled)
    lines = [
        f"scenario {plan.scenario_name}  seed {cfg.seed}  trial {trial_index}",
        f"K={cfg.K} L={cfg.L} M={cfg.M} N_c={cfg.N_c} sigma_n2={cfg.sigma_n2:.6g} Eb/N0={cfg.ebn0_db:.3f} dB",
        f"TH offsets {list(map(int, real.th_codes))}  polarities {list(map(int, real.polarities))}",
        "per-path SINR (dB): " + _fmt_vec(10 * np.log10(per_path_sinrs(sig, cfg.E1, cfg.sigma_n2, alpha1)), "{:.2f}"),
        f"P/sigma_n2: trace {np.trace(prob.P_scaled):.6g}  eig min {eig[0]:.3e} max {eig[-1]:.3e}  "
        f"rank {int(np.sum(eig > 1e3 * eig[0]))}  ridge {prob.ridge:.3e}",
        f"q: sum {prob.q.sum():.6g}  max {prob.q.max():.6g}",
        "",
        f"{'selector':<18} {'indices':<32} {'exact dB':>9} {'approx dB':>10} {'iters':>6} {'status':<10} detail",
    ]
    for kind, out in outcomes.items():
        approx_db = 10 * np.log10(out.approx_objective) if out.approx_objective > 0 else float("nan")
        iters, status, detail = "", "", ""
        res = out.solver
        if isinstance(res, SolverResult):
            iters, status = str(res.iterations), res.status.value
            kkt = res.kkt
            detail = f"kkt stat {kkt.stationarity:.2e} prim {kkt.primal:.2e} comp {kkt.complementarity:.2e}"
        elif isinstance(res, DualResult):
            iters, status = str(res.iterations), res.status.value
            detail = f"dual {res.dual_objective:.8g} gap bound {res.gap_bound:.2e}"
            base = SelectorKind.SPHERE if kind is SelectorKind.SPHERE_DUAL else SelectorKind.HYPERCUBE
            primal = outcomes.get(base)
            if primal is not None and isinstance(primal.solver, SolverResult):
                gap = primal.solver.objective - res.dual_objective
                detail += f" primal-dual gap {gap:.2e} ({abs(gap) / (1 + abs(primal.solver.objective)):.1e} rel)"
        if kind.relaxed_base is not None:
            detail = f"kept {'relaxed' if out.indices == outcomes[kind.relaxed_base].indices else 'conventional'}"
        lines.append(
            f"{kind.value:<18} {str(list(out.indices)):<32} {10 * np.log10(out.exact_sinr):>9.3f} "
            f"{approx_db:>10.3f} {iters:>6} {status:<10} {detail}"
        )
    return "\n".join(lines) + "\n", outcomes
