"""Solvers for the sphere and hypercube relaxations of cardinality-constrained selection.

Both relaxations minimize ``x^T P x - q^T x`` subject to ``1^T x = M`` with
either ``(2x - 1)^T (2x - 1) <= L`` (sphere) or ``0 <= x <= 1`` (hypercube).
Primal problems go through a log-barrier interior-point method with the
equality constraint eliminated; the dual problems are maximized by projected
gradient ascent and the primal point is recovered from the multipliers.

Every solve first rescales the problem so that ``max|q| = 1``; KKT residuals
and stopping tolerances refer to that scaled problem, while objective values
and multipliers are reported in the caller's units.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg


class ConstraintKind(str, enum.Enum):
    SPHERE = "sphere"
    HYPERCUBE = "hypercube"


class SolverStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class QpSpec:
    P_scaled: np.ndarray
    q: np.ndarray
    M: int
    kind: ConstraintKind

    def __post_init__(self):
        P = np.asarray(self.P_scaled, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if P.ndim != 2 or P.shape != (q.size, q.size):
            raise ValueError(f"P_scaled must be {q.size}x{q.size}, got {P.shape}")
        if not np.allclose(P, P.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(P).max(initial=0.0))):
            raise ValueError("P_scaled must be symmetric")
        if not 0 <= self.M <= q.size:
            raise ValueError(f"M must lie in [0, L], got M={self.M}, L={q.size}")
        object.__setattr__(self, "P_scaled", 0.5 * (P + P.T))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "kind", ConstraintKind(self.kind))

    @property
    def L(self) -> int:
        return self.q.size

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.P_scaled @ x - self.q @ x)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self.P_scaled @ np.asarray(x, dtype=float) - self.q

    def constraint_violation(self, x) -> float:
        """Largest violation of the equality and the relaxation's inequality."""
        x = np.asarray(x, dtype=float)
        eq = abs(x.sum() - self.M)
        if self.kind is ConstraintKind.SPHERE:
            v = 2.0 * x - 1.0
            ineq = max(v @ v - self.L, 0.0)
        else:
            ineq = max(float(np.max(-x, initial=0.0)), float(np.max(x - 1.0, initial=0.0)), 0.0)
        return max(eq, ineq)


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    primal: float
    complementarity: float

    def max(self) -> float:
        return max(self.stationarity, self.primal, self.complementarity)


@dataclass(frozen=True, eq=False)
class SolverResult:
    x_star: np.ndarray
    objective: float
    kkt: KktResiduals
    iterations: int
    status: SolverStatus
    lam: float = 0.0
    # sphere: scalar multiplier; hypercube: multipliers of x <= 1
    nu: object = 0.0
    # hypercube only: multipliers of x >= 0
    mu: Optional[np.ndarray] = None
    outer_iterations: int = 0

    @property
    def converged(self) -> bool:
        return self.status is SolverStatus.CONVERGED


@dataclass(frozen=True, eq=False)
class DualResult:
    x_star: np.ndarray
    dual_objective: float
    lam: float
    nu: object
    mu: Optional[np.ndarray]
    gap_bound: float
    iterations: int
    status: SolverStatus

    @property
    def converged(self) -> bool:
        return self.status is SolverStatus.CONVERGED


@dataclass(frozen=True)
class BarrierSettings:
    t0: float = 1.0
    mu: float = 10.0
    newton_tol: float = 1e-9
    kkt_tol: float = 1e-8
    # bound on the suboptimality m / t of the central point, scaled problem
    gap_tol: float = 1e-11
    max_outer: int = 60
    max_newton: int = 200
    alpha: float = 0.01
    beta: float = 0.5


@dataclass(frozen=True)
class DualSettings:
    max_iter: int = 10_000
    gap_tol: float = 1e-7
    feas_tol: float = 1e-9
    alpha: float = 0.01


def _prescale(spec: QpSpec) -> float:
    qmax = float(np.abs(spec.q).max(initial=0.0))
    return 1.0 / qmax if qmax > 0 else 1.0


def _nullspace_basis(L: int) -> np.ndarray:
    """Orthonormal basis of {y : 1^T y = 0}, shape (L, L - 1)."""
    Q, _ = np.linalg.qr(np.ones((L, 1)), mode="complete")
    return Q[:, 1:]


def _degenerate(spec: QpSpec) -> Optional[np.ndarray]:
    if spec.M == spec.L:
        return np.ones(spec.L)
    if spec.M == 0:
        return np.zeros(spec.L)
    return None


def _degenerate_result(spec: QpSpec, x: np.ndarray) -> SolverResult:
    kkt = KktResiduals(0.0, spec.constraint_violation(x), 0.0)
    return SolverResult(x, spec.objective(x), kkt, 0, SolverStatus.CONVERGED)


class _Barrier:
    """Log barrier of one relaxation on the scaled problem.

    Constraint slacks are carried alongside x and updated from the step
    itself: recomputing 1 - x or L - |2x - 1|^2 near an active constraint
    would cancel away the digits the multipliers depend on.
    """

    def __init__(self, kind: ConstraintKind, L: int):
        self.kind = kind
        self.L = L

    def slacks(self, x):
        if self.kind is ConstraintKind.HYPERCUBE:
            return x.copy(), 1.0 - x
        v = 2.0 * x - 1.0
        return None, np.array([self.L - v @ v])

    def slack_change(self, x, dx, step):
        if self.kind is ConstraintKind.HYPERCUBE:
            r = step * dx
            return r, -r
        v = 2.0 * x - 1.0
        return None, np.array([-(4.0 * step * (v @ dx) + 4.0 * step**2 * (dx @ dx))])

    @staticmethod
    def feasible(lo, up) -> bool:
        return bool(np.all(up > 0) and (lo is None or np.all(lo > 0)))

    def grad_hess(self, x, lo, up):
        if self.kind is ConstraintKind.HYPERCUBE:
            g = -1.0 / lo + 1.0 / up
            return g, np.diag(1.0 / lo**2 + 1.0 / up**2)
        v = 2.0 * x - 1.0
        s = up[0]
        g = 4.0 * v / s
        H = (8.0 / s) * np.eye(self.L) + (16.0 / s**2) * np.outer(v, v)
        return g, H

    @staticmethod
    def increase(lo, up, dlo, dup) -> float:
        """barrier(after) - barrier(before) from the slack changes, without cancellation."""
        inc = -float(np.sum(np.log1p(dup / up)))
        if lo is not None:
            inc -= float(np.sum(np.log1p(dlo / lo)))
        return inc


def _kkt(kind, P, q, M, x, lo, up, t):
    """Barrier multipliers and KKT residuals at a central point."""
    grad = 2.0 * P @ x - q
    if kind is ConstraintKind.HYPERCUBE:
        mu = 1.0 / (t * lo)
        nu = 1.0 / (t * up)
        r = grad - mu + nu
        comp = max(float(np.max(mu * lo)), float(np.max(nu * up)))
        primal = max(abs(x.sum() - M), float(np.max(-lo, initial=0)), float(np.max(-up, initial=0)))
    else:
        v = 2.0 * x - 1.0
        s = float(up[0])
        nu = 1.0 / (t * s)
        mu = None
        r = grad + 4.0 * nu * v
        comp = abs(nu * s)
        primal = max(abs(x.sum() - M), max(-s, 0.0))
    lam = -float(r.mean())
    stat = float(np.max(np.abs(r + lam)))
    return lam, mu, nu, KktResiduals(stat, primal, comp)


def _barrier_solve(spec: QpSpec, settings: BarrierSettings) -> SolverResult:
    x_deg = _degenerate(spec)
    if x_deg is not None:
        return _degenerate_result(spec, x_deg)

    L, M = spec.L, spec.M
    c = _prescale(spec)
    P, q = c * spec.P_scaled, c * spec.q
    Z = _nullspace_basis(L)
    barrier = _Barrier(spec.kind, L)
    x = np.full(L, M / L)
    lo, up = barrier.slacks(x)
    t = settings.t0
    newton_steps = 0
    status = SolverStatus.MAX_ITER

    for outer in range(1, settings.max_outer + 1):
        prev_dec2 = np.inf
        for _ in range(settings.max_newton):
            bg, bH = barrier.grad_hess(x, lo, up)
            fg = 2.0 * P @ x - q
            g = t * fg + bg
            gy = Z.T @ g
            Hy = Z.T @ (2.0 * t * P + bH) @ Z
            try:
                dy = -linalg.cho_solve(linalg.cho_factor(Hy, lower=True), gy)
            except linalg.LinAlgError:
                dy = -np.linalg.lstsq(Hy, gy, rcond=None)[0]
            dec2 = float(-gy @ dy)
            # the decrement alone does not bound the gradient once the barrier
            # Hessian blows up near active constraints; also require a small
            # scaled stationarity, and stop if rounding stalls the iteration
            centered = dec2 / 2.0 <= settings.newton_tol
            if centered and (np.max(np.abs(Z @ gy)) / t <= 0.1 * settings.kkt_tol or dec2 >= prev_dec2):
                break
            prev_dec2 = dec2 if centered else np.inf
            dx = Z @ dy
            slope = float(g @ dx)
            fslope = float(fg @ dx)
            dPd = float(dx @ P @ dx)
            # inside the quadratic convergence region a full step is taken
            pure = np.sqrt(max(dec2, 0.0)) < 0.25
            step = 1.0
            while True:
                dlo, dup = barrier.slack_change(x, dx, step)
                if barrier.feasible(None if lo is None else lo + dlo, up + dup):
                    if pure:
                        break
                    gain = t * (step * fslope + step**2 * dPd) + barrier.increase(lo, up, dlo, dup)
                    if gain <= settings.alpha * step * slope or step < 1e-14:
                        break
                step *= settings.beta
            x = x + step * dx
            up = up + dup
            if lo is not None:
                lo = x.copy()
            newton_steps += 1
        lam, mu, nu, kkt = _kkt(spec.kind, P, q, M, x, lo, up, t)
        n_ineq = 2 * L if spec.kind is ConstraintKind.HYPERCUBE else 1
        if kkt.max() <= settings.kkt_tol and n_ineq / t <= settings.gap_tol:
            status = SolverStatus.CONVERGED
            break
        t *= settings.mu

    # multipliers back in the caller's units
    return SolverResult(
        x_star=x,
        objective=spec.objective(x),
        kkt=kkt,
        iterations=newton_steps,
        status=status,
        lam=lam / c,
        nu=nu / c,
        mu=None if mu is None else mu / c,
        outer_iterations=outer,
    )


def solve_hypercube(spec: QpSpec, settings: BarrierSettings = BarrierSettings()) -> SolverResult:
    """Minimize x^T P x - q^T x over {1^T x = M, 0 <= x <= 1}."""
    if spec.kind is not ConstraintKind.HYPERCUBE:
        raise ValueError(f"expected a hypercube spec, got {spec.kind.value}")
    return _barrier_solve(spec, settings)


def solve_sphere(spec: QpSpec, settings: BarrierSettings = BarrierSettings()) -> SolverResult:
    """Minimize x^T P x - q^T x over {1^T x = M, |2x - 1|^2 <= L}."""
    if spec.kind is not ConstraintKind.SPHERE:
        raise ValueError(f"expected a sphere spec, got {spec.kind.value}")
    return _barrier_solve(spec, settings)


def solve(spec: QpSpec, settings: BarrierSettings = BarrierSettings()) -> SolverResult:
    return _barrier_solve(spec, settings)


# --- duals -----------------------------------------------------------------


def _degenerate_dual(spec: QpSpec, x: np.ndarray) -> DualResult:
    f = spec.objective(x)
    mu = np.zeros(spec.L) if spec.kind is ConstraintKind.HYPERCUBE else None
    nu = np.zeros(spec.L) if spec.kind is ConstraintKind.HYPERCUBE else 0.0
    return DualResult(x, f, 0.0, nu, mu, 0.0, 0, SolverStatus.CONVERGED)


class _SphereDual:
    """Dual of the sphere relaxation with the equality multiplier maximized out.

    With H = P + 4 nu I and z = q + (lam + 4 nu) 1 the dual function is
    g = -z^T H^{-1} z / 4 + M lam, and the Lagrangian minimizer is H^{-1} z / 2.
    """

    def __init__(self, P, q, M):
        self.e, self.Q = np.linalg.eigh(P)
        self.u = self.Q.T @ q
        self.w = self.Q.T @ np.ones(q.size)
        self.M = M

    def at(self, nu):
        d = self.e + 4.0 * nu
        wd = self.w / d
        beta = (2.0 * self.M - wd @ self.u) / (wd @ self.w)
        zt = self.u + beta * self.w
        xt = zt / (2.0 * d)
        lam = beta - 4.0 * nu
        g = -0.25 * float(zt @ (zt / d)) + self.M * lam
        x = self.Q @ xt
        # d g / d nu = 4 (|x|^2 - 1^T x), the sphere constraint value
        return g, 4.0 * float(xt @ xt - self.M), lam, x


def solve_sphere_dual(spec: QpSpec, settings: DualSettings = DualSettings()) -> DualResult:
    """Maximize the two-variable sphere dual; recover x* from the optimal multipliers.

    The equality multiplier has a closed-form maximizer for each nu, so the
    ascent runs on nu alone, projected onto nu >= 0 after every step.
    """
    if spec.kind is not ConstraintKind.SPHERE:
        raise ValueError(f"expected a sphere spec, got {spec.kind.value}")
    x_deg = _degenerate(spec)
    if x_deg is not None:
        return _degenerate_dual(spec, x_deg)

    c = _prescale(spec)
    P, q = c * spec.P_scaled, c * spec.q
    if np.linalg.eigvalsh(P)[0] <= 0:
        raise ValueError("sphere dual needs a positive definite P_scaled")
    dual = _SphereDual(P, q, spec.M)

    nu = 0.0
    g, dg, lam, x = dual.at(nu)
    step = 1.0 / max(abs(dg), 1.0)
    status = SolverStatus.MAX_ITER
    it = 0
    for it in range(1, settings.max_iter + 1):
        gap = nu * abs(dg)
        if (gap <= settings.gap_tol * (1.0 + abs(g)) and dg <= settings.feas_tol) or (nu == 0.0 and dg <= 0.0):
            status = SolverStatus.CONVERGED
            break
        while True:
            nu_new = max(0.0, nu + step * dg)
            g_new, dg_new, lam_new, x_new = dual.at(nu_new)
            # g is only good to rounding level; that must not stall the search
            if g_new >= g + settings.alpha * dg * (nu_new - nu) - 1e-12 * (1.0 + abs(g)) or step < 1e-300:
                break
            step *= 0.5
        # secant (Barzilai-Borwein) step for the next iteration
        s, y = nu_new - nu, dg_new - dg
        if s * y < 0.0:
            step = -s / y
        nu, g, dg, lam, x = nu_new, g_new, dg_new, lam_new, x_new

    return DualResult(
        x_star=x,
        dual_objective=g / c,
        lam=lam / c,
        nu=nu / c,
        mu=None,
        gap_bound=nu * abs(dg) / c,
        iterations=it,
        status=status,
    )


def project_capped_simplex(y, M: float) -> np.ndarray:
    """Euclidean projection onto {x : 1^T x = M, 0 <= x <= 1}.

    The projection is clip(y - tau, 0, 1) for the shift tau where the clipped
    sum equals M; that sum is piecewise linear in tau with breakpoints at y and
    y - 1, so tau is found by interpolating between bracketing breakpoints.
    """
    y = np.asarray(y, dtype=float)
    if not 0 <= M <= y.size:
        raise ValueError(f"M={M} outside [0, {y.size}]")
    taus = np.unique(np.concatenate([y, y - 1.0]))
    sums = np.clip(y[None, :] - taus[:, None], 0.0, 1.0).sum(axis=1)  # nonincreasing
    k = int(np.searchsorted(-sums, -M, side="left"))
    if k == 0:
        tau = taus[0]
    elif k == taus.size:
        tau = taus[-1]
    else:
        t0, t1, s0, s1 = taus[k - 1], taus[k], sums[k - 1], sums[k]
        tau = t0 if s0 == s1 else t0 + (s0 - M) * (t1 - t0) / (s0 - s1)
    return np.clip(y - tau, 0.0, 1.0)


class _HypercubeDual:
    """Hypercube dual over (mu, nu) >= 0 with the equality multiplier maximized out.

    v = q + mu - nu - lam 1, x = P^{-1} v / 2,
    g = -v^T P^{-1} v / 4 - M lam - 1^T nu.
    """

    def __init__(self, P, q, M):
        # the dual is built on P^{-1}; L is small so it is formed once
        self.Pi = linalg.cho_solve(linalg.cho_factor(P, lower=True), np.eye(q.size))
        self.Pi_q = self.Pi @ q
        self.Pi_1 = self.Pi.sum(axis=1)
        self.s11 = float(self.Pi_1.sum())
        self.q = q
        self.M = M

    def at(self, mu, nu):
        Pi_z = self.Pi_q + self.Pi @ (mu - nu)
        lam = (Pi_z.sum() - 2.0 * self.M) / self.s11
        x = 0.5 * (Pi_z - lam * self.Pi_1)
        v = self.q + mu - nu - lam
        g = -0.5 * float(v @ x) - self.M * lam - float(nu.sum())
        return g, x, lam


def solve_hypercube_dual(spec: QpSpec, settings: DualSettings = DualSettings()) -> DualResult:
    """Maximize the 2L+1 variable hypercube dual by accelerated projected gradient.

    Steps start at 1/Lipschitz and back off by halving when the sufficient
    increase test fails. Convergence is certified by the gap between the dual
    value and the primal objective at the projection of the recovered x onto
    the feasible set; that projected point is returned as ``x_star``.
    """
    if spec.kind is not ConstraintKind.HYPERCUBE:
        raise ValueError(f"expected a hypercube spec, got {spec.kind.value}")
    x_deg = _degenerate(spec)
    if x_deg is not None:
        return _degenerate_dual(spec, x_deg)

    L, M = spec.L, spec.M
    c = _prescale(spec)
    P, q = c * spec.P_scaled, c * spec.q
    e_min = float(np.linalg.eigvalsh(P)[0])
    if e_min <= 0:
        raise ValueError("hypercube dual needs a positive definite P_scaled")
    dual = _HypercubeDual(P, q, M)

    def primal(x):
        return float(x @ P @ x - q @ x)

    step0 = e_min  # 1 / Lipschitz constant of the reduced dual gradient
    mu = np.zeros(L)
    nu = np.zeros(L)
    g, x, lam = dual.at(mu, nu)
    ymu, ynu, yg, yx = mu, nu, g, x
    theta = 1.0
    status = SolverStatus.MAX_ITER
    gap = np.inf
    evals = 0
    it = 0
    for it in range(1, settings.max_iter + 1):
        if it % 10 == 1:
            gap = primal(project_capped_simplex(x, M)) - g
            if gap <= settings.gap_tol * (1.0 + abs(g)):
                status = SolverStatus.CONVERGED
                break
        # gradient at the extrapolated point: d/dmu = -x, d/dnu = x - 1
        step = step0
        for _ in range(60):
            evals += 1
            mu_new = np.maximum(ymu - step * yx, 0.0)
            nu_new = np.maximum(ynu + step * (yx - 1.0), 0.0)
            g_new, x_new, lam_new = dual.at(mu_new, nu_new)
            dmu, dnu = mu_new - ymu, nu_new - ynu
            lin = float(-yx @ dmu + (yx - 1.0) @ dnu)
            quad = (dmu @ dmu + dnu @ dnu) / (2.0 * step)
            if g_new >= yg + lin - quad - 1e-12 * (1.0 + abs(yg)):
                break
            step *= 0.5
        else:
            # no step passes even the rounding-tolerant test: P is too
            # ill-conditioned for progress at working precision
            break
        if evals > 4 * settings.max_iter:
            break
        if g_new < g and theta > 1.0:
            # adaptive restart: drop the momentum and retake a plain step
            theta = 1.0
            ymu, ynu = mu, nu
            yg, yx = g, x
            continue
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta**2))
        w = (theta - 1.0) / theta_new
        ymu = np.maximum(mu_new + w * (mu_new - mu), 0.0)
        ynu = np.maximum(nu_new + w * (nu_new - nu), 0.0)
        yg, yx, _ = dual.at(ymu, ynu)
        mu, nu, g, x, lam, theta = mu_new, nu_new, g_new, x_new, lam_new, theta_new

    return DualResult(
        x_star=project_capped_simplex(x, M),
        dual_objective=g / c,
        lam=lam / c,
        nu=nu / c,
        mu=mu / c,
        gap_bound=gap / c,
        iterations=it,
        status=status,
    )


def solve_dual(spec: QpSpec, settings: DualSettings = DualSettings()) -> DualResult:
    if spec.kind is ConstraintKind.SPHERE:
        return solve_sphere_dual(spec, settings)
    return solve_hypercube_dual(spec, settings)
