"""Exact and Taylor-approximate SINR of an MMSE selective Rake.

Selections are given either as index collections (zero-based path indices) or
as length-L 0/1 indicator vectors. The exact SINR is evaluated on the M x M
system restricted to the selected paths; no explicit inverse is formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import linalg

from .channel import MaiSignature

RIDGE_EPS = 1e-10
_SOLVE_RTOL = 1e-10

Selection = Union[Sequence[int], np.ndarray]


class SolveAccuracyError(ArithmeticError):
    """The restricted linear solve left a residual above tolerance."""


def as_indices(selection: Selection) -> np.ndarray:
    """Sorted zero-based path indices.

    Boolean or floating arrays are read as 0/1 indicator vectors; integer
    sequences are read as index lists.
    """
    arr = np.asarray(selection)
    if arr.dtype == bool or np.issubdtype(arr.dtype, np.floating):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"indicator entries must be 0 or 1: {selection!r}")
        return np.flatnonzero(arr)
    idx = np.unique(arr.astype(int))
    if idx.size != arr.size:
        raise ValueError(f"selection has repeated indices: {selection!r}")
    return idx


def indicator(indices: Iterable[int], L: int) -> np.ndarray:
    """The 0/1 selection vector x = diag(X^T X)."""
    x = np.zeros(L)
    x[list(indices)] = 1.0
    return x


def selection_matrix(indices: Iterable[int], L: int) -> np.ndarray:
    """M x L matrix whose rows are unit vectors picking the selected paths in order."""
    idx = sorted(indices)
    X = np.zeros((len(idx), L))
    X[np.arange(len(idx)), idx] = 1.0
    return X


def _restricted(selection, sig: MaiSignature, sigma_n2: float, alpha1):
    alpha1 = np.asarray(alpha1, dtype=float)
    idx = as_indices(selection)
    if idx.size == 0:
        raise ValueError("selection must contain at least one path")
    B = sig.weighted[idx]
    R = B @ B.T + sigma_n2 * np.eye(idx.size)
    return idx, alpha1[idx], R


def _spd_solve(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    sol = linalg.cho_solve(linalg.cho_factor(R, lower=True), b)
    res = np.linalg.norm(R @ sol - b)
    if res > _SOLVE_RTOL * (np.linalg.norm(R, 1) * np.linalg.norm(sol) + np.linalg.norm(b)):
        raise SolveAccuracyError(f"restricted solve residual {res:.3e} exceeds tolerance")
    return sol


def mmse_weights(selection: Selection, sig: MaiSignature, sigma_n2: float, alpha1) -> np.ndarray:
    """MMSE combining weights R^{-1} X alpha1 for the selected fingers.

    R = X S_mai A^2 S_mai^T X^T + sigma_n2 I is the finger noise-plus-MAI
    correlation. Returned in ascending path order.
    """
    _, a_sel, R = _restricted(selection, sig, sigma_n2, alpha1)
    return _spd_solve(R, a_sel)


def exact_sinr(selection: Selection, sig: MaiSignature, E1: float, sigma_n2: float, alpha1) -> float:
    """Output SINR of the MMSE combiner over the selected fingers (linear)."""
    _, a_sel, R = _restricted(selection, sig, sigma_n2, alpha1)
    return float(E1 * a_sel @ _spd_solve(R, a_sel))


def exact_sinr_many(subsets: np.ndarray, sig: MaiSignature, E1: float, sigma_n2: float, alpha1) -> np.ndarray:
    """Exact SINR for a batch of equal-size subsets, shape (n, M) of indices."""
    alpha1 = np.asarray(alpha1, dtype=float)
    subsets = np.asarray(subsets, dtype=int)
    a = alpha1[subsets]  # (n, M)
    B = sig.weighted[subsets]  # (n, M, K-1)
    R = B @ np.swapaxes(B, 1, 2)
    R += sigma_n2 * np.eye(subsets.shape[1])
    # a^T R^-1 a = |C^-1 a|^2 with R = C C^T
    C = np.linalg.cholesky(R)
    y = np.linalg.solve(C, a[..., None])
    return E1 * np.einsum("nij,nij->n", y, y)


def per_path_sinrs(sig: MaiSignature, E1: float, sigma_n2: float, alpha1) -> np.ndarray:
    """Single-finger SINR of each path: E1 a_l^2 / (MAI power on path l + sigma_n2)."""
    alpha1 = np.asarray(alpha1, dtype=float)
    mai_power = np.einsum("lk,lk->l", sig.weighted, sig.weighted)
    return E1 * alpha1**2 / (mai_power + sigma_n2)


@dataclass(frozen=True, eq=False)
class SinrProblem:
    """Quadratic model of the SINR: (E1/s2) * (q^T x - x^T P x / s2).

    ``P`` carries a small ridge ``ridge * I`` that keeps it positive definite;
    ``P_raw`` is the unregularized matrix used for SINR evaluation.
    """

    P: np.ndarray
    q: np.ndarray
    sigma_n2: float
    E1: float
    M: int
    ridge: float

    @property
    def L(self) -> int:
        return self.q.size

    @property
    def P_raw(self) -> np.ndarray:
        return self.P - self.ridge * np.eye(self.L)

    @property
    def P_scaled(self) -> np.ndarray:
        return self.P / self.sigma_n2


def build_sinr_problem(
    sig: MaiSignature, E1: float, sigma_n2: float, alpha1, M: int, ridge_eps: float = RIDGE_EPS
) -> SinrProblem:
    alpha1 = np.asarray(alpha1, dtype=float)
    L = alpha1.size
    DW = alpha1[:, None] * sig.weighted
    P = DW @ DW.T
    P = 0.5 * (P + P.T)
    q = alpha1**2
    scale = np.trace(P) / L
    if scale <= 0:
        # no MAI on any path; P/sigma_n2 lives on the scale of q
        scale = sigma_n2 * float(q.max(initial=0.0)) or 1.0
    ridge = ridge_eps * scale
    P = P + ridge * np.eye(L)
    for arr in (P, q):
        arr.setflags(write=False)
    return SinrProblem(P=P, q=q, sigma_n2=float(sigma_n2), E1=float(E1), M=int(M), ridge=float(ridge))


def approx_sinr(x, prob: SinrProblem) -> float:
    """First-order (Taylor) SINR of a selection; may go negative under strong MAI."""
    x = indicator(as_indices(x), prob.L)
    s2 = prob.sigma_n2
    return float(prob.E1 / s2 * (prob.q @ x - x @ prob.P_raw @ x / s2))
