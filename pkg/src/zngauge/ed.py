"""Exact-diagonalization oracle: lowest eigenpairs of the sparse Hamiltonian.

Lanczos with full reorthogonalization against the whole Krylov basis; the
next eigenpair of a (near-)degenerate multiplet is obtained by restarting
with the converged eigenvectors projected out, which is robust at the
dimensions this package meets (<= a few 10^6).  Dense solve below a size
threshold.  A fixed start-vector seed makes every run reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from zngauge.hamiltonian import SparseOperator

__all__ = ["SpectrumResult", "lowest_eigenpairs"]

DEFAULT_TOL = 1e-10
DEGENERACY_TOL = 1e-8
DENSE_THRESHOLD = 4096


@dataclass
class SpectrumResult:
    """Converged low-energy eigenpairs with convergence metadata."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (dim, k), column i pairs with eigenvalues[i]
    residual_norms: np.ndarray
    iterations: int
    converged: np.ndarray
    degenerate: np.ndarray = field(default=None)
    method: str = "lanczos"
    seed: int = 0

    def __post_init__(self) -> None:
        order = np.argsort(self.eigenvalues, kind="stable")
        self.eigenvalues = np.asarray(self.eigenvalues)[order]
        self.eigenvectors = np.asarray(self.eigenvectors)[:, order]
        self.residual_norms = np.asarray(self.residual_norms)[order]
        self.converged = np.asarray(self.converged)[order]
        if self.degenerate is None:
            self.degenerate = _degeneracy_flags(self.eigenvalues, DEGENERACY_TOL)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def gap(self, i: int = 1) -> float:
        return float(self.eigenvalues[i] - self.eigenvalues[0])


def _degeneracy_flags(eigenvalues: np.ndarray, tol: float) -> np.ndarray:
    k = len(eigenvalues)
    flags = np.zeros(k, dtype=bool)
    for i in range(k - 1):
        if abs(eigenvalues[i + 1] - eigenvalues[i]) < tol:
            flags[i] = flags[i + 1] = True
    return flags


def _as_matrix(H):
    if isinstance(H, SparseOperator):
        return H.matrix
    if sp.issparse(H):
        return H.tocsr()
    return np.asarray(H)


def _lanczos_lowest(matvec, dim, rng, tol, max_iter, ortho=()):
    """Lowest eigenpair of the operator restricted orthogonal to ``ortho``."""
    Q = np.array(ortho).T if len(ortho) else None  # (dim, q)

    def project(v):
        if Q is not None:
            v = v - Q @ (Q.T @ v)
        return v

    v = project(rng.standard_normal(dim))
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise RuntimeError("start vector annihilated by deflation projector")
    v /= nrm
    V = [v]
    alphas, betas = [], []
    theta, y = None, None
    for it in range(1, max_iter + 1):
        w = project(matvec(V[-1]))
        if betas:
            w = w - betas[-1] * V[-2]
        a = float(V[-1] @ w)
        alphas.append(a)
        w = w - a * V[-1]
        # full reorthogonalization, two passes
        Vm = np.array(V).T
        w = w - Vm @ (Vm.T @ w)
        w = w - Vm @ (Vm.T @ w)
        w = project(w)
        b = float(np.linalg.norm(w))
        evals, evecs = sla.eigh_tridiagonal(np.array(alphas), np.array(betas))
        theta, y = evals[0], evecs[:, 0]
        if b * abs(y[-1]) <= 0.1 * tol or b <= 1e-14 or it >= min(dim, max_iter):
            x = Vm @ y
            x /= np.linalg.norm(x)
            resid = float(np.linalg.norm(project(matvec(x)) - theta * x))
            if resid <= tol or b <= 1e-14 or it >= min(dim, max_iter):
                return theta, x, resid, it
        betas.append(b)
        V.append(w / b)
    raise AssertionError("unreachable")


def lowest_eigenpairs(H, k: int, tol: float = DEFAULT_TOL, seed: int = 0,
                      max_iter: int | None = None,
                      degeneracy_tol: float = DEGENERACY_TOL,
                      dense_threshold: int = DENSE_THRESHOLD) -> SpectrumResult:
    """k lowest eigenpairs of a real symmetric operator.

    Dimensions <= ``dense_threshold`` go through a dense solver; otherwise
    Lanczos with full reorthogonalization, one eigenpair at a time with the
    previously converged vectors deflated (resolves degenerate multiplets).
    Non-convergence is reported in the result, never silently dropped.
    """
    if k < 1:
        raise ValueError(f"need k >= 1 eigenpairs, got {k}")
    if tol <= 0:
        raise ValueError(f"residual tolerance must be positive, got {tol}")
    A = _as_matrix(H)
    dim = A.shape[0]
    if k > dim:
        raise ValueError(f"requested k={k} eigenpairs of a dimension-{dim} operator")

    if dim <= dense_threshold:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        evals, evecs = sla.eigh(dense)
        evals, evecs = evals[:k], evecs[:, :k]
        resid = np.array([np.linalg.norm(dense @ evecs[:, i] - evals[i] * evecs[:, i])
                          for i in range(k)])
        return SpectrumResult(
            eigenvalues=evals, eigenvectors=evecs, residual_norms=resid,
            iterations=0, converged=np.ones(k, dtype=bool),
            degenerate=_degeneracy_flags(evals, degeneracy_tol),
            method="dense", seed=seed,
        )

    if max_iter is None:
        max_iter = min(dim, max(400, 60 * k))
    rng = np.random.default_rng(seed)
    matvec = (lambda v: A @ v)
    found_vals, found_vecs, resids, total_it = [], [], [], 0
    for _ in range(k):
        theta, x, resid, it = _lanczos_lowest(matvec, dim, rng, tol, max_iter,
                                              ortho=found_vecs)
        found_vals.append(theta)
        found_vecs.append(x)
        resids.append(resid)
        total_it += it
    evals = np.array(found_vals)
    evecs = np.array(found_vecs).T
    resids = np.array(resids)
    return SpectrumResult(
        eigenvalues=evals, eigenvectors=evecs, residual_norms=resids,
        iterations=total_it, converged=resids <= 10 * tol,
        degenerate=_degeneracy_flags(evals, degeneracy_tol),
        method="lanczos", seed=seed,
    )
