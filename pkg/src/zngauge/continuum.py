"""Critical-line regression m_c(t) and the large-n continuum extrapolation.

The critical mass of each Z_n model follows m_c(t) = m0 + alpha*sqrt(t)
+ beta*t with the analytic t = 0 intercept m0 = -pi/n (odd n) or 0 (even n).
The sqrt(t) coefficients scale as alpha_n ~ b + d/sqrt(n) with b compatible
with zero, and the U(1) critical mass of the continuum theory follows as
m_c = d/sqrt(2*pi) ~ +-0.33 (sign set by the parity family / charge sector).

Weighted least squares throughout; with the uniform sigma = 0.025 the
appendix-table fits reduce to ordinary least squares but the machinery
generalizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from zngauge.validation import as_xy

__all__ = [
    "CriticalLineFit",
    "FitResult",
    "LargeNExtrapolation",
    "analytic_t0_mass",
    "extrapolate_large_n",
    "fit_critical_line",
]


@dataclass
class FitResult:
    """Weighted-least-squares output with uncertainties."""

    coefficients: dict
    errors: dict
    covariance: np.ndarray
    residuals: np.ndarray
    pulls: np.ndarray
    dof: int
    extra: dict = None

    def __getitem__(self, name: str) -> float:
        return self.coefficients[name]

    def error(self, name: str) -> float:
        return self.errors[name]


def _wls(A: np.ndarray, y: np.ndarray, sigma: np.ndarray, names: list) -> FitResult:
    w = 1.0 / sigma
    Aw = A * w[:, None]
    yw = y * w
    gram = Aw.T @ Aw
    if np.linalg.cond(gram) > 1e12:
        raise ValueError("rank-deficient design matrix (degenerate abscissae?)")
    cov = np.linalg.inv(gram)
    coef = cov @ (Aw.T @ yw)
    resid = y - A @ coef
    pulls = resid / sigma
    dof = len(y) - len(names)
    if dof < 1:
        raise ValueError(f"need residual degrees of freedom >= 1, got {dof}")
    return FitResult(
        coefficients=dict(zip(names, map(float, coef))),
        errors=dict(zip(names, map(float, np.sqrt(np.diag(cov))))),
        covariance=cov,
        residuals=resid,
        pulls=pulls,
        dof=dof,
    )


class CriticalLineFit(BaseEstimator):
    """WLS of m_c(t) in the basis {1, sqrt(t), t}.

    ``fit`` expects rows (t, m_c, sigma); fitted attributes are m0_, alpha_,
    beta_ with matching *_err_.
    """

    def __init__(self, fix_m0: float | None = None):
        self.fix_m0 = fix_m0

    def fit(self, X, y=None) -> "CriticalLineFit":
        pts = as_xy(X, 3, "critical-line data")
        if pts.shape[0] < 4 and self.fix_m0 is None:
            raise ValueError(f"need >= 4 (t, m_c, sigma) points, got {pts.shape[0]}")
        t, mc, sigma = pts[:, 0], pts[:, 1], pts[:, 2]
        if np.any(sigma <= 0):
            raise ValueError("every point needs sigma > 0")
        if self.fix_m0 is None:
            A = np.column_stack([np.ones_like(t), np.sqrt(t), t])
            res = _wls(A, mc, sigma, ["m0", "alpha", "beta"])
        else:
            A = np.column_stack([np.sqrt(t), t])
            res = _wls(A, mc - self.fix_m0, sigma, ["alpha", "beta"])
            res.coefficients["m0"] = float(self.fix_m0)
            res.errors["m0"] = 0.0
        self.result_ = res
        self.m0_, self.alpha_, self.beta_ = (res["m0"], res["alpha"], res["beta"])
        self.m0_err_ = res.error("m0")
        self.alpha_err_ = res.error("alpha")
        self.beta_err_ = res.error("beta")
        return self


def fit_critical_line(points, fix_m0: float | None = None) -> FitResult:
    """m_c(t) = m0 + alpha*sqrt(t) + beta*t from (t, m_c, sigma) rows."""
    return CriticalLineFit(fix_m0=fix_m0).fit(points).result_


class LargeNExtrapolation(BaseEstimator):
    """WLS of alpha_n against 1/sqrt(n) within one parity family.

    ``fit`` expects rows (n, alpha, sigma) of matching parity; fitted
    attributes are b_, d_ and the continuum critical mass mc_ = d/sqrt(2*pi).
    With ``fix_b=0.0`` the offset is pinned instead of fitted.
    """

    def __init__(self, parity: str = "odd", fix_b: float | None = None):
        self.parity = parity
        self.fix_b = fix_b

    def fit(self, X, y=None) -> "LargeNExtrapolation":
        pts = as_xy(X, 3, "alpha_n data")
        if self.parity not in ("odd", "even"):
            raise ValueError(f"parity must be 'odd' or 'even', got {self.parity!r}")
        want = 1 if self.parity == "odd" else 0
        ns = pts[:, 0]
        if np.any(ns.astype(int) % 2 != want):
            raise ValueError(f"mixed-parity input for a {self.parity}-n extrapolation: n={ns}")
        if pts.shape[0] < 3:
            raise ValueError(f"need >= 3 values of matching parity, got {pts.shape[0]}")
        alpha, sigma = pts[:, 1], pts[:, 2]
        x = 1.0 / np.sqrt(ns)
        if self.fix_b is None:
            A = np.column_stack([np.ones_like(x), x])
            res = _wls(A, alpha, sigma, ["b", "d"])
        else:
            A = x[:, None]
            res = _wls(A, alpha - self.fix_b, sigma, ["d"])
            res.coefficients["b"] = float(self.fix_b)
            res.errors["b"] = 0.0
        res.extra = {"continuum_mc": res["d"] / np.sqrt(2 * np.pi),
                     "continuum_mc_err": res.error("d") / np.sqrt(2 * np.pi)}
        self.result_ = res
        self.b_, self.d_ = res["b"], res["d"]
        self.b_err_, self.d_err_ = res.error("b"), res.error("d")
        self.mc_ = res.extra["continuum_mc"]
        self.mc_err_ = res.extra["continuum_mc_err"]
        return self


def extrapolate_large_n(alphas, parity: str, fix_b: float | None = None) -> FitResult:
    """alpha_n ~ b + d/sqrt(n) fit; result.extra carries m_c = d/sqrt(2*pi)."""
    return LargeNExtrapolation(parity=parity, fix_b=fix_b).fit(alphas).result_


def analytic_t0_mass(n: int) -> float:
    """Exact t = 0 first-order crossing: -pi/n for odd n, 0 for even n."""
    if int(n) != n or n < 2:
        raise ValueError(f"cyclic group order must be an integer >= 2, got {n!r}")
    return -np.pi / n if n % 2 else 0.0


# reference regression targets (fit parameters per n with uncertainties)
REFERENCE_CRITICAL_LINE = {
    2: {"m0": (0.004, 0.001), "alpha": (8e-6, 5e-6), "beta": (0.0149, 0.0003)},
    3: {"m0": (-1.0472, 0.0001), "alpha": (-0.603, 0.001), "beta": (-0.02, 0.01)},
    4: {"m0": (-3e-7, 1e-7), "alpha": (0.626, 0.005), "beta": (0.0290, 0.0006)},
    5: {"m0": (-0.628, 0.001), "alpha": (-0.494, 0.004), "beta": (-0.015, 0.001)},
    6: {"m0": (-7.2e-6, 0.1e-6), "alpha": (0.543, 0.005), "beta": (0.026, 0.001)},
    7: {"m0": (-0.448, 0.001), "alpha": (-0.435, 0.003), "beta": (0.004, 0.001)},
    8: {"m0": (1.8e-7, 0.1e-7), "alpha": (0.503, 0.004), "beta": (0.022, 0.001)},
}

REFERENCE_LARGE_N = {
    "odd": {"d": (-0.83, 0.10)},
    "even": {"d": (+0.84, 0.17)},
}
