"""Measurements on ED eigenvectors and MPS states.

The order parameter is the chain-averaged electric field

    Sigma = (1/N) * sum_{links} <E_{x,x+1}>,

i.e. the sum over the N-1 internal links divided by N, in physical field
units sqrt(2*pi/n) (this normalization matches the displayed definition in
the source analysis; at the sizes used the difference from dividing by N-1
is negligible but the formula is followed literally).  Entanglement entropies
are Shannon entropies of the squared Schmidt spectrum in bits (log base 2),
the base the central-charge fit inherits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from zngauge.basis import GaugeBasis
from zngauge.hamiltonian import CELL_WEIGHT, ModelParams
from zngauge.mps import MpsState

__all__ = [
    "EdState",
    "ObservableSet",
    "entanglement_entropy",
    "entropy_profile",
    "gaps",
    "measure",
    "order_parameter",
]

NORM_TOL = 1e-8


@dataclass
class EdState:
    """An exact eigenvector over an ordered gauge basis."""

    vector: np.ndarray
    basis: GaugeBasis

    def __post_init__(self) -> None:
        if self.vector.shape != (len(self.basis),):
            raise ValueError("eigenvector length does not match the basis")


@dataclass
class ObservableSet:
    """One state's measured observables."""

    sigma: float
    sigma_tilde: float
    field_profile: np.ndarray      # physical <E> on the N-1 internal links
    density_profile: np.ndarray    # <n_x> on the N staggered sites
    entropy_profile: np.ndarray    # bits, site cuts 0..N
    delta: float | None = None
    gamma: float | None = None

    @property
    def mid_cut_entropy(self) -> float:
        return float(self.entropy_profile[len(self.entropy_profile) // 2])


def _check_normalized(norm2: float) -> None:
    if abs(norm2 - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized: <psi|psi> = {norm2!r}")


def _ed_diagonal_profiles(state: EdState, params: ModelParams):
    basis = state.basis
    w = state.vector**2
    _check_normalized(float(w.sum()))
    occ = basis.patterns.astype(np.int64)
    jumps = occ.copy()
    jumps[:, 1::2] -= 1
    labels = (basis.k0 + np.cumsum(jumps, axis=1)[:, :-1]) % params.n
    tilde = labels - (params.n - 1) / 2.0 + params.phi
    field_tilde = w @ tilde
    density = w @ occ
    return field_tilde, density


def _mps_diagonal_profiles(mps: MpsState, params: ModelParams):
    work = mps.copy()
    work.move_center(0)
    nrm2 = work.norm() ** 2
    _check_normalized(nrm2)
    N = 2 * mps.L
    field_tilde = np.zeros(N - 1)
    density = np.zeros(N)
    for j in range(mps.L):
        work.move_center(j)
        for (pl, s), block in work.tensors[j].items():
            wgt = float(np.sum(block * block))
            e, o = divmod(s, 2)
            k_in = work.k_in(j, pl)
            k_mid = (k_in + e) % params.n
            k_right = (k_mid + o - 1) % params.n
            density[2 * j] += wgt * e
            density[2 * j + 1] += wgt * o
            field_tilde[2 * j] += wgt * float(params.tilde(k_mid))
            if j < mps.L - 1:
                field_tilde[2 * j + 1] += wgt * float(params.tilde(k_right))
    return field_tilde, density


def order_parameter(state, params: ModelParams):
    """(Sigma, physical field profile) of a normalized state."""
    if isinstance(state, MpsState):
        field_tilde, _ = _mps_diagonal_profiles(state, params)
    elif isinstance(state, EdState):
        field_tilde, _ = _ed_diagonal_profiles(state, params)
    else:
        raise TypeError(f"cannot measure a {type(state).__name__}")
    quantum = np.sqrt(2.0 * np.pi / params.n)
    profile = quantum * field_tilde
    sigma = float(profile.sum() / (2 * params.geometry.L))
    return sigma, profile


def _entropy_bits(schmidt: np.ndarray) -> float:
    p = schmidt.astype(float) ** 2
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p / total
    p = p[p > 1e-300]
    return float(-(p * np.log2(p)).sum())


def _ed_schmidt(state: EdState, cut: int) -> np.ndarray:
    basis = state.basis
    N = basis.geometry.N
    if not 0 <= cut <= N:
        raise ValueError(f"cut {cut} outside 0..{N}")
    if cut in (0, N):
        return np.array([np.linalg.norm(state.vector)])
    left = basis.patterns[:, :cut]
    right = basis.patterns[:, cut:]
    lcodes = left.astype(np.int64) @ (1 << np.arange(cut - 1, -1, -1, dtype=np.int64))
    rcodes = right.astype(np.int64) @ (1 << np.arange(N - cut - 1, -1, -1, dtype=np.int64))
    lmap = {c: i for i, c in enumerate(sorted(set(lcodes.tolist())))}
    rmap = {c: i for i, c in enumerate(sorted(set(rcodes.tolist())))}
    M = np.zeros((len(lmap), len(rmap)))
    M[[lmap[c] for c in lcodes.tolist()], [rmap[c] for c in rcodes.tolist()]] = state.vector
    return np.linalg.svd(M, compute_uv=False)


def entanglement_entropy(state, cut: int) -> float:
    """Bipartite entropy in bits across the staggered-site cut 0..N."""
    if isinstance(state, MpsState):
        return _entropy_bits(state.site_cut_schmidt_values(cut))
    if isinstance(state, EdState):
        return _entropy_bits(_ed_schmidt(state, cut))
    raise TypeError(f"cannot measure a {type(state).__name__}")


def entropy_profile(state, N: int | None = None) -> np.ndarray:
    """S(cut) for every site cut 0..N, in bits."""
    if isinstance(state, MpsState):
        N = 2 * state.L
    elif isinstance(state, EdState):
        N = state.basis.geometry.N
    else:
        raise TypeError(f"cannot measure a {type(state).__name__}")
    return np.array([entanglement_entropy(state, cut) for cut in range(N + 1)])


def gaps(spectrum) -> tuple:
    """(Delta, Gamma) = (eps1 - eps0, eps2 - eps0) from >= 3 converged levels."""
    evals = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)
    if evals.size < 3:
        raise ValueError("need at least three levels for (Delta, Gamma)")
    conv = getattr(spectrum, "converged", None)
    if conv is not None and not np.all(np.asarray(conv)[:3]):
        raise ValueError("unconverged levels cannot be turned into gaps")
    delta = float(evals[1] - evals[0])
    gamma = float(evals[2] - evals[0])
    if not (gamma >= delta >= -1e-12):
        raise ValueError(f"gap ordering violated: Delta={delta}, Gamma={gamma}")
    return max(delta, 0.0), max(gamma, 0.0)


def measure(state, params: ModelParams, spectrum=None) -> ObservableSet:
    """All standard observables of one state (optionally with gaps)."""
    if isinstance(state, MpsState):
        field_tilde, density = _mps_diagonal_profiles(state, params)
    elif isinstance(state, EdState):
        field_tilde, density = _ed_diagonal_profiles(state, params)
    else:
        raise TypeError(f"cannot measure a {type(state).__name__}")
    quantum = np.sqrt(2.0 * np.pi / params.n)
    N = 2 * params.geometry.L
    sigma_tilde = float(field_tilde.sum() / N)
    delta = gamma = None
    if spectrum is not None:
        delta, gamma = gaps(spectrum)
    return ObservableSet(
        sigma=quantum * sigma_tilde,
        sigma_tilde=sigma_tilde,
        field_profile=quantum * field_tilde,
        density_profile=density,
        entropy_profile=entropy_profile(state),
        delta=delta,
        gamma=gamma,
    )
