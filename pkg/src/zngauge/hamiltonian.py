"""Numerical Hamiltonian of the Z_n chain in rescaled (bracket) units.

With the couplings fixed by g^2 a^2 = g^2 a / 2 = 1 the operator implemented
here is

    H = -t*n/(2*pi) * sum_x (hop x <-> x+1)
        + m*n/(2*pi) * sum_x (-1)^x n_x
        + sum_links Etilde^2,

acting on the gauge-invariant basis of :mod:`zngauge.basis`.  Physical
energies carry an extra overall factor g_n^2/2 that drops out of every
scale-invariant quantity (critical masses, gap ratios, eigenvectors).

All matrix elements are real: nearest-neighbor hops on the ordered chain
carry Jordan-Wigner sign +1 (no sites lie between x and x+1), and the
comparator action on the link is automatic because link labels are derived
from the occupations.  Two routes to the same operator are provided: a
sparse matrix over occupation patterns (ED route) and a pair-cell MPO whose
blocks only connect cells with matching shared link labels (DMRG route).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from zngauge.basis import ChainGeometry, GaugeBasis, PairCellBasis, default_sector

__all__ = [
    "ModelParams",
    "SparseOperator",
    "build_mpo",
    "build_sparse",
    "cell_operators",
    "mpo_to_dense",
    "t0_level_crossing",
]

# cell-state ordering at fixed k_left: s = 2*occ_even + occ_odd
CELL_OCC = ((0, 0), (0, 1), (1, 0), (1, 1))
CELL_WEIGHT = (0, 1, 1, 2)  # particles per cell state


@dataclass(frozen=True)
class ModelParams:
    """Full specification of one Hamiltonian instance."""

    n: int
    t: float
    m: float
    geometry: ChainGeometry
    phi: float = 0.0
    k0: int | None = None
    electric_coeff: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"cyclic group order must be an integer >= 2, got {self.n!r}")
        if self.t < 0:
            raise ValueError(f"kinetic strength must be >= 0, got t={self.t}")
        if self.k0 is None:
            object.__setattr__(self, "k0", default_sector(self.n, self.phi))
        if not 0 <= self.k0 < self.n:
            raise ValueError(f"boundary label k0={self.k0} outside Z_{self.n}")

    @property
    def hop_coeff(self) -> float:
        return self.t * self.n / (2.0 * np.pi)

    @property
    def mass_coeff(self) -> float:
        return self.m * self.n / (2.0 * np.pi)

    def tilde(self, k) -> np.ndarray | float:
        """Dimensionless field Etilde of label(s) k."""
        return np.asarray(k) % self.n - (self.n - 1) / 2.0 + self.phi

    def replace(self, **kw) -> "ModelParams":
        data = {
            "n": self.n, "t": self.t, "m": self.m, "geometry": self.geometry,
            "phi": self.phi, "k0": self.k0, "electric_coeff": self.electric_coeff,
        }
        data.update(kw)
        return ModelParams(**data)


@dataclass
class SparseOperator:
    """Real symmetric operator over an ordered gauge basis."""

    matrix: sp.csr_matrix
    params: ModelParams = None
    fixed_filling: bool = True

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 0.0) -> bool:
        diff = (self.matrix - self.matrix.T).tocoo()
        if diff.nnz == 0:
            return True
        return np.max(np.abs(diff.data)) <= tol

    def to_coordinate_text(self) -> str:
        """'row col value' lines for cross-checking with external tools."""
        coo = self.matrix.tocoo()
        lines = [f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row, coo.col, coo.data)]
        return "\n".join(lines) + "\n"

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v


def _diagonal_terms(params: ModelParams, patterns: np.ndarray) -> np.ndarray:
    n, phi = params.n, params.phi
    occ = patterns.astype(np.int64)
    stag = occ[:, 0::2].sum(axis=1) - occ[:, 1::2].sum(axis=1)
    jumps = occ.copy()
    jumps[:, 1::2] -= 1
    labels = (params.k0 + np.cumsum(jumps, axis=1)[:, :-1]) % n
    tilde = labels - (n - 1) / 2.0 + phi
    return params.mass_coeff * stag + params.electric_coeff * (tilde**2).sum(axis=1)


def build_sparse(params: ModelParams, basis: GaugeBasis) -> SparseOperator:
    """Sparse Hamiltonian over one boundary sector.

    Diagonal: staggered mass plus the electric energy of the derived link
    labels.  Off-diagonal: -hop_coeff between patterns differing by one
    nearest-neighbor hop (the link update is implicit in the label
    reconstruction, matching the comparator action).
    """
    if basis.n != params.n or basis.k0 != params.k0:
        raise ValueError("basis was generated for different (n, k0) than params")
    if basis.geometry.N != params.geometry.N:
        raise ValueError("basis and params disagree on the chain length")
    N = params.geometry.N
    dim = len(basis)
    codes = basis.codes  # ascending
    diag = _diagonal_terms(params, basis.patterns)

    rows, cols, vals = [np.arange(dim)], [np.arange(dim)], [diag]
    if params.hop_coeff != 0.0:
        tau = params.hop_coeff
        pats = basis.patterns
        for x in range(N - 1):
            bit_x = np.int64(1) << (N - 1 - x)
            bit_x1 = np.int64(1) << (N - 2 - x)
            movable = (pats[:, x] == 1) & (pats[:, x + 1] == 0)
            src = np.nonzero(movable)[0]
            if src.size == 0:
                continue
            tgt_codes = codes[src] - bit_x + bit_x1
            tgt = np.searchsorted(codes, tgt_codes)
            assert np.all(codes[tgt] == tgt_codes)
            rows.append(src)
            cols.append(tgt)
            vals.append(np.full(src.size, -tau))
            rows.append(tgt)
            cols.append(src)
            vals.append(np.full(src.size, -tau))
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    return SparseOperator(H, params=params, fixed_filling=basis.fixed_filling)


def cell_operators(n: int):
    """Gauge-covariant operators on the 4-state cell space at fixed k_left.

    Returned as (matrix, dk_left) pairs in the s = 2*occ_e + occ_o ordering:

    * ``ocr``  creates the odd-site particle, raising the cell's right label;
    * ``oan``  is its adjoint;
    * ``ean``  annihilates the even-site particle while raising k_left by one
      (the particle leaves to the left together with a comparator action);
    * ``ecr``  is the adjoint of ``ean``.

    k_mid and k_right are untouched by ``ean``/``ecr``, and k_left by
    ``ocr``/``oan``, which is what keeps every hop inside the gauge-invariant
    space.
    """
    ocr = np.zeros((4, 4))
    ocr[1, 0] = ocr[3, 2] = 1.0
    ean = np.zeros((4, 4))
    ean[0, 2] = ean[1, 3] = 1.0
    return {
        "ocr": (ocr, 0),
        "oan": (ocr.T.copy(), 0),
        "ean": (ean, +1),
        "ecr": (ean.T.copy(), -1),
    }


def cell_diagonal(params: ModelParams, k_left: int, include_right_link: bool) -> np.ndarray:
    """Mass + electric diagonal of one cell given its incoming label."""
    diag = np.empty(4)
    for s, (e, o) in enumerate(CELL_OCC):
        k_mid = (k_left + e) % params.n
        k_right = (k_mid + o - 1) % params.n
        val = params.mass_coeff * (e - o)
        val += params.electric_coeff * float(params.tilde(k_mid)) ** 2
        if include_right_link:
            val += params.electric_coeff * float(params.tilde(k_right)) ** 2
        diag[s] = val
    return diag


def cell_local_matrix(params: ModelParams, k_left: int, include_right_link: bool) -> np.ndarray:
    """Cell-local 4x4 block: diagonal terms plus the intra-cell hop."""
    h = np.diag(cell_diagonal(params, k_left, include_right_link))
    h[1, 2] = h[2, 1] = -params.hop_coeff
    return h


def _lift(cells: PairCellBasis, mat4: np.ndarray, dk: int) -> np.ndarray:
    """Embed a fixed-k_left cell operator into the 4n-state cell space."""
    n = cells.n
    d = 4 * n
    out = np.zeros((d, d))
    for idx, (k, e, o) in enumerate(cells.states):
        s = 2 * e + o
        for s2 in range(4):
            if mat4[s2, s] == 0.0:
                continue
            e2, o2 = CELL_OCC[s2]
            k2 = (k + dk) % n
            idx2 = cells.states.index((k2, e2, o2))
            out[idx2, idx] += mat4[s2, s]
    return out


def build_mpo(params: ModelParams, cells: PairCellBasis) -> list:
    """Matrix product operator over the 4n-state pair cells.

    Returns one (wl, wr, d, d) tensor per cell, d = 4n; the bulk virtual
    dimension is 4 (identity-past, two hop connectors, identity-future).
    Contracted against compatible cell products it reproduces the sparse
    matrix elements exactly.
    """
    if cells.n != params.n:
        raise ValueError("pair-cell basis order does not match params.n")
    n, L = params.n, params.geometry.L
    d = 4 * n
    ops = cell_operators(n)
    OCR = _lift(cells, *ops["ocr"])
    OAN = _lift(cells, *ops["oan"])
    EAN = _lift(cells, *ops["ean"])
    ECR = _lift(cells, *ops["ecr"])
    ident = np.eye(d)
    tau = params.hop_coeff

    def hloc(j: int) -> np.ndarray:
        out = np.zeros((d, d))
        for idx, (k, e, o) in enumerate(cells.states):
            out[idx, idx] = cell_diagonal(params, k, include_right_link=j < L - 1)[2 * e + o]
        out += -tau * _lift(cells, np.array(
            [[0, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]], dtype=float), 0)
        return out

    mpo = []
    for j in range(L):
        W = np.zeros((4, 4, d, d))
        W[0, 0] = ident
        W[0, 1] = OCR
        W[0, 2] = OAN
        W[0, 3] = hloc(j)
        W[1, 3] = -tau * EAN
        W[2, 3] = -tau * ECR
        W[3, 3] = ident
        if j == 0:
            W = W[:1]
        if j == L - 1:
            W = W[:, 3:]
        mpo.append(W)
    return mpo


def mpo_to_dense(mpo: list) -> np.ndarray:
    """Contract an MPO into a dense matrix (small chains only)."""
    T = mpo[0]  # (1, w, d, d)
    acc = T[0]  # (w, d, d)
    for W in mpo[1:]:
        acc = np.einsum("aij,abkl->bikjl", acc, W)
        w, di, dk, dj, dl = acc.shape
        acc = acc.reshape(w, di * dk, dj * dl)
    assert acc.shape[0] == 1
    return acc[0]


def t0_level_crossing(n: int, L: int, k0: int | None = None) -> float:
    """Mass at which the ground level of the diagonal (t = 0) Hamiltonian crosses.

    Each basis state contributes a line E_i(m) = a_i + b_i m; the crossing is
    the kink of the lower envelope, located exactly from the two extremal
    slopes (machine precision, no solver involved).
    """
    geometry = ChainGeometry(L)
    params = ModelParams(n=n, t=0.0, m=1.0, geometry=geometry, k0=k0)
    from zngauge.basis import build_basis

    basis = build_basis(geometry, n, params.k0, fixed_filling=True)
    occ = basis.patterns.astype(np.int64)
    stag = occ[:, 0::2].sum(axis=1) - occ[:, 1::2].sum(axis=1)
    b = params.mass_coeff * stag  # slope per unit m (mass_coeff built with m=1)
    jumps = occ.copy()
    jumps[:, 1::2] -= 1
    labels = (params.k0 + np.cumsum(jumps, axis=1)[:, :-1]) % n
    tilde = labels - (n - 1) / 2.0 + params.phi
    a = (tilde**2).sum(axis=1)

    i_neg = int(np.lexsort((a, b))[0])        # steepest-descent line for m -> -inf
    i_pos = int(np.lexsort((a, -b))[0])       # for m -> +inf
    if b[i_neg] == b[i_pos]:
        raise ValueError("diagonal spectrum has no ground-level crossing")
    m_star = (a[i_pos] - a[i_neg]) / (b[i_neg] - b[i_pos])
    # the envelope may kink more than once; bisect on the minimizing slope
    lo, hi = -1e3, 1e3
    for _ in range(200):
        slope_lo = b[int(np.argmin(a + b * lo))]
        mid = 0.5 * (lo + hi)
        slope_mid = b[int(np.argmin(a + b * mid))]
        if slope_mid == slope_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(mid)):
            break
    kink = 0.5 * (lo + hi)
    # prefer the exact two-line intersection when it agrees with the bisection
    if abs(kink - m_star) < 1e-6:
        return float(m_star)
    lines = sorted({(float(bi), float(ai)) for ai, bi in zip(a, b)})
    best = None
    for bi, ai in lines:
        for bj, aj in lines:
            if bj <= bi:
                continue
            mc = (ai - aj) / (bj - bi)
            if abs(mc - kink) < 1e-9:
                best = mc
    return float(best if best is not None else kink)
