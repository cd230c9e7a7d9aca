"""Gauge-invariant chain basis: occupations plus a left-boundary field label.

Gauss' law on the staggered chain reads, in integer link labels,

    k_{x,x+1} - k_{x-1,x} = n_x + ((-1)^x - 1)/2   (mod n),

so once the label k0 of the virtual link entering site 0 is fixed, every
internal link label follows from the occupation pattern alone:

    k_{x,x+1} = k0 + sum_{y<=x} (n_y - [y odd])   (mod n).

A basis element is therefore an occupation bit pattern of length N = 2L plus
the boundary label k0; link fields are always derived, never stored as
independent degrees of freedom.  In the sector with one fermion per physical
site (sum n_x = L) the outgoing right label equals k0 again.

The pair-cell basis groups an (even, odd) site pair with its internal link
into a single 4n-state unit whose states carry definite (k_left, k_right):
this is the local space the DMRG engine sweeps over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "ChainGeometry",
    "GaugeState",
    "GaugeBasis",
    "PairCellBasis",
    "apply_cp",
    "build_basis",
    "candidate_sectors",
    "default_sector",
    "dirac_sea_pattern",
    "dump_basis",
    "gauss_residuals",
    "meson_pattern",
    "pair_cell_basis",
    "reconstruct_fields",
]


@dataclass(frozen=True)
class ChainGeometry:
    """Open chain of L physical sites = N = 2L staggered sites."""

    L: int

    def __post_init__(self) -> None:
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"need at least one physical site, got L={self.L!r}")

    @property
    def N(self) -> int:
        return 2 * self.L

    @property
    def n_links(self) -> int:
        """Internal links (x, x+1), x = 0..N-2."""
        return self.N - 1


def reconstruct_fields(occupation, k0: int, n: int) -> np.ndarray:
    """Link labels k_{x,x+1} for x = 0..N-2, solved forward from k0.

    Total function: any occupation pattern yields a Gauss-law-satisfying
    label chain by construction.
    """
    occ = np.asarray(occupation, dtype=np.int64)
    if occ.ndim != 1 or occ.size < 2:
        raise ValueError("occupation must be a 1-d pattern of length N >= 2")
    jumps = occ.copy()
    jumps[1::2] -= 1
    return (k0 + np.cumsum(jumps)[:-1]) % n


def gauss_residuals(occupation, link_labels, k0: int, n: int) -> np.ndarray:
    """Per-site residual of Gauss' law in integer labels (0 iff satisfied)."""
    occ = np.asarray(occupation, dtype=np.int64)
    labels = np.asarray(link_labels, dtype=np.int64)
    left = np.concatenate(([k0], labels))
    # outgoing label after the last site closes the chain
    right = np.concatenate((labels, [(left[-1] + occ[-1] - 1) % n]))
    charge = occ.copy()
    charge[1::2] -= 1
    return (right - left - charge) % n


@dataclass(frozen=True)
class GaugeState:
    """One gauge-invariant basis element of the chain."""

    occupation: tuple
    k0: int
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.k0 < self.n:
            raise ValueError(f"boundary label k0={self.k0} outside Z_{self.n}")

    @property
    def N(self) -> int:
        return len(self.occupation)

    @property
    def link_labels(self) -> tuple:
        return tuple(int(k) for k in reconstruct_fields(self.occupation, self.k0, self.n))

    @property
    def filling(self) -> int:
        return int(sum(self.occupation))

    def tilde_fields(self, phi: float = 0.0) -> np.ndarray:
        """Dimensionless electric field on the internal links."""
        labels = reconstruct_fields(self.occupation, self.k0, self.n)
        return labels - (self.n - 1) / 2.0 + phi


def _patterns_fixed_filling(N: int, filling: int) -> np.ndarray:
    rows = []
    for occupied in combinations(range(N), filling):
        row = np.zeros(N, dtype=np.int8)
        row[list(occupied)] = 1
        rows.append(row)
    patterns = np.array(rows, dtype=np.int8)
    return patterns[np.lexsort(patterns.T[::-1])]


def _patterns_all(N: int) -> np.ndarray:
    codes = np.arange(2**N, dtype=np.int64)
    shifts = np.arange(N - 1, -1, -1)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)


class GaugeBasis:
    """Ordered gauge-invariant basis for one (k0, filling) sector.

    Patterns are stored as a compact (dim, N) int8 array in lexicographic
    order of the occupation bits; indexing materializes a GaugeState.
    """

    def __init__(self, geometry: ChainGeometry, n: int, k0: int, patterns: np.ndarray,
                 fixed_filling: bool):
        self.geometry = geometry
        self.n = int(n)
        self.k0 = int(k0)
        self.patterns = patterns
        self.fixed_filling = fixed_filling
        # lexicographic bit order == integer order of the codes
        shifts = np.arange(geometry.N - 1, -1, -1, dtype=np.int64)
        self.codes = (patterns.astype(np.int64) << shifts[None, :]).sum(axis=1)
        self._index = {int(c): i for i, c in enumerate(self.codes)}

    def __len__(self) -> int:
        return self.patterns.shape[0]

    def __getitem__(self, i: int) -> GaugeState:
        return GaugeState(tuple(int(b) for b in self.patterns[i]), self.k0, self.n)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def index_of_code(self, code: int) -> int:
        return self._index[code]

    def index_of_pattern(self, pattern) -> int:
        shifts = np.arange(self.geometry.N - 1, -1, -1, dtype=np.int64)
        code = int((np.asarray(pattern, dtype=np.int64) << shifts).sum())
        return self._index[code]


def build_basis(geometry: ChainGeometry, n: int, k0: int,
                fixed_filling: bool = True) -> GaugeBasis:
    """Enumerate the gauge-invariant states of one boundary sector.

    With ``fixed_filling`` only the C(N, L) half-filled patterns are kept
    (the one-fermion-per-physical-site sector); otherwise all 2^N patterns.
    Ordering is deterministic: lexicographic in the occupation bits.
    """
    if not 0 <= k0 < n:
        raise ValueError(f"boundary label k0={k0} outside Z_{n}")
    N = geometry.N
    if fixed_filling:
        patterns = _patterns_fixed_filling(N, geometry.L)
    else:
        patterns = _patterns_all(N)
    return GaugeBasis(geometry, n, k0, patterns, fixed_filling)


@dataclass(frozen=True)
class PairCellBasis:
    """The 4n gauge-invariant states of an (even, odd) site pair.

    Each state is a triple (k_left, occ_even, occ_odd); the internal and
    right labels follow from the even/odd Gauss rules:
    k_mid = k_left + occ_even, k_right = k_mid - (1 - occ_odd), both mod n.
    States are ordered lexicographically in (k_left, occ_even, occ_odd).
    """

    n: int
    states: tuple

    def __len__(self) -> int:
        return len(self.states)

    def k_mid(self, state) -> int:
        k_left, occ_e, _ = state
        return (k_left + occ_e) % self.n

    def k_right(self, state) -> int:
        k_left, occ_e, occ_o = state
        return (k_left + occ_e - (1 - occ_o)) % self.n


def pair_cell_basis(n: int) -> PairCellBasis:
    if int(n) != n or n < 2:
        raise ValueError(f"cyclic group order must be an integer >= 2, got {n!r}")
    states = tuple((k, e, o) for k in range(n) for e in (0, 1) for o in (0, 1))
    return PairCellBasis(int(n), states)


def dirac_sea_pattern(N: int) -> tuple:
    """Odd sites occupied: the large positive-mass ground state."""
    return tuple(x % 2 for x in range(N))


def meson_pattern(N: int) -> tuple:
    """Even sites occupied: quark-antiquark pairs on every physical site."""
    return tuple(1 - x % 2 for x in range(N))


def candidate_sectors(n: int, phi: float = 0.0) -> list:
    """Boundary labels ordered by |Etilde(k0)|, ties kept adjacent.

    For phi = 0 and odd n this is the unique zero-field sector; for even n
    the two Etilde = -1/2, +1/2 labels come first (exactly degenerate in
    ground energy only in the polarized phase, so callers may compare).
    """
    tilde = np.arange(n) - (n - 1) / 2.0 + phi
    order = sorted(range(n), key=lambda k: (abs(tilde[k]), k))
    return [int(k) for k in order]


def default_sector(n: int, phi: float = 0.0) -> int:
    return candidate_sectors(n, phi)[0]


def _annihilate(occ: list, y: int) -> int:
    """Remove a particle at site y; returns the Fock sign, mutates occ."""
    assert occ[y] == 1
    sign = -1 if sum(occ[:y]) % 2 else 1
    occ[y] = 0
    return sign


def apply_cp(state: GaugeState, phi: float = 0.0) -> tuple:
    """Image of a basis state under combined charge conjugation and parity.

    Adapted to the open chain: sites reflect x -> N-1-x with particles and
    holes exchanged on the staggered lattice, and the boundary label is
    negated (k0 -> n-1-k0, i.e. Etilde -> -Etilde on the virtual link).
    Returns (image state, fermionic reordering sign).  The map is an exact
    involution; conjugating the sector Hamiltonian with it (including signs)
    is a symmetry in the zero-field sector of odd n.  Only the phi = 0 model
    has this symmetry at all.
    """
    if phi != 0.0:
        raise ValueError("CP is not a symmetry at phi != 0 (background field breaks it)")
    N = state.N
    occ = list(state.occupation)
    image_occ = tuple(1 - occ[N - 1 - y] for y in range(N))
    # operator algebra: CP psi^dag_x CP^dag = (-1)^x psi_{N-1-x}, CP|vac> = |full>
    particles = [x for x in range(N) if occ[x] == 1]
    sign = 1
    for x in particles:
        if x % 2:
            sign = -sign
    work = [1] * N
    for x in reversed(particles):  # rightmost annihilator acts first
        sign *= _annihilate(work, N - 1 - x)
    assert tuple(work) == image_occ
    image_k0 = (state.n - 1 - state.k0) % state.n
    return GaugeState(image_occ, image_k0, state.n), sign


def dump_basis(basis: GaugeBasis) -> str:
    """Diagnostic plain-text dump: one 'occupation-bits k0 field-labels' line per state."""
    lines = []
    for state in basis:
        bits = "".join(str(b) for b in state.occupation)
        labels = ",".join(str(k) for k in state.link_labels)
        lines.append(f"{bits} {state.k0} {labels}")
    return "\n".join(lines) + "\n"


def sector_dimension(L: int, fixed_filling: bool = True) -> int:
    """Basis size of one boundary sector."""
    return math.comb(2 * L, L) if fixed_filling else 2 ** (2 * L)
