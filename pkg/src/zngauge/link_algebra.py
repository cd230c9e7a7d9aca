"""Finite Weyl pair (U, V) on an n-dimensional link and the electric spectrum.

A link of the Z_n chain carries an n-dimensional Hilbert space spanned by
electric-field eigenstates |v_0>, ..., |v_{n-1}>.  On this space

* V is diagonal with entries exp(-i 2*pi*k/n),
* U is the cyclic shift |v_k> -> |v_{k+1}> (indices mod n),

and together they satisfy U^l V^k = exp(i 2*pi*k*l/n) V^k U^l.  The electric
field itself is diagonal with equally spaced eigenvalues

    e_k = sqrt(2*pi/n) * (k - (n-1)/2 + phi),

where phi is the uniform background offset.  The sqrt(2*pi/n) quantum is what
makes the n -> infinity limit reproduce a continuous U(1) field.

Only these small matrices are ever materialized; chain-scale operators act by
index arithmetic on the labels k (see :mod:`zngauge.hamiltonian`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LinkAlgebra", "electric_eigenvalues", "tilde_eigenvalues", "weyl_pair"]


def _check_order(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"cyclic group order must be an integer >= 2, got {n!r}")
    return int(n)


def tilde_eigenvalues(n: int, phi: float = 0.0) -> np.ndarray:
    """Dimensionless electric eigenvalues Etilde_k = k - (n-1)/2 + phi."""
    n = _check_order(n)
    return np.arange(n, dtype=float) - (n - 1) / 2.0 + phi


def electric_eigenvalues(n: int, phi: float = 0.0) -> np.ndarray:
    """Physical electric eigenvalues e_k, ascending and spaced by sqrt(2*pi/n)."""
    n = _check_order(n)
    return np.sqrt(2.0 * np.pi / n) * tilde_eigenvalues(n, phi)


def weyl_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    """The (U, V) pair on the ordered basis {|v_k>}.

    U is the cyclic permutation matrix with U[k+1 mod n, k] = 1 and V is
    diagonal with V[k, k] = exp(-i 2*pi*k/n).  Both are unitary of order n.
    """
    n = _check_order(n)
    U = np.zeros((n, n), dtype=complex)
    ks = np.arange(n)
    U[(ks + 1) % n, ks] = 1.0
    V = np.diag(np.exp(-2j * np.pi * ks / n))
    return U, V


@dataclass(frozen=True)
class LinkAlgebra:
    """One link's algebraic data: group order, background offset, spectra."""

    n: int
    phi: float = 0.0
    eigenvalues: np.ndarray = field(init=False, repr=False)
    tilde_eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        _check_order(self.n)
        object.__setattr__(self, "tilde_eigenvalues", tilde_eigenvalues(self.n, self.phi))
        object.__setattr__(self, "eigenvalues", electric_eigenvalues(self.n, self.phi))

    @property
    def spacing(self) -> float:
        """Electric quantum sqrt(2*pi/n) between consecutive eigenvalues."""
        return float(np.sqrt(2.0 * np.pi / self.n))

    def weyl_pair(self) -> tuple[np.ndarray, np.ndarray]:
        return weyl_pair(self.n)

    def tilde(self, k) -> np.ndarray | float:
        """Etilde for label(s) k, reduced mod n."""
        return np.asarray(k) % self.n - (self.n - 1) / 2.0 + self.phi
