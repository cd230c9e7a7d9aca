"""Two-site DMRG over graded pair cells with Gauss' law enforced exactly.

The effective two-cell Hamiltonian is assembled from blockwise environments:

* ``H``  left/right block Hamiltonians, diagonal in the bond sectors;
* ``X``  matrix elements of the odd-site creator on a left block's edge cell;
* ``Y``  matrix elements of the even-site (comparator-dressed) annihilator on
  a right block's edge cell;

all keyed by particle-count sectors, which carry the Z_n link labels (see
:mod:`zngauge.mps`).  Two-site updates with per-sector SVD let bond sectors
repopulate, which is essential with graded bonds.  Excited states are
obtained by projecting the local Krylov space orthogonal to previously
converged states (parameter-free, no penalty weights).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from zngauge.hamiltonian import CELL_WEIGHT, ModelParams, cell_diagonal
from zngauge.basis import dirac_sea_pattern, meson_pattern
from zngauge.mps import MpsState, enriched_product_mps

__all__ = ["SweepPolicy", "DmrgResult", "ground_state", "excited_states"]


@dataclass(frozen=True)
class SweepPolicy:
    """Convergence policy of one DMRG run."""

    max_sweeps: int = 16
    min_sweeps: int = 2
    energy_tol: float = 1e-9
    svd_cutoff: float = 1e-10     # discarded relative Schmidt weight per value
    trunc_ceiling: float = 1e-6   # flag chi exhaustion above this
    lanczos_tol: float = 1e-7     # relative residual of the local solver
    lanczos_max_iter: int = 40


@dataclass
class DmrgResult:
    """Energy and convergence trace of one optimized state."""

    energy: float
    converged: bool
    sweeps: int
    sweep_energies: list
    max_truncation_error: float
    chi_max: int
    chi_exhausted: bool
    leakage: float = 0.0
    seed_pattern: str = ""
    seed: int = 0

    @property
    def eigenvalue(self) -> float:
        return self.energy


# ---------------------------------------------------------------------------
# environments


def _empty_left():
    return {"H": {0: np.zeros((1, 1))}, "X": {}}


def _empty_right(L: int):
    return {"H": {L: np.zeros((1, 1))}, "Y": {}}


def _grow_left(env: dict, mps: MpsState, params: ModelParams, j: int) -> dict:
    """Environment of cells 0..j from the one of 0..j-1 (tensor j left-canonical)."""
    A = mps.tensors[j]
    HL, XL = env["H"], env["X"]
    tau = params.hop_coeff
    newH: dict = {}
    newX: dict = {}

    def add(d, key, val):
        d[key] = d.get(key, 0) + val

    diag = {}
    for (pl, s) in A:
        if pl not in diag:
            diag[pl] = cell_diagonal(params, mps.k_in(j, pl), include_right_link=j < mps.L - 1)

    for (pl, s), blk in A.items():
        pm = pl + CELL_WEIGHT[s]
        if pl in HL:
            add(newH, pm, blk.T @ HL[pl] @ blk)
        add(newH, pm, diag[pl][s] * (blk.T @ blk))
    # intra-cell hop of cell j
    for pl in diag:
        b1, b2 = A.get((pl, 1)), A.get((pl, 2))
        if b1 is not None and b2 is not None:
            cross = -tau * (b1.T @ b2)
            add(newH, pl + 1, cross + cross.T)
    # hop crossing the old boundary: X_old (x) ean/ecr on cell j
    for (pl, s), blk in A.items():
        if s in (2, 3) and pl in XL:
            partner = A.get((pl + 1, s - 2))
            if partner is not None:
                term = -tau * (partner.T @ XL[pl] @ blk)
                add(newH, pl + CELL_WEIGHT[s], term + term.T)
    # new boundary connector: odd-site creator on cell j
    for (pl, s), blk in A.items():
        if s in (0, 2):
            partner = A.get((pl, s + 1))
            if partner is not None:
                add(newX, pl + CELL_WEIGHT[s], partner.T @ blk)
    return {"H": newH, "X": newX}


def _grow_right(env: dict, mps: MpsState, params: ModelParams, j: int) -> dict:
    """Environment of cells j..L-1 from the one of j+1..L-1 (tensor j right-canonical)."""
    B = mps.tensors[j]
    HR, YR = env["H"], env["Y"]
    tau = params.hop_coeff
    newH: dict = {}
    newY: dict = {}

    def add(d, key, val):
        d[key] = d.get(key, 0) + val

    diag = {}
    for (pl, s) in B:
        if pl not in diag:
            diag[pl] = cell_diagonal(params, mps.k_in(j, pl), include_right_link=j < mps.L - 1)

    for (pl, s), blk in B.items():
        pr = pl + CELL_WEIGHT[s]
        if pr in HR:
            add(newH, pl, blk @ HR[pr] @ blk.T)
        add(newH, pl, diag[pl][s] * (blk @ blk.T))
    for pl in diag:
        b1, b2 = B.get((pl, 1)), B.get((pl, 2))
        if b1 is not None and b2 is not None:
            cross = -tau * (b1 @ b2.T)
            add(newH, pl, cross + cross.T)
    # hop crossing into the old block: ocr on cell j (x) Y_old
    for (pl, s), blk in B.items():
        if s in (0, 2):
            partner = B.get((pl, s + 1))
            pr = pl + CELL_WEIGHT[s]
            if partner is not None and pr in YR:
                term = -tau * (partner @ YR[pr] @ blk.T)
                add(newH, pl, term + term.T)
    # new boundary connector: comparator-dressed even annihilator on cell j
    for (pl, s), blk in B.items():
        if s in (2, 3):
            partner = B.get((pl + 1, s - 2))
            if partner is not None:
                add(newY, pl, partner @ blk.T)
    return {"H": newH, "Y": newY}


# ---------------------------------------------------------------------------
# two-site effective Hamiltonian


class _TwoSiteProblem:
    """Layout and operator application for the window (j, j+1)."""

    def __init__(self, mps: MpsState, params: ModelParams, j: int,
                 left: dict, right: dict):
        self.j = j
        self.params = params
        self.mps = mps
        self.left = left
        self.right = right
        self.tau = params.hop_coeff
        L = mps.L
        self.d1 = {}
        self.d2 = {}
        self.keys: list = []
        self.shapes: dict = {}
        self.offsets: dict = {}

    def set_layout(self, theta: dict) -> None:
        self.keys = sorted(theta.keys())
        self.shapes = {k: theta[k].shape for k in self.keys}
        off = 0
        self.offsets = {}
        for k in self.keys:
            sz = self.shapes[k][0] * self.shapes[k][1]
            self.offsets[k] = (off, off + sz)
            off += sz
        self.size = off
        j = self.j
        for (pl, s1, s2) in self.keys:
            if pl not in self.d1:
                self.d1[pl] = cell_diagonal(self.params, self.mps.k_in(j, pl), True)
            pm = pl + CELL_WEIGHT[s1]
            if pm not in self.d2:
                self.d2[pm] = cell_diagonal(
                    self.params, self.mps.k_in(j + 1, pm),
                    include_right_link=j + 1 < self.mps.L - 1)

    def pack(self, theta: dict) -> np.ndarray:
        out = np.empty(self.size)
        for k in self.keys:
            lo, hi = self.offsets[k]
            out[lo:hi] = theta.get(k, np.zeros(self.shapes[k])).ravel()
        return out

    def unpack(self, vec: np.ndarray) -> dict:
        return {k: vec[self.offsets[k][0]:self.offsets[k][1]].reshape(self.shapes[k])
                for k in self.keys}

    def apply(self, theta: dict) -> dict:
        out = {k: np.zeros(self.shapes[k]) for k in self.keys}
        HL, XL = self.left["H"], self.left["X"]
        HR, YR = self.right["H"], self.right["Y"]
        tau = self.tau

        def add(key, val):
            if key in out:
                out[key] += val

        for key in self.keys:
            pl, s1, s2 = key
            blk = theta[key]
            pm = pl + CELL_WEIGHT[s1]
            pr = pm + CELL_WEIGHT[s2]
            if pl in HL:
                out[key] += HL[pl] @ blk
            if pr in HR:
                out[key] += blk @ HR[pr]
            out[key] += (self.d1[pl][s1] + self.d2[pm][s2]) * blk
            # intra-cell hops
            if s1 in (1, 2):
                add((pl, 3 - s1, s2), -tau * blk)
            if s2 in (1, 2):
                add((pl, s1, 3 - s2), -tau * blk)
            # hop across the middle bond
            if s1 in (0, 2) and s2 in (2, 3):
                add((pl, s1 + 1, s2 - 2), -tau * blk)
            if s1 in (1, 3) and s2 in (0, 1):
                add((pl, s1 - 1, s2 + 2), -tau * blk)
            # hop across the left boundary
            if s1 in (2, 3) and pl in XL:
                add((pl + 1, s1 - 2, s2), -tau * (XL[pl] @ blk))
            if s1 in (0, 1) and (pl - 1) in XL:
                add((pl - 1, s1 + 2, s2), -tau * (XL[pl - 1].T @ blk))
            # hop across the right boundary
            if s2 in (0, 2) and pr in YR:
                add((pl, s1, s2 + 1), -tau * (blk @ YR[pr].T))
            if s2 in (1, 3) and (pr - 1) in YR:
                add((pl, s1, s2 - 1), -tau * (blk @ YR[pr - 1]))
        return out

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self.pack(self.apply(self.unpack(vec)))


def _lanczos_local(problem: _TwoSiteProblem, v0: np.ndarray, tol: float,
                   max_iter: int, projectors: list, restarts: int = 5) -> tuple:
    """Lowest Ritz pair of the projected two-site Hamiltonian.

    Restarted Lanczos with full reorthogonalization; the residual target is
    relative to the energy scale so small windows converge to machine level.
    """
    import scipy.linalg as sla

    def project(v):
        for q in projectors:
            v = v - (q @ v) * q
        return v

    v = project(v0)
    nrm = np.linalg.norm(v)
    if nrm < 1e-12:
        v = project(np.random.default_rng(0).standard_normal(v0.size))
        nrm = np.linalg.norm(v)
        if nrm < 1e-12:
            return 0.0, v0 / max(np.linalg.norm(v0), 1e-300)
    x = v / nrm
    theta = float(x @ problem.matvec(x))
    for _ in range(restarts):
        V = [x]
        alphas, betas = [], []
        dim = x.size
        converged = False
        for it in range(1, min(max_iter, dim) + 1):
            w = project(problem.matvec(V[-1]))
            if betas:
                w = w - betas[-1] * V[-2]
            a = float(V[-1] @ w)
            alphas.append(a)
            w = w - a * V[-1]
            Vm = np.array(V).T
            w = w - Vm @ (Vm.T @ w)
            w = project(w)
            b = float(np.linalg.norm(w))
            evals, evecs = sla.eigh_tridiagonal(np.array(alphas), np.array(betas))
            theta = float(evals[0])
            scale = max(1.0, abs(theta))
            resid = b * abs(evecs[-1, 0])
            if b < 1e-13 or resid <= max(1e-13, tol) * scale or it == min(max_iter, dim):
                x = Vm @ evecs[:, 0]
                x = project(x)
                x /= np.linalg.norm(x)
                converged = resid <= max(1e-13, tol) * scale or b < 1e-13
                break
            betas.append(b)
            V.append(w / b)
        if converged:
            break
    return theta, x


def _split_theta(theta: dict, chi: int, cutoff: float):
    """Per-sector SVD of the two-site tensor with a global chi budget.

    Returns (left blocks {(pl, s1): U}, right blocks {(pm, s2): V^T},
    center {pm: diag s}, truncation weight, entanglement data).
    """
    groups: dict = {}
    for (pl, s1, s2), blk in theta.items():
        pm = pl + CELL_WEIGHT[s1]
        groups.setdefault(pm, {"rows": {}, "cols": {}, "blocks": {}})
        g = groups[pm]
        g["rows"].setdefault((pl, s1), blk.shape[0])
        g["cols"].setdefault((s2,), blk.shape[1])
        g["blocks"][(pl, s1, s2)] = blk
    svd_data = {}
    all_svals = []
    for pm, g in groups.items():
        rkeys = sorted(g["rows"])
        ckeys = sorted(g["cols"])
        roff, acc = {}, 0
        for k in rkeys:
            roff[k] = acc
            acc += g["rows"][k]
        coff, acc2 = {}, 0
        for k in ckeys:
            coff[k] = acc2
            acc2 += g["cols"][k]
        M = np.zeros((acc, acc2))
        for (pl, s1, s2), blk in g["blocks"].items():
            r0 = roff[(pl, s1)]
            c0 = coff[(s2,)]
            M[r0:r0 + blk.shape[0], c0:c0 + blk.shape[1]] = blk
        U, S, Vt = np.linalg.svd(M, full_matrices=False)
        svd_data[pm] = (U, S, Vt, roff, coff, g)
        all_svals.extend((float(s), pm, i) for i, s in enumerate(S))
    total = sum(s * s for s, _, _ in all_svals)
    if total == 0.0:
        raise ValueError("two-site tensor vanished during the update")
    order = sorted(all_svals, reverse=True)
    keep: dict = {}
    kept_weight = 0.0
    for rank, (s, pm, i) in enumerate(order):
        if rank >= chi or (s * s) / total < cutoff:
            break
        keep.setdefault(pm, []).append(i)
        kept_weight += s * s
    trunc = 1.0 - kept_weight / total
    left_blocks: dict = {}
    right_blocks: dict = {}
    centers: dict = {}
    kept_svals = []
    for pm, idxs in keep.items():
        U, S, Vt, roff, coff, g = svd_data[pm]
        idxs = sorted(idxs)
        Uk, Sk, Vk = U[:, idxs], S[idxs], Vt[idxs, :]
        centers[pm] = Sk
        kept_svals.extend(Sk)
        for (pl, s1), r0 in roff.items():
            nrows = g["rows"][(pl, s1)]
            left_blocks[(pl, s1)] = Uk[r0:r0 + nrows, :]
        for (s2,), c0 in coff.items():
            ncols = g["cols"][(s2,)]
            right_blocks[(pm, s2)] = Vk[:, c0:c0 + ncols]
    return left_blocks, right_blocks, centers, trunc, np.array(kept_svals)


def _theta_from(mps: MpsState, j: int) -> dict:
    """Contract center tensor pair (j, j+1) into a two-site tensor."""
    theta: dict = {}
    for (pl, s1), b1 in mps.tensors[j].items():
        pm = pl + CELL_WEIGHT[s1]
        for (pm2, s2), b2 in mps.tensors[j + 1].items():
            if pm2 != pm:
                continue
            theta[(pl, s1, s2)] = b1 @ b2
    return theta


def _install_split(mps: MpsState, j: int, left_blocks, right_blocks, centers,
                   direction: str) -> None:
    """Write the SVD factors back, leaving the center at j (left) or j+1 (right)."""
    norm = np.sqrt(sum(float(np.sum(s * s)) for s in centers.values()))
    if direction == "right":
        mps.tensors[j] = left_blocks
        nxt = {}
        for (pm, s2), blk in right_blocks.items():
            nxt[(pm, s2)] = (centers[pm][:, None] * blk) / norm
        mps.tensors[j + 1] = nxt
        mps.center = j + 1
    else:
        mps.tensors[j + 1] = {k: v for k, v in right_blocks.items()}
        cur = {}
        for (pl, s1), blk in left_blocks.items():
            pm = pl + CELL_WEIGHT[s1]
            cur[(pl, s1)] = (blk * centers[pm][None, :]) / norm
        mps.tensors[j] = cur
        mps.center = j


def _canonical_bundle(mps: MpsState) -> tuple:
    """Gauge-consistent (A_j, B_j, C_j) tensors of a fixed state.

    A_0..A_{j-1} C_j B_{j+1}..B_{L-1} represents the state for every j, so
    overlap environments built from the A/B tensors match the C windows.
    """
    work = mps.copy()
    work.move_center(0)
    B = [{k: v.copy() for k, v in t.items()} for t in work.tensors]
    C = [None] * work.L
    A = [None] * work.L
    C[0] = {k: v.copy() for k, v in work.tensors[0].items()}
    for j in range(work.L - 1):
        work._qr_step(j)
        A[j] = {k: v.copy() for k, v in work.tensors[j].items()}
        C[j + 1] = {k: v.copy() for k, v in work.tensors[j + 1].items()}
    return A, B, C


class _OverlapTracker:
    """Overlap environments of the sweeping state against one fixed lower state."""

    def __init__(self, current: MpsState, lower: MpsState):
        self.A, self.B, self.C = _canonical_bundle(lower)
        self.cur = current
        L = current.L
        self.left = [None] * (L + 1)
        self.right = [None] * (L + 1)
        self.left[0] = {0: np.ones((1, 1))}
        self.right[L] = {L: np.ones((1, 1))}
        for b in range(L - 1, 0, -1):
            self.right[b] = self._grow_right(b)

    def _grow_right(self, b: int) -> dict:
        env = self.right[b + 1]
        out: dict = {}
        for (pl, s), blk in self.cur.tensors[b].items():
            low = self.B[b].get((pl, s))
            pr = pl + CELL_WEIGHT[s]
            if low is None or pr not in env:
                continue
            out[pl] = out.get(pl, 0) + blk @ env[pr] @ low.T
        return out

    def _grow_left(self, b: int) -> dict:
        env = self.left[b]
        out: dict = {}
        for (pl, s), blk in self.cur.tensors[b].items():
            low = self.A[b].get((pl, s))
            if low is None or pl not in env:
                continue
            pr = pl + CELL_WEIGHT[s]
            out[pr] = out.get(pr, 0) + blk.T @ env[pl] @ low
        return out

    def window_vector(self, problem: _TwoSiteProblem, j: int) -> np.ndarray | None:
        theta_low: dict = {}
        for (pl, s1), b1 in self.C[j].items():
            pm = pl + CELL_WEIGHT[s1]
            for (pm2, s2), b2 in self.B[j + 1].items():
                if pm2 == pm:
                    theta_low[(pl, s1, s2)] = b1 @ b2
        OL, OR = self.left[j], self.right[j + 2]
        if OL is None or OR is None:
            return None
        vec = {}
        for (pl, s1, s2), blk in theta_low.items():
            pm = pl + CELL_WEIGHT[s1]
            pr = pm + CELL_WEIGHT[s2]
            if pl not in OL or pr not in OR:
                continue
            key = (pl, s1, s2)
            if key in problem.offsets:
                vec[key] = OL[pl] @ blk @ OR[pr].T
        if not vec:
            return None
        packed = problem.pack({k: vec.get(k, np.zeros(problem.shapes[k]))
                               for k in problem.keys})
        nrm = np.linalg.norm(packed)
        return packed / nrm if nrm > 1e-8 else None

    def after_update(self, j: int, direction: str) -> None:
        if direction == "right":
            self.left[j + 1] = self._grow_left(j)
        else:
            self.right[j + 1] = self._grow_right(j + 1)


def _seed_pattern(params: ModelParams, which: str) -> tuple:
    N = params.geometry.N
    if which == "auto":
        which = "meson" if params.m < 0 else "dirac"
    if which == "dirac":
        return dirac_sea_pattern(N), "dirac"
    if which == "meson":
        return meson_pattern(N), "meson"
    raise ValueError(f"unknown seed pattern {which!r}")


def _run_sweeps(mps: MpsState, params: ModelParams, chi: int, policy: SweepPolicy,
                lower_states: list) -> DmrgResult:
    L = mps.L
    mps.move_center(0)
    mps.normalize()
    left_envs = [None] * (L + 1)
    right_envs = [None] * (L + 1)
    left_envs[0] = _empty_left()
    right_envs[L] = _empty_right(L)
    for b in range(L - 1, 0, -1):
        right_envs[b] = _grow_right(right_envs[b + 1], mps, params, b)
    trackers = [_OverlapTracker(mps, low) for low in lower_states]

    energy = np.inf
    sweep_energies = []
    max_trunc = 0.0
    chi_seen = 1
    converged = False
    sweeps_done = 0
    for sweep in range(1, policy.max_sweeps + 1):
        for direction in ("right", "left"):
            rng_j = range(L - 1) if direction == "right" else range(L - 2, -1, -1)
            for j in rng_j:
                problem = _TwoSiteProblem(mps, params, j, left_envs[j], right_envs[j + 2])
                theta = _theta_from(mps, j)
                problem.set_layout(theta)
                projectors = []
                for tracker in trackers:
                    q = tracker.window_vector(problem, j)
                    if q is not None:
                        for prev in projectors:
                            q = q - (prev @ q) * prev
                        nq = np.linalg.norm(q)
                        if nq > 1e-8:
                            projectors.append(q / nq)
                v0 = problem.pack(theta)
                energy, vec = _lanczos_local(problem, v0, policy.lanczos_tol,
                                             policy.lanczos_max_iter, projectors)
                lb, rb, centers, trunc, _ = _split_theta(problem.unpack(vec), chi,
                                                         policy.svd_cutoff)
                max_trunc = max(max_trunc, trunc)
                _install_split(mps, j, lb, rb, centers, direction)
                chi_seen = max(chi_seen, sum(len(s) for s in centers.values()))
                if direction == "right":
                    left_envs[j + 1] = _grow_left(left_envs[j], mps, params, j)
                else:
                    right_envs[j + 1] = _grow_right(right_envs[j + 2], mps, params, j + 1)
                for tracker in trackers:
                    tracker.after_update(j, direction)
        sweeps_done = sweep
        sweep_energies.append(float(energy))
        if sweep >= policy.min_sweeps and len(sweep_energies) >= 2:
            if abs(sweep_energies[-1] - sweep_energies[-2]) < policy.energy_tol:
                converged = True
                break
    leakage = 0.0
    for low in lower_states:
        leakage = max(leakage, abs(mps.overlap(low)))
    return DmrgResult(
        energy=float(sweep_energies[-1]),
        converged=converged,
        sweeps=sweeps_done,
        sweep_energies=sweep_energies,
        max_truncation_error=float(max_trunc),
        chi_max=int(chi_seen),
        chi_exhausted=max_trunc > policy.trunc_ceiling,
        leakage=float(leakage),
    )


def ground_state(params: ModelParams, chi: int = 512,
                 policy: SweepPolicy | None = None, seed: int = 7,
                 seed_pattern: str = "auto",
                 initial: MpsState | None = None) -> tuple:
    """Variational ground state of one boundary sector.

    Returns ``(DmrgResult, MpsState)``.  The initial state is a deterministic
    product seed (Dirac sea for m >= 0, meson pattern otherwise) padded with
    small seeded noise in every feasible particle sector; pass ``initial`` to
    warm-start from a previous solution instead.
    """
    if chi < 8:
        raise ValueError(f"bond dimension cap must be >= 8, got {chi}")
    policy = policy or SweepPolicy()
    L = params.geometry.L
    if initial is not None:
        if (initial.L, initial.n, initial.k0) != (L, params.n, params.k0):
            raise ValueError("warm-start MPS belongs to a different sector")
        mps = initial.copy()
        label = "warm"
    else:
        pattern, label = _seed_pattern(params, seed_pattern)
        mps = enriched_product_mps(L, params.n, params.k0, pattern, seed=seed)
    result = _run_sweeps(mps, params, chi, policy, lower_states=[])
    result.seed_pattern = label
    result.seed = seed
    return result, mps


def excited_states(params: ModelParams, chi: int = 512, count: int = 2,
                   policy: SweepPolicy | None = None, seed: int = 7,
                   ground: tuple | None = None) -> tuple:
    """Lowest ``count`` excitations above the ground state of the sector.

    Each level is optimized orthogonally to all previously converged states
    (projector method).  Returns ``(results, states)`` with the ground state
    at index 0; ``results[i].leakage`` records the residual overlap with the
    lower states.
    """
    if count not in (1, 2):
        raise ValueError(f"count must be 1 or 2, got {count}")
    policy = policy or SweepPolicy()
    if ground is None:
        res0, mps0 = ground_state(params, chi=chi, policy=policy, seed=seed)
    else:
        res0, mps0 = ground
    results, states = [res0], [mps0]
    for level in range(1, count + 1):
        pattern, _ = _seed_pattern(params, "auto")
        init = enriched_product_mps(params.geometry.L, params.n, params.k0,
                                    pattern, eps=0.5, seed=seed + 13 * level)
        res = _run_sweeps(init, params, chi, policy, lower_states=states)
        res.seed_pattern = f"excited-{level}"
        res.seed = seed + 13 * level
        results.append(res)
        states.append(init)
    return results, states
