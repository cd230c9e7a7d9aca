"""Matrix product states over pair cells with graded bond indices.

Bond indices are partitioned into sectors labeled by the number of fermions
to the left of the bond.  Because Gauss' law makes every link label a
function of the cumulative particle count,

    k(bond after cell j) = k0 + p - (j+1)   (mod n),

this single U(1) grading simultaneously (i) pins the half-filling sector and
(ii) carries the Z_n link label on every bond, so gauge invariance is
structural: no tensor block can connect cells whose shared link labels
disagree, and no sweep can leave the physical subspace.

Tensors are stored blockwise as dictionaries {(p_left, s): 2-d array} with
s = 2*occ_even + occ_odd indexing the four cell states compatible with the
incoming label.  The chain is kept in mixed-canonical form; helper methods
move the center with exact QR/LQ steps.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np

from zngauge.hamiltonian import CELL_WEIGHT, ModelParams

__all__ = ["MpsState", "product_mps", "enriched_product_mps", "load_mps", "save_mps"]

ORTHO_TOL = 1e-10


def sector_range(L: int, b: int) -> range:
    """Feasible particle counts left of bond b at half filling."""
    lo = max(0, L - 2 * (L - b))
    hi = min(2 * b, L)
    return range(lo, hi + 1)


def sector_capacity(L: int, b: int, p: int) -> int:
    """Schmidt-rank bound of sector p at bond b."""
    return min(math.comb(2 * b, p), math.comb(2 * (L - b), L - p))


class MpsState:
    """Graded MPS over L pair cells in the (n, k0) half-filled sector."""

    def __init__(self, L: int, n: int, k0: int, tensors: list, center: int = 0):
        self.L = L
        self.n = n
        self.k0 = k0
        self.tensors = tensors  # list of dict {(pl, s): (Dl, Dr) array}
        self.center = center

    # -- structure ---------------------------------------------------------

    def bond_sectors(self, b: int) -> dict:
        """Sector dimensions {p: D} at bond b (0..L)."""
        if b == 0:
            return {0: 1}
        dims = {}
        for (pl, s), block in self.tensors[b - 1].items():
            pr = pl + CELL_WEIGHT[s]
            prev = dims.setdefault(pr, block.shape[1])
            if prev != block.shape[1]:
                raise ValueError(f"inconsistent dims in sector {pr} at bond {b}")
        return dims

    def bond_dimension(self, b: int) -> int:
        return sum(self.bond_sectors(b).values())

    def max_bond_dimension(self) -> int:
        return max(self.bond_dimension(b) for b in range(self.L + 1))

    def k_in(self, j: int, pl: int) -> int:
        """Link label entering cell j when pl particles sit to its left."""
        return (self.k0 + pl - j) % self.n

    def copy(self) -> "MpsState":
        tensors = [{k: v.copy() for k, v in t.items()} for t in self.tensors]
        return MpsState(self.L, self.n, self.k0, tensors, self.center)

    # -- canonical form ----------------------------------------------------

    def _qr_step(self, j: int) -> None:
        """Left-orthonormalize cell j, absorbing R into cell j+1 (exact)."""
        tensor = self.tensors[j]
        groups = {}
        for (pl, s), block in sorted(tensor.items()):
            pr = pl + CELL_WEIGHT[s]
            groups.setdefault(pr, []).append(((pl, s), block))
        new_tensor: dict = {}
        rmats = {}
        for pr, items in groups.items():
            M = np.vstack([b for _, b in items])
            Q, R = np.linalg.qr(M)
            rmats[pr] = R
            row = 0
            for (key, block) in items:
                new_tensor[key] = Q[row:row + block.shape[0]]
                row += block.shape[0]
        self.tensors[j] = new_tensor
        if j + 1 < self.L:
            nxt = self.tensors[j + 1]
            self.tensors[j + 1] = {
                key: rmats[key[0]] @ block for key, block in nxt.items() if key[0] in rmats
            }
        else:
            # absorb the 1x1 right edge factor as a global scale
            (pr, R), = rmats.items()
            self.tensors[j] = {k: v * R[0, 0] for k, v in self.tensors[j].items()}

    def _lq_step(self, j: int) -> None:
        """Right-orthonormalize cell j, absorbing L into cell j-1 (exact)."""
        tensor = self.tensors[j]
        groups = {}
        for (pl, s), block in sorted(tensor.items()):
            groups.setdefault(pl, []).append(((pl, s), block))
        new_tensor: dict = {}
        lmats = {}
        for pl, items in groups.items():
            M = np.hstack([b for _, b in items])
            Q, R = np.linalg.qr(M.T)
            lmats[pl] = R.T
            col = 0
            for (key, block) in items:
                new_tensor[key] = Q.T[:, col:col + block.shape[1]]
                col += block.shape[1]
        self.tensors[j] = new_tensor
        if j > 0:
            prv = self.tensors[j - 1]
            out = {}
            for (pl, s), block in prv.items():
                pr = pl + CELL_WEIGHT[s]
                if pr in lmats:
                    out[(pl, s)] = block @ lmats[pr]
            self.tensors[j - 1] = out
        else:
            (pl, Lm), = lmats.items()
            self.tensors[j] = {k: Lm[0, 0] * v for k, v in self.tensors[j].items()}

    def move_center(self, target: int) -> None:
        while self.center < target:
            self._qr_step(self.center)
            self.center += 1
        while self.center > target:
            self._lq_step(self.center)
            self.center -= 1

    def check_canonical(self, tol: float = ORTHO_TOL) -> float:
        """Largest orthonormality defect among the A/B tensors."""
        worst = 0.0
        for j in range(self.L):
            tensor = self.tensors[j]
            if j < self.center:  # left-canonical
                acc = {}
                for (pl, s), block in tensor.items():
                    pr = pl + CELL_WEIGHT[s]
                    acc[pr] = acc.get(pr, 0) + block.T @ block
                for pr, g in acc.items():
                    worst = max(worst, np.abs(g - np.eye(g.shape[0])).max())
            elif j > self.center:  # right-canonical
                acc = {}
                for (pl, s), block in tensor.items():
                    acc[pl] = acc.get(pl, 0) + block @ block.T
                for pl, g in acc.items():
                    worst = max(worst, np.abs(g - np.eye(g.shape[0])).max())
        return worst

    def norm(self) -> float:
        c = self.tensors[self.center]
        return float(np.sqrt(sum(np.sum(b * b) for b in c.values())))

    def normalize(self) -> None:
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero MPS")
        c = self.tensors[self.center]
        self.tensors[self.center] = {k: v / nrm for k, v in c.items()}

    # -- contractions ------------------------------------------------------

    def overlap(self, other: "MpsState") -> float:
        """<self|other> for matching (L, n, k0)."""
        if (self.L, self.n, self.k0) != (other.L, other.n, other.k0):
            raise ValueError("overlap between different sectors")
        env = {0: np.ones((1, 1))}
        for j in range(self.L):
            nxt: dict = {}
            for (pl, s), blk_s in self.tensors[j].items():
                blk_o = other.tensors[j].get((pl, s))
                if blk_o is None or pl not in env:
                    continue
                pr = pl + CELL_WEIGHT[s]
                contrib = blk_s.T @ env[pl] @ blk_o
                nxt[pr] = nxt.get(pr, 0) + contrib
            env = nxt
        if not env:
            return 0.0
        (final,) = env.values()
        return float(final[0, 0])

    def amplitude(self, pattern) -> float:
        """Coefficient of one occupation pattern (chain-basis expansion)."""
        occ = list(pattern)
        vec = np.ones((1, 1))
        p = 0
        for j in range(self.L):
            s = 2 * occ[2 * j] + occ[2 * j + 1]
            block = self.tensors[j].get((p, s))
            if block is None:
                return 0.0
            vec = vec @ block
            p += CELL_WEIGHT[s]
        return float(vec[0, 0])

    def to_dense(self, basis) -> np.ndarray:
        """Amplitudes over an ED basis of the same sector (small L only)."""
        if basis.n != self.n or basis.k0 != self.k0 or basis.geometry.L != self.L:
            raise ValueError("basis does not match the MPS sector")
        return np.array([self.amplitude(basis.patterns[i]) for i in range(len(basis))])

    # -- measurements ------------------------------------------------------

    def schmidt_values(self, b: int) -> np.ndarray:
        """Singular values across bond b (cell boundary cut), descending."""
        if not 0 <= b <= self.L:
            raise ValueError(f"bond {b} outside 0..{self.L}")
        if b == 0 or b == self.L:
            return np.array([self.norm()])
        work = self.copy()
        work.move_center(b)
        svals = []
        groups = {}
        for (pl, s), block in work.tensors[b].items():
            groups.setdefault(pl, []).append(block)
        for pl, blocks in groups.items():
            M = np.hstack(blocks)
            svals.extend(np.linalg.svd(M, compute_uv=False))
        return np.sort(np.array(svals))[::-1]

    def site_cut_schmidt_values(self, cut: int) -> np.ndarray:
        """Singular values across an arbitrary staggered-site cut 0..N."""
        N = 2 * self.L
        if not 0 <= cut <= N:
            raise ValueError(f"cut {cut} outside 0..{N}")
        if cut % 2 == 0:
            return self.schmidt_values(cut // 2)
        j = (cut - 1) // 2
        work = self.copy()
        work.move_center(j)
        tensor = work.tensors[j]
        qs = sorted({pl + divmod(s, 2)[0] for (pl, s) in tensor})
        svals = []
        for q in qs:  # Schmidt sector of the mid-cell cut: pl + occ_even
            row_keys = [(pl, e) for e in (0, 1) for pl in (q - e,)
                        if any(k == (q - e, 2 * e + o) for o in (0, 1) for k in tensor)]
            col_keys = [o for o in (0, 1)
                        if any((q - e, 2 * e + o) in tensor for e in (0, 1))]
            rdims = {}
            cdims = {}
            for (pl, e) in row_keys:
                for o in col_keys:
                    blk = tensor.get((pl, 2 * e + o))
                    if blk is not None:
                        rdims[(pl, e)] = blk.shape[0]
                        cdims[o] = blk.shape[1]
            if not rdims:
                continue
            roff, acc = {}, 0
            for key in sorted(rdims):
                roff[key] = acc
                acc += rdims[key]
            coff, acc2 = {}, 0
            for key in sorted(cdims):
                coff[key] = acc2
                acc2 += cdims[key]
            M = np.zeros((acc, acc2))
            for (pl, e) in roff:
                for o in coff:
                    blk = tensor.get((pl, 2 * e + o))
                    if blk is not None:
                        M[roff[(pl, e)]:roff[(pl, e)] + blk.shape[0],
                          coff[o]:coff[o] + blk.shape[1]] = blk
            svals.extend(np.linalg.svd(M, compute_uv=False))
        return np.sort(np.array(svals))[::-1]

    def cell_weights(self, j: int) -> dict:
        """Probabilities {(pl, s): w} of cell j's graded states."""
        work = self.copy()
        work.move_center(j)
        total = work.norm() ** 2
        return {key: float(np.sum(b * b)) / total for key, b in work.tensors[j].items()}

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        save_mps(self, path)


def save_mps(mps: MpsState, path) -> None:
    """Versioned checkpoint; float64 blocks round-trip bit-exactly."""
    meta = {
        "format": "zngauge-mps", "version": 1,
        "L": mps.L, "n": mps.n, "k0": mps.k0, "center": mps.center,
        "keys": [sorted([list(map(int, k)) for k in t.keys()]) for t in mps.tensors],
    }
    arrays = {}
    for j, tensor in enumerate(mps.tensors):
        for i, key in enumerate(meta["keys"][j]):
            arrays[f"block_{j}_{i}"] = tensor[tuple(key)]
    buf = io.BytesIO()
    np.savez(buf, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_mps(path) -> MpsState:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format") != "zngauge-mps" or meta.get("version") != 1:
            raise ValueError(f"unrecognized checkpoint format in {path}")
        tensors = []
        for j, keys in enumerate(meta["keys"]):
            tensors.append({tuple(key): data[f"block_{j}_{i}"] for i, key in enumerate(keys)})
    return MpsState(meta["L"], meta["n"], meta["k0"], tensors, meta["center"])


def product_mps(L: int, n: int, k0: int, pattern) -> MpsState:
    """Bond-dimension-1 MPS of one occupation pattern."""
    occ = list(pattern)
    if len(occ) != 2 * L:
        raise ValueError("pattern length must be 2L")
    tensors = []
    p = 0
    for j in range(L):
        s = 2 * occ[2 * j] + occ[2 * j + 1]
        tensors.append({(p, s): np.ones((1, 1))})
        p += CELL_WEIGHT[s]
    if p != L:
        raise ValueError("seed pattern must be half filled")
    return MpsState(L, n, k0, tensors, center=0)


def enriched_product_mps(L: int, n: int, k0: int, pattern, chi0: int = 4,
                         eps: float = 1e-3, seed: int = 0) -> MpsState:
    """Product seed padded with small random weight in every feasible sector.

    Keeps the seed dominant (branch selection stays deterministic) while
    giving the two-site sweeps immediate access to all particle sectors.
    """
    rng = np.random.default_rng(seed)
    occ = list(pattern)
    dims = [dict() for _ in range(L + 1)]
    dims[0] = {0: 1}
    dims[L] = {L: 1}
    for b in range(1, L):
        dims[b] = {p: min(chi0, sector_capacity(L, b, p)) for p in sector_range(L, b)}
    tensors = []
    p_seed = 0
    for j in range(L):
        s_seed = 2 * occ[2 * j] + occ[2 * j + 1]
        tensor = {}
        for pl, Dl in dims[j].items():
            for s in range(4):
                pr = pl + CELL_WEIGHT[s]
                if pr not in dims[j + 1]:
                    continue
                block = eps * rng.standard_normal((Dl, dims[j + 1][pr]))
                tensor[(pl, s)] = block
        seed_block = tensor[(p_seed, s_seed)]
        seed_block[0, 0] += 1.0
        p_seed += CELL_WEIGHT[s_seed]
        tensors.append(tensor)
    mps = MpsState(L, n, k0, tensors, center=0)
    mps.move_center(L - 1)
    mps.move_center(0)
    mps.normalize()
    return mps
