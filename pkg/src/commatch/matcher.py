"""Typicality matching: ambiguity sets with and without community knowledge.

The ambiguity set collects every candidate labeling of the anonymized graph
whose per-community-pair blocks are all jointly eps-typical against the
model; the matcher then outputs a uniformly chosen member. With community
knowledge ("csi") the candidate space is restricted to community-preserving
labelings (prod_i n_i! of them); without it ("wsi") every permutation is a
candidate and the test sweeps hypothesized community assignments.

Candidate spaces are enumerated, never searched heuristically, so a size
guard refuses jobs above a configurable cap. The csi path avoids per-candidate
Python work by factoring typicality over communities: intra blocks depend on
one community's assignment, inter blocks on a pair, so per-community
permutations are enumerated once and combined through boolean masks. The
resulting decisions agree bit-for-bit with `is_jointly_typical` because every
cell count is compared through the same float expression.

Canonical member order everywhere is lexicographic by the inverse mapping
(label -> anonymized vertex), which both enumeration orders produce directly;
seeded selection indexes into that order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import permutations, product
from typing import Iterable, Optional

import numpy as np

from .errors import EmptyAmbiguitySetError, ParameterError, SizeGuardError
from .graphgen import MatchingInstance, _philox
from .permutation import Labeling, Permutation
from .typicality import blocks_jointly_typical, default_epsilon, paired_blocks

DEFAULT_CANDIDATE_CAP = 10_000_000
_SELECT_TAG = 0x9E1B


@dataclass(frozen=True)
class AmbiguitySet:
    """Labelings that survived the typicality test, in canonical order.

    candidate_space counts the hypotheses examined: prod_i n_i! (csi
    restricted), n! (csi unrestricted), or n! times the number of swept
    assignments (wsi).
    """

    labelings: tuple[Labeling, ...]
    eps: float
    mode: str
    candidate_space: int

    def __len__(self) -> int:
        return len(self.labelings)

    def __iter__(self):
        return iter(self.labelings)

    def __contains__(self, lab: Labeling) -> bool:
        return any(m.mapping == lab.mapping for m in self.labelings)


def _sorted_members(members: Iterable[Labeling]) -> list[Labeling]:
    return sorted(members, key=lambda p: p.inverse().mapping)


# -- csi fast path ------------------------------------------------------------
#
# Communities are matched pointwise under a community-preserving candidate, so
# the candidate factors into per-community position permutations rho_i mapping
# the i-th community's sorted labels onto its sorted anonymized vertices. The
# typicality of the intra block i depends only on rho_i; of the inter block
# (i, j) only on (rho_i, rho_j).

@dataclass(frozen=True)
class _CsiGrid:
    labels_of: list[np.ndarray]
    verts_of: list[np.ndarray]
    perms: list[np.ndarray]  # per community, (R_i, k_i), lex order
    mask: np.ndarray         # bool, shape (R_1, ..., R_c), row-major == canonical order
    candidate_space: int


def _intra_mask(g1: np.ndarray, g2: np.ndarray, labels: np.ndarray, verts: np.ndarray,
                perms: np.ndarray, p: np.ndarray, eps: float) -> np.ndarray:
    k = len(labels)
    if k < 2:
        return np.ones(len(perms), dtype=bool)
    s1, s2 = np.triu_indices(k, 1)
    xv = g1[labels[s1], labels[s2]]
    b = g2[np.ix_(verts, verts)]
    gathered = b[perms[:, s1], perms[:, s2]]  # (R, S)
    slots = len(s1)
    l = p.shape[0]
    ok = np.ones(len(perms), dtype=bool)
    for x in range(l):
        on_x = xv == x
        for y in range(l):
            cnt = ((gathered == y) & on_x[None, :]).sum(axis=1)
            ok &= np.abs(cnt / slots - p[x, y]) <= eps
    return ok


def _inter_mask(g1: np.ndarray, g2: np.ndarray,
                labels_i: np.ndarray, labels_j: np.ndarray,
                verts_i: np.ndarray, verts_j: np.ndarray,
                perms_i: np.ndarray, perms_j: np.ndarray,
                p: np.ndarray, eps: float) -> np.ndarray:
    """Typicality mask of one inter block over all (rho_i, rho_j) pairs.

    Counts only the cells with both symbols >= 1 via bilinear forms
    sum_{q1,q2} 1{A=x} 1{B[rho_i(q1), rho_j(q2)]=y}; the remaining cells
    follow from the permutation-invariant marginal totals.
    """
    a = g1[np.ix_(labels_i, labels_j)]
    b = g2[np.ix_(verts_i, verts_j)]
    ki, kj = a.shape
    slots = ki * kj
    l = p.shape[0]
    ri, rj = len(perms_i), len(perms_j)
    rowsum = [(a == x).sum() for x in range(l)]
    colsum = [(b == y).sum() for y in range(l)]
    ax = [(a == x).astype(float) for x in range(l)]
    by = [(b == y).astype(float) for y in range(l)]
    qrows = np.arange(ki)[None, :]
    counts = np.zeros((l, l, ri, rj))
    for r in range(rj):
        cols = perms_j[r]
        for y in range(1, l):
            bp = by[y][:, cols]
            for x in range(1, l):
                m = ax[x] @ bp.T  # m[q1, p1] = sum_q2 1{a[q1,q2]=x} 1{b[p1, rho_j(q2)]=y}
                counts[x, y, :, r] = m[qrows, perms_i].sum(axis=1)
    hot = counts[1:, 1:]
    counts[1:, 0] = np.asarray(rowsum[1:]).reshape(-1, 1, 1) - hot.sum(axis=1)
    counts[0, 1:] = np.asarray(colsum[1:]).reshape(-1, 1, 1) - hot.sum(axis=0)
    counts[0, 0] = slots - sum(rowsum[1:]) - sum(colsum[1:]) + hot.sum(axis=(0, 1))
    ok = np.ones((ri, rj), dtype=bool)
    for x in range(l):
        for y in range(l):
            ok &= np.abs(counts[x, y] / slots - p[x, y]) <= eps
    return ok


def _csi_grid(inst: MatchingInstance, eps: float, cap: int) -> _CsiGrid:
    if inst.comm1_of_label is None or inst.comm2_of_vertex is None:
        raise ParameterError("csi matching needs community maps on both sides")
    c, joint = inst.c, inst.model.joint
    comm1 = np.asarray(inst.comm1_of_label)
    comm2 = np.asarray(inst.comm2_of_vertex)
    labels_of = [np.flatnonzero(comm1 == i) for i in range(c)]
    verts_of = [np.flatnonzero(comm2 == i) for i in range(c)]
    for i in range(c):
        if len(labels_of[i]) != len(verts_of[i]):
            raise ParameterError(f"community {i + 1} sizes differ between sides")
    total = 1
    for g in labels_of:
        total *= math.factorial(len(g))
    if total > cap:
        raise SizeGuardError(f"{total} candidate labelings exceed cap {cap}")
    perms = [np.asarray(list(permutations(range(len(g))))) for g in labels_of]
    shape = tuple(len(p) for p in perms)
    mask = np.ones(shape, dtype=bool)
    g1, g2 = inst.g1_values, inst.g2_values
    for i in range(c):
        mi = _intra_mask(g1, g2, labels_of[i], verts_of[i], perms[i], joint[i, i], eps)
        mask &= mi.reshape(tuple(shape[i] if ax == i else 1 for ax in range(c)))
    for i in range(c):
        for j in range(i + 1, c):
            mij = _inter_mask(g1, g2, labels_of[i], labels_of[j], verts_of[i],
                              verts_of[j], perms[i], perms[j], joint[i, j], eps)
            mask &= mij.reshape(
                tuple(shape[ax] if ax in (i, j) else 1 for ax in range(c)))
    return _CsiGrid(labels_of=labels_of, verts_of=verts_of, perms=perms,
                    mask=mask, candidate_space=total)


def _labeling_at(grid: _CsiGrid, idx: tuple[int, ...]) -> Labeling:
    n = sum(len(g) for g in grid.labels_of)
    ltv = np.empty(n, dtype=np.int64)
    for i, r in enumerate(idx):
        ltv[grid.labels_of[i]] = grid.verts_of[i][grid.perms[i][r]]
    return Permutation(tuple(int(v) for v in ltv)).inverse()


def _truth_index(grid: _CsiGrid, truth: Labeling) -> Optional[tuple[int, ...]]:
    """Grid coordinates of the true labeling, None when not community-preserving."""
    tinv = truth.inverse().mapping
    idx = []
    for i, labels in enumerate(grid.labels_of):
        vpos = {int(v): q for q, v in enumerate(grid.verts_of[i])}
        rho = []
        for a in labels:
            v = tinv[a]
            if v not in vpos:
                return None
            rho.append(vpos[v])
        ranks = {tuple(row): r for r, row in enumerate(grid.perms[i].tolist())}
        idx.append(ranks[tuple(rho)])
    return tuple(idx)


# -- public constructors ------------------------------------------------------

def ambiguity_set_csi(inst: MatchingInstance,
                      eps: Optional[float] = None,
                      restrict: bool = True,
                      cap: int = DEFAULT_CANDIDATE_CAP) -> AmbiguitySet:
    """All typical candidates given community maps on both sides.

    restrict=True (default) enumerates only community-preserving labelings;
    restrict=False scans all n! labelings with the same per-block test, which
    exists to measure the gap at small n. Non-preserving candidates pair each
    side's blocks positionally, so the restricted set is always a subset.
    """
    eps = default_epsilon(inst.n) if eps is None else eps
    if restrict:
        grid = _csi_grid(inst, eps, cap)
        members = [_labeling_at(grid, tuple(idx)) for idx in np.argwhere(grid.mask)]
        return AmbiguitySet(tuple(_sorted_members(members)), eps, "csi",
                            grid.candidate_space)
    if inst.comm1_of_label is None or inst.comm2_of_vertex is None:
        raise ParameterError("csi matching needs community maps on both sides")
    n = inst.n
    total = math.factorial(n)
    if total > cap:
        raise SizeGuardError(f"{total} candidate labelings exceed cap {cap}")
    joint = inst.model.joint
    members = []
    for ltv in permutations(range(n)):  # lex in the inverse mapping == canonical
        blocks = paired_blocks(inst.g1_values, inst.comm1_of_label,
                               inst.g2_values, ltv, inst.comm2_of_vertex, inst.c)
        if blocks_jointly_typical(blocks, joint, eps):
            members.append(Permutation(ltv).inverse())
    return AmbiguitySet(tuple(members), eps, "csi", total)


def _assignments_with_sizes(n: int, sizes: tuple[int, ...]) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    cur: list[int] = []

    def rec(pos: int, remaining: list[int]):
        if pos == n:
            out.append(tuple(cur))
            return
        for i in range(len(sizes)):
            if remaining[i]:
                remaining[i] -= 1
                cur.append(i)
                rec(pos + 1, remaining)
                cur.pop()
                remaining[i] += 1

    rec(0, list(sizes))
    return out


def ambiguity_set_wsi(inst: MatchingInstance,
                      eps: Optional[float] = None,
                      full_sweep: bool = False,
                      cap: int = DEFAULT_CANDIDATE_CAP) -> AmbiguitySet:
    """Union of per-assignment ambiguity sets when communities are unknown.

    A candidate enters when some hypothesized community assignment of the
    labels (default: every assignment with the instance's declared sizes)
    makes all blocks jointly typical; the anonymized side's assignment is the
    candidate's image of the hypothesis, which is the only pairing with any
    community-preserving candidates, so sweeping assignment pairs reduces to
    sweeping one side. full_sweep drops the size constraint and tries all c^n
    assignments (guarded to n <= 8).
    """
    eps = default_epsilon(inst.n) if eps is None else eps
    n, c = inst.n, inst.c
    joint = inst.model.joint
    if full_sweep:
        if n > 8:
            raise SizeGuardError(f"full assignment sweep is limited to n <= 8, got n={n}")
        assignments = [tuple(m) for m in product(range(c), repeat=n)]
    else:
        assignments = _assignments_with_sizes(n, inst.sizes)
    total = math.factorial(n) * len(assignments)
    if total > cap:
        raise SizeGuardError(
            f"{math.factorial(n)} candidates x {len(assignments)} assignments "
            f"exceed cap {cap}")
    members = []
    for ltv in permutations(range(n)):
        sigma = Permutation(ltv).inverse()
        for m1 in assignments:
            comm2 = tuple(m1[sigma.mapping[v]] for v in range(n))
            blocks = paired_blocks(inst.g1_values, m1, inst.g2_values, ltv, comm2, c)
            if blocks_jointly_typical(blocks, joint, eps):
                members.append(sigma)
                break
    return AmbiguitySet(tuple(members), eps, "wsi", total)


def select_labeling(s: AmbiguitySet, seed: int) -> Labeling:
    """Uniform seeded pick; deterministic given the set's contents and seed."""
    if not s.labelings:
        raise EmptyAmbiguitySetError(
            f"ambiguity set empty (mode {s.mode}, eps {s.eps})")
    members = _sorted_members(s.labelings)
    k = int(_philox(seed, _SELECT_TAG).integers(len(members)))
    return members[k]


# -- end to end ---------------------------------------------------------------

@dataclass(frozen=True)
class MatchDiagnostics:
    mode: str
    eps: float
    ambiguity_size: int
    candidate_space: int
    truth_included: bool
    wall_time_ms: float


@dataclass(frozen=True)
class MatchResult:
    labeling: Labeling
    accuracy: float
    diagnostics: MatchDiagnostics


def run_matching(inst: MatchingInstance,
                 eps: Optional[float] = None,
                 seed: int = 0,
                 cap: int = DEFAULT_CANDIDATE_CAP) -> MatchResult:
    """Build the mode's ambiguity set, pick a member, score against the truth.

    The csi path selects directly from the boolean candidate grid without
    materializing members, which matches select_labeling's canonical order
    (row-major grid order is lexicographic in the inverse mapping).
    truth_included is evaluation-side information taken from the sealed truth
    after the choice is made.
    """
    t0 = time.perf_counter()
    eps = default_epsilon(inst.n) if eps is None else eps
    if inst.mode == "csi":
        grid = _csi_grid(inst, eps, cap)
        flat = np.flatnonzero(grid.mask.ravel())
        size = int(flat.size)
        if size == 0:
            raise EmptyAmbiguitySetError(f"ambiguity set empty (mode csi, eps {eps})")
        k = int(_philox(seed, _SELECT_TAG).integers(size))
        # Row-major grid order is the canonical order only when label
        # communities are contiguous; otherwise rank k must be resolved on the
        # sorted members.
        contiguous = np.array_equal(
            np.concatenate(grid.labels_of), np.arange(inst.n))
        if contiguous:
            idx = np.unravel_index(int(flat[k]), grid.mask.shape)
            chosen = _labeling_at(grid, tuple(int(v) for v in idx))
        else:
            members = [_labeling_at(grid, tuple(i)) for i in np.argwhere(grid.mask)]
            chosen = _sorted_members(members)[k]
        space = grid.candidate_space
        tidx = _truth_index(grid, inst.sealed_truth())
        truth_in = bool(grid.mask[tidx]) if tidx is not None else False
    else:
        s = ambiguity_set_wsi(inst, eps, cap=cap)
        size = len(s)
        space = s.candidate_space
        chosen = select_labeling(s, seed)
        truth_map = inst.sealed_truth().mapping
        truth_in = any(m.mapping == truth_map for m in s.labelings)
    acc = inst.score(chosen)
    diag = MatchDiagnostics(
        mode=inst.mode,
        eps=eps,
        ambiguity_size=size,
        candidate_space=space,
        truth_included=truth_in,
        wall_time_ms=(time.perf_counter() - t0) * 1000.0,
    )
    return MatchResult(labeling=chosen, accuracy=acc, diagnostics=diag)
