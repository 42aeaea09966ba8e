"""Exact minimum-weight perfect matching for code-capacity X errors.

Only the Z-type checks are decoded (they see the X component of an error;
Y contributes its X part, Z is invisible to the logical-Z memory).  Edge
weights are uniform, all-pairs shortest paths are precomputed by BFS, and
the matching itself is a subset DP over defects in which a single boundary
node may absorb any number of defects.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .codes import CodeSpec, PauliString

# bump whenever path choice or tie-breaking changes; stored next to D_k counts
DECODER_VERSION = "mwpm-dp-1"
DEFAULT_MAX_DEFECTS = 20
_INF = 1 << 30


class TooManyDefects(RuntimeError):
    pass


@dataclass(frozen=True)
class Correction:
    pauli: PauliString
    matched_pairs: tuple[tuple[int, int], ...]  # (defect, defect) or (defect, -1) for boundary
    weight: int


@dataclass
class DecodingGraph:
    code: CodeSpec
    check_indices: tuple[int, ...]
    edges: tuple[tuple[int, int, int, int], ...]  # (u, v, weight, qubit); boundary is node m
    dist: np.ndarray
    path_masks: list[list[int]]
    max_defects: int = DEFAULT_MAX_DEFECTS
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_checks(self) -> int:
        return len(self.check_indices)

    @property
    def boundary(self) -> int:
        return self.n_checks


def build_decoding_graph(code: CodeSpec, max_defects: int = DEFAULT_MAX_DEFECTS) -> DecodingGraph:
    checks = code.z_check_indices
    m = len(checks)
    boundary = m
    hz = code.z_check_matrix

    edges = []
    seen = {}
    for q in range(code.n):
        touching = [int(i) for i in np.flatnonzero(hz[:, q])]
        if len(touching) == 1:
            u, v = touching[0], boundary
        elif len(touching) == 2:
            u, v = touching
        else:
            raise ValueError(f"qubit {q} is in {len(touching)} Z checks; not matchable")
        if (u, v) not in seen:  # parallel edges: keep the lowest qubit
            seen[(u, v)] = q
            edges.append((u, v, 1, q))

    adj = [[] for _ in range(m + 1)]
    for u, v, _, q in edges:
        adj[u].append((v, q))
        adj[v].append((u, q))
    for nbrs in adj:
        nbrs.sort()

    # BFS from every node; the boundary is never used as an intermediate hop
    dist = np.full((m + 1, m + 1), _INF, dtype=np.int64)
    paths = [[0] * (m + 1) for _ in range(m + 1)]
    for src in range(m + 1):
        dist[src, src] = 0
        parent = {src: None}
        queue = deque([src])
        while queue:
            a = queue.popleft()
            if a == boundary and a != src:
                continue
            for b, q in adj[a]:
                if b not in parent:
                    parent[b] = (a, q)
                    dist[src, b] = dist[src, a] + 1
                    queue.append(b)
        for dst in parent:
            mask = 0
            node = dst
            while parent[node] is not None:
                node, q = parent[node]
                mask ^= 1 << q
            paths[src][dst] = mask

    # make the matrix exactly symmetric by taking the src<dst path both ways
    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            paths[b][a] = paths[a][b]
            dist[b, a] = dist[a, b]

    return DecodingGraph(code, checks, tuple(edges), dist, paths, max_defects)


def _match(defects: tuple[int, ...], dist: np.ndarray, boundary: int):
    """Min-weight pairing; ties go to the lexicographically first choice list.

    For the lowest unmatched defect the candidates are tried in the order
    boundary, then partners in increasing index, and only a strictly better
    total replaces the incumbent.
    """
    memo = {}
    k = len(defects)

    def solve(mask):
        if mask == 0:
            return 0, ()
        hit = memo.get(mask)
        if hit is not None:
            return hit
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        a = defects[i]
        cost, pairs = solve(rest)
        best = (int(dist[a, boundary]) + cost, ((a, -1),) + pairs)
        j_bits = rest
        while j_bits:
            j = (j_bits & -j_bits).bit_length() - 1
            j_bits &= j_bits - 1
            d_ab = int(dist[a, defects[j]])
            if d_ab >= _INF:
                continue
            cost, pairs = solve(rest & ~(1 << j))
            if d_ab + cost < best[0]:
                best = (d_ab + cost, ((a, defects[j]),) + pairs)
        memo[mask] = best
        return best

    return solve((1 << k) - 1)


def decode(graph: DecodingGraph, syndrome) -> Correction:
    """Decode a Z-check syndrome (one bit per Z-type check, in code order)."""
    bits = tuple(int(b) for b in syndrome)
    if len(bits) != graph.n_checks:
        raise ValueError(f"syndrome has {len(bits)} bits, graph has {graph.n_checks} checks")
    cached = graph._cache.get(bits)
    if cached is not None:
        return cached
    defects = tuple(i for i, b in enumerate(bits) if b)
    if len(defects) > graph.max_defects:
        raise TooManyDefects(f"{len(defects)} defects exceeds cap {graph.max_defects}")
    weight, pairs = _match(defects, graph.dist, graph.boundary)
    mask = 0
    for a, b in pairs:
        mask ^= graph.path_masks[a][graph.boundary if b < 0 else b]
    corr = Correction(PauliString(graph.code.n, mask, 0), pairs, weight)
    graph._cache[bits] = corr
    return corr


class BatchDecoder:
    """Vectorised failure evaluation on (shots, n) arrays of X components.

    Syndromes are packed into integers, each distinct syndrome is decoded
    once (and memoised), and failure is the parity of the residual with the
    logical Z support.
    """

    def __init__(self, graph: DecodingGraph):
        self.graph = graph
        code = graph.code
        self.hz = code.z_check_matrix.astype(np.int64)
        m = self.hz.shape[0]
        if m > 62:
            raise ValueError("too many checks to pack syndromes into int64")
        self.powers = (1 << np.arange(m, dtype=np.int64)).astype(np.int64)
        self.logical = code.logical_z_array.astype(np.int64)
        self.logical_mask = code.logical_z.z_mask
        self._flip: dict[int, int] = {}

    def syndromes(self, x: np.ndarray) -> np.ndarray:
        s = (x.astype(np.int64) @ self.hz.T) & 1
        return s @ self.powers

    def correction_flip(self, key: int) -> int:
        flip = self._flip.get(key)
        if flip is None:
            bits = [(key >> i) & 1 for i in range(self.graph.n_checks)]
            corr = decode(self.graph, bits)
            flip = (corr.pauli.x_mask & self.logical_mask).bit_count() & 1
            self._flip[key] = flip
        return flip

    def failures(self, x: np.ndarray) -> np.ndarray:
        """0/1 logical-failure indicator per row of X components."""
        if x.shape[0] == 0:
            return np.zeros(0, dtype=np.uint8)
        keys = self.syndromes(x)
        uniq, inv = np.unique(keys, return_inverse=True)
        flips = np.fromiter((self.correction_flip(int(k)) for k in uniq), dtype=np.int64, count=len(uniq))
        raw = (x.astype(np.int64) @ self.logical) & 1
        return (raw ^ flips[inv]).astype(np.uint8)
