"""Sampling H^r(n, p) and measuring its components, core and extended core.

Edges are identified with their colex rank in [0, binom(n, r)).  A sample is
a set of ranks, drawn either by geometric skipping (sparse case) or by one
Bernoulli matrix per block of trials (when binom(n, r) is tiny), and
unranked with the combinatorial number system.

Many trials are analysed at once by placing them side by side in one big
vertex set (trial i owns vertices [i n, (i + 1) n)), so components, tallies
and peeling are a handful of numpy passes per block.  Trials are grouped
into blocks of a size fixed by the configuration, and each block gets its
own seed, so the output does not depend on how many workers run it.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._parallel import block_rng, default_threads, map_blocks  # noqa: F401
from .errors import DomainError
from .params import ModelParams

RANK_LIMIT = 2**63
DENSE_RANKS = 2048
BLOCK_VERTICES = 2**20
MAX_BLOCK_TRIALS = 4096
MARK_ALPHA = 0.01

RECORD_FIELDS = (
    "trial", "L1", "M1", "N1", "L2", "core_size", "excore_size",
    "components", "isolated", "complex", "residual_complex", "residual_pairs",
)
RECORD_DTYPE = np.dtype([(f, np.int64) for f in RECORD_FIELDS])


class Hypergraph:
    """An r-uniform hypergraph on vertices 0..n-1, optionally with marked vertices."""

    __slots__ = ("n", "r", "edges", "marks")

    def __init__(self, n: int, r: int, edges=(), marks: Optional[Iterable[int]] = None, check: bool = True):
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, r)
        arr = np.sort(arr, axis=1)
        if check and arr.size:
            if arr.min() < 0 or arr.max() >= n:
                raise DomainError(f"edge vertex outside [0, {n})")
            if r > 1 and (np.diff(arr, axis=1) == 0).any():
                raise DomainError("an edge repeats a vertex")
            if np.unique(arr, axis=0).shape[0] != arr.shape[0]:
                raise DomainError("repeated edge")
        arr.setflags(write=False)
        self.n, self.r, self.edges = int(n), int(r), arr
        self.marks = None if marks is None else frozenset(int(v) for v in marks)

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    def with_marks(self, marks) -> "Hypergraph":
        return Hypergraph(self.n, self.r, self.edges, marks, check=False)

    def edge_set(self) -> set:
        return {tuple(int(v) for v in e) for e in self.edges}

    def __eq__(self, other):
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.n, self.r, self.marks) == (other.n, other.r, other.marks) and \
            self.edge_set() == other.edge_set()

    def __repr__(self):
        marks = "" if self.marks is None else f", marks={len(self.marks)}"
        return f"Hypergraph(n={self.n}, r={self.r}, m={self.m}{marks})"


# ----------------------------------------------------------------------------
# ranks


@lru_cache(maxsize=8)
def _binom_table(n: int, r: int) -> tuple:
    # table[i][c] = binom(c, i) for c in 0..n, exact in int64 while binom(n, r) < 2^63
    tables = [np.ones(n + 1, dtype=np.int64)]
    for _ in range(1, r + 1):
        prev = tables[-1]
        nxt = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(prev[:-1], out=nxt[1:])
        tables.append(nxt)
    return tuple(tables)


def edge_space(n: int, r: int) -> int:
    N = math.comb(n, r)
    if N >= RANK_LIMIT:
        raise DomainError(f"binom({n}, {r}) = {N} does not fit in 63-bit edge ranks")
    return N


def unrank(ranks: np.ndarray, n: int, r: int) -> np.ndarray:
    """Colex unranking: rank = sum_i binom(c_i, i) with c_1 < ... < c_r.

    >>> unrank(np.arange(4), 5, 3).tolist()
    [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
    """
    tables = _binom_table(n, r)
    rem = np.asarray(ranks, dtype=np.int64).copy()
    out = np.empty((rem.size, r), dtype=np.int64)
    for i in range(r, 0, -1):
        c = np.searchsorted(tables[i], rem, side="right") - 1
        out[:, i - 1] = c
        rem -= tables[i][c]
    return out


def rank(edges: np.ndarray, n: int, r: int) -> np.ndarray:
    tables = _binom_table(n, r)
    e = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, r), axis=1)
    return sum(tables[i + 1][e[:, i]] for i in range(r))


def _skip_ranks(N: int, p: float, rng: np.random.Generator) -> np.ndarray:
    if p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(N, dtype=np.int64)
    mean = p * N
    chunk = int(mean + 6.0 * math.sqrt(mean) + 16)
    out, pos = [], -1
    while True:
        gaps = rng.geometric(p, size=chunk)
        cum = pos + np.cumsum(gaps)
        if cum[-1] >= N:
            out.append(cum[cum < N])
            break
        out.append(cum)
        pos = int(cum[-1])
    return np.concatenate(out)


def sample(mp: ModelParams, rng: np.random.Generator) -> Hypergraph:
    """One draw of H^r(n, p)."""
    N = edge_space(mp.n, mp.r)
    ranks = _skip_ranks(N, mp.p, rng)
    return Hypergraph(mp.n, mp.r, unrank(ranks, mp.n, mp.r), check=False)


def mark(h: Hypergraph, prob: float, rng: np.random.Generator) -> Hypergraph:
    """Mark every vertex independently with probability ``prob``."""
    if not 0.0 <= prob <= 1.0:
        raise DomainError(f"mark probability must lie in [0, 1], got {prob}")
    return h.with_marks(np.flatnonzero(rng.random(h.n) < prob).tolist())


def default_mark_probability(mp: ModelParams) -> float:
    return MARK_ALPHA * mp.eps**2 if mp.eps > 0 else 0.0


# ----------------------------------------------------------------------------
# components


@dataclass(frozen=True)
class ComponentSummary:
    """Per-component tallies (indexed in order of smallest vertex) and the giant's statistics."""

    r: int
    labels: np.ndarray = field(repr=False)
    orders: np.ndarray = field(repr=False)
    sizes: np.ndarray = field(repr=False)
    nullities: np.ndarray = field(repr=False)
    giant: int
    L1: int
    M1: int
    N1: int
    L2: int
    count: int
    isolated: int


def _label_components(V: int, r: int, edges: np.ndarray):
    """Components of a hypergraph on V vertices, numbered by increasing smallest vertex.

    Returns (count, label of each vertex, smallest vertex of each component).
    """
    if edges.shape[0] == 0:
        ids = np.arange(V, dtype=np.int64)
        return V, ids, ids.copy()
    rows = np.repeat(edges[:, 0], r - 1)
    cols = edges[:, 1:].ravel()
    graph = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(V, V)).tocsr()
    count, raw = connected_components(graph, directed=False)
    # relabel so that label order follows the smallest vertex of each component
    first = np.full(count, V, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(V, dtype=np.int64))
    by_min = np.argsort(first, kind="stable")
    rename = np.empty(count, dtype=np.int64)
    rename[by_min] = np.arange(count)
    return count, rename[raw], first[by_min]


def _tallies(V: int, r: int, edges: np.ndarray):
    count, labels, minv = _label_components(V, r, edges)
    orders = np.bincount(labels, minlength=count)
    sizes = np.bincount(labels[edges[:, 0]], minlength=count) if edges.shape[0] else np.zeros(count, np.int64)
    nullities = 1 + (r - 1) * sizes - orders
    return labels, orders, sizes, nullities, minv


def components(h: Hypergraph) -> ComponentSummary:
    labels, orders, sizes, nullities, minv = _tallies(h.n, h.r, h.edges)
    # largest order wins; ties go to the smallest minimum vertex, i.e. the lowest label
    giant = int(np.lexsort((minv, -orders))[0])
    rest = np.delete(orders, giant)
    return ComponentSummary(
        r=h.r, labels=labels, orders=orders, sizes=sizes, nullities=nullities, giant=giant,
        L1=int(orders[giant]), M1=int(sizes[giant]), N1=int(nullities[giant]),
        L2=int(rest.max()) if rest.size else 0,
        count=int(orders.size), isolated=int(np.count_nonzero(orders == 1)),
    )


def connected_pairs(h: Hypergraph) -> int:
    """Ordered pairs (u, v), u = v allowed, joined by a path: the sum of squared component orders."""
    orders = components(h).orders
    return int(np.dot(orders, orders))


def tree_census(h: Hypergraph) -> dict:
    """Number of tree components with k edges, for each k that occurs."""
    s = components(h)
    ks, counts = np.unique(s.sizes[s.nullities == 0], return_counts=True)
    return {int(k): int(c) for k, c in zip(ks, counts)}


def complex_count(h: Hypergraph) -> int:
    """Number of components with nullity at least 2."""
    return int(np.count_nonzero(components(h).nullities >= 2))


# ----------------------------------------------------------------------------
# core and extended core


def _peel_worklist(h: Hypergraph, marks: frozenset, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    # An edge survives while at least two of its vertices are marked or lie in
    # another surviving edge.  Returns the surviving-edge mask.
    m, edges = h.m, h.edges.tolist()
    deg = [0] * h.n
    incident = [[] for _ in range(h.n)]
    for i, e in enumerate(edges):
        for v in e:
            deg[v] += 1
            incident[v].append(i)
    alive = [True] * m

    def supported(i):
        return sum(1 for v in edges[i] if deg[v] >= 2 or v in marks)

    start = list(range(m))
    if rng is not None:
        start = [int(i) for i in rng.permutation(m)]
    work = deque(start)
    queued = [True] * m
    while work:
        i = work.popleft()
        queued[i] = False
        if not alive[i] or supported(i) >= 2:
            continue
        alive[i] = False
        for v in edges[i]:
            deg[v] -= 1
            if deg[v] == 1:
                # the one remaining edge at v just lost a supported vertex
                for j in incident[v]:
                    if alive[j] and not queued[j]:
                        queued[j] = True
                        work.append(j)
    return np.array(alive, dtype=bool)


def core(h: Hypergraph, rng: Optional[np.random.Generator] = None) -> Hypergraph:
    """The core, with vertex ids preserved.  Its vertices are those covered by its edges.

    ``rng`` randomises the peeling order; the result does not depend on it.
    """
    alive = _peel_worklist(h, frozenset(), rng)
    return Hypergraph(h.n, h.r, h.edges[alive], check=False)


def extended_core(h: Hypergraph, rng: Optional[np.random.Generator] = None) -> Hypergraph:
    """The extended core of a marked hypergraph.  Its vertices are those covered
    by its edges together with every marked vertex."""
    if h.marks is None:
        raise DomainError("extended_core needs a marked hypergraph")
    alive = _peel_worklist(h, h.marks, rng)
    return Hypergraph(h.n, h.r, h.edges[alive], h.marks, check=False)


def core_vertices(c: Hypergraph) -> set:
    vs = set(np.unique(c.edges).tolist())
    if c.marks is not None:
        vs |= c.marks
    return vs


def mantle(h: Hypergraph, core_subset: Iterable[int]) -> set:
    """Vertices outside the extended core whose tree path into it ends in ``core_subset``."""
    ext = extended_core(h)
    cv = core_vertices(ext)
    A = set(int(v) for v in core_subset)
    if not A <= cv:
        raise DomainError(f"vertices {sorted(A - cv)[:10]} are not in the extended core")
    kept = {tuple(e) for e in ext.edges.tolist()}
    peeled = np.array([e for e in h.edges.tolist() if tuple(e) not in kept], dtype=np.int64).reshape(-1, h.r)
    _, labels, _ = _label_components(h.n, h.r, peeled)
    anchor = {}
    for v in cv:
        anchor[int(labels[v])] = v
    out = set()
    for v in range(h.n):
        if v in cv:
            continue
        a = anchor.get(int(labels[v]))
        if a is not None and a in A:
            out.add(v)
    return out


def _ragged_gather(ptr: np.ndarray, data: np.ndarray, rows: np.ndarray) -> np.ndarray:
    starts, stops = ptr[rows], ptr[rows + 1]
    lens = stops - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=data.dtype)
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return data[offs + np.arange(total)]


def incidence(V: int, edges: np.ndarray):
    """Vertex degrees and a CSR vertex -> edge index for ``edges``."""
    r = edges.shape[1]
    flat = edges.ravel()
    deg = np.bincount(flat, minlength=V).astype(np.int64)
    inc = np.argsort(flat, kind="stable") // r
    ptr = np.concatenate(([0], np.cumsum(deg)))
    return deg, ptr, inc


def peel_mask(V: int, edges: np.ndarray, marked: Optional[np.ndarray] = None, index=None) -> np.ndarray:
    """Vectorised peeling on many hypergraphs at once; same survivors as the worklist version.

    Only edges through a vertex whose degree just fell to 1 are re-examined.
    """
    m = edges.shape[0]
    if m == 0:
        return np.zeros(0, dtype=bool)
    deg, ptr, inc = index if index is not None else incidence(V, edges)
    deg = deg.copy()
    alive = np.ones(m, dtype=bool)
    mk = np.zeros(V, dtype=bool) if marked is None else marked
    cand = np.arange(m)
    while cand.size:
        e = edges[cand]
        support = ((deg[e] >= 2) | mk[e]).sum(axis=1)
        drop = cand[support < 2]
        if drop.size == 0:
            break
        alive[drop] = False
        verts, counts = np.unique(edges[drop].ravel(), return_counts=True)
        deg[verts] -= counts
        touched = verts[deg[verts] == 1]
        cand = np.unique(_ragged_gather(ptr, inc, touched))
        cand = cand[alive[cand]]
    return alive


# ----------------------------------------------------------------------------
# edge-list files


def write_edgelist(h: Hypergraph, fh) -> None:
    fh.write(f"{h.r} {h.n}\n")
    for e in h.edges.tolist():
        fh.write(" ".join(map(str, e)) + "\n")
    if h.marks is not None:
        fh.write("marks:" + "".join(f" {v}" for v in sorted(h.marks)) + "\n")


def read_edgelist(fh) -> Hypergraph:
    lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DomainError("empty edge-list file")
    try:
        r, n = (int(x) for x in lines[0].split())
    except ValueError:
        raise DomainError(f"bad header {lines[0]!r}; expected 'r n'") from None
    edges, marks = [], None
    for ln in lines[1:]:
        if ln.startswith("marks:"):
            marks = [int(x) for x in ln[len("marks:"):].split()]
        else:
            e = [int(x) for x in ln.split()]
            if len(e) != r:
                raise DomainError(f"edge {ln!r} does not have {r} vertices")
            edges.append(e)
    return Hypergraph(n, r, edges, marks)


# ----------------------------------------------------------------------------
# batched trials


@dataclass(frozen=True)
class TrialConfig:
    params: ModelParams
    trials: int
    seed: int
    mark_prob: float
    census_max: int = -1

    @property
    def block_trials(self) -> int:
        return max(1, min(MAX_BLOCK_TRIALS, BLOCK_VERTICES // self.params.n))

    @property
    def blocks(self) -> int:
        return -(-self.trials // self.block_trials)


def _sample_block(cfg: TrialConfig, B: int, rng: np.random.Generator) -> np.ndarray:
    """Edges of B independent draws, trial b shifted to vertices [b n, (b + 1) n)."""
    n, r, p = cfg.params.n, cfg.params.r, cfg.params.p
    N = edge_space(n, r)
    if N <= DENSE_RANKS:
        hits = rng.random((B, N)) < p
        trial, ranks = np.nonzero(hits)
    else:
        parts = [_skip_ranks(N, p, rng) for _ in range(B)]
        trial = np.repeat(np.arange(B), [x.size for x in parts])
        ranks = np.concatenate(parts) if parts else np.empty(0, np.int64)
    return unrank(ranks, n, r) + (trial * n)[:, None]


def _run_block(cfg: TrialConfig, block: int):
    n, r = cfg.params.n, cfg.params.r
    first = block * cfg.block_trials
    B = min(cfg.block_trials, cfg.trials - first)
    V = B * n
    rng = block_rng(cfg.seed, block)
    edges = _sample_block(cfg, B, rng)
    marked = rng.random(V) < cfg.mark_prob

    labels, orders, sizes, nullities, minv = _tallies(V, r, edges)
    ctrial = minv // n
    idx = np.lexsort((minv, -orders, ctrial))
    starts = np.searchsorted(ctrial[idx], np.arange(B))
    ends = np.searchsorted(ctrial[idx], np.arange(B), side="right")
    giant = idx[starts]
    has_second = starts + 1 < ends
    second = idx[np.minimum(starts + 1, idx.size - 1)]

    rec = np.zeros(B, dtype=RECORD_DTYPE)
    rec["trial"] = np.arange(first, first + B)
    rec["L1"], rec["M1"], rec["N1"] = orders[giant], sizes[giant], nullities[giant]
    rec["L2"] = np.where(has_second, orders[second], 0)
    rec["components"] = np.bincount(ctrial, minlength=B)
    rec["isolated"] = np.bincount(ctrial[orders == 1], minlength=B)
    is_complex = nullities >= 2
    rec["complex"] = np.bincount(ctrial[is_complex], minlength=B)
    rec["residual_complex"] = rec["complex"] - is_complex[giant]
    rec["residual_pairs"] = np.bincount(ctrial, weights=orders.astype(float) ** 2, minlength=B).astype(np.int64) \
        - orders[giant] ** 2

    vtrial = np.arange(V) // n
    index = incidence(V, edges) if edges.shape[0] else None
    alive = peel_mask(V, edges, index=index)
    covered = np.zeros(V, dtype=bool)
    covered[edges[alive].ravel()] = True
    rec["core_size"] = np.bincount(vtrial[covered], minlength=B)
    alive = peel_mask(V, edges, marked, index=index)
    covered[:] = marked
    covered[edges[alive].ravel()] = True
    rec["excore_size"] = np.bincount(vtrial[covered], minlength=B)

    census = None
    if cfg.census_max >= 0:
        K = cfg.census_max + 1
        keep = (nullities == 0) & (sizes < K)
        census = np.bincount(ctrial[keep] * K + sizes[keep], minlength=B * K).reshape(B, K)
    return rec, census


def run_trials(cfg: TrialConfig, threads: Optional[int] = None):
    """Run all trials; returns (records, census) with census None unless requested.

    Results are identical for every ``threads`` value.
    """
    if cfg.trials < 1:
        raise DomainError(f"need at least one trial, got {cfg.trials}")
    edge_space(cfg.params.n, cfg.params.r)
    results = map_blocks(_run_block, [(cfg, b) for b in range(cfg.blocks)], threads)
    records = np.concatenate([x[0] for x in results])
    census = None
    if cfg.census_max >= 0:
        census = np.concatenate([x[1] for x in results])
    return records, census


def write_records(records: np.ndarray, fh) -> None:
    fh.write(",".join(RECORD_FIELDS) + "\n")
    for row in records.tolist():
        fh.write(",".join(map(str, row)) + "\n")
