"""Rooted hyperforests: a Prüfer-type bijection, uniform sampling, and the
edge-split and reattachment distributions built on top of it.

An A-rooted r-forest has one root per component.  Orienting every edge away
from its root, each edge has a unique *old* vertex (the one nearest the
root) and r - 1 new ones; the new vertices of all edges partition the
non-root vertices.  The code of a forest is that partition together with
the word of old vertices read off while repeatedly deleting the earliest
leaf edge.  Parts are ordered lexicographically as sorted tuples.
"""
from __future__ import annotations

import csv
import heapq
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ._parallel import block_rng, map_blocks
from .errors import DomainError, ForestError
from .exact import forest_count

PMF_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RootedForest:
    r: int
    roots: tuple
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(self.roots))
        object.__setattr__(self, "edges", tuple(sorted(tuple(sorted(e)) for e in self.edges)))

    @property
    def k(self) -> int:
        return len(self.edges)

    @property
    def n(self) -> int:
        return len(self.roots) + (self.r - 1) * len(self.edges)

    @property
    def vertices(self) -> tuple:
        vs = set(self.roots)
        for e in self.edges:
            vs.update(e)
        return tuple(sorted(vs))


@dataclass(frozen=True)
class ForestCode:
    partition: tuple
    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "partition", tuple(sorted(tuple(sorted(p)) for p in self.partition)))
        object.__setattr__(self, "word", tuple(self.word))


def _orient(f: RootedForest) -> list:
    """Old vertex of every edge, found by searching outward from the roots."""
    r = f.r
    incident: dict = {}
    for i, e in enumerate(f.edges):
        if len(set(e)) != r:
            raise ForestError("edge-size", f"edge {e} does not have {r} distinct vertices")
        for v in e:
            incident.setdefault(v, []).append(i)
    if len(set(f.roots)) != len(f.roots):
        raise ForestError("distinct-roots", f"roots {f.roots} repeat a vertex")

    owner = {v: v for v in f.roots}
    old = [None] * len(f.edges)
    queue = deque(f.roots)
    while queue:
        v = queue.popleft()
        for i in incident.get(v, ()):
            if old[i] is not None:
                continue
            old[i] = v
            for w in f.edges[i]:
                if w == v:
                    continue
                if w in owner:
                    if owner[w] != owner[v]:
                        raise ForestError("one-root-per-component",
                                          f"roots {owner[w]} and {owner[v]} share a component")
                    raise ForestError("acyclic", f"edge {f.edges[i]} closes a cycle")
                owner[w] = owner[v]
                queue.append(w)
    for i, o in enumerate(old):
        if o is None:
            raise ForestError("one-root-per-component", f"edge {f.edges[i]} is not connected to any root")
    return old


def validate(f: RootedForest) -> None:
    """Raise :class:`ForestError` unless ``f`` is an acyclic forest with one root per component."""
    _orient(f)


def _removal_order(parts: Sequence[tuple], olds: Sequence, pick) -> list:
    """Indices of parts in the order the earliest-leaf rule removes them.

    ``blocked[j]`` counts vertices of part j that are still the old vertex of
    an unremoved edge; part j is a leaf exactly when it is 0.  ``pick(i, j)``
    returns the old vertex released at step i when part j is removed.
    """
    part_of = {v: j for j, p in enumerate(parts) for v in p}
    occ: dict = {}
    for c in olds:
        occ[c] = occ.get(c, 0) + 1
    blocked = [sum(1 for v in p if occ.get(v, 0)) for p in parts]
    heap = [j for j, b in enumerate(blocked) if b == 0]
    heapq.heapify(heap)
    order = []
    for i in range(len(parts)):
        j = heapq.heappop(heap)
        order.append(j)
        c = pick(i, j)
        occ[c] -= 1
        if occ[c] == 0 and c in part_of:
            q = part_of[c]
            blocked[q] -= 1
            if blocked[q] == 0:
                heapq.heappush(heap, q)
    return order


def encode(f: RootedForest) -> ForestCode:
    """Prüfer-type code of a rooted forest."""
    old = _orient(f)
    k = f.k
    if k == 0:
        return ForestCode((), ())
    parts_by_edge = [tuple(v for v in e if v != o) for e, o in zip(f.edges, old)]
    order = sorted(range(k), key=lambda i: parts_by_edge[i])
    parts = [parts_by_edge[i] for i in order]
    olds = [old[i] for i in order]
    order = _removal_order(parts, olds, lambda i, j: olds[j])
    return ForestCode(tuple(parts), tuple(olds[j] for j in order))


def decode(c: ForestCode, roots: Sequence, r: int) -> RootedForest:
    """Inverse of :func:`encode`."""
    roots = tuple(roots)
    root_set = set(roots)
    parts, word = c.partition, c.word
    k = len(parts)
    if len(root_set) != len(roots) or not roots:
        raise ForestError("distinct-roots", f"need at least one root and no repeats, got {roots}")
    if len(word) != k:
        raise ForestError("word-length", f"word has length {len(word)}, expected {k}")
    seen = set()
    for p in parts:
        if len(p) != r - 1:
            raise ForestError("part-size", f"part {p} does not have {r - 1} vertices")
        for v in p:
            if v in seen or v in root_set:
                raise ForestError("disjoint-parts", f"vertex {v} is repeated or is a root")
            seen.add(v)
    if k == 0:
        return RootedForest(r, roots, ())
    if word[-1] not in root_set:
        raise ForestError("word-ends-at-root", f"last word entry {word[-1]} is not a root")
    vertex_set = seen | root_set
    for v in word:
        if v not in vertex_set:
            raise ForestError("word-alphabet", f"word entry {v} is not a vertex")

    order = _removal_order(parts, word, lambda i, j: word[i])
    return RootedForest(r, roots, [parts[j] + (word[i],) for i, j in enumerate(order)])


def sample_code(r: int, roots: Sequence, nonroots: Sequence, rng: np.random.Generator) -> ForestCode:
    roots, nonroots = list(roots), list(nonroots)
    t = r - 1
    if not roots or len(nonroots) % t:
        raise DomainError(f"need a >= 1 roots and a multiple of {t} non-roots, "
                          f"got {len(roots)} and {len(nonroots)}")
    k = len(nonroots) // t
    if k == 0:
        return ForestCode((), ())
    # uniform partition: every partition arises from (r-1)!^k k! orderings
    perm = rng.permutation(len(nonroots))
    shuffled = [nonroots[i] for i in perm]
    parts = [tuple(shuffled[i * t:(i + 1) * t]) for i in range(k)]
    everyone = roots + nonroots
    body = rng.integers(0, len(everyone), size=k - 1)
    word = [everyone[i] for i in body] + [roots[int(rng.integers(0, len(roots)))]]
    return ForestCode(parts, word)


def sample_forest(r: int, roots: Sequence, nonroots: Sequence, rng: np.random.Generator) -> RootedForest:
    """Uniformly random forest rooted at ``roots`` spanning ``roots`` and ``nonroots``."""
    return decode(sample_code(r, roots, nonroots, rng), roots, r)


def root_of_edges(c: ForestCode, roots: Sequence, r: int) -> list:
    """Root of the component holding each edge of a valid code, in removal order."""
    parts, word = c.partition, c.word
    removal = _removal_order(parts, word, lambda i, j: word[i])
    root_of = {v: v for v in roots}
    out = [None] * len(parts)
    # the edge removed last hangs off a root; walking backwards every old
    # vertex already has a known root
    for i in range(len(parts) - 1, -1, -1):
        rt = root_of[word[i]]
        out[i] = rt
        for v in parts[removal[i]]:
            root_of[v] = rt
    return out


def distance_expectation(r: int, a: int, k: int, ell: int) -> float:
    """Expected number of vertices at distance exactly ``ell`` from the roots
    in a uniform [a]-rooted r-forest with k edges."""
    if a < 1 or k < 0 or ell < 0:
        raise DomainError(f"need a >= 1, k >= 0, ell >= 0, got a={a}, k={k}, ell={ell}")
    if ell > k:
        return 0.0
    if ell == 0:
        return float(a)
    n = a + (r - 1) * k
    log_fall = math.lgamma(k + 1) - math.lgamma(k - ell + 1)
    return (a + (r - 1) * ell) * math.exp(ell * math.log(r - 1) + log_fall - ell * math.log(n))


class DiscretePMF:
    """Probabilities on the integer interval [lo, lo + len(probs) - 1]."""

    def __init__(self, lo: int, probs, check: bool = True):
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("a pmf needs a non-empty one-dimensional probability vector")
        if check:
            if (p < 0).any():
                raise DomainError("negative probability in pmf")
            total = math.fsum(p)
            if abs(total - 1.0) > PMF_TOLERANCE:
                raise DomainError(f"pmf sums to {total!r}, not 1 within {PMF_TOLERANCE}")
        self.lo = int(lo)
        self.probs = p
        self.probs.setflags(write=False)

    @property
    def hi(self) -> int:
        return self.lo + self.probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __getitem__(self, k: int) -> float:
        if k < self.lo or k > self.hi:
            return 0.0
        return float(self.probs[k - self.lo])

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def mode(self) -> int:
        return self.lo + int(np.argmax(self.probs))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lo + rng.choice(self.probs.size, size=size, p=self.probs / self.probs.sum())

    def write_csv(self, fh, label: str = "k") -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label, "p"])
        for k, p in zip(self.support, self.probs):
            w.writerow([int(k), f"{float(p):.17g}"])


def _smoothing_logs(r: int, m: int, a: int) -> np.ndarray:
    t = r - 1
    half = [0.0] * (m + 1)
    base = math.log(a / 2.0) - (m - 1) * math.log(2 * a + t * m)
    for k in range(m // 2 + 1):
        ell = m - k
        v = (base + math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(ell + 1)
             + (k - 1) * math.log(a + t * k) + (ell - 1) * math.log(a + t * ell))
        half[k] = half[ell] = v
    return np.array(half)


def smoothing_pmf(r: int, m: int, a: int) -> DiscretePMF:
    """Law of the number of edges hanging off the first a of 2a roots in a
    uniform 2a-rooted r-forest with m edges."""
    if m < 0 or a < 1 or r < 2:
        raise DomainError(f"need r >= 2, m >= 0, a >= 1, got r={r}, m={m}, a={a}")
    if m == 0:
        return DiscretePMF(0, [1.0])
    logs = _smoothing_logs(r, m, a)
    total = math.exp(logsumexp(logs))
    if abs(total - 1.0) > PMF_TOLERANCE:
        raise ArithmeticError(f"edge-split weights sum to {total!r} before normalisation")
    return DiscretePMF(0, np.exp(logs - math.log(total)))


def smoothing_pmf_ratio(r: int, m: int, a: int) -> list:
    """Exact p_k as Fractions, from forest counts: binom(tm, tk) F_{a,k} F_{a,m-k} / F_{2a,m}."""
    t = r - 1
    whole = forest_count(r, 2 * a, m)
    return [Fraction(math.comb(t * m, t * k) * forest_count(r, a, k) * forest_count(r, a, m - k), whole)
            for k in range(m + 1)]


def sample_edge_split(r: int, m: int, a: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` copies of the edge count in components rooted at the first
    a roots of a uniform 2a-rooted r-forest with m edges."""
    roots = list(range(2 * a))
    nonroots = list(range(2 * a, 2 * a + (r - 1) * m))
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        code = sample_code(r, roots, nonroots, rng)
        out[i] = sum(1 for rt in root_of_edges(code, roots, r) if rt < a)
    return out


EDGE_SPLIT_BLOCK = 4096


def _edge_split_block(r, m, a, seed, block, size):
    return sample_edge_split(r, m, a, block_rng(seed, block), size)


def sample_edge_split_seeded(r: int, m: int, a: int, seed: int, size: int, threads=None) -> np.ndarray:
    """:func:`sample_edge_split` in fixed blocks of independent seeds; the result
    depends on ``seed`` and ``size`` only, not on ``threads``."""
    jobs = [(r, m, a, seed, b, min(EDGE_SPLIT_BLOCK, size - b * EDGE_SPLIT_BLOCK))
            for b in range(-(-size // EDGE_SPLIT_BLOCK))]
    parts = map_blocks(_edge_split_block, jobs, threads)
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def _lbinom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def reattach_ratio(r: int, isolated: int, core_pairs: int, pi: float, a: int) -> float:
    """q_a = p_{a+1} / p_a for :func:`pendant_reattach_pmf`."""
    free = isolated - a * (r - 2)
    if free < r - 2:
        return 0.0
    return pi * math.comb(free, r - 2) * core_pairs / (a + 1)


def _reattach_top(r: int, isolated: int, core_pairs: int) -> int:
    if r == 2:
        return core_pairs
    return isolated // (r - 2)


def pendant_reattach_pmf(r: int, isolated: int, core_pairs: int, pi: float) -> DiscretePMF:
    """Law of the number of pendant edges joining an isolated (r-2)-set to a pair of core vertices.

    p_a is proportional to pi^a n_a, where n_a counts ways to choose a
    disjoint (r-2)-sets of isolated vertices, each paired with a core pair.
    """
    if r < 2 or isolated < 0 or core_pairs < 0:
        raise DomainError(f"need r >= 2 and non-negative sizes, got r={r}, |I|={isolated}, pairs={core_pairs}")
    if pi < 0:
        raise DomainError(f"odds must be non-negative, got {pi}")
    top = _reattach_top(r, isolated, core_pairs)
    if pi == 0 or core_pairs == 0 or top == 0:
        return DiscretePMF(0, [1.0])
    logs = np.empty(top + 1)
    acc = 0.0
    logs[0] = 0.0
    log_pi, log_cp = math.log(pi), math.log(core_pairs)
    for a in range(top):
        acc += log_pi + _lbinom(isolated - a * (r - 2), r - 2) + log_cp - math.log(a + 1)
        logs[a + 1] = acc
    return DiscretePMF(0, np.exp(logs - logsumexp(logs)))


def reattach_mode(r: int, isolated: int, core_pairs: int, pi: float) -> int:
    """Smallest a with q_a <= 1."""
    top = _reattach_top(r, isolated, core_pairs)
    for a in range(top + 1):
        if reattach_ratio(r, isolated, core_pairs, pi, a) <= 1.0:
            return a
    return top


def write_forest(f: RootedForest, fh) -> None:
    """One edge per line, vertex ids separated by spaces."""
    for e in f.edges:
        fh.write(" ".join(str(v) for v in e) + "\n")


def read_forest(fh, r: int, roots: Sequence) -> RootedForest:
    edges = [tuple(int(x) for x in line.split()) for line in fh if line.strip()]
    return RootedForest(r, tuple(roots), edges)
