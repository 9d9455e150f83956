"""Exact big-integer counts of labelled hypergraphs and rooted forests.

``connected_count`` is the workhorse.  Adding one edge to a labelled
hypergraph either stays inside a component or glues j >= 2 components
together, and the glued result has nullity equal to the sum of the parts
plus r - j.  Counting (connected hypergraph, marked edge) pairs both ways
gives a recurrence that only touches hypergraphs of nullity <= t, so the
work grows with t rather than with the edge count.  Coefficients are packed
into single integers (Kronecker substitution) so each polynomial product in
the nullity variable is one gmpy2 multiplication.

The textbook subtraction recurrence over the component of vertex 1 is kept as
:func:`connected_count_subtractive`; it is slow but shares nothing with the
fast path, which makes it a useful oracle.
"""
from __future__ import annotations

import itertools
import math
import threading
from functools import lru_cache

import gmpy2
from gmpy2 import mpz

from .errors import GuardError

BRUTE_FORCE_LIMIT = 10**7


def total_hypergraphs(r: int, a: int, b: int) -> int:
    """Number of r-uniform hypergraphs on a labelled vertices with b edges."""
    if a < 0 or b < 0:
        return 0
    return math.comb(math.comb(a, r), b)


def partition_count(k: int, t: int) -> int:
    """Ways to split a set of k*t elements into k unordered blocks of size t."""
    return math.factorial(k * t) // (math.factorial(k) * math.factorial(t) ** k)


def forest_count(r: int, a: int, k: int) -> int:
    """Number of [a]-rooted r-forests with k edges on a + (r-1)k labelled vertices.

    >>> forest_count(2, 1, 3)   # labelled trees on 4 vertices
    16
    >>> forest_count(3, 1, 2)
    15
    """
    if k == 0:
        return 1
    n = a + (r - 1) * k
    return a * n ** (k - 1) * partition_count(k, r - 1)


def nullity_of(r: int, s: int, m: int) -> int:
    """Nullity of a connected r-uniform hypergraph with s vertices and m edges."""
    return (r - 1) * m - s + 1


class _NullityTable:
    """Connected counts c[n][t] for 1 <= n <= S and nullity 0 <= t <= T."""

    def __init__(self, r: int, S: int, T: int):
        self.r, self.S, self.T = r, S, T
        self.counts = self._build()

    def _build(self):
        r, S, T = self.r, self.S, self.T
        kmax = (S - 1 + T) // (r - 1) + 1
        N = math.comb(S, r)
        # Every packed slot holds a count of (labelled structure, chosen vertices)
        # tuples; this bound covers all of them with room to spare.
        W = (
            int(mpz(math.comb(N, min(kmax, N // 2)) + 1).bit_length())
            + S + math.factorial(r).bit_length() + kmax.bit_length() + 16
        )
        nbits = (T + 1) * W
        low = lambda x: gmpy2.f_mod_2exp(x, nbits)
        slot = lambda x, t: int(gmpy2.f_mod_2exp(x >> (t * W), W))

        def pack(values):
            x = mpz(0)
            for i, v in enumerate(values):
                if v:
                    x |= mpz(v) << (i * W)
            return x

        counts = [None] * (S + 1)
        # weighted[n][a] packs binom(n, a) * c[n][.]; joined[j][n][a] packs ordered
        # j-tuples of components covering [n] with a chosen vertices in total.
        weighted = [None] * (S + 1)
        joined = {j: [None] * (S + 1) for j in range(2, r + 1)}
        facts = [math.factorial(j) for j in range(r + 1)]

        for n in range(1, S + 1):
            for j in range(2, r + 1):
                prev = weighted if j == 2 else joined[j - 1]
                acc = [mpz(0)] * (r + 1)
                for n1 in range(1, n):
                    right = prev[n - n1]
                    if right is None:
                        continue
                    left = weighted[n1]
                    b = math.comb(n, n1)
                    for a1 in range(1, r):
                        x = left[a1]
                        if not x:
                            continue
                        for a2 in range(1, r + 1 - a1):
                            y = right[a2]
                            if y:
                                acc[a1 + a2] += b * low(x * y)
                joined[j][n] = [low(v) for v in acc]

            row = [0] * (T + 1)
            if n == 1:
                row[0] = 1
            else:
                glue = [[slot(joined[j][n][r], t) for t in range(T + 1)] for j in range(2, r + 1)]
                inside = math.comb(n, r)
                kmin = -(-(n - 1) // (r - 1))
                for k in range(kmin - 1, kmax + 1):
                    t_new = nullity_of(r, n, k + 1)
                    if t_new > T:
                        break
                    if t_new < 0:
                        continue
                    t_old = t_new - (r - 1)
                    total = (inside - k) * row[t_old] if t_old >= 0 else 0
                    for j in range(2, r + 1):
                        t_parts = t_new - r + j
                        if t_parts >= 0:
                            q, rem = divmod(glue[j - 2][t_parts], facts[j])
                            assert rem == 0
                            total += q
                    q, rem = divmod(total, k + 1)
                    assert rem == 0, "edge-marking recurrence produced a non-integer"
                    row[t_new] = q
            counts[n] = row
            packed = pack(row)
            weighted[n] = [mpz(0)] + [math.comb(n, a) * packed for a in range(1, r + 1)]
        return counts


_tables: dict[int, _NullityTable] = {}
_tables_lock = threading.Lock()


def _table_for(r: int, s: int, t: int) -> _NullityTable:
    with _tables_lock:
        tab = _tables.get(r)
        if tab is None or tab.S < s or tab.T < t:
            S = max(s, tab.S if tab else 0)
            T = max(t, tab.T if tab else 0)
            tab = _NullityTable(r, S, T)
            _tables[r] = tab
        return tab


def connected_count_by_nullity(r: int, s: int, t: int) -> int:
    """Number of connected r-uniform hypergraphs on [s] with nullity t."""
    if s < 1 or t < 0:
        return 0
    if (s + t - 1) % (r - 1):
        return 0
    return _table_for(r, s, t).counts[s][t]


def connected_count(r: int, s: int, m: int) -> int:
    """Number of connected r-uniform hypergraphs on [s] with m edges."""
    if s < 1 or m < 0:
        return 0
    t = nullity_of(r, s, m)
    if t < 0 or m > math.comb(s, r):
        return 0
    return connected_count_by_nullity(r, s, t)


def connected_count_subtractive(r: int, s: int, m: int) -> int:
    """Same as :func:`connected_count`, via the component of vertex 1.

    D(s, m) = B(s, m) - sum_{s' < s} binom(s-1, s'-1) sum_k D(s', k) B(s - s', m - k).
    Only practical for small s.
    """

    @lru_cache(maxsize=None)
    def D(a: int, b: int) -> int:
        if a == 1:
            return 1 if b == 0 else 0
        total = total_hypergraphs(r, a, b)
        for a1 in range(1, a):
            w = math.comb(a - 1, a1 - 1)
            for k in range(0, min(b, math.comb(a1, r)) + 1):
                d = D(a1, k)
                if d:
                    total -= w * d * total_hypergraphs(r, a - a1, b - k)
        return total

    if s < 1 or m < 0:
        return 0
    return D(s, m)


class DisjointSet:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.size = [1] * size
        self.count = size

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        self.count -= 1
        return True


def _guard(space: int, what: str):
    if space > BRUTE_FORCE_LIMIT:
        raise GuardError(
            f"{what}: {space} candidate edge sets exceeds the brute-force limit {BRUTE_FORCE_LIMIT}"
        )


def brute_connected(r: int, s: int, m: int) -> int:
    """Count connected r-uniform hypergraphs on [s] with m edges by enumeration."""
    if s < 1 or m < 0:
        return 0
    edges = list(itertools.combinations(range(s), r))
    _guard(math.comb(len(edges), m), f"brute_connected(r={r}, s={s}, m={m})")
    found = 0
    for chosen in itertools.combinations(edges, m):
        ds = DisjointSet(s)
        for e in chosen:
            for v in e[1:]:
                ds.union(e[0], v)
        if ds.count == 1:
            found += 1
    return found


def brute_forest_count(r: int, a: int, k: int) -> int:
    """Count [a]-rooted r-forests on a + (r-1)k vertices by depth-first search.

    Edges are added in increasing index order; an edge is admissible only if
    its vertices lie in distinct current components, at most one of which
    contains a root.  A k-edge set built this way is acyclic, and it is a
    rooted forest exactly when every component ends up holding a root.
    """
    n = a + (r - 1) * k
    edges = list(itertools.combinations(range(n), r))

    def search(start, chosen, comp):
        if len(chosen) == k:
            rooted = {comp[v] for v in range(a)}
            return 1 if all(comp[v] in rooted for v in range(n)) else 0
        found = 0
        for i in range(start, len(edges)):
            e = edges[i]
            labels = {comp[v] for v in e}
            if len(labels) < r:
                continue
            roots_hit = sum(1 for lab in labels if lab < a)
            if roots_hit > 1:
                continue
            # merged label: keep a root label if one is involved
            new = min(labels)
            merged = [new if c in labels else c for c in comp]
            found += search(i + 1, chosen + [i], merged)
        return found

    # component label = smallest vertex in the component; roots are 0..a-1
    return search(0, [], list(range(n)))


def log_count(x: int) -> float:
    """Natural log of a positive big integer."""
    return math.log(x)
