import io
import itertools
import math
from collections import deque
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hypercount import errors
from hypercount.exact import forest_count
from hypercount.forests import (
    DiscretePMF, ForestCode, RootedForest, decode, distance_expectation, encode, pendant_reattach_pmf,
    read_forest, reattach_mode, reattach_ratio, sample_edge_split, sample_edge_split_seeded, sample_forest,
    smoothing_pmf, smoothing_pmf_ratio, validate, write_forest,
)


def all_codes(r, a, k):
    roots = tuple(range(a))
    nonroots = list(range(a, a + (r - 1) * k))
    n = a + (r - 1) * k

    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for others in itertools.combinations(rest, r - 2):
            left = [v for v in rest if v not in others]
            for tail in partitions(left):
                yield [(first,) + others] + tail

    for parts in partitions(nonroots):
        for body in itertools.product(range(n), repeat=k - 1):
            for last in roots:
                yield roots, ForestCode(parts, body + (last,))


def distances(f):
    adj = {}
    for e in f.edges:
        for v in e:
            adj.setdefault(v, []).append(e)
    dist = {v: 0 for v in f.roots}
    queue = deque(f.roots)
    while queue:
        v = queue.popleft()
        for e in adj.get(v, ()):
            for w in e:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
    return dist


class TestCodec:
    @pytest.mark.parametrize("r,a,k", [(2, 1, 3), (2, 2, 3), (3, 1, 3), (3, 2, 2), (4, 2, 2)])
    def test_bijection(self, r, a, k):
        seen = set()
        for roots, code in all_codes(r, a, k):
            f = decode(code, roots, r)
            validate(f)
            assert f.n == a + (r - 1) * k
            assert encode(f) == code
            seen.add(f.edges)
        assert len(seen) == forest_count(r, a, k)

    def test_roundtrip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            r = int(rng.integers(2, 5))
            a = int(rng.integers(1, 5))
            k = int(rng.integers(0, 8))
            roots = list(range(100, 100 + a))
            nonroots = list(rng.permutation(60)[: (r - 1) * k])
            f = sample_forest(r, roots, nonroots, rng)
            assert decode(encode(f), roots, r) == f

    def test_edgeless(self):
        f = sample_forest(3, [0, 1], [], np.random.default_rng(0))
        assert f.edges == ()
        assert encode(f) == ForestCode((), ())

    def test_uniform(self):
        # every [1]-rooted 2-forest on 4 vertices is a labelled tree; 16 of them
        rng = np.random.default_rng(5)
        counts = {}
        for _ in range(16000):
            f = sample_forest(2, [0], [1, 2, 3], rng)
            counts[f.edges] = counts.get(f.edges, 0) + 1
        assert len(counts) == 16
        assert stats.chisquare(list(counts.values())).pvalue > 1e-3

    @pytest.mark.parametrize("forest,invariant", [
        (RootedForest(2, (0,), [(0, 1), (1, 2), (0, 2)]), "acyclic"),
        (RootedForest(2, (0, 1), [(0, 2), (1, 2)]), "one-root-per-component"),
        (RootedForest(2, (0,), [(1, 2)]), "one-root-per-component"),
        (RootedForest(3, (0,), [(0, 1)]), "edge-size"),
        (RootedForest(2, (0, 0), [(0, 1)]), "distinct-roots"),
    ])
    def test_invalid_forest(self, forest, invariant):
        with pytest.raises(errors.ForestError) as info:
            validate(forest)
        assert info.value.invariant == invariant

    @pytest.mark.parametrize("code,invariant", [
        (ForestCode([(2,), (3,)], [0]), "word-length"),
        (ForestCode([(2, 3)], [0]), "part-size"),
        (ForestCode([(2,), (2,)], [0, 0]), "disjoint-parts"),
        (ForestCode([(0,)], [1]), "disjoint-parts"),
        (ForestCode([(2,), (3,)], [0, 2]), "word-ends-at-root"),
        (ForestCode([(2,), (3,)], [9, 0]), "word-alphabet"),
    ])
    def test_invalid_code(self, code, invariant):
        with pytest.raises(errors.ForestError) as info:
            decode(code, (0, 1), 2)
        assert info.value.invariant == invariant

    def test_file_roundtrip(self):
        f = sample_forest(3, [0, 1], list(range(2, 12)), np.random.default_rng(3))
        buf = io.StringIO()
        write_forest(f, buf)
        buf.seek(0)
        assert read_forest(buf, 3, [0, 1]) == f


class TestDistance:
    def test_roots(self):
        assert distance_expectation(3, 4, 5, 0) == 4

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 5), st.integers(1, 10), st.integers(0, 30), st.integers(0, 30))
    def test_bound(self, r, a, k, ell):
        assert distance_expectation(r, a, k, ell) <= a + (r - 1) * ell + 1e-9

    def test_exact_small(self):
        # average over every forest, by decoding all codes
        for r, a, k in ((2, 1, 3), (3, 2, 2)):
            tally = {}
            total = 0
            for roots, code in all_codes(r, a, k):
                total += 1
                for d in distances(decode(code, roots, r)).values():
                    tally[d] = tally.get(d, 0) + 1
            for ell in range(k + 2):
                assert distance_expectation(r, a, k, ell) == pytest.approx(tally.get(ell, 0) / total, abs=1e-12)

    def test_monte_carlo(self):
        rng = np.random.default_rng(2024)
        hits = 0
        trials = 10**5
        for _ in range(trials):
            f = sample_forest(2, [0], [1, 2, 3], rng)
            hits += sum(1 for d in distances(f).values() if d == 1)
        assert distance_expectation(2, 1, 3, 1) == pytest.approx(1.5, rel=1e-14)
        assert abs(hits / trials - 1.5) <= 0.03


class TestEdgeSplit:
    @pytest.mark.parametrize("r", [2, 3, 5])
    def test_single_edge(self, r):
        pmf = smoothing_pmf(r, 1, 1)
        assert pmf[0] == pytest.approx(0.5, abs=1e-15) and pmf[1] == pytest.approx(0.5, abs=1e-15)

    def test_symmetric(self):
        pmf = smoothing_pmf(3, 20, 5)
        assert all(pmf[k] == pmf[20 - k] for k in range(21))

    @pytest.mark.parametrize("r,m,a", [(2, 12, 4), (3, 20, 5), (4, 9, 2), (2, 40, 1)])
    def test_exact_ratio(self, r, m, a):
        exact = smoothing_pmf_ratio(r, m, a)
        assert sum(exact) == Fraction(1)
        pmf = smoothing_pmf(r, m, a)
        for k, q in enumerate(exact):
            assert pmf[k] == pytest.approx(float(q), rel=1e-12, abs=1e-300)

    def test_sampler_chi_square(self):
        r, m, a = 3, 6, 2
        pmf = smoothing_pmf(r, m, a)
        y = sample_edge_split(r, m, a, np.random.default_rng(8), 4000)
        obs = np.bincount(y, minlength=m + 1)
        assert stats.chisquare(obs, pmf.probs * y.size).pvalue > 1e-3

    def test_seeded_thread_invariant(self):
        one = sample_edge_split_seeded(2, 12, 4, 9, 5000, threads=1)
        two = sample_edge_split_seeded(2, 12, 4, 9, 5000, threads=2)
        assert one.tobytes() == two.tobytes()

    def test_domain(self):
        with pytest.raises(errors.DomainError):
            smoothing_pmf(2, 4, 0)


class TestReattach:
    def test_point_mass(self):
        pmf = pendant_reattach_pmf(3, 20, 50, 0.0)
        assert pmf[0] == 1.0 and pmf.hi == 0

    def test_ratio_matches(self):
        r, iso, cp, pi = 4, 30, 40, 0.01
        pmf = pendant_reattach_pmf(r, iso, cp, pi)
        for a in range(pmf.hi):
            assert pmf[a + 1] / pmf[a] == pytest.approx(reattach_ratio(r, iso, cp, pi, a), rel=1e-10)

    def test_mode(self):
        for args in ((3, 40, 30, 0.02), (4, 30, 40, 0.01), (2, 0, 100, 0.047)):
            assert reattach_mode(*args) == pendant_reattach_pmf(*args).mode()

    def test_graph_support(self):
        pmf = pendant_reattach_pmf(2, 0, 10, 0.5)
        assert pmf.hi == 10

    def test_domain(self):
        with pytest.raises(errors.DomainError):
            pendant_reattach_pmf(3, 10, 10, -1.0)


class TestPMF:
    def test_checks_sum(self):
        with pytest.raises(errors.DomainError):
            DiscretePMF(0, [0.5, 0.4])

    def test_csv(self):
        buf = io.StringIO()
        DiscretePMF(2, [0.25, 0.75]).write_csv(buf, "a")
        assert buf.getvalue() == "a,p\n2,0.25\n3,0.75\n"

    def test_moments(self):
        pmf = DiscretePMF(1, [0.2, 0.5, 0.3])
        assert pmf.mean() == pytest.approx(2.1)
        assert pmf.mode() == 2
        assert pmf[0] == 0.0


def grid_counts():
    for r in (2, 3, 4):
        for a in range(1, 7):
            for k in range(6):
                if forest_count(r, a, k) <= 10**5:
                    yield r, a, k


class TestCodecGrid:
    @pytest.mark.slow
    @pytest.mark.parametrize("r", [2, 3, 4])
    @pytest.mark.parametrize("a", [1, 2, 5])
    @pytest.mark.parametrize("k", [0, 1, 5, 20])
    def test_roundtrip_many(self, r, a, k):
        rng = np.random.default_rng(1000 * r + 10 * a + k)
        roots = list(range(a))
        for _ in range(10**4):
            nonroots = list(a + rng.permutation((r - 1) * k))
            f = sample_forest(r, roots, nonroots, rng)
            assert decode(encode(f), roots, r) == f

    @pytest.mark.slow
    def test_code_space_matches_count(self):
        for r, a, k in grid_counts():
            if k == 0:
                assert forest_count(r, a, k) == 1
                continue
            distinct = {decode(code, roots, r).edges for roots, code in all_codes(r, a, k)}
            assert len(distinct) == forest_count(r, a, k), (r, a, k)


class TestSmoothing:
    def test_random_sums(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            r, m, a = int(rng.integers(2, 7)), int(rng.integers(0, 2001)), int(rng.integers(1, 200))
            assert math.fsum(smoothing_pmf(r, m, a).probs) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("r", [2, 3])
    @pytest.mark.parametrize("a", [100, 300, 1000])
    def test_increments_small(self, r, a):
        m = a * a // 10
        sigma = m**1.5 / a
        p = smoothing_pmf(r, m, a).probs
        assert np.abs(np.diff(p)).max() <= 5 / sigma**2
