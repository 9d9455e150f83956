import io
import itertools
import json
import math

import numpy as np
import pytest

from hypercount import errors
from hypercount.asymptotics import CORRELATION, LogReal
from hypercount.exact import connected_count_by_nullity
from hypercount.params import ModelParams, rho_profile, sigmas
from hypercount.simulate import RECORD_DTYPE, TrialConfig
from hypercount.verify import (
    TrialBatch, cell_masses, expected_components, expected_trees, full_report, histogram_csv, l1_marginal_ks,
    llt_histogram_test, mode_cell_check, moment_report, rare_event_report, report_to_json, run_batch,
    tree_scaling_report,
)

MP = ModelParams.from_eps(3, 30000, 0.3)


def gaussian_batch(trials, seed=0, mp=MP, scale=(1.0, 1.0)):
    """Records drawn from the limiting Gaussian itself."""
    rng = np.random.default_rng(seed)
    prof = rho_profile(mp.r, mp.lam)
    sn, ss = sigmas(mp)
    cov = [[1.0, CORRELATION], [CORRELATION, 1.0]]
    z = rng.multivariate_normal([0.0, 0.0], cov, size=trials)
    rec = np.zeros(trials, dtype=RECORD_DTYPE)
    rec["trial"] = np.arange(trials)
    rec["L1"] = np.rint(prof.rho * mp.n + scale[0] * sn * z[:, 0])
    rec["N1"] = np.rint(prof.rho_star * mp.n + scale[1] * ss * z[:, 1])
    return TrialBatch(TrialConfig(mp, trials, seed, 0.0), rec)


def enumerate_graphs(n, p):
    """(probability, edge list) for every graph on n vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        yield p ** len(edges) * (1 - p) ** (len(pairs) - len(edges)), edges


def graph_components(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    comps = {}
    for v in range(n):
        comps.setdefault(find(v), [0, 0])[0] += 1
    for u, _ in edges:
        comps[find(u)][1] += 1
    return [(s, m - s + 1) for s, m in comps.values()]


class TestHistogram:
    def test_cell_masses(self):
        edges = np.linspace(-3, 3, 13)
        mass = cell_masses(edges)
        assert mass == pytest.approx(mass.T, abs=1e-13)
        assert mass == pytest.approx(mass[::-1, ::-1], abs=1e-13)
        # mass inside the square, from the closed-form one-dimensional marginal
        from scipy import stats

        assert mass.sum() < stats.norm.cdf(3) - stats.norm.cdf(-3)
        assert mass.sum() > 0.99

    def test_well_specified(self):
        h = llt_histogram_test(gaussian_batch(10**5, seed=3))
        assert h.p_value > 1e-3
        assert h.observed.sum() + h.pooled_observed - h.observed[h.expected < 5].sum() == pytest.approx(10**5)

    def test_shifted_mean(self):
        h = llt_histogram_test(gaussian_batch(10**4, seed=4), shift=(5.0, 5.0))
        assert h.p_value < 1e-6

    def test_wrong_variance_detected(self):
        h = llt_histogram_test(gaussian_batch(10**4, seed=5, scale=(1.0, 0.8)))
        assert h.p_value < 1e-3

    def test_needs_trials(self):
        with pytest.raises(errors.DomainError):
            llt_histogram_test(gaussian_batch(100))

    def test_csv(self):
        h = llt_histogram_test(gaussian_batch(10**4, seed=6))
        buf = io.StringIO()
        histogram_csv(h, buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 1 + 144
        assert sum(int(x.split(",")[4]) for x in lines[1:]) == int(h.observed.sum())


class TestMoments:
    def test_gaussian_batch_passes(self):
        rows = moment_report(gaussian_batch(10**4, seed=1))
        assert all(c.passed for c in rows), [c for c in rows if not c.passed]

    def test_single_trial(self):
        b = gaussian_batch(1, seed=2)
        rows = {c.name: c for c in moment_report(b)}
        assert rows["L1 mean"].observed == b.records["L1"][0]
        assert rows["N1 mean"].observed == b.records["N1"][0]
        assert rows["L1 variance"].observed is None
        assert "under-powered" in rows["L1 mean"].note

    def test_mode_and_ks(self):
        b = gaussian_batch(10**5, seed=7)
        assert mode_cell_check(b).passed
        assert l1_marginal_ks(b).passed

    def test_reference_run_mean(self, llt_batch):
        rows = {c.name: c for c in moment_report(llt_batch.value)}
        assert rows["L1 mean"].passed

    @pytest.mark.xfail(strict=True, reason="KS is 0.034 at eps=0.3; the N1-driven skew of L1 is still visible")
    def test_reference_run_ks(self, llt_batch):
        assert l1_marginal_ks(llt_batch.value).passed


class TestExpectations:
    def test_trees_isolated(self):
        r, m, p = 3, 500, 1e-5
        assert expected_trees(r, m, p, 0) == pytest.approx(m * (1 - p) ** math.comb(m - 1, r - 1), rel=1e-10)

    def test_trees_by_enumeration(self):
        n, p = 6, 0.3
        want = {}
        for w, edges in enumerate_graphs(n, p):
            for s, t in graph_components(n, edges):
                if t == 0:
                    want[s - 1] = want.get(s - 1, 0.0) + w
        for k in range(n):
            assert expected_trees(2, n, p, k) == pytest.approx(want.get(k, 0.0), rel=1e-10)

    def test_components_by_enumeration(self):
        n, p = 6, 0.35
        want = {}
        for w, edges in enumerate_graphs(n, p):
            for key in graph_components(n, edges):
                want[key] = want.get(key, 0.0) + w
        for (s, t), value in want.items():
            logC = LogReal.from_int(connected_count_by_nullity(2, s, t))
            got = expected_components(2, n, p, s, t, logC)
            assert math.exp(got.log_abs) == pytest.approx(value, rel=1e-10)

    @pytest.mark.parametrize("r,m,p", [(2, 200, 0.004), (3, 300, 2e-5), (4, 150, 5e-6), (3, 60, 0.01)])
    def test_trees_cover_at_most_all_vertices(self, r, m, p):
        ks = [k for k in range(m) if k * (r - 1) + 1 <= m]
        covered = math.fsum(expected_trees(r, m, p, k) * (k * (r - 1) + 1) for k in ks)
        assert covered <= m * (1 + 1e-12)

    def test_components_empty(self):
        logC = LogReal.from_int(connected_count_by_nullity(2, 4, 0))
        assert expected_components(2, 10, 0.0, 4, 0, logC).sign == 0

    def test_scaling_report(self):
        c = tree_scaling_report(3, 20000, 0.85 / 20000**2, kmax=10)
        assert c.observed == pytest.approx(6.1, abs=0.05)


class TestReports:
    def test_edgeless_rare_events(self):
        b = run_batch(ModelParams.from_p(3, 100, 0.0), 50, seed=1, threads=1)
        rows = {c.name: c for c in rare_event_report(b)}
        assert rows["residual has a complex component"].observed == 0.0
        assert rows["several complex components"].observed == 0.0

    def test_json(self):
        b = run_batch(ModelParams.from_eps(2, 400, 0.5), 30, seed=2, threads=1)
        text = report_to_json(full_report(b))
        data = json.loads(text)
        assert data["config"]["trials"] == 30
        assert {"name", "predicted", "observed", "band", "passed"} <= set(data["comparisons"][0])
        assert isinstance(data["all_passed"], bool)
