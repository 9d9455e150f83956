"""Comparing simulated batches of H^r(n, p) with the predicted statistics.

Every check produces a :class:`Comparison` row: what was predicted, what
was observed, the band allowed and whether the observation fell inside it.
Asymptotic statements get relative or factor bands; exact identities get
standard-error bands.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate, stats

from .asymptotics import CORRELATION, GaussianLLT, LocalLimitWarning, LogReal
from .errors import DomainError
from .exact import connected_count_by_nullity, partition_count
from .params import ModelParams, rho_profile, sigmas
from .simulate import TrialConfig, default_mark_probability, run_trials

# Bands.  Means and variances of the giant component are asymptotic
# statements, so they get relative bands sized for eps^3 n around 10^3.
BANDS = {
    "L1_mean_rel": 0.02,
    "L1_var_rel": 0.20,
    "N1_mean_rel": 0.10,
    "N1_var_rel": 0.30,
    "correlation_abs": 0.06,
    # chi-square and KS tests at a level that a correct model passes essentially always
    "chi2_min_p": 1e-3,
    "ks_max": 0.02,
    # central histogram cell: observed / predicted
    "mode_ratio": (0.8, 1.25),
    # exact expectations against Monte Carlo means
    "stderr_mult": 3.0,
    # Theta(n (k+1)^{-5/2}) read as "within a factor 4"
    "tree_scaling_factor": 4.0,
    # Pr(L1 = s, N1 = t) / E[N_{s,t}] for the most likely cells
    "component_ratio": (0.7, 1.4),
    # rare events: O(1/(eps^3 n)) and O(n/eps) with generous constants
    "complex_residual_const": 10.0,
    "residual_pairs_const": 20.0,
}

HIST_BINS = 12
HIST_HALF_WIDTH = 3.0
MIN_EXPECTED = 5.0


@dataclass
class Comparison:
    name: str
    predicted: Optional[float]
    observed: Optional[float]
    band: str
    passed: bool
    stderr: Optional[float] = None
    note: str = ""


@dataclass
class TrialBatch:
    config: TrialConfig
    records: np.ndarray
    census: Optional[np.ndarray] = None

    @property
    def params(self) -> ModelParams:
        return self.config.params

    @property
    def trials(self) -> int:
        return self.records.shape[0]


def run_batch(mp: ModelParams, trials: int, seed: int, threads: Optional[int] = None,
              mark_prob: Optional[float] = None, census_max: int = -1) -> TrialBatch:
    if mark_prob is None:
        mark_prob = default_mark_probability(mp)
    cfg = TrialConfig(mp, trials, seed, mark_prob, census_max)
    records, census = run_trials(cfg, threads)
    return TrialBatch(cfg, records, census)


def _rel(name, predicted, observed, band, stderr=None):
    ok = abs(observed - predicted) <= band * abs(predicted)
    return Comparison(name, float(predicted), float(observed), f"rel {band}", bool(ok),
                      None if stderr is None else float(stderr))


def moment_report(batch: TrialBatch) -> list:
    """Mean and variance of L1 and N1, and their correlation, against the Gaussian limit."""
    mp = batch.params
    prof = rho_profile(mp.r, mp.lam)
    sn, ss = sigmas(mp)
    L = batch.records["L1"].astype(float)
    N = batch.records["N1"].astype(float)
    T = L.size
    note = ""
    if T < 1000 or mp.eps**3 * mp.n < 100:
        note = "under-powered: needs at least 1000 trials and eps^3 n >= 100"
    out = [
        _rel("L1 mean", prof.rho * mp.n, L.mean(), BANDS["L1_mean_rel"], L.std(ddof=1) / math.sqrt(T) if T > 1 else None),
        _rel("N1 mean", prof.rho_star * mp.n, N.mean(), BANDS["N1_mean_rel"], N.std(ddof=1) / math.sqrt(T) if T > 1 else None),
    ]
    if T > 1:
        vL, vN = L.var(ddof=1), N.var(ddof=1)
        out.append(_rel("L1 variance", sn**2, vL, BANDS["L1_var_rel"], vL * math.sqrt(2.0 / (T - 1))))
        out.append(_rel("N1 variance", ss**2, vN, BANDS["N1_var_rel"], vN * math.sqrt(2.0 / (T - 1))))
        corr = float(np.corrcoef(L, N)[0, 1]) if vL > 0 and vN > 0 else float("nan")
        ok = abs(corr - CORRELATION) <= BANDS["correlation_abs"]
        out.append(Comparison("L1-N1 correlation", CORRELATION, corr, f"abs {BANDS['correlation_abs']}",
                              bool(ok), (1 - CORRELATION**2) / math.sqrt(T)))
    else:
        out += [Comparison(name, None, None, "n/a", True, note="variance needs two trials")
                for name in ("L1 variance", "N1 variance", "L1-N1 correlation")]
    for c in out:
        if note:
            c.note = note
    return out


def _standardized(batch: TrialBatch, shift=(0.0, 0.0)):
    mp = batch.params
    prof = rho_profile(mp.r, mp.lam)
    sn, ss = sigmas(mp)
    a = (batch.records["L1"] - prof.rho * mp.n) / sn - shift[0]
    b = (batch.records["N1"] - prof.rho_star * mp.n) / ss - shift[1]
    return a, b


def cell_masses(edges: np.ndarray) -> np.ndarray:
    """Gaussian mass of each cell of the grid edges x edges.

    Integrates the conditional law of the second coordinate against the
    first one's density; deterministic, unlike scipy's randomised CDF.
    """
    c = CORRELATION
    sd = math.sqrt(1.0 - c * c)
    norm = stats.norm
    out = np.empty((edges.size - 1, edges.size - 1))
    for j in range(edges.size - 1):
        b1, b2 = edges[j], edges[j + 1]

        def g(x):
            return norm.pdf(x) * (norm.cdf((b2 - c * x) / sd) - norm.cdf((b1 - c * x) / sd))

        for i in range(edges.size - 1):
            out[i, j] = integrate.quad(g, edges[i], edges[i + 1], epsabs=1e-13, epsrel=1e-12)[0]
    return out


@dataclass
class HistogramTest:
    statistic: float
    dof: int
    p_value: float
    observed: np.ndarray
    expected: np.ndarray
    edges: np.ndarray
    pooled_observed: float
    pooled_expected: float


def llt_histogram_test(batch: TrialBatch, shift=(0.0, 0.0), min_trials: int = 10**4) -> HistogramTest:
    """Chi-square test of the standardized (L1, N1) histogram against the bivariate Gaussian.

    ``shift`` moves the predicted centre by that many standard deviations,
    which is how the test's power is checked.
    """
    if batch.trials < min_trials:
        raise DomainError(f"histogram test needs at least {min_trials} trials, got {batch.trials}")
    a, b = _standardized(batch, shift)
    edges = np.linspace(-HIST_HALF_WIDTH, HIST_HALF_WIDTH, HIST_BINS + 1)
    obs, _, _ = np.histogram2d(a, b, bins=[edges, edges])
    T = batch.trials
    exp = cell_masses(edges) * T
    # cells too thin for the chi-square approximation are pooled with the
    # mass outside the grid into one extra cell
    thin = exp < MIN_EXPECTED
    pooled_o = T - obs.sum() + obs[thin].sum()
    pooled_e = T - exp.sum() + exp[thin].sum()
    o = np.concatenate([obs[~thin], [pooled_o]])
    e = np.concatenate([exp[~thin], [pooled_e]])
    stat = float(((o - e) ** 2 / e).sum())
    dof = o.size - 1
    return HistogramTest(stat, dof, float(stats.chi2.sf(stat, dof)), obs, exp, edges,
                         float(pooled_o), float(pooled_e))


def mode_cell_check(batch: TrialBatch, half_width: float = 0.25) -> Comparison:
    """Frequency of the central cell versus the summed local-limit point probabilities."""
    mp = batch.params
    prof = rho_profile(mp.r, mp.lam)
    sn, ss = sigmas(mp)
    muL, muN = prof.rho * mp.n, prof.rho_star * mp.n
    xs = range(math.ceil(muL - half_width * sn), math.floor(muL + half_width * sn) + 1)
    ys = range(max(0, math.ceil(muN - half_width * ss)), math.floor(muN + half_width * ss) + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LocalLimitWarning)
        llt = GaussianLLT.from_params(mp)
    predicted = math.fsum(llt.joint(x, y) for x in xs for y in ys if llt.on_lattice(x, y))
    a, b = _standardized(batch)
    observed = float(np.mean((np.abs(a) <= half_width) & (np.abs(b) <= half_width)))
    lo, hi = BANDS["mode_ratio"]
    ratio = observed / predicted
    return Comparison("central cell observed/predicted", 1.0, ratio, f"[{lo}, {hi}]", lo <= ratio <= hi,
                      math.sqrt(predicted * (1 - predicted) / batch.trials) / predicted)


def l1_marginal_ks(batch: TrialBatch) -> Comparison:
    a, _ = _standardized(batch)
    ks = float(stats.kstest(a, "norm").statistic)
    return Comparison("L1 marginal KS", 0.0, ks, f"< {BANDS['ks_max']}", ks < BANDS["ks_max"])


def log_expected_trees(r: int, m: int, p: float, k: int) -> float:
    """Log of the expected number of k-edge tree components of H^r(m, p)."""
    v = k * (r - 1) + 1
    if v > m:
        raise DomainError(f"a tree with {k} edges needs {v} vertices but only {m} exist")
    if p <= 0.0:
        # only isolated vertices
        return math.log(m) if k == 0 else -math.inf
    touching = math.comb(m, r) - math.comb(m - v, r)
    return math.fsum([
        math.lgamma(m + 1) - math.lgamma(v + 1) - math.lgamma(m - v + 1),
        (k - 1) * math.log(v),
        math.log(partition_count(k, r - 1)),
        k * math.log(p),
        (touching - k) * math.log1p(-p),
    ])


def expected_trees(r: int, m: int, p: float, k: int) -> float:
    return math.exp(log_expected_trees(r, m, p, k))


def expected_components(r: int, n: int, p: float, s: int, t: int, logC: LogReal) -> LogReal:
    """E[number of components of H^r(n, p) with s vertices and nullity t]."""
    if s > n or s < 1:
        raise DomainError(f"need 1 <= s <= n, got s={s}, n={n}")
    q, rem = divmod(s + t - 1, r - 1)
    if rem or logC.sign == 0:
        return LogReal(0, -math.inf)
    m = q
    if p <= 0.0:
        return LogReal(0, -math.inf) if m >= 1 else LogReal.from_log(
            math.lgamma(n + 1) - math.lgamma(s + 1) - math.lgamma(n - s + 1) + logC.log_abs)
    touching = math.comb(n, r) - math.comb(n - s, r)
    log1mp = math.log1p(-p) if p < 1.0 else -math.inf
    if p >= 1.0 and touching > m:
        return LogReal(0, -math.inf)
    total = math.fsum([
        math.lgamma(n + 1) - math.lgamma(s + 1) - math.lgamma(n - s + 1),
        logC.log_abs,
        m * math.log(p),
        (touching - m) * log1mp if touching > m else 0.0,
    ])
    return LogReal.from_log(total)


def tree_census_report(batch: TrialBatch, kmax: int = 10) -> list:
    """Mean number of k-edge tree components against the exact expectation, k = 0..kmax."""
    if batch.census is None or batch.census.shape[1] <= kmax:
        raise DomainError(f"batch was not run with a tree census up to k={kmax}")
    mp = batch.params
    out = []
    mult = BANDS["stderr_mult"]
    for k in range(kmax + 1):
        col = batch.census[:, k].astype(float)
        mu = expected_trees(mp.r, mp.n, mp.p, k)
        se = col.std(ddof=1) / math.sqrt(col.size)
        ok = abs(col.mean() - mu) <= mult * se
        out.append(Comparison(f"trees with {k} edges", mu, float(col.mean()), f"{mult} se", bool(ok), float(se)))
    return out


def tree_scaling_report(r: int, m: int, p: float, kmax: int = 10) -> Comparison:
    """(k+1)^{5/2} mu_k / m should stay within a constant factor across k."""
    vals = [(k + 1) ** 2.5 * expected_trees(r, m, p, k) / m for k in range(kmax + 1)]
    spread = max(vals) / min(vals)
    f = BANDS["tree_scaling_factor"]
    return Comparison("tree scaling spread", 1.0, spread, f"<= {f}", spread <= f,
                      note="max/min of (k+1)^2.5 mu_k / m")


def component_identity_report(batch: TrialBatch, cells: int = 3) -> list:
    """Pr(L1 = s, N1 = t) against E[N_{s,t}] for the most frequent (s, t) cells."""
    mp = batch.params
    pairs, counts = np.unique(np.stack([batch.records["L1"], batch.records["N1"]], axis=1),
                              axis=0, return_counts=True)
    top = np.argsort(-counts, kind="stable")[:cells]
    lo, hi = BANDS["component_ratio"]
    out = []
    for i in top:
        s, t = int(pairs[i, 0]), int(pairs[i, 1])
        logC = LogReal.from_int(connected_count_by_nullity(mp.r, s, t))
        expected = math.exp(expected_components(mp.r, mp.n, mp.p, s, t, logC).log_abs)
        freq = counts[i] / batch.trials
        ratio = freq / expected
        out.append(Comparison(f"Pr(L1={s}, N1={t}) / E[N_{{s,t}}]", 1.0, float(ratio), f"[{lo}, {hi}]",
                              bool(lo <= ratio <= hi),
                              float(math.sqrt(freq * (1 - freq) / batch.trials) / expected)))
    return out


def rare_event_report(batch: TrialBatch) -> list:
    mp = batch.params
    rec = batch.records
    scale = mp.eps**3 * mp.n if mp.eps > 0 else float("nan")
    c = BANDS["complex_residual_const"]
    limit = c / scale if mp.eps > 0 else 0.0
    frac = float(np.mean(rec["residual_complex"] > 0))
    multi = float(np.mean(rec["complex"] >= 2))
    pairs = float(np.mean(rec["residual_pairs"]))
    pair_limit = BANDS["residual_pairs_const"] * mp.n / mp.eps if mp.eps > 0 else float("inf")
    return [
        Comparison("residual has a complex component", limit, frac, f"< {c}/(eps^3 n)", frac < limit or frac == 0.0),
        Comparison("several complex components", limit, multi, f"< {c}/(eps^3 n)", multi < limit or multi == 0.0),
        Comparison("residual connected pairs", pair_limit, pairs, "<= 20 n/eps", pairs <= pair_limit),
    ]


def full_report(batch: TrialBatch) -> dict:
    """Everything that applies to a supercritical batch, as a JSON-ready dict."""
    rows = moment_report(batch) + rare_event_report(batch)
    hist = None
    if batch.trials >= 10**4:
        h = llt_histogram_test(batch)
        ok = h.p_value > BANDS["chi2_min_p"]
        rows.append(Comparison("12x12 histogram chi-square p", BANDS["chi2_min_p"], h.p_value,
                               f"> {BANDS['chi2_min_p']}", bool(ok), note=f"stat={h.statistic!r}, dof={h.dof}"))
        rows.append(mode_cell_check(batch))
        rows.append(l1_marginal_ks(batch))
        hist = h
    mp = batch.params
    report = {
        "config": {"r": mp.r, "n": mp.n, "p": mp.p, "lambda": mp.lam, "eps": mp.eps,
                   "trials": batch.trials, "seed": batch.config.seed, "mark_prob": batch.config.mark_prob},
        "comparisons": [asdict(c) for c in rows],
        "all_passed": all(c.passed for c in rows),
    }
    return report if hist is None else {**report, "_histogram": hist}


def report_to_json(report: dict) -> str:
    clean = {k: v for k, v in report.items() if not k.startswith("_")}
    return json.dumps(clean, indent=2, default=_jsonable, allow_nan=True) + "\n"


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def histogram_csv(h: HistogramTest, fh) -> None:
    fh.write("a_lo,a_hi,b_lo,b_hi,observed,expected\n")
    e = h.edges
    for i in range(e.size - 1):
        for j in range(e.size - 1):
            fh.write(f"{e[i]:.17g},{e[i + 1]:.17g},{e[j]:.17g},{e[j + 1]:.17g},"
                     f"{int(h.observed[i, j])},{h.expected[i, j]:.17g}\n")
