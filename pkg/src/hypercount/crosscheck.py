"""Agreement with earlier asymptotic formulas for connected hypergraphs.

Each comparison reduces to two explicit functions of rho that must agree,
or whose ratio must approach a constant, as rho -> 0.  Several of them are
differences of nearly equal quantities (the Karonski-Luczak comparison
differs at order rho^4), so everything here is evaluated in mpmath at
``DPS`` decimal digits and only the final columns are converted to floats.

Other authors' parameters are renamed on entry: their ``r = 1 - rho`` in the
Behrisch-Coja-Oghlan-Kang formulas is ``R`` below, and their edge size is
``d``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
from mpmath import mpf

from .errors import DomainError
from .params import edge_count, solve_rho

DPS = 50
DEFAULT_GRID = tuple(10.0 ** (-k / 4) for k in range(4, 17))  # 1e-1 down to 1e-4


@dataclass
class LimitSweep:
    """Columns of an identity or limit evaluated along a decreasing rho grid."""

    name: str
    rho: tuple
    columns: dict = field(default_factory=dict)
    target: Optional[float] = None
    target_column: Optional[str] = None

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.rho, self.rho[1:])):
            raise DomainError("rho grid must be strictly decreasing")
        for name, col in self.columns.items():
            if len(col) != len(self.rho):
                raise DomainError(f"column {name} has the wrong length")
            if not all(math.isfinite(v) for v in col):
                raise ArithmeticError(f"non-finite value in column {name}")

    def limit(self, column: Optional[str] = None) -> float:
        """Value at the smallest rho of the grid."""
        return self.columns[column or self.target_column][-1]

    def write_csv(self, fh) -> None:
        names = list(self.columns)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho"] + names)
        for i, r in enumerate(self.rho):
            w.writerow([f"{r:.17g}"] + [f"{self.columns[c][i]:.17g}" for c in names])


def _grid(rhos: Optional[Sequence[float]]) -> tuple:
    rhos = tuple(float(x) for x in (rhos if rhos is not None else DEFAULT_GRID))
    if not rhos or any(not 0.0 < x < 1.0 for x in rhos):
        raise DomainError("rho grid values must lie in (0, 1)")
    return rhos


def psi_mp(r: int, rho) -> mpf:
    rho = mpf(rho)
    return -(mpf(r - 1) / r) * (mpmath.log1p(-rho) / rho) * (1 - (1 - rho) ** r) / (1 - (1 - rho) ** (r - 1)) - 1


def _rho_from_psi(r: int, target) -> mpf:
    lo, hi = mpf(0), mpf(1)
    for _ in range(4 * DPS):
        mid = (lo + hi) / 2
        if psi_mp(r, mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# ----------------------------------------------------------------------------
# graphs: Bender, Canfield and McKay


def bck_y(x) -> mpf:
    """Positive root of 2 x y = log((1 + y)/(1 - y)), i.e. atanh(y) = x y, for x > 1."""
    x = mpf(x)
    if x <= 1:
        raise DomainError(f"need x > 1, got {x}")
    lo, hi = mpf(0), mpf(1)
    for _ in range(4 * DPS):
        mid = (lo + hi) / 2
        if mpmath.atanh(mid) < x * mid:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def bck_a(x, y) -> mpf:
    x, y = mpf(x), mpf(y)
    return x * (x + 1) * (1 - y) + mpmath.log(1 - x + x * y) - mpmath.log(1 - x + x * y * y) / 2


def bck_log_P2(s: int, t: int) -> float:
    """Log of the graph connectivity probability from the Bender-Canfield-McKay formula."""
    if t < 2:
        raise DomainError(f"need t >= 2, got {t}")
    m = s + t - 1
    with mpmath.workdps(DPS):
        x = mpf(m) / s
        if not 1 < x < mpf(s) / 2 - 1:
            raise DomainError(f"x = m/s = {float(x)} outside (1, s/2 - 1)")
        y = bck_y(x)
        per_vertex = mpmath.log(2) - x + (1 - x) * mpmath.log(y) - mpmath.log1p(-y * y) / 2
        return float(bck_a(x, y) + s * per_vertex)


def bck_sweep(rhos: Optional[Sequence[float]] = None) -> LimitSweep:
    """a(x) along rho -> 0, with y from the implicit equation and from y = rho/(2 - rho)."""
    rhos = _grid(rhos)
    cols = {"x": [], "y_solved": [], "y_closed": [], "y_residual": [], "a": []}
    with mpmath.workdps(DPS):
        for r in rhos:
            rho = mpf(r)
            x = 1 + psi_mp(2, rho)
            y = bck_y(x)
            cols["x"].append(float(x))
            cols["y_solved"].append(float(y))
            cols["y_closed"].append(float(rho / (2 - rho)))
            cols["y_residual"].append(float(2 * x * y - mpmath.log((1 + y) / (1 - y))))
            cols["a"].append(float(bck_a(x, rho / (2 - rho))))
    target = 2.0 + math.log(1.5) / 2.0
    return LimitSweep("bck", rhos, {k: tuple(v) for k, v in cols.items()}, target, "a")


# ----------------------------------------------------------------------------
# Behrisch, Coja-Oghlan and Kang


def bcok_zeta(d: int, rho) -> mpf:
    rho = mpf(rho)
    return -(mpmath.log1p(-rho) / rho) * (1 - (1 - rho) ** d) / (1 - (1 - rho) ** (d - 1))


def _bcok_terms(d: int, rho, version: str):
    rho = mpf(rho)
    R = 1 - rho
    z = bcok_zeta(d, rho)
    a = 1 - R**d - (1 - R) * (d - 1) * z * R ** (d - 1)
    b = (1 - R**d + z * (d - 1) * (R - R ** (d - 1))) * (1 - R**d) - d * z * R * (1 - R ** (d - 1)) ** 2
    if version == "published":
        if d == 2:
            g = z * R * (2 - R - R**2 + z) / (2 * (1 + R))
        else:
            g = (d - 1) * z * (R - R**2 + R ** (d - 1) - 2 * R**d + R ** (d + 2)) / (2 * (1 - R**d))
    elif version == "preprint":
        if d == 2:
            g = (2 * z * R + z**2 * R) / (2 * (1 + R))
        else:
            g = z * (d - 1) * (R - 2 * R**d + R ** (d - 1)) / (2 * (1 - R**d))
    else:
        raise DomainError(f"version must be 'preprint' or 'published', got {version!r}")
    return a / mpmath.sqrt(b), g


def c_constant(d: int) -> float:
    """Constant prefactor sqrt(3(d-1)/2) e^{d/2 + [d=2]} of the connectivity probability."""
    return math.sqrt(1.5 * (d - 1)) * math.exp(d / 2.0 + (1.0 if d == 2 else 0.0))


def bcok_limit(d: int, version: str, rhos: Optional[Sequence[float]] = None) -> LimitSweep:
    """f_d e^{g_d} along rho -> 0 for either version of g_d.

    The preprint version tends to :func:`c_constant`; the published one to
    sqrt(3(d-1)/2) times e for graphs and times 1 otherwise.
    """
    if d < 2:
        raise DomainError(f"edge size must be >= 2, got {d}")
    rhos = _grid(rhos)
    fs, gs, vals = [], [], []
    with mpmath.workdps(DPS):
        for r in rhos:
            f, g = _bcok_terms(d, r, version)
            fs.append(float(f))
            gs.append(float(g))
            vals.append(float(f * mpmath.exp(g)))
    if version == "preprint":
        target = c_constant(d)
    else:
        target = math.sqrt(1.5 * (d - 1)) * (math.e if d == 2 else 1.0)
    return LimitSweep(f"bcok-{version}-d{d}", rhos, {"f": tuple(fs), "g": tuple(gs), "f_exp_g": tuple(vals)},
                      target, "f_exp_g")


def bcok_log_P(r: int, s: int, t: int, version: str = "preprint") -> float:
    """Log of f_r e^{g_r} Phi_r^s, their connectivity probability, with their r read as 1 - rho."""
    m = edge_count(r, s, t)
    if t < 2:
        raise DomainError(f"need t >= 2, got {t}")
    with mpmath.workdps(DPS):
        rho = _rho_from_psi(r, mpf(t - 1) / s)
        f, g = _bcok_terms(r, rho, version)
        gamma = mpf(m) / s
        log_phi = ((1 - rho) / rho * mpmath.log1p(-rho) + (1 - r * gamma) * mpmath.log(rho)
                   + gamma * mpmath.log(1 - (1 - rho) ** r))
        return float(mpmath.log(f) + g + s * log_phi)


# ----------------------------------------------------------------------------
# 3-uniform: Sato and Wormald


def sw_phi(x, RN, mu) -> mpf:
    """phi-tilde: their exponent with 1 - 2(R/N) log N folded in."""
    x, RN, mu = mpf(x), mpf(RN), mpf(mu)
    em = mpmath.exp(mu)
    return (-(1 - x) / 2 * mpmath.log(1 - x) + (1 - x) / 2 - (mpmath.log(2) + 2) * RN
            - mpmath.log(2) / 2 * x + RN * mpmath.log((em + 1) / (mu * (em - 1)))
            + x / 2 * mpmath.log((em - 1) * (em + 1) / mu) - 1)


def sw_log_psi(rho) -> mpf:
    rho = mpf(rho)
    ms = (1 + psi_mp(3, rho)) / 2
    return (ms * mpmath.log(mpmath.e * (1 - (1 - rho) ** 3) / (6 * ms * rho**3))
            + mpmath.log(rho) + (1 - rho) / rho * mpmath.log1p(-rho))


def sw_identity(rhos: Optional[Sequence[float]] = None) -> LimitSweep:
    """phi-tilde(n*) against log psi: the two exponents must coincide for every rho."""
    rhos = _grid(rhos if rhos is not None else (0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01))
    cols = {"phi": [], "log_psi": [], "diff": [], "mu_residual": [], "RN": [], "RN_residual": []}
    with mpmath.workdps(DPS):
        for r in rhos:
            rho = mpf(r)
            P = psi_mp(3, rho)
            ms = (1 + P) / 2
            RN = ms - mpf(1) / 2
            mu = -mpmath.log1p(-rho)
            n_star = 1 + 2 * mpmath.log1p(-rho) * (1 - rho) ** 2 / (rho * (2 - rho))
            phi, lp = sw_phi(n_star, RN, mu), sw_log_psi(rho)
            cols["phi"].append(float(phi))
            cols["log_psi"].append(float(lp))
            cols["diff"].append(float(phi - lp))
            cols["mu_residual"].append(float(1 - mpmath.exp(-mu) - rho))
            cols["RN"].append(float(RN))
            cols["RN_residual"].append(float(RN - P / 2))
    return LimitSweep("sato-wormald", rhos, {k: tuple(v) for k, v in cols.items()}, 0.0, "diff")


# ----------------------------------------------------------------------------
# near-trees: Karonski and Luczak


def _kl_sides(r: int, rho):
    # both sides of the comparison after taking logs and dividing by s,
    # with k/s = psi_r(rho)
    rho = mpf(rho)
    K = psi_mp(r, rho)
    f = (1 - (1 - rho) ** r) / (r * rho)
    tau = rho * mpmath.sqrt(mpf(r - 1) / (12 * K))
    lhs = (2 - r) + (r - 1) * K / 2
    rhs = ((1 + K) * (1 + mpmath.log(f) - mpmath.log1p(K))
           + (r - 1) * (1 - rho) / rho * mpmath.log1p(-rho) - (r - 1) * K * mpmath.log(tau))
    return lhs, rhs


def kl_discrepancy(r: int, rhos: Optional[Sequence[float]] = None) -> LimitSweep:
    """Per-vertex log difference between the two formulas, and its ratio to rho^4."""
    if r < 2:
        raise DomainError(f"edge size must be >= 2, got {r}")
    rhos = _grid(rhos if rhos is not None else tuple(10.0 ** (-k / 4) for k in range(4, 13)))
    cols = {"lhs": [], "rhs": [], "diff": [], "diff_over_rho4": []}
    with mpmath.workdps(DPS):
        for x in rhos:
            lhs, rhs = _kl_sides(r, x)
            d = lhs - rhs
            cols["lhs"].append(float(lhs))
            cols["rhs"].append(float(rhs))
            cols["diff"].append(float(d))
            cols["diff_over_rho4"].append(float(d / mpf(x) ** 4))
    return LimitSweep(f"karonski-luczak-r{r}", rhos, {k: tuple(v) for k, v in cols.items()},
                      None, "diff_over_rho4")


def kl_stabilization(sweep: LimitSweep, lo: float = 1e-3, hi: float = 1e-2) -> float:
    """max/min of diff/rho^4 over rho in [lo, hi]; infinite if the sign changes or it vanishes."""
    vals = [v for x, v in zip(sweep.rho, sweep.columns["diff_over_rho4"]) if lo <= x <= hi]
    if not vals or any(v == 0 for v in vals) or len({v > 0 for v in vals}) > 1:
        return math.inf
    a = [abs(v) for v in vals]
    return max(a) / min(a)


def kl_total_difference(r: int, s: int, k: int) -> float:
    """s times the per-vertex difference, for k = t - 1 and s given."""
    with mpmath.workdps(DPS):
        rho = _rho_from_psi(r, mpf(k) / s)
        lhs, rhs = _kl_sides(r, rho)
        return float(s * (lhs - rhs))


def family_agreement(s: int) -> dict:
    """Per-vertex gaps between our graph connectivity formula, Bender-Canfield-McKay
    and the preprint BC-OK formula, at t = ceil(2 sqrt s)."""
    from .asymptotics import log_P

    t = math.ceil(2 * math.sqrt(s))
    inst = solve_rho(2, s, t)
    ours = log_P(inst).log_abs
    bck = bck_log_P2(s, t)
    bcok = bcok_log_P(2, s, t, "preprint")
    return {"s": s, "t": t, "rho": inst.rho, "ours": ours, "bck": bck, "bcok": bcok,
            "ours_bck": (ours - bck) / s, "ours_bcok": (ours - bcok) / s, "bck_bcok": (bck - bcok) / s}
