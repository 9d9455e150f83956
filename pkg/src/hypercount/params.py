"""Scalar parameters of the supercritical random hypergraph and of the
enumeration problem.

Everything here is a pure function of a few numbers.  Root finding is done by
plain bisection with a fixed iteration count: every function being inverted is
monotone on its bracket, so bisection cannot fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError, NoSuchHypergraphError

BISECTION_STEPS = 200
SERIES_CUTOFF = 1e-4
_SERIES_ORDER = 9


@dataclass(frozen=True)
class ModelParams:
    """One instance of H^r(n, p), with its branching factor.

    Build it with :meth:`from_p`, :meth:`from_lambda` or :meth:`from_eps`
    rather than by hand, so that ``lam`` and ``p`` stay consistent.
    """

    r: int
    n: int
    p: float
    lam: float

    def __post_init__(self):
        if self.r < 2:
            raise DomainError(f"edge size r must be >= 2, got {self.r}")
        if self.n < self.r:
            raise DomainError(f"need n >= r, got n={self.n}, r={self.r}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"edge probability must lie in [0, 1], got {self.p}")

    @property
    def eps(self) -> float:
        return self.lam - 1.0

    @classmethod
    def from_p(cls, r: int, n: int, p: float) -> "ModelParams":
        return cls(r, n, p, branching_factor(r, n, p))

    @classmethod
    def from_lambda(cls, r: int, n: int, lam: float) -> "ModelParams":
        if lam < 0:
            raise DomainError(f"branching factor must be non-negative, got {lam}")
        p = lam * math.factorial(r - 2) / float(n) ** (r - 1)
        return cls(r, n, p, lam)

    @classmethod
    def from_eps(cls, r: int, n: int, eps: float) -> "ModelParams":
        return cls.from_lambda(r, n, 1.0 + eps)


def branching_factor(r: int, n: int, p: float) -> float:
    """p * n^(r-1) / (r-2)!"""
    if r < 2:
        raise DomainError(f"edge size r must be >= 2, got {r}")
    return p * float(n) ** (r - 1) / math.factorial(r - 2)


@lru_cache(maxsize=None)
def _psi_series(r: int) -> tuple[float, ...]:
    # Exact Taylor coefficients of psi_r about 0, from the factorisation
    # (r-1)/r * A(x) * B(x) - 1 with A = -log(1-x)/x and B a ratio of polynomials.
    order = _SERIES_ORDER
    a = [Fraction(1, k + 1) for k in range(order)]

    def shifted(q):
        # (1 - (1-x)^q) / x as a coefficient list
        return [Fraction((-1) ** k * math.comb(q, k + 1)) for k in range(q)]

    num, den = shifted(r), shifted(r - 1)
    num += [Fraction(0)] * (order - len(num))
    den += [Fraction(0)] * (order - len(den))
    b = []
    for k in range(order):
        acc = num[k] - sum(b[j] * den[k - j] for j in range(k))
        b.append(acc / den[0])
    ab = [sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(order)]
    coeffs = [Fraction(r - 1, r) * c for c in ab]
    coeffs[0] -= 1
    assert coeffs[0] == 0 and coeffs[1] == 0
    return tuple(float(c) for c in coeffs)


def psi_r(r: int, rho: float) -> float:
    """The increasing bijection (0,1) -> (0, inf) whose inverse gives rho from (t-1)/s."""
    if r < 2:
        raise DomainError(f"edge size r must be >= 2, got {r}")
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if rho < SERIES_CUTOFF:
        value = 0.0
        for c in reversed(_psi_series(r)):
            value = value * rho + c
        return value
    log1m = math.log1p(-rho)
    ratio = math.expm1(r * log1m) / math.expm1((r - 1) * log1m)
    return -((r - 1) / r) * (log1m / rho) * ratio - 1.0


def _bisect_increasing(f, target: float, lo: float, hi: float) -> float:
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EnumerationInstance:
    """Connected r-uniform hypergraphs on s vertices with nullity t (and m edges)."""

    r: int
    s: int
    t: int
    m: int
    rho: float


def edge_count(r: int, s: int, t: int) -> int:
    """Edges of a connected r-uniform hypergraph with s vertices and nullity t."""
    q, rem = divmod(s + t - 1, r - 1)
    if rem:
        raise NoSuchHypergraphError(r, s, t)
    return q


def solve_rho(r: int, s: int, t: int) -> EnumerationInstance:
    """Solve psi_r(rho) = (t - 1)/s and package the instance.

    >>> inst = solve_rho(3, 7, 2)
    >>> inst.m
    4
    """
    if r < 2:
        raise DomainError(f"edge size r must be >= 2, got {r}")
    if t < 2:
        raise DomainError(f"nullity t must be >= 2 (rho vanishes at t = 1), got t={t}")
    if s < r:
        raise DomainError(f"need s >= r, got s={s}, r={r}")
    m = edge_count(r, s, t)
    target = (t - 1) / s
    rho = _bisect_increasing(lambda x: psi_r(r, x), target, 0.0, 1.0)
    if rho >= 1.0:
        raise DomainError(f"(t-1)/s = {target:.6g} puts rho within rounding of 1")
    return EnumerationInstance(r, s, t, m, rho)


@dataclass(frozen=True)
class RhoProfile:
    """Giant-component parameters for branching factor ``lam`` > 1.

    ``rho2`` is the Poisson(lam) survival probability, ``rho`` the limiting
    fraction of vertices in the giant component of an r-uniform hypergraph,
    ``rho_star`` its nullity per vertex and ``lambda_dual`` the subcritical
    branching factor of what remains once the giant component is removed.
    """

    r: int
    lam: float
    rho2: float
    rho: float
    rho_star: float
    lambda_dual: float


def survival_probability(lam: float) -> float:
    """Positive root of 1 - x = exp(-lam x)."""
    if lam <= 1.0:
        raise DomainError(f"survival probability is zero unless lambda > 1, got {lam}")
    # g(x) = 1 - x - exp(-lam x) is positive on (0, root) and negative after.
    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if -math.expm1(-lam * mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rho_profile(r: int, lam: float) -> RhoProfile:
    rho2 = survival_probability(lam)
    rho = -math.expm1(math.log1p(-rho2) / (r - 1))
    # rho_star = rho * psi_r(rho) is the same quantity as
    # (lam/r)(1 - (1-rho)^r) - rho, but free of the cancellation as lam -> 1.
    rho_star = rho * psi_r(r, rho)
    return RhoProfile(r, lam, rho2, rho, rho_star, lam * (1.0 - rho2))


def dual_branching_factor(lam: float) -> float:
    """The root in (0, 1) of x e^{-x} = lam e^{-lam}."""
    return lam * (1.0 - survival_probability(lam))


def sigmas(mp: ModelParams) -> tuple[float, float]:
    """Standard deviations of the giant component's order and nullity."""
    eps = mp.eps
    if eps <= 0:
        raise DomainError(f"sigmas need a supercritical model (eps > 0), got eps={eps}")
    sigma_n = math.sqrt(2.0 * mp.n / eps)
    sigma_star = math.sqrt(10.0 / 3.0) / (mp.r - 1) * math.sqrt(eps**3 * mp.n)
    return sigma_n, sigma_star


def embed_enumeration(inst: EnumerationInstance) -> ModelParams:
    """Random hypergraph model whose giant component typically has order s and nullity t."""
    r, rho = inst.r, inst.rho
    n = math.floor(inst.s / rho)
    log1m = math.log1p(-rho)
    lam = -(r - 1) * log1m / -math.expm1((r - 1) * log1m)
    return ModelParams.from_lambda(r, n, lam)
