"""Log-space evaluation of the connected-hypergraph asymptotics and of the
Gaussian local limit law for the giant component.

The enumeration formulas overflow any float long before the interesting
range, so they are returned as :class:`LogReal` values.  Probabilities from
the local limit law are ordinary floats.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import total_ordering

from .errors import DomainError
from .params import EnumerationInstance, ModelParams, rho_profile, sigmas

CORRELATION = math.sqrt(3.0 / 5.0)
_EXP_LIMIT = 700.0


class LocalLimitWarning(UserWarning):
    """A local-limit query outside the regime where the approximation is meaningful."""


@total_ordering
@dataclass(frozen=True)
class LogReal:
    """A real number stored as a sign and the natural log of its magnitude."""

    sign: int
    log_abs: float

    @classmethod
    def from_float(cls, x: float) -> "LogReal":
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_int(cls, x: int) -> "LogReal":
        # math.log is exact to double precision for arbitrarily large ints
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_abs: float) -> "LogReal":
        return cls(1, log_abs)

    def __mul__(self, other: "LogReal") -> "LogReal":
        if self.sign == 0 or other.sign == 0:
            return LogReal(0, -math.inf)
        return LogReal(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return self
        return LogReal(self.sign * other.sign, self.log_abs - other.log_abs)

    def _key(self):
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.log_abs)

    def __lt__(self, other: "LogReal") -> bool:
        return self._key() < other._key()

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogReal):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def log10(self) -> float:
        return self.log_abs / math.log(10.0)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if abs(self.log_abs) >= _EXP_LIMIT:
            raise OverflowError(f"log magnitude {self.log_abs:.6g} is outside the float range")
        return self.sign * math.exp(self.log_abs)


def _common_terms(inst: EnumerationInstance) -> tuple[float, float]:
    # log(1 - (1-rho)^r) and s * log(rho (1-rho)^((1-rho)/rho))
    r, rho, s = inst.r, inst.rho, inst.s
    log1m = math.log1p(-rho)
    log_cover = math.log(-math.expm1(r * log1m))
    per_vertex = math.log(rho) + (1.0 - rho) / rho * log1m
    return log_cover, s * per_vertex


def log_C(inst: EnumerationInstance) -> LogReal:
    """Asymptotic number of connected r-uniform hypergraphs on [s] with nullity t."""
    r, s, m, rho = inst.r, inst.s, inst.m, inst.rho
    log_cover, vertex_part = _common_terms(inst)
    per_edge = math.fsum([
        1.0, log_cover, r * math.log(s), -math.log(m),
        -math.lgamma(r + 1), -r * math.log(rho),
    ])
    total = math.fsum([
        0.5 * math.log(3.0) - math.log(2.0) - 0.5 * math.log(math.pi),
        math.log(r - 1), -0.5 * math.log(s),
        m * per_edge, vertex_part,
    ])
    return LogReal.from_log(total)


def log_P(inst: EnumerationInstance) -> LogReal:
    """Asymptotic probability that a uniform m-edge hypergraph on [s] is connected.

    This is an asymptotic formula, not a probability: at small s it can exceed 1.
    """
    r, m, rho = inst.r, inst.m, inst.rho
    log_cover, vertex_part = _common_terms(inst)
    total = math.fsum([
        r / 2.0 + (1.0 if r == 2 else 0.0),
        0.5 * math.log(3.0 * (r - 1) / 2.0),
        m * (log_cover - r * math.log(rho)),
        vertex_part,
    ])
    return LogReal.from_log(total)


def density_f(a: float, b: float) -> float:
    """Standard bivariate normal density with correlation sqrt(3/5)."""
    q = a * a - 2.0 * CORRELATION * a * b + b * b
    return math.exp(-1.25 * q) / (2.0 * math.pi * math.sqrt(0.4))


@dataclass(frozen=True)
class GaussianLLT:
    """Centres and scales of the joint local limit law of (L1, N1)."""

    r: int
    n: int
    eps: float
    mu_L: float
    mu_N: float
    sigma_n: float
    sigma_star: float
    correlation: float = CORRELATION

    @classmethod
    def from_params(cls, mp: ModelParams) -> "GaussianLLT":
        if mp.eps <= 0:
            raise DomainError(f"local limit law needs eps > 0, got eps={mp.eps}")
        if mp.eps > 0.5 or mp.eps**3 * mp.n < 10:
            warnings.warn(
                f"eps={mp.eps:.4g}, eps^3 n={mp.eps**3 * mp.n:.4g}: outside the regime "
                "eps <= 0.5, eps^3 n >= 10 where the local limit law is expected to be accurate",
                LocalLimitWarning, stacklevel=3,
            )
        prof = rho_profile(mp.r, mp.lam)
        sn, ss = sigmas(mp)
        return cls(mp.r, mp.n, mp.eps, prof.rho * mp.n, prof.rho_star * mp.n, sn, ss)

    def standardize(self, x, y):
        return (x - self.mu_L) / self.sigma_n, (y - self.mu_N) / self.sigma_star

    def on_lattice(self, x: int, y: int) -> bool:
        # a connected component satisfies order + nullity = 1 mod (r - 1)
        return (x + y - 1) % (self.r - 1) == 0

    def joint(self, x: int, y: int) -> float:
        if not self.on_lattice(x, y):
            warnings.warn(f"(x={x}, y={y}) is off the lattice x + y = 1 mod {self.r - 1}",
                          LocalLimitWarning, stacklevel=2)
        a, b = self.standardize(x, y)
        q = a * a - 2.0 * CORRELATION * a * b + b * b
        mode = math.sqrt(6.0) / (8.0 * math.pi) * (self.r - 1) ** 2 / (self.eps * self.n)
        return mode * math.exp(-1.25 * q)

    def order(self, x: int) -> float:
        var2 = 4.0 * self.n / self.eps
        return math.exp(-((x - self.mu_L) ** 2) / var2) / (2.0 * math.sqrt(math.pi * self.n / self.eps))

    def nullity(self, t: int) -> float:
        z = (t - self.mu_N) / self.sigma_star
        return math.exp(-0.5 * z * z) / (self.sigma_star * math.sqrt(2.0 * math.pi))


def llt_joint(mp: ModelParams, x: int, y: int) -> float:
    """Approximate Pr(L1 = x, N1 = y)."""
    return GaussianLLT.from_params(mp).joint(x, y)


def llt_L1(mp: ModelParams, x: int) -> float:
    """Approximate Pr(L1 = x)."""
    return GaussianLLT.from_params(mp).order(x)


def llt_N1(mp: ModelParams, t: int) -> float:
    """Approximate Pr(N1 = t)."""
    return GaussianLLT.from_params(mp).nullity(t)
