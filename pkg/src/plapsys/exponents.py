"""Summability exponents, thresholds and regime classification.

Every formula is evaluated exactly with :class:`fractions.Fraction` when
all inputs are ``int`` or ``Fraction``, and in double precision otherwise,
so boundary identities can be checked with zero tolerance.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

REGIMES = (
    "bounded_data",
    "dual_data",
    "regularizing_theta0",
    "conjecture_regime",
    "outside_theory",
)


class OutOfHypothesisWarning(UserWarning):
    pass


def _num(*xs):
    if all(isinstance(x, Rational) for x in xs):
        return tuple(Fraction(x) for x in xs)
    return tuple(float(x) for x in xs)


def _check_p(N, p):
    if not 1 < p < N:
        raise ValueError(f"need 1 < p < N, got p={p}, N={N}")


def sobolev_conjugate(N, p):
    """``p* = N p / (N - p)``."""
    N, p = _num(N, p)
    _check_p(N, p)
    return N * p / (N - p)


def dual_exponent(q):
    """Hoelder conjugate ``q' = q / (q - 1)``."""
    (q,) = _num(q)
    if not q > 1:
        raise ValueError(f"dual exponent needs q > 1, got q={q}")
    return q / (q - 1)


def r_threshold(N, p):
    """``(N(p-1) + p) / (N - p)``: above it ``(r+1)' < (p*)'``."""
    N, p = _num(N, p)
    _check_p(N, p)
    return (N * (p - 1) + p) / (N - p)


def m1(N, p, r):
    """Upper summability for which phi still has finite energy (theta = 0)."""
    N, p, r = _num(N, p, r)
    _check_p(N, p)
    if not r > 1:
        raise ValueError(f"need r > 1, got r={r}")
    return N * p * r / (N * (p - 1) ** 2 + p * (p - 1) + p * p * r)


def m2(N, p, r, theta):
    """Analogue of :func:`m1` for theta > 0; meaningful only if r > p* - 1 - theta."""
    N, p, r, theta = _num(N, p, r, theta)
    _check_p(N, p)
    if not r > 1:
        raise ValueError(f"need r > 1, got r={r}")
    if not 0 <= theta < p - 1:
        raise ValueError(f"need 0 <= theta < p - 1, got theta={theta}")
    return N * p * r / (N * (p - 1) ** 2 + p * (p - 1) + p * p * r - theta * (p - 1) * (N - p))


def _warn_below_r1_dual(m, r):
    if m < (r + 1) / r:
        warnings.warn(f"m={m} < (r+1)'={(r + 1) / r}: gamma < 1, outside the hypotheses",
                      OutOfHypothesisWarning, stacklevel=3)


def gamma_exponent(m, p, r):
    """Power of the test function ``(u^+)^gamma``; gamma >= 1 iff m >= (r+1)'."""
    m, p, r = _num(m, p, r)
    _warn_below_r1_dual(m, r)
    return (r * (m - 1) + m * (p - 1)) / (m * (p - 1) + 1)


def s_exponent(m, p, r):
    """``s = m (p r + p - 1) / (m (p - 1) + 1)``, equal to ``r + gamma``."""
    m, p, r = _num(m, p, r)
    _warn_below_r1_dual(m, r)
    return m * (p * r + p - 1) / (m * (p - 1) + 1)


def t_exponent(N, m, p):
    """``t = N m (p - 1) / (N - p m)`` for ``m < N/p``; ``inf`` (with a warning) otherwise."""
    N, m, p = _num(N, m, p)
    if N - p * m <= 0:
        warnings.warn(f"m={m} >= N/p={N / p}: bounded-data regime, t is infinite",
                      OutOfHypothesisWarning, stacklevel=2)
        return math.inf
    return N * m * (p - 1) / (N - p * m)


@dataclass(frozen=True)
class RegimeInput:
    N: int
    p: float
    r: float
    theta: float = 0
    m: float = 1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"need integer N >= 2, got N={self.N}")
        if not 1 < self.p < self.N:
            raise ValueError(f"need 1 < p < N, got p={self.p}, N={self.N}")
        if not self.r > 1:
            raise ValueError(f"need r > 1, got r={self.r}")
        if not 0 <= self.theta < self.p - 1:
            raise ValueError(f"need 0 <= theta < p - 1, got theta={self.theta}, p={self.p}")
        if not self.m >= 1:
            raise ValueError(f"need m >= 1, got m={self.m}")


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    satisfied: tuple[str, ...]
    pstar: object
    pstar_dual: object
    r1_dual: object
    conj_m: object
    m1: object
    m2: object
    s: object
    gamma: object
    t: object
    r_threshold: object
    best_summability: object
    notes: tuple[str, ...] = field(default=())

    def rows(self):
        """(name, value) pairs in display order."""
        return [(k, getattr(self, k)) for k in (
            "regime", "pstar", "pstar_dual", "r1_dual", "conj_m", "r_threshold",
            "m1", "m2", "s", "gamma", "t", "best_summability")] + [("satisfied", ",".join(self.satisfied))]


def classify(inp: RegimeInput) -> RegimeReport:
    """Strongest applicable result for ``(N, p, r, theta, m)``.

    Order: bounded data (m > N/p), dual data (m >= (p*)'), the theta = 0
    regularizing range ((r+1)' <= m < (p*)'), the conditional range
    (m >= (r+1+theta)' with r > p* - 1 - theta), else outside the theory.
    """
    N, p, r, theta, m = _num(inp.N, inp.p, inp.r, inp.theta, inp.m)
    pstar = sobolev_conjugate(N, p)
    pstar_dual = dual_exponent(pstar)
    r1_dual = dual_exponent(r + 1)
    conj_m = dual_exponent(r + 1 + theta)
    thr = r_threshold(N, p)
    notes = []

    val_m1 = m1(N, p, r)
    val_m2 = m2(N, p, r, theta)
    if not r > pstar - 1 - theta:
        notes.append("m2 not meaningful: r <= p* - 1 - theta")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfHypothesisWarning)
        s = s_exponent(m, p, r)
        gamma = gamma_exponent(m, p, r)
    t = t_exponent(N, m, p) if p * m < N else None

    satisfied = []
    if m > N / p:
        satisfied.append("bounded_data")
    if m >= pstar_dual:
        satisfied.append("dual_data")
    if theta == 0 and r1_dual <= m < pstar_dual:
        satisfied.append("regularizing_theta0")
    if m >= conj_m and r > pstar - 1 - theta:
        satisfied.append("conjecture_regime")
    regime = next((name for name in REGIMES if name in satisfied), "outside_theory")

    if p * m >= N:
        best = math.inf
    elif theta == 0 and r1_dual <= m < val_m1:
        best = s
    elif theta == 0 and m >= val_m1:
        best = t
    elif m >= pstar_dual:
        best = t
    else:
        best = None
    if gamma < 1:
        notes.append("gamma < 1: s-summability argument does not apply")

    return RegimeReport(regime, tuple(satisfied), pstar, pstar_dual, r1_dual, conj_m,
                        val_m1, val_m2, s, gamma, t, thr, best, tuple(notes))
