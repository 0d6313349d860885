"""Distribution of the number of erasures in n uses of a GE channel.

Two routes to the same P(n, e):

* ``erasure_pmf_closed`` -- the combinatorial closed form built on the
  bad-state occupation counts m(n, r). Signed terms cancel badly in double
  precision, so it is limited to ``n <= N_CLOSED``.
* ``erasure_pmf_dp`` -- forward recursion over (erasure count, state). All
  terms are non-negative, so it is stable for any n. This is the engine used
  everywhere else.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from math import comb, fsum

import numpy as np

from .channel import GEParams, reverse_states, steady_state_good

N_CLOSED = 30


class ClosedFormDomainError(ValueError):
    pass


class ClosedFormRangeError(OverflowError):
    pass


class PmfMethod(enum.Enum):
    CLOSED_FORM = "closed_form"
    DYNAMIC_PROGRAM = "dynamic_program"


@dataclass(frozen=True)
class ErasureCountPmf:
    n: int
    probs: np.ndarray
    method: PmfMethod

    def __post_init__(self):
        if len(self.probs) != self.n + 1:
            raise ValueError("probs must have length n + 1")

    def mean(self) -> float:
        return float(np.dot(np.arange(self.n + 1), self.probs))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


@dataclass(frozen=True)
class BadStateCountTerms:
    n: int
    r: int
    g_B: float
    b_B: float
    m_values: tuple[float, float, float]


def _needs_reversal(params: GEParams) -> bool:
    return params.alpha < 1.0 - params.beta


def m_coeff(n: int, r: int, params: GEParams, *, strict: bool = False) -> float:
    """Occupation coefficient m(n, r).

    With ``strict=True`` a parameter set with alpha < 1 - beta is rejected,
    since the (alpha - (1 - beta)) factor then makes individual terms signed.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if r < 0 or r > n:
        return 0.0
    a_, b_ = params.alpha, params.beta
    if strict and _needs_reversal(params):
        raise ClosedFormDomainError(f"alpha={a_} < 1 - beta={1 - b_}")
    d = a_ - (1.0 - b_)
    # Python float ** 0 == 1.0 even for a zero base
    return fsum(
        comb(a, r) * comb(r, n - a)
        * d ** (n - a) * (1.0 - b_) ** (a - n + r) * (1.0 - a_) ** (a - r)
        for a in range(max(r, n - r), n + 1)
    )


def bad_count_probs(n: int, r: int, params: GEParams, *, strict: bool = False) -> BadStateCountTerms:
    """Probability of r Bad uses among n, split by the final state (stationary start)."""
    if n < 1 or r < 0 or r > n:
        raise ValueError(f"need 0 <= r <= n and n >= 1, got n={n}, r={r}")
    pi_g = steady_state_good(params)
    pi_b = 1.0 - pi_g
    a_, b_ = params.alpha, params.beta
    m0 = m_coeff(n, r, params, strict=strict)
    m1 = m_coeff(n - 1, r, params, strict=strict)
    m2 = m_coeff(n - 1, r - 1, params, strict=strict)
    g = fsum((pi_g * m0, b_ * pi_b * m1, -(1.0 - b_) * pi_g * m2))
    b = fsum((pi_b * m0, -(1.0 - a_) * pi_b * m1, a_ * pi_g * m2))
    return BadStateCountTerms(n, r, g, b, (m0, m1, m2))


def _closed_parts(n: int, params: GEParams) -> tuple[np.ndarray, np.ndarray]:
    e0, e1 = params.eps0, params.eps1
    terms = [bad_count_probs(n, r, params) for r in range(n + 1)]
    g = np.zeros(n + 1)
    b = np.zeros(n + 1)
    for e in range(n + 1):
        for r, t in enumerate(terms):
            w = 0.0
            # bb = erasures that happen while Bad
            for bb in range(max(0, e + r - n), min(r, e) + 1):
                w += (
                    comb(r, bb) * comb(n - r, e - bb)
                    * (1.0 - e0) ** (n + bb - e - r) * e0 ** (e - bb)
                    * (1.0 - e1) ** (r - bb) * e1 ** bb
                )
            g[e] += w * t.g_B
            b[e] += w * t.b_B
    return g, b


def erasure_pmf_closed(
    n: int, params: GEParams, *, n_max: int = N_CLOSED, auto_reverse: bool = True
) -> ErasureCountPmf:
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > n_max:
        raise ClosedFormRangeError(f"closed form is unreliable for n={n} > {n_max}")
    if _needs_reversal(params) and auto_reverse:
        params = reverse_states(params)
    g, b = _closed_parts(n, params)
    return ErasureCountPmf(n, g + b, PmfMethod.CLOSED_FORM)


TABLE_MAX = 1024


def _dp_rows(n: int, params: GEParams):
    """Yield the pmf after t = 0..n uses, each padded to length n + 1."""
    pi_g = steady_state_good(params)
    # f[s, e]: P(e erasures so far, current state s)
    f = np.zeros((2, n + 1))
    f[:, 0] = pi_g, 1.0 - pi_g
    eps = np.array([[params.eps0], [params.eps1]])
    keep = 1.0 - eps
    a, b = params.alpha, params.beta
    h = np.empty_like(f)
    yield f[0] + f[1]
    for _ in range(n):
        np.multiply(f, keep, out=h)
        h[:, 1:] += f[:, :-1] * eps
        f = np.stack((h[0] * (1.0 - a) + h[1] * b, h[0] * a + h[1] * (1.0 - b)))
        yield f[0] + f[1]


@functools.lru_cache(maxsize=32)
def _dp_table(size: int, params: GEParams) -> np.ndarray:
    # row t holds P(t, .); every row is a prefix of the same recursion
    return np.array(list(_dp_rows(size, params)))


@functools.lru_cache(maxsize=256)
def _dp_probs(n: int, params: GEParams) -> np.ndarray:
    if n <= TABLE_MAX:
        size = max(64, 1 << (n - 1).bit_length()) if n > 0 else 64
        out = _dp_table(size, params)[n, : n + 1].copy()
    else:
        *_, last = _dp_rows(n, params)
        out = last
    out.flags.writeable = False
    return out


def erasure_pmf_dp(n: int, params: GEParams) -> ErasureCountPmf:
    if n < 0:
        raise ValueError("n must be >= 0")
    return ErasureCountPmf(n, _dp_probs(n, params), PmfMethod.DYNAMIC_PROGRAM)


def _tail(n: int, params: GEParams) -> np.ndarray:
    # tail[j] = P(n, e >= j), summed from the small end for accuracy
    probs = _dp_probs(n, params)
    return np.concatenate((np.cumsum(probs[::-1])[::-1], [0.0]))


def bep_mds(n: int, k: int, params: GEParams) -> float:
    """Block error probability of an (n, k) MDS code: more than n - k erasures.

    ``k > n`` is allowed and gives 1 (nothing is recoverable).
    """
    if k < 1 or n < 0:
        raise ValueError("need n >= 0 and k >= 1")
    if k > n:
        return 1.0
    return min(1.0, float(_tail(n, params)[n - k + 1]))


def bep_mds_all(n: int, params: GEParams) -> np.ndarray:
    """BEP(n, k) for k = 1..n+1 in one pass; index k-1 holds BEP(n, k)."""
    tail = _tail(n, params)
    out = np.minimum(1.0, tail[n::-1][: n])
    return np.concatenate((out, [1.0]))
