"""Mean age of information for uncoded and (n, k)-MDS coded round-robin systems.

Time is measured in slots; a packet of ``ell`` symbols occupies ``ell`` slots.
Divergent averages (every update lost) come back as ``AoiResult`` with
``finite=False`` instead of raising, so sweeps can run through them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import GEParams, marginal_erasure_prob
from .erasure import bep_mds, bep_mds_all

DEFAULT_C_EPS_TOL = 1e-3


class Mode(enum.Enum):
    EXACT = "exact"
    LARGE_K = "large_k"


class Region(enum.Enum):
    REGION1 = 1  # c_n < -c_eps, Phi(c_n) ~ 0
    REGION2 = 2  # c_n > c_eps, Phi(c_n) ~ 1
    REGION3 = 3  # |c_n| <= c_eps, Phi linearised


@dataclass(frozen=True)
class SystemConfig:
    """K sources, packets of ``ell`` slots, (n, k) code, ``lam = K / k`` blocks per round.

    ``require_divisible=False`` admits k not dividing K; lam is then
    fractional. The large-K objective and the continuous-stream simulator
    both accept that.
    """

    K: int
    ell: int
    n: int
    k: int
    require_divisible: bool = True

    def __post_init__(self):
        if self.K < 1 or self.ell < 1:
            raise ValueError("K and ell must be >= 1")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.require_divisible and self.K % self.k:
            raise ValueError(f"k={self.k} does not divide K={self.K}")

    @property
    def lam(self) -> float:
        return self.K / self.k

    @property
    def round_slots(self) -> float:
        """lam * n * ell, the slots between consecutive packets of one source."""
        return self.K * self.n * self.ell / self.k

    def position(self, i: int) -> int:
        return i % self.k


@dataclass(frozen=True)
class EventProbabilities:
    p_a: float  # own packet not erased
    p_b: float  # erased, recovered from the block
    p_c: float  # erased, block failed


@dataclass(frozen=True)
class InterarrivalMoments:
    mean: float
    second_moment: float


@dataclass(frozen=True)
class AoiResult:
    mean_aoi: float
    finite: bool = True
    components: dict = field(default_factory=dict)

    @classmethod
    def divergent(cls) -> "AoiResult":
        return cls(math.inf, False)


@dataclass(frozen=True)
class GaussianApprox:
    c_n: float
    k_bar: float
    c_eps: float
    region: Region


@dataclass(frozen=True)
class CodingGain:
    gain: float
    ceiling: float
    k_star: int
    aoi_coded: float
    aoi_uncoded: float


def std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# ---------------------------------------------------------------- uncoded

def uncoded_aoi(K: int, ell: float, p: float, mode: Mode = Mode.EXACT) -> AoiResult:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if p >= 1.0:
        return AoiResult.divergent()
    main = K * ell * (1.0 + p) / (2.0 * (1.0 - p))
    if mode is Mode.LARGE_K:
        return AoiResult(main, components={"main": main})
    return AoiResult(main + ell, components={"main": main, "ell": ell})


def uncoded_interarrival_pmf(x: int, p: float, K: int = 1, ell: float = 1) -> float:
    """P(X = x K ell): x - 1 failures then a success. K and ell only set the support."""
    if x < 1:
        raise ValueError("x must be >= 1")
    return (1.0 - p) * p ** (x - 1)


# ---------------------------------------------------------------- coded

def event_probs(cfg: SystemConfig, params: GEParams) -> EventProbabilities:
    p = marginal_erasure_prob(params)
    bep = bep_mds(cfg.n - 1, cfg.k, params)
    return EventProbabilities(1.0 - p, p * (1.0 - bep), p * bep)


def coded_interarrival_moments(
    cfg: SystemConfig, ev: EventProbabilities, i: int = 0
) -> InterarrivalMoments:
    if ev.p_c >= 1.0:
        return InterarrivalMoments(math.inf, math.inf)
    m = cfg.round_slots
    d = (cfg.n - cfg.position(i)) * cfg.ell
    q = 1.0 - ev.p_c
    ex = m / q
    ex2 = ((1.0 + ev.p_c) * m * m + 2.0 * ev.p_a * ev.p_b * d * d) / (q * q)
    return InterarrivalMoments(ex, ex2)


def coded_aoi_exact(i: int, cfg: SystemConfig, params: GEParams) -> AoiResult:
    """Per-source mean AoI, E[X^2] / (2 E[X]) + ell with the three-event inter-arrival law."""
    if not 0 <= i < cfg.K:
        raise ValueError(f"source index {i} outside [0, {cfg.K})")
    ev = event_probs(cfg, params)
    if ev.p_c >= 1.0:
        return AoiResult.divergent()
    m = cfg.round_slots
    d = (cfg.n - cfg.position(i)) * cfg.ell
    main = m * (1.0 + ev.p_c) / (2.0 * (1.0 - ev.p_c))
    pos = ev.p_a * ev.p_b * d * d / (m * (1.0 - ev.p_c))
    return AoiResult(main + pos + cfg.ell, components={"main": main, "position": pos, "ell": cfg.ell})


def coded_aoi_renewal(i: int, cfg: SystemConfig, params: GEParams, recovery_delay: int = 1) -> AoiResult:
    """Per-source mean AoI that also charges the larger age left by a block recovery.

    Splits the sawtooth by generation instants instead of reception instants:
    mean AoI = E[G^2] / (2 E[G]) + E[D], with G the gap between generation
    times of delivered updates and D the delivery delay (ell for a direct
    delivery, (n - pos + recovery_delay) * ell after recovery). Exact for an
    i.i.d. channel with k dividing K; ``recovery_delay=1`` matches the
    simulator's default convention, 0 the immediate one.
    """
    ev = event_probs(cfg, params)
    if ev.p_c >= 1.0:
        return AoiResult.divergent()
    m = cfg.round_slots
    main = m * (1.0 + ev.p_c) / (2.0 * (1.0 - ev.p_c))
    q_b = ev.p_b / (ev.p_a + ev.p_b)
    delay = (1.0 - q_b) * cfg.ell + q_b * (cfg.n - cfg.position(i) + recovery_delay) * cfg.ell
    return AoiResult(main + delay, components={"main": main, "delay": delay})


def validity_margin(cfg: SystemConfig, ev: EventProbabilities, i: int = 0) -> float:
    """The K-threshold beyond which the large-K approximation holds (max of the two terms)."""
    d = (cfg.n - cfg.position(i)) * cfg.ell
    t1 = math.sqrt(2.0 * ev.p_a * ev.p_b * d * d / (cfg.ell ** 2 * (1.0 + ev.p_c)))
    t2 = 2.0 * (1.0 - ev.p_c) / (1.0 + ev.p_c)
    return max(t1, t2)


def coded_aoi_approx(cfg: SystemConfig, params: GEParams, *, factor: float = 10.0) -> AoiResult:
    """Generic-source large-K value K n ell (1 + p_c) / (2 k (1 - p_c)).

    ``components['valid']`` reports whether K exceeds ``factor`` times the
    threshold for the worst position (i mod k = 0).
    """
    ev = event_probs(cfg, params)
    if ev.p_c >= 1.0:
        return AoiResult.divergent()
    val = cfg.K * cfg.n * cfg.ell * (1.0 + ev.p_c) / (2.0 * cfg.k * (1.0 - ev.p_c))
    thr = validity_margin(cfg, ev, 0)
    return AoiResult(val, components={"p_c": ev.p_c, "threshold": thr, "valid": cfg.K >= factor * thr})


def coded_aoi_approx_all(n: int, params: GEParams, K: int, ell: float) -> tuple[np.ndarray, np.ndarray]:
    """(p_c, large-K AoI) for k = 1..n at once. Same arithmetic as ``coded_aoi_approx``."""
    p = marginal_erasure_prob(params)
    ks = np.arange(1, n + 1)
    bep = bep_mds_all(n - 1, params)  # index k-1 -> BEP(n-1, k), k = 1..n
    p_c = p * bep[:n]
    with np.errstate(divide="ignore"):
        aoi = np.where(p_c < 1.0, K * n * ell * (1.0 + p_c) / (2.0 * ks * (1.0 - p_c)), np.inf)
    return p_c, aoi


# ---------------------------------------------------------------- Gaussian / regions

def c_n_for_k(k: float, n: int, p: float) -> float:
    s = math.sqrt(n * p * (1.0 - p))
    if s == 0.0:
        raise ValueError("c_n is undefined when p is 0 or 1")
    return (k - n * (1.0 - p)) / s


def k_bar_for_c(c_n: float, n: int, p: float) -> float:
    return n - n * p + c_n * math.sqrt(n * p * (1.0 - p))


def _rate_factor(c_n: float, n: int, p: float) -> float:
    r = 1.0 - p + c_n * math.sqrt(p * (1.0 - p) / n)
    if r <= 0.0:
        raise ValueError(f"k_bar <= 0 at c_n={c_n}")
    return r


def gaussian_aoi(c_n: float, n: int, K: int, ell: float, p: float) -> AoiResult:
    """Large-K AoI with P(C) replaced by p * Phi(c_n) from the normal approximation."""
    rate = _rate_factor(c_n, n, p)
    if rate > 1.0 + 1e-12:
        raise ValueError(f"k_bar > n at c_n={c_n}")
    pc = p * std_normal_cdf(c_n)
    if pc >= 1.0:
        return AoiResult.divergent()
    val = K * ell * (1.0 + pc) / (2.0 * rate * (1.0 - pc))
    return AoiResult(val, components={"p_c": pc, "rate": rate})


def calibrate_c_eps(eps: float = DEFAULT_C_EPS_TOL, xtol: float = 1e-9) -> float:
    """Smallest c > 0 with exp(-c^2) / c <= eps (the left side is decreasing)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")

    def f(c):
        return math.exp(-c * c) / c - eps

    lo, hi = 1e-12, 1.0
    while f(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def classify_region(c_n: float, c_eps: float) -> Region:
    if c_n < -c_eps:
        return Region.REGION1
    if c_n > c_eps:
        return Region.REGION2
    return Region.REGION3


def gaussian_approx(k: float, n: int, p: float, c_eps: float | None = None) -> GaussianApprox:
    c_eps = calibrate_c_eps() if c_eps is None else c_eps
    c = c_n_for_k(k, n, p)
    return GaussianApprox(c, k_bar_for_c(c, n, p), c_eps, classify_region(c, c_eps))


def region_formula(region: Region, c_n: float, n: int, K: int, ell: float, p: float, c_eps: float) -> float:
    """Evaluate one region's simplified formula regardless of where c_n falls."""
    if region is Region.REGION1:
        return K * ell / (2.0 * _rate_factor(c_n, n, p))
    if region is Region.REGION2:
        return K * ell * (1.0 + p) / (2.0 * _rate_factor(c_n, n, p) * (1.0 - p))
    phi = (c_n + c_eps) / (2.0 * c_eps)
    return K * ell * (1.0 + p * phi) / (2.0 * (1.0 - p) * (1.0 - p * phi))


def region_aoi(c_n: float, n: int, K: int, ell: float, p: float, c_eps: float) -> tuple[AoiResult, Region]:
    if c_eps <= 0.0:
        raise ValueError("c_eps must be positive")
    _rate_factor(c_n, n, p)
    region = classify_region(c_n, c_eps)
    return AoiResult(region_formula(region, c_n, n, K, ell, p, c_eps)), region


# ---------------------------------------------------------------- optimisation

def optimal_k(n: int, params: GEParams, K: int, ell: float = 1) -> tuple[int, AoiResult]:
    """Exhaustive argmin of the large-K AoI over 1 <= k <= n; ties go to the larger k."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p_c, aoi = coded_aoi_approx_all(n, params, K, ell)
    best = int(np.flatnonzero(aoi == aoi.min())[-1])
    k = best + 1
    if not np.isfinite(aoi[best]):
        return k, AoiResult.divergent()
    return k, AoiResult(float(aoi[best]), components={"p_c": float(p_c[best])})


def coding_gain(n: int, params: GEParams, K: int, ell: float = 1) -> CodingGain:
    """Uncoded large-K AoI over the best coded AoI at blocklength n (> 1 means coding helps)."""
    p = marginal_erasure_prob(params)
    if p >= 1.0:
        raise ValueError("coding gain is undefined when every packet is erased")
    k, best = optimal_k(n, params, K, ell)
    unc = uncoded_aoi(K, ell, p, Mode.LARGE_K).mean_aoi
    return CodingGain(unc / best.mean_aoi, 1.0 + p, k, best.mean_aoi, unc)
