"""Slot-level Monte Carlo of the round-robin aggregator over a GE channel.

The aggregator's packet stream is source 0, 1, ..., K-1, 0, 1, ... and is cut
into consecutive blocks of k packets, each followed by n - k parity packets.
When k divides K this is exactly lam = K / k blocks per round with source i
always at position i mod k; otherwise a source's position drifts from round
to round. Uncoded transmission is the n = k = 1 case (no parity, an erasure
loses the packet).

Each packet is one channel use. A packet is generated when its transmission
starts, so a direct delivery leaves age ell. A packet recovered from its
block reaches the destination at the block end (plus one packet time under
the default convention). Ages are integrated exactly from the reception
instants; there is no per-slot loop.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import (
    EventProbabilities,
    SystemConfig,
    coded_aoi_exact,
    coded_interarrival_moments,
    event_probs,
    uncoded_aoi,
)
from .channel import GEChannel, GEParams, marginal_erasure_prob, sample_windows

N_BATCHES = 50


class RecoveryOffset(enum.Enum):
    DELAYED = "delayed"  # reset to (n + 1 - pos) * ell
    IMMEDIATE = "immediate"  # reset to (n - pos) * ell

    @property
    def delay(self) -> int:
        return 1 if self is RecoveryOffset.DELAYED else 0


@dataclass(frozen=True)
class SimConfig:
    system: SystemConfig
    channel: GEParams
    rounds: int
    warmup_rounds: int | None = None
    seed: int = 0
    tracked_sources: tuple[int, ...] | None = None
    recovery_age_offset: RecoveryOffset = RecoveryOffset.DELAYED
    coded: bool = True

    def __post_init__(self):
        sysc = self.system
        if self.warmup_rounds is None:
            w = max(100, self.rounds // 10)
            object.__setattr__(self, "warmup_rounds", w if w < self.rounds else self.rounds // 10)
        if not self.rounds > self.warmup_rounds >= 0:
            raise ValueError("need rounds > warmup_rounds >= 0")
        if self.tracked_sources is None:
            object.__setattr__(self, "tracked_sources", tuple(range(min(sysc.k, sysc.K))))
        else:
            object.__setattr__(self, "tracked_sources", tuple(int(s) for s in self.tracked_sources))
        if any(not 0 <= s < sysc.K for s in self.tracked_sources):
            raise ValueError("tracked source index out of range")
        if self.coded and sysc.K < sysc.k:
            raise ValueError("the simulator needs K >= k")


@dataclass
class AgeTrace:
    source: int
    integral: float  # slot * slots over the measurement window
    elapsed: float
    reception_times: np.ndarray
    reset_values: np.ndarray  # age just after each reception
    polygon_integral: float = 0.0  # independent recomputation, see _integrate


@dataclass
class SourceStats:
    source: int
    position: int
    mean_aoi: float
    ex: float
    ex2: float
    ex_se: float
    ex2_se: float
    deliveries: int


@dataclass
class SimReport:
    coded: bool
    seed: int
    rounds: int
    warmup_rounds: int
    blocks: int
    sources: list[SourceStats]
    event_freqs: dict
    event_se: dict
    event_probs_analytic: dict
    event_discrepancy: dict
    erasure_histogram: list[int]
    histogram_n: int
    integral_check: float
    no_delivery: bool
    traces: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("traces")
        return d


def _batch_se(x: np.ndarray, nb: int = N_BATCHES) -> float:
    """Standard error of the mean from contiguous batch means."""
    x = np.asarray(x, dtype=float)
    nb = min(nb, len(x))
    if nb < 2:
        return math.nan
    m = len(x) // nb
    means = x[: m * nb].reshape(nb, m).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(nb))


def _integrate(recv: np.ndarray, u: np.ndarray, t0: float, t1: float) -> tuple[float, float]:
    """Integral of t - U(t) over [t0, t1], U = last generation time received.

    Returns (polygon sum, sum via (t1^2 - t0^2)/2 - integral of U); the two
    are computed independently and should agree.
    """
    before = recv <= t0
    u0 = u[before][-1] if before.any() else 0.0
    inside = (recv > t0) & (recv <= t1)
    edges = np.concatenate(([t0], recv[inside], [t1]))
    us = np.concatenate(([u0], u[inside]))
    lens = np.diff(edges)
    base = edges[:-1] - us
    poly = float(np.sum(lens * base + 0.5 * lens * lens))
    alt = 0.5 * (t1 * t1 - t0 * t0) - float(np.sum(us * lens))
    return poly, alt


def _run(cfg: SimConfig, n: int, k: int):
    sysc = cfg.system
    K, ell = sysc.K, sysc.ell
    total = cfg.rounds * K
    blocks = -(-total // k)
    warm_blocks = -(-cfg.warmup_rounds * K // k)

    ch = GEChannel(cfg.channel, seed=cfg.seed)
    erased = ch.sample(blocks * n).reshape(blocks, n)
    counts = erased.sum(axis=1)
    recovered = counts <= n - k

    # event code per stream packet: 0 direct, 1 recovered, 2 lost
    data = erased[:, :k]
    code = np.where(~data, 0, np.where(recovered[:, None], 1, 2)).astype(np.int8)
    code_flat = code.reshape(-1)

    t0 = float(warm_blocks * n * ell)
    t1 = float(blocks * n * ell)
    delay = cfg.recovery_age_offset.delay if k < n else 0

    stats, traces = [], {}
    no_delivery = False
    worst_check = 0.0
    for s in cfg.tracked_sources:
        j = np.arange(s, blocks * k, K)
        b, pos = j // k, j % k
        ev = code_flat[j]
        ok = ev < 2
        tstart = ((b * n + pos) * ell).astype(float)
        recv = np.where(ev == 0, tstart + ell, ((b + 1) * n + delay) * ell).astype(float)
        recv, u = recv[ok], tstart[ok]
        in_win = (recv > t0) & (recv <= t1)
        if not in_win.any():
            no_delivery = True
        poly, alt = _integrate(recv, u, t0, t1)
        worst_check = max(worst_check, abs(poly - alt) / max(1.0, abs(alt)))
        elapsed = t1 - t0
        x = np.diff(recv[in_win])
        stats.append(SourceStats(
            source=s,
            position=s % k,
            mean_aoi=poly / elapsed,
            ex=float(x.mean()) if len(x) else math.nan,
            ex2=float((x * x).mean()) if len(x) else math.nan,
            ex_se=_batch_se(x),
            ex2_se=_batch_se(x * x),
            deliveries=int(in_win.sum()),
        ))
        traces[s] = AgeTrace(s, alt, elapsed, recv[in_win], recv[in_win] - u[in_win], poly)

    c = code[warm_blocks:]
    per_block = np.stack([(c == e).mean(axis=1) for e in (0, 1, 2)], axis=1)
    freqs = per_block.mean(axis=0)
    se = [_batch_se(per_block[:, e]) for e in range(3)]
    return dict(
        blocks=blocks,
        warm_blocks=warm_blocks,
        erased=erased,
        freqs=freqs,
        se=se,
        stats=stats,
        traces=traces,
        no_delivery=no_delivery,
        check=worst_check,
    )


def _report(cfg: SimConfig, out: dict, analytic: EventProbabilities, hist: np.ndarray, hist_n: int) -> SimReport:
    keys = ("A", "B", "C")
    ana = dict(zip(keys, (analytic.p_a, analytic.p_b, analytic.p_c)))
    freqs = dict(zip(keys, map(float, out["freqs"])))
    return SimReport(
        coded=cfg.coded,
        seed=cfg.seed,
        rounds=cfg.rounds,
        warmup_rounds=cfg.warmup_rounds,
        blocks=out["blocks"],
        sources=out["stats"],
        event_freqs=freqs,
        event_se=dict(zip(keys, out["se"])),
        event_probs_analytic=ana,
        event_discrepancy={key: freqs[key] - ana[key] for key in keys},
        erasure_histogram=[int(v) for v in hist],
        histogram_n=hist_n,
        integral_check=out["check"],
        no_delivery=out["no_delivery"],
        traces=out["traces"],
    )


def simulate_uncoded(cfg: SimConfig) -> SimReport:
    if cfg.coded:
        cfg = _replace(cfg, coded=False)
    out = _run(cfg, 1, 1)
    p = marginal_erasure_prob(cfg.channel)
    # histogram over consecutive windows of the system's block length
    n = cfg.system.n
    flat = out["erased"].reshape(-1)[cfg.warmup_rounds * cfg.system.K:]
    m = len(flat) // n
    hist = np.bincount(flat[: m * n].reshape(m, n).sum(axis=1), minlength=n + 1)
    return _report(cfg, out, EventProbabilities(1.0 - p, 0.0, p), hist, n)


def simulate_coded(cfg: SimConfig) -> SimReport:
    if not cfg.coded:
        cfg = _replace(cfg, coded=True)
    sysc = cfg.system
    out = _run(cfg, sysc.n, sysc.k)
    hist = np.bincount(out["erased"][out["warm_blocks"]:].sum(axis=1), minlength=sysc.n + 1)
    return _report(cfg, out, event_probs(sysc, cfg.channel), hist, sysc.n)


def simulate(cfg: SimConfig) -> SimReport:
    return simulate_coded(cfg) if cfg.coded else simulate_uncoded(cfg)


def _replace(cfg: SimConfig, **kw) -> SimConfig:
    d = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    d.update(kw)
    return SimConfig(**d)


def analytic_predictions(cfg: SimConfig) -> dict[int, dict]:
    """Closed-form mean AoI and inter-arrival moments for each tracked source."""
    sysc = cfg.system
    p = marginal_erasure_prob(cfg.channel)
    out = {}
    for s in cfg.tracked_sources:
        if cfg.coded:
            aoi = coded_aoi_exact(s, sysc, cfg.channel)
            mom = coded_interarrival_moments(sysc, event_probs(sysc, cfg.channel), s)
            ex, ex2 = mom.mean, mom.second_moment
        else:
            aoi = uncoded_aoi(sysc.K, sysc.ell, p)
            kl = sysc.K * sysc.ell
            ex = kl / (1.0 - p) if p < 1 else math.inf
            ex2 = kl * kl * (1.0 + p) / (1.0 - p) ** 2 if p < 1 else math.inf
        out[s] = {"mean_aoi": aoi.mean_aoi, "ex": ex, "ex2": ex2}
    return out


def estimate_erasure_pmf(n: int, windows: int, params: GEParams, seed: int | None = None) -> np.ndarray:
    """Empirical erasure-count frequencies over independent stationary windows."""
    if windows < 1:
        raise ValueError("windows must be >= 1")
    rng = np.random.default_rng(seed)
    counts = sample_windows(params, n, windows, rng).sum(axis=1)
    return np.bincount(counts, minlength=n + 1) / windows


def max_workers() -> int:
    env = os.environ.get("AOI_MDS_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, cap)


def run_replications(cfg: SimConfig, reps: int, workers: int | None = None) -> list[SimReport]:
    """Independent runs with seeds seed, seed+1, ...; returned in seed order."""
    cfgs = [_replace(cfg, seed=cfg.seed + r) for r in range(reps)]
    workers = min(reps, workers or max_workers())
    if workers <= 1:
        return [simulate(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(simulate, cfgs))
