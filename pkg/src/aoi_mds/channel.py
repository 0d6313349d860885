"""Gilbert-Elliot packet-erasure channel.

A two-state Markov chain (Good = 0, Bad = 1). Each channel use first emits an
erasure with probability ``eps0`` (Good) or ``eps1`` (Bad) according to the
*current* state, then moves Good->Bad with probability ``alpha`` and
Bad->Good with probability ``beta``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


class DegenerateChannelError(ValueError):
    """Raised when alpha + beta == 0 and the stationary law is undefined."""


class ChannelState(enum.IntEnum):
    GOOD = 0
    BAD = 1


@dataclass(frozen=True)
class GEParams:
    alpha: float
    beta: float
    eps0: float
    eps1: float

    def __post_init__(self):
        for name in ("alpha", "beta", "eps0", "eps1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} is not a probability")

    @property
    def pi_g(self) -> float:
        return steady_state_good(self)

    @property
    def erasure_prob(self) -> float:
        return marginal_erasure_prob(self)

    @property
    def iid(self) -> bool:
        """True when alpha + beta == 1, i.e. successive states are independent."""
        return abs(self.alpha + self.beta - 1.0) < 1e-15

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GEParams":
        return cls(float(d["alpha"]), float(d["beta"]), float(d["eps0"]), float(d["eps1"]))

    @classmethod
    def from_json(cls, path: str | Path) -> "GEParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


# Default channel: alpha + beta = 1, so erasures are i.i.d.
BASELINE_CHANNEL = GEParams(alpha=0.2, beta=0.8, eps0=0.2, eps1=0.9)


def steady_state_good(params: GEParams) -> float:
    s = params.alpha + params.beta
    if s <= 0.0:
        raise DegenerateChannelError("alpha + beta must be positive")
    return params.beta / s


def marginal_erasure_prob(params: GEParams) -> float:
    pi_g = steady_state_good(params)
    return params.eps0 * pi_g + params.eps1 * (1.0 - pi_g)


def reverse_states(params: GEParams) -> GEParams:
    """Relabel Good <-> Bad. The erasure process itself is unchanged."""
    return GEParams(params.beta, params.alpha, params.eps1, params.eps0)


def step(state: ChannelState, params: GEParams, rng: np.random.Generator):
    """One channel use: emit from the current state, then transition."""
    if state == ChannelState.GOOD:
        erased = bool(rng.random() < params.eps0)
        nxt = ChannelState.BAD if rng.random() < params.alpha else ChannelState.GOOD
    else:
        erased = bool(rng.random() < params.eps1)
        nxt = ChannelState.GOOD if rng.random() < params.beta else ChannelState.BAD
    return nxt, erased


def stationary_state(params: GEParams, rng: np.random.Generator) -> ChannelState:
    return ChannelState.GOOD if rng.random() < steady_state_good(params) else ChannelState.BAD


class GEChannel:
    """Seedable sampler holding one continuous channel trajectory.

    Not thread-safe; use one instance per worker.
    """

    def __init__(self, params: GEParams, seed: int | None = None, state: ChannelState | None = None):
        self.params = params
        self.rng = np.random.default_rng(seed)
        self.state = stationary_state(params, self.rng) if state is None else ChannelState(state)

    def step(self) -> bool:
        self.state, erased = step(self.state, self.params, self.rng)
        return erased

    def sample_states(self, n: int) -> np.ndarray:
        """States for the next ``n`` uses (uint8), advancing the chain past them.

        Built from geometric sojourn times, which is the same law as stepping
        the chain one use at a time but vectorised.
        """
        p = self.params
        leave = (p.alpha, p.beta)
        need = n + 1
        run_states, run_lens = [], []
        total = 0
        s = int(self.state)
        while total < need:
            m = max(16, int((need - total) * max(leave)) + 16)
            lens = np.empty(2 * m, dtype=np.int64)
            for j, st in enumerate((s, 1 - s)):
                q = leave[st]
                lens[j::2] = self.rng.geometric(q, size=m) if q > 0 else need
            states = np.empty(2 * m, dtype=np.uint8)
            states[0::2] = s
            states[1::2] = 1 - s
            cs = np.cumsum(lens)
            cut = int(np.searchsorted(cs, need - total))
            if cut < 2 * m:
                lens = lens[: cut + 1]
                states = states[: cut + 1]
            run_states.append(states)
            run_lens.append(lens)
            total += int(lens.sum())
            s = int(states[-1]) ^ 1
        out = np.repeat(np.concatenate(run_states), np.concatenate(run_lens))[:need]
        self.state = ChannelState(int(out[n]))
        return out[:n]

    def sample(self, n: int) -> np.ndarray:
        """Erasure flags (bool) for the next ``n`` channel uses."""
        states = self.sample_states(n)
        eps = np.array([self.params.eps0, self.params.eps1])
        return self.rng.random(n) < eps[states]


def sample_windows(params: GEParams, n: int, windows: int, rng: np.random.Generator) -> np.ndarray:
    """Erasure flags for ``windows`` independent stationary windows, shape (windows, n)."""
    pi_g = steady_state_good(params)
    bad = rng.random(windows) >= pi_g
    eps = np.array([params.eps0, params.eps1])
    leave = np.array([params.alpha, params.beta])
    out = np.empty((windows, n), dtype=bool)
    for t in range(n):
        s = bad.astype(np.intp)
        out[:, t] = rng.random(windows) < eps[s]
        flip = rng.random(windows) < leave[s]
        bad = bad ^ flip
    return out
