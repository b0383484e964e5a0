"""Convoy scenarios, channel gains, ACI leakage matrices and link sets.

VUEs are indexed 0..N-1 here and in every array of the package; only the
schedule grid ``U`` uses 1-based VUE ids so that 0 can mean "empty RB".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError

GPP3_ADJACENT = 1e-3
GPP3_FAR = 10 ** -4.5


class Duplex(str, Enum):
    HALF = "half"
    FULL = "full"


@dataclass(frozen=True)
class AciModel:
    """Source model for the inverse-ACIR matrix.

    ``kind`` is one of ``"gpp3"``, ``"none"`` or ``"custom"``. A custom
    model is a step mask: ``levels`` holds ``(max_offset, ratio)`` pairs
    with strictly increasing offsets; slot offsets beyond the last
    ``max_offset`` leak nothing.
    """

    kind: str = "gpp3"
    levels: tuple = ()

    def __post_init__(self):
        if self.kind not in ("gpp3", "none", "custom"):
            raise ConfigurationError(f"unknown ACI model {self.kind!r}")
        if self.kind != "custom":
            return
        if not self.levels:
            raise ConfigurationError("custom ACI model needs at least one level")
        prev = 0
        for offset, ratio in self.levels:
            if int(offset) != offset or offset <= prev:
                raise ConfigurationError("custom ACI offsets must be strictly increasing positive integers")
            if not 0.0 < ratio <= 1.0:
                raise ConfigurationError(f"custom ACI ratio {ratio} outside (0, 1]")
            prev = offset

    @classmethod
    def gpp3(cls):
        return cls("gpp3")

    @classmethod
    def no_aci(cls):
        return cls("none")

    @classmethod
    def custom(cls, levels):
        return cls("custom", tuple((int(o), float(r)) for o, r in levels))

    @classmethod
    def parse(cls, text):
        """Parse ``gpp3``, ``none`` or ``custom:1=1e-3,4=1e-4``."""
        text = text.strip().lower()
        if text in ("gpp3", "3gpp"):
            return cls.gpp3()
        if text in ("none", "noaci", "no-aci"):
            return cls.no_aci()
        if text.startswith("custom:"):
            try:
                pairs = [item.split("=") for item in text[len("custom:"):].split(",")]
                return cls.custom((int(o), float(r)) for o, r in pairs)
            except ValueError as exc:
                raise ConfigurationError(f"bad custom ACI spec {text!r}") from exc
        raise ConfigurationError(f"unknown ACI model {text!r}")

    def leakage(self, offset):
        """Linear leakage ratio for a slot offset ``|f' - f|``."""
        if offset == 0:
            return 1.0
        if self.kind == "none":
            return 0.0
        if self.kind == "gpp3":
            return GPP3_ADJACENT if offset <= 4 else GPP3_FAR
        for max_offset, ratio in self.levels:
            if offset <= max_offset:
                return ratio
        return 0.0


def build_aci_matrix(F, model=None):
    """Return the F x F Toeplitz leakage matrix ``A[f_src, f_rx]``."""
    if F < 1:
        raise ConfigurationError("F must be >= 1")
    model = AciModel.gpp3() if model is None else model
    column = np.array([model.leakage(k) for k in range(F)])
    idx = np.abs(np.subtract.outer(np.arange(F), np.arange(F)))
    return column[idx]


@dataclass(frozen=True)
class ConvoyScenario:
    positions: np.ndarray
    rng_seed: int | None = None

    @property
    def N(self):
        return len(self.positions)

    def distances(self):
        return np.abs(np.subtract.outer(self.positions, self.positions))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_convoy(N, d_min=10.0, d_avg=48.6, seed=None):
    """Place N VUEs on a line with shifted-exponential gaps.

    The first VUE sits at 0 m. Gaps are ``d_min + Exp(d_avg - d_min)``.
    ``seed`` may be an int or an existing ``numpy.random.Generator``.
    """
    if N < 2:
        raise ConfigurationError("a convoy needs N >= 2")
    if not 0 < d_min < d_avg:
        raise ConfigurationError(f"need 0 < d_min < d_avg, got d_min={d_min}, d_avg={d_avg}")
    rng = _rng(seed)
    gaps = d_min + rng.exponential(d_avg - d_min, size=N - 1)
    positions = np.concatenate(([0.0], np.cumsum(gaps)))
    return ConvoyScenario(positions, seed if isinstance(seed, (int, np.integer)) else None)


def uniform_convoy(N, spacing=48.6):
    """Equally spaced convoy, used by the worked examples."""
    return ConvoyScenario(np.arange(N) * float(spacing))


@dataclass(frozen=True)
class ChannelParams:
    pl0: float = 63.3
    n_exp: float = 1.77
    d0: float = 10.0
    sigma1: float = 3.1
    penetration_db_per_blocker: float = 10.0
    symmetric_shadowing: bool = True

    def __post_init__(self):
        if self.d0 <= 0:
            raise ConfigurationError("d0 must be positive")
        if self.sigma1 < 0:
            raise ConfigurationError("sigma1 must be non-negative")


@dataclass(frozen=True)
class ChannelMatrix:
    gains: np.ndarray
    diagonal_mode: Duplex = Duplex.HALF

    @property
    def N(self):
        return self.gains.shape[0]


def pathloss_db(distance, params, shadowing_db=0.0, blockers=0):
    return (params.pl0 + 10 * params.n_exp * np.log10(np.asarray(distance) / params.d0)
            + shadowing_db + params.penetration_db_per_blocker * np.asarray(blockers))


def channel_gain_matrix(scenario, params=None, duplex=Duplex.HALF, seed=None, self_gain=0.0):
    """Linear average channel power gains ``H[i, j]`` from VUE i to VUE j.

    Shadowing is zero-mean Gaussian in dB with std ``sigma1``; with
    ``symmetric_shadowing`` one draw per unordered pair is mirrored.
    Every VUE strictly between i and j on the convoy adds the penetration
    loss. The diagonal is 0 in half-duplex mode and ``self_gain`` in
    full-duplex mode.
    """
    params = ChannelParams() if params is None else params
    duplex = Duplex(duplex)
    N = scenario.N
    rng = _rng(seed)
    dist = scenario.distances()
    off = ~np.eye(N, dtype=bool)
    if np.any(dist[off] <= 0):
        raise ConfigurationError("VUE positions must be distinct")

    order = np.argsort(scenario.positions, kind="stable")
    rank = np.empty(N, dtype=int)
    rank[order] = np.arange(N)
    blockers = np.maximum(np.abs(np.subtract.outer(rank, rank)) - 1, 0)

    if params.sigma1 > 0:
        shadow = rng.normal(0.0, params.sigma1, size=(N, N))
        if params.symmetric_shadowing:
            shadow = np.triu(shadow, 1)
            shadow = shadow + shadow.T
    else:
        shadow = np.zeros((N, N))

    with np.errstate(divide="ignore"):
        pl = pathloss_db(np.where(off, dist, params.d0), params, shadow, blockers)
    gains = np.where(off, 10.0 ** (-pl / 10.0), 0.0)
    if duplex is Duplex.FULL:
        np.fill_diagonal(gains, self_gain)
    return ChannelMatrix(gains, duplex)


@dataclass(frozen=True)
class LinkSets:
    """Intended links; ``mask[i, j]`` is True when j is an intended receiver of i."""

    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        if np.any(np.diag(self.mask)):
            raise ConfigurationError("a VUE cannot be its own intended receiver")

    @property
    def N(self):
        return self.mask.shape[0]

    def receivers_of(self, i):
        return set(np.flatnonzero(self.mask[i]).tolist())

    def transmitters_of(self, j):
        return set(np.flatnonzero(self.mask[:, j]).tolist())

    @classmethod
    def from_receivers(cls, receivers, N):
        mask = np.zeros((N, N), dtype=bool)
        for i, rs in enumerate(receivers):
            mask[i, list(rs)] = True
        return cls(mask)

    @classmethod
    def all_to_all(cls, N):
        return cls(~np.eye(N, dtype=bool))

    def unicast(self, target):
        """Restrict every VUE to the single receiver ``target[i]`` (None to drop)."""
        mask = np.zeros_like(self.mask)
        for i, j in enumerate(target):
            if j is not None:
                mask[i, j] = True
        return LinkSets(mask)


def intended_sets(scenario, F, T):
    """Each VUE listens to its ``min(N-1, F*T-1)`` nearest VUEs."""
    N = scenario.N
    k = max(min(N - 1, F * T - 1), 0)
    dist = scenario.distances()
    mask = np.zeros((N, N), dtype=bool)
    idx = np.arange(N)
    for j in range(N):
        others = idx[idx != j]
        # lexsort: last key is primary -> distance, then lower index
        nearest = others[np.lexsort((others, dist[j, others]))][:k]
        mask[nearest, j] = True
    return LinkSets(mask)
