"""Problem constants, schedules, SINR evaluation and connectivity metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .environment import Duplex, LinkSets
from .errors import ConfigurationError


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Params:
    """Scalar problem constants, all powers in mW and ratios linear."""

    N: int
    F: int
    T: int
    gamma_t: float
    sigma2: float
    p_max: float
    p_init: float
    duplex: Duplex = Duplex.HALF
    c_max: int = 100
    beta: float | None = None

    def __post_init__(self):
        for name in ("N", "F", "T"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        for name in ("gamma_t", "sigma2", "p_max", "p_init"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigurationError(f"{name} must be finite and non-negative, got {v}")
        if self.gamma_t <= 0 or self.p_max <= 0:
            raise ConfigurationError("gamma_t and p_max must be positive")
        if self.p_init > self.p_max:
            raise ConfigurationError("p_init cannot exceed p_max")
        if self.c_max < 0:
            raise ConfigurationError("c_max must be >= 0")
        object.__setattr__(self, "duplex", Duplex(self.duplex))
        if self.beta is None:
            object.__setattr__(self, "beta", self.beta_bound)

    @property
    def gamma_bar(self):
        return self.gamma_t / (1.0 + self.gamma_t)

    @property
    def eta(self):
        return self.gamma_bar * (self.N * self.p_max + self.sigma2)

    @property
    def beta_bound(self):
        # largest power weight that cannot trade a link for power savings
        return 1.0 / (self.N * self.T * self.p_max)

    @property
    def half_duplex(self):
        return self.duplex is Duplex.HALF

    def with_(self, **changes):
        return replace(self, **changes)


def derive_constants(N, F, T, gamma_t_db=5.0, sigma2_dbm=-95.2, p_max_dbm=24.0,
                     p_init_dbm=None, duplex=Duplex.HALF, c_max=100, beta=None):
    """Build :class:`Params` from dB/dBm inputs.

    ``p_init_dbm`` defaults to one tenth of the maximum power.
    """
    for name, v in (("gamma_t_db", gamma_t_db), ("sigma2_dbm", sigma2_dbm),
                    ("p_max_dbm", p_max_dbm)):
        if v is None or not math.isfinite(v):
            raise ConfigurationError(f"{name} must be finite, got {v}")
    p_max = float(db2lin(p_max_dbm))
    if p_init_dbm is None:
        p_init = p_max / 10.0
    elif not math.isfinite(p_init_dbm):
        raise ConfigurationError("p_init_dbm must be finite")
    else:
        p_init = float(db2lin(p_init_dbm))
    return Params(N=int(N), F=int(F), T=int(T), gamma_t=float(db2lin(gamma_t_db)),
                  sigma2=float(db2lin(sigma2_dbm)), p_max=p_max, p_init=p_init,
                  duplex=Duplex(duplex), c_max=int(c_max), beta=beta)


# --------------------------------------------------------------------------
# schedules

def u_to_x(U, N):
    """Expand the F x T grid of 1-based VUE ids into the Boolean X[i, f, t]."""
    U = np.asarray(U)
    if U.ndim != 2:
        raise ValueError("U must be an F x T matrix")
    if U.size and (U.min() < 0 or U.max() > N):
        raise ValueError(f"U entries must lie in 0..{N}")
    ids = np.arange(1, N + 1)[:, None, None]
    return U[None, :, :] == ids


def x_to_u(X):
    X = np.asarray(X, dtype=bool)
    if np.any(X.sum(axis=0) > 1):
        raise ValueError("more than one VUE in a resource block")
    ids = np.arange(1, X.shape[0] + 1)[:, None, None]
    return (X * ids).sum(axis=0)


@dataclass(frozen=True)
class Schedule:
    """Resource grid ``U`` (F x T, 0 = empty) for ``N`` VUEs."""

    U: np.ndarray
    N: int

    def __post_init__(self):
        U = np.asarray(self.U, dtype=int)
        object.__setattr__(self, "U", U)
        if U.ndim != 2:
            raise ValueError("U must be 2-D")
        if U.size and (U.min() < 0 or U.max() > self.N):
            raise ValueError(f"U entries must lie in 0..{self.N}")
        for t in range(U.shape[1]):
            col = U[:, t]
            col = col[col > 0]
            if len(np.unique(col)) != len(col):
                raise ValueError(f"a VUE is scheduled twice in timeslot {t + 1}")

    @property
    def F(self):
        return self.U.shape[0]

    @property
    def T(self):
        return self.U.shape[1]

    @property
    def X(self):
        return u_to_x(self.U, self.N)

    def slots(self):
        """N x T array with the 0-based frequency slot of each VUE, -1 if idle."""
        out = -np.ones((self.N, self.T), dtype=int)
        f_idx, t_idx = np.nonzero(self.U)
        out[self.U[f_idx, t_idx] - 1, t_idx] = f_idx
        return out

    def scheduled(self):
        return self.slots() >= 0

    @classmethod
    def empty(cls, N, F, T):
        return cls(np.zeros((F, T), dtype=int), N)


def slots_from_x(X):
    X = np.asarray(X, dtype=bool)
    if np.any(X.sum(axis=1) > 1):
        raise ValueError("a VUE occupies more than one RB in a timeslot")
    return np.where(X.any(axis=1), X.argmax(axis=1), -1)


# --------------------------------------------------------------------------
# SINR

def rb_signal_interference(j, f, t, X, P, H, A, links):
    """Desired signal S and interference I at receiver j in RB (f, t).

    Signal sums over the intended transmitters of j; co-channel
    interference over everybody else in the same RB; adjacent-channel
    interference over every VUE in the other slots of the timeslot.
    """
    X = np.asarray(X, dtype=float)
    N, F, _ = X.shape
    tx = np.zeros(N, dtype=bool)
    tx[list(links.transmitters_of(j))] = True
    contrib = X[:, :, t] * P[:, t][:, None] * H[:, j][:, None]  # (k, f')
    S = contrib[tx, f].sum()
    I = contrib[~tx, f].sum()
    others = np.arange(F) != f
    I += (A[others, f][None, :] * contrib[:, others]).sum()
    return float(S), float(I)


def rb_sinr(j, f, t, X, P, H, A, links, sigma2):
    S, I = rb_signal_interference(j, f, t, X, P, H, A, links)
    return S / (sigma2 + I)


def link_sinr(i, j, t, X, P, H, A, sigma2):
    """SINR of link (i, j) in timeslot t, zero when i is idle in t."""
    X = np.asarray(X, dtype=float)
    N, F, _ = X.shape
    xi = X[i, :, t]
    if not xi.any():
        return 0.0
    num = (xi * P[i, t] * H[i, j]).sum()
    k = np.arange(N) != i
    # per-slot received power from everyone but i, then leaked into i's slots
    per_slot = (X[k, :, t] * (P[k, t] * H[k, j])[:, None]).sum(axis=0)
    leak = xi @ (A.T @ per_slot)
    return float(num / (sigma2 + leak))


def timeslot_terms(slots, power, H, A, sigma2):
    """Batched link terms for one timeslot.

    ``slots`` and ``power`` have shape (..., N); a slot of -1 means idle.
    Returns ``(signal, denom, on)`` where ``signal[..., i, j]`` is the
    power i delivers to j, ``denom[..., i, j]`` is noise plus every other
    transmitter's leakage into i's slot as seen by j, and ``on`` flags
    active transmitters.
    """
    slots = np.asarray(slots)
    on = slots >= 0
    q = np.where(on, power, 0.0)
    signal = q[..., :, None] * H
    s = np.where(on, slots, 0)
    leak = A[s[..., None, :], s[..., :, None]]  # leak[i, k] = A[slot_k, slot_i]
    N = slots.shape[-1]
    pair = on[..., :, None] & on[..., None, :] & ~np.eye(N, dtype=bool)
    leak = np.where(pair, leak, 0.0)
    denom = sigma2 + leak @ signal
    return signal, denom, on


def timeslot_sinr(slots, power, H, A, sigma2):
    signal, denom, on = timeslot_terms(slots, power, H, A, sigma2)
    return np.where(on[..., :, None], signal / denom, 0.0)


def link_sinr_tensor(slots, P, H, A, sigma2):
    """All link SINRs as an N x N x T array from per-timeslot slot indices."""
    slots = np.asarray(slots)
    return np.stack([timeslot_sinr(slots[:, t], P[:, t], H, A, sigma2)
                     for t in range(slots.shape[1])], axis=-1)


def timeslot_success(slots, power, H, A, link_mask, gamma_t, sigma2, half_duplex=True):
    """Boolean (..., N, N) success of every intended link within one timeslot."""
    ups = timeslot_sinr(slots, power, H, A, sigma2)
    on = np.asarray(slots) >= 0
    ok = on[..., :, None] & (ups >= gamma_t) & link_mask
    if half_duplex:
        ok &= ~on[..., None, :]
    return ok


@dataclass(frozen=True)
class SuccessMatrix:
    Z: np.ndarray
    Y: np.ndarray = field(repr=False)

    @property
    def J(self):
        return int(self.Z.sum())

    @property
    def per_vue(self):
        return self.Z.sum(axis=1)


def _as_slots(X):
    if isinstance(X, Schedule):
        return X.slots(), X.F
    X = np.asarray(X, dtype=bool)
    return slots_from_x(X), X.shape[1]


def success_matrix(X, P, H, A, links, params):
    """Successful links Z[i, j] and the per-RB receive record Y[j, f, t].

    A link succeeds if its SINR reaches the threshold in some timeslot in
    which (half-duplex) the receiver is not transmitting. ``X`` may be a
    Boolean tensor or a :class:`Schedule`.
    """
    slots, F = _as_slots(X)
    N, T = slots.shape
    P = np.broadcast_to(np.asarray(P, dtype=float), (N, T))
    mask = links.mask if isinstance(links, LinkSets) else np.asarray(links, dtype=bool)
    Z = np.zeros((N, N), dtype=bool)
    Y = np.zeros((N, F, T), dtype=bool)
    for t in range(T):
        ok = timeslot_success(slots[:, t], P[:, t], H, A, mask, params.gamma_t,
                              params.sigma2, params.half_duplex)
        new = ok & ~Z
        i_idx, j_idx = np.nonzero(new)
        Y[j_idx, slots[i_idx, t], t] = True
        Z |= ok
    return SuccessMatrix(Z, Y)


def objective(X, P, H, A, links, params):
    return success_matrix(X, P, H, A, links, params).J


# --------------------------------------------------------------------------
# metrics

@dataclass
class MetricsReport:
    z_i: np.ndarray          # replications x N
    z_bar_i: np.ndarray
    z_bar: float
    cdf_values: np.ndarray
    cdf: np.ndarray
    avg_tx_power_dbm: float | None = None

    @property
    def replications(self):
        return self.z_i.shape[0]

    @property
    def std_error(self):
        per_rep = self.z_i.mean(axis=1)
        if len(per_rep) < 2:
            return 0.0
        return float(per_rep.std(ddof=1) / math.sqrt(len(per_rep)))


def empirical_cdf(samples):
    samples = np.sort(np.asarray(samples).ravel())
    values = np.unique(samples)
    cdf = np.searchsorted(samples, values, side="right") / len(samples)
    return values, cdf


def average_power_dbm(powers, schedules):
    """Mean transmit power (linear average in mW, reported in dBm) over scheduled (i, t)."""
    total, count = 0.0, 0
    for P, sched in zip(powers, schedules):
        on = sched.scheduled() if isinstance(sched, Schedule) else np.asarray(sched, bool).any(axis=1)
        P = np.broadcast_to(np.asarray(P, dtype=float), on.shape)
        total += P[on].sum()
        count += int(on.sum())
    if count == 0:
        return None
    return float(lin2db(total / count))


def metrics(results: Sequence[SuccessMatrix], powers=None, schedules=None) -> MetricsReport:
    if not results:
        raise ValueError("metrics need at least one replication")
    z_i = np.stack([r.per_vue for r in results]).astype(float)
    z_bar_i = z_i.mean(axis=0)
    values, cdf = empirical_cdf(z_i)
    avg = None
    if powers is not None and schedules is not None:
        avg = average_power_dbm(powers, schedules)
    return MetricsReport(z_i, z_bar_i, float(z_bar_i.mean()), values, cdf, avg)
