"""Desk-scale exact oracles for scheduling, power control and the joint problem.

Success in timeslot t depends only on column t of the schedule and of the
power matrix, and ``Z`` is the OR of the per-timeslot success patterns.
Every search below therefore enumerates the options of one timeslot at a
time, deduplicates them by success pattern, and merges timeslots with a
dynamic program keyed on the accumulated pattern. The result is the same
maximiser a flat enumeration of the whole lattice would return, including
its tie-break (smallest ``U`` in row-major order, then smallest ``P``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import Schedule, slots_from_x, success_matrix, timeslot_success
from .environment import LinkSets
from .errors import ConfigurationError, SearchTooLarge

OBJECTIVES = ("sum", "maxmin")
_CHUNK = 1 << 15


@dataclass(frozen=True)
class ExactConfig:
    """Objective, power grid and search-size guards.

    ``schedule_cap`` bounds (N+1)^(F*T) and ``power_cap`` bounds K^(N*T).
    The joint search is guarded on the work it really does,
    T * (N+1)^F * K^N timeslot evaluations, by ``joint_cap``.
    """

    objective: str = "sum"
    grid_levels: int = 16
    schedule_cap: float = 1e8
    power_cap: float = 1e8
    joint_cap: float = 1e8

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(f"objective must be one of {OBJECTIVES}")
        if self.grid_levels < 2:
            raise ConfigurationError("the power grid needs at least 2 levels (0 and p_max)")

    def levels(self, p_max):
        return np.linspace(0.0, p_max, self.grid_levels)


@dataclass
class ExactResult:
    schedule: Schedule
    P: np.ndarray
    J: int
    value: int            # objective value: J, or min_i Z_i for max-min
    total_power: float
    evaluations: int      # timeslot option evaluations performed


def _mask(links):
    return links.mask if isinstance(links, LinkSets) else np.asarray(links, dtype=bool)


def _score(Z, mask, objective):
    if objective == "sum":
        return int(Z.sum())
    active = mask.any(axis=1)
    if not active.any():
        return 0
    return int(Z.sum(axis=1)[active].min())


def _row_major(cols):
    # cols: list of per-timeslot tuples -> row-major flattening of the F x T (or N x T) block
    return tuple(v for row in zip(*cols) for v in row)


def _columns(N, F):
    """Every assignment of one timeslot's F RBs with no real VUE repeated."""
    for col in itertools.product(range(N + 1), repeat=F):
        real = [v for v in col if v]
        if len(real) == len(set(real)):
            yield col


def _col_slots(col, N):
    slots = -np.ones(N, dtype=int)
    for f, v in enumerate(col):
        if v:
            slots[v - 1] = f
    return slots


class _Merger:
    """Pattern-keyed DP over timeslots.

    Each option is ``(pattern, ucol, pcol)``; ``rank`` turns the lists of
    chosen columns into the tie-break key (smaller wins).
    """

    def __init__(self, N, rank):
        self.rank = rank
        empty = np.zeros((N, N), dtype=bool)
        self.states = {empty.tobytes(): (empty, [], [])}

    def add_timeslot(self, options):
        best = {}
        for pat, ucol, pcol in options:
            key = pat.tobytes()
            cur = best.get(key)
            if cur is None or self.rank([ucol], [pcol]) < self.rank([cur[1]], [cur[2]]):
                best[key] = (pat, ucol, pcol)
        merged = {}
        for pat0, us, ps in self.states.values():
            for pat, ucol, pcol in best.values():
                Z = pat0 | pat
                key = Z.tobytes()
                cand = (Z, us + [ucol], ps + [pcol])
                cur = merged.get(key)
                if cur is None or self.rank(cand[1], cand[2]) < self.rank(cur[1], cur[2]):
                    merged[key] = cand
        self.states = merged

    def best(self, mask, objective):
        top = None
        for Z, us, ps in self.states.values():
            key = (-_score(Z, mask, objective), self.rank(us, ps))
            if top is None or key < top[0]:
                top = (key, Z, us, ps)
        return top[1], top[2], top[3]


def _evaluate(slot_rows, power_rows, H, A, mask, params):
    """Per-option success patterns, evaluated in chunks."""
    out = []
    for lo in range(0, len(slot_rows), _CHUNK):
        out.append(timeslot_success(slot_rows[lo:lo + _CHUNK], power_rows[lo:lo + _CHUNK], H, A,
                                    mask, params.gamma_t, params.sigma2, params.half_duplex))
    return np.concatenate(out) if out else np.zeros((0,) + mask.shape, dtype=bool)


def _finish(params, U_cols, P, H, A, mask, objective, evaluations):
    U = np.array(U_cols, dtype=int).T if U_cols else np.zeros((params.F, 0), dtype=int)
    sched = Schedule(U, params.N)
    Z = success_matrix(sched, P, H, A, mask, params).Z
    return ExactResult(sched, P, int(Z.sum()), _score(Z, mask, objective), float(P.sum()), evaluations)


def exact_schedule(params, H, A, P, links, cfg=None):
    """Best schedule for fixed powers ``P`` (N x T or scalar)."""
    cfg = ExactConfig() if cfg is None else cfg
    N, F, T = params.N, params.F, params.T
    size = float(N + 1) ** (F * T)
    if size > cfg.schedule_cap:
        raise SearchTooLarge("exact_schedule", size, cfg.schedule_cap)
    mask = _mask(links)
    P = np.broadcast_to(np.asarray(P, dtype=float), (N, T)).copy()
    cols = list(_columns(N, F))
    slot_rows = np.array([_col_slots(c, N) for c in cols])
    merger = _Merger(N, lambda us, ps: _row_major(us))
    evaluations = 0
    for t in range(T):
        pats = _evaluate(slot_rows, np.broadcast_to(P[:, t], slot_rows.shape), H, A, mask, params)
        evaluations += len(cols)
        merger.add_timeslot((pats[k], cols[k], ()) for k in range(len(cols)))
    _, us, _ = merger.best(mask, cfg.objective)
    return _finish(params, us, P, H, A, mask, cfg.objective, evaluations)


def _power_options(slots_t, K):
    on = np.flatnonzero(slots_t >= 0)
    for combo in itertools.product(range(K), repeat=len(on)):
        idx = np.zeros(len(slots_t), dtype=int)
        idx[on] = combo
        yield tuple(idx.tolist())


def exact_power(params, X, H, A, links, cfg=None):
    """Grid-optimal powers for a fixed schedule.

    Maximises the objective first and, among maximisers, the total power
    is minimised; remaining ties go to the smallest ``P`` in row-major
    order. Idle (i, t) pairs keep zero power.
    """
    cfg = ExactConfig() if cfg is None else cfg
    slots = X.slots() if isinstance(X, Schedule) else slots_from_x(X)
    N, T = slots.shape
    K = cfg.grid_levels
    size = float(K) ** (N * T)
    if size > cfg.power_cap:
        raise SearchTooLarge("exact_power", size, cfg.power_cap)
    mask = _mask(links)
    levels = cfg.levels(params.p_max)

    # power indices are integers, so sums compare exactly
    merger = _Merger(N, lambda us, ps: (sum(map(sum, ps)), _row_major(ps)))
    evaluations = 0
    for t in range(T):
        opts = list(_power_options(slots[:, t], K))
        idx = np.array(opts, dtype=int)
        pats = _evaluate(np.broadcast_to(slots[:, t], idx.shape), levels[idx], H, A, mask, params)
        evaluations += len(opts)
        merger.add_timeslot((pats[k], (), opts[k]) for k in range(len(opts)))
    _, _, ps = merger.best(mask, cfg.objective)
    P = levels[np.array(ps, dtype=int).T]
    sched = X if isinstance(X, Schedule) else slots_to_schedule(slots, np.asarray(X).shape[1])
    Z = success_matrix(sched, P, H, A, mask, params).Z
    return ExactResult(sched, P, int(Z.sum()), _score(Z, mask, cfg.objective), float(P.sum()), evaluations)


def slots_to_schedule(slots, F):
    N, T = slots.shape
    U = np.zeros((F, T), dtype=int)
    i_idx, t_idx = np.nonzero(slots >= 0)
    U[slots[i_idx, t_idx], t_idx] = i_idx + 1
    return Schedule(U, N)


def exact_joint(params, H, A, links, cfg=None):
    """Joint schedule and grid power search (schedule outer, power inner)."""
    cfg = ExactConfig() if cfg is None else cfg
    N, F, T = params.N, params.F, params.T
    K = cfg.grid_levels
    work = T * float(N + 1) ** F * float(K) ** min(N, F)
    if work > cfg.joint_cap:
        raise SearchTooLarge("exact_joint", work, cfg.joint_cap)
    mask = _mask(links)
    levels = cfg.levels(params.p_max)

    slot_rows, opts = [], []
    for col in _columns(N, F):
        s = _col_slots(col, N)
        for pidx in _power_options(s, K):
            slot_rows.append(s)
            opts.append((col, pidx))
    slot_rows = np.array(slot_rows)
    power_rows = levels[np.array([p for _, p in opts], dtype=int)]

    merger = _Merger(N, lambda us, ps: (_row_major(us), _row_major(ps)))
    pats = _evaluate(slot_rows, power_rows, H, A, mask, params)
    for t in range(T):
        merger.add_timeslot((pats[k], opts[k][0], opts[k][1]) for k in range(len(opts)))
    _, us, ps = merger.best(mask, cfg.objective)
    P = levels[np.array(ps, dtype=int).T] if ps else np.zeros((N, T))
    return _finish(params, us, P, H, A, mask, cfg.objective, len(opts))


def grid_floor(P, cfg, p_max):
    """Round powers down onto the search grid."""
    step = p_max / (cfg.grid_levels - 1)
    k = np.floor(np.asarray(P, dtype=float) / step + 1e-12)
    return np.clip(k, 0, cfg.grid_levels - 1) * step
