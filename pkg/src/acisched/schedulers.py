"""Block interleaver scheduler and the greedy ACI-aware heuristic scheduler.

Frequency slots and VUE ids in the returned vectors are 1-based, matching
the entries of the schedule grid ``U``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Schedule, success_matrix, timeslot_success
from .environment import LinkSets


def _round_ratio(num, den):
    """round(num / den) with halves rounded up, in exact integer arithmetic."""
    return (2 * num + den) // (2 * den)


def _spread(count, top):
    # 1 + round((k-1)(top-1)/(count-1)), k = 1..count
    if count == 1:
        return [1]
    return [1 + _round_ratio(k * (top - 1), count - 1) for k in range(count)]


def bis_freq_slots(F, F_tilde):
    """Evenly spread ``F_tilde`` slots over 1..F, first and last included."""
    if not 1 <= F_tilde <= F:
        raise ValueError(f"need 1 <= F_tilde <= F, got F_tilde={F_tilde}, F={F}")
    return _spread(F_tilde, F)


def bis_vue_ids(N, N_tilde):
    if not 1 <= N_tilde <= N:
        raise ValueError(f"need 1 <= N_tilde <= N, got N_tilde={N_tilde}, N={N}")
    return _spread(N_tilde, N)


def block_interleave(v, w):
    """Write ``v`` row-wise into a width-``w`` matrix and read it column-wise.

    Padding cells of the last row are skipped on read-out.
    """
    if w < 1:
        raise ValueError("interleaver width must be >= 1")
    v = list(v)
    rows = -(-len(v) // w)
    return [v[r * w + c] for c in range(w) for r in range(rows) if r * w + c < len(v)]


@dataclass(frozen=True)
class BisPlan:
    n_tilde: int
    f_tilde: int
    freq_slots: list
    vue_ids: list
    width: int

    @property
    def interleaved(self):
        return block_interleave(self.freq_slots, self.width)


def bis_plan(N, F, T, w=1):
    n_tilde = min(T * N // 2, N, F * T)
    if n_tilde == 0:
        return BisPlan(0, 0, [], [], w)
    f_tilde = -(-n_tilde // T)
    return BisPlan(n_tilde, f_tilde, bis_freq_slots(F, f_tilde), bis_vue_ids(N, n_tilde), w)


def bis_schedule(N, F, T, w=1):
    """Channel-oblivious BIS schedule.

    Rows of ``U`` are taken from the interleaved slot vector and filled
    left to right with the selected VUE ids.
    """
    plan = bis_plan(N, F, T, w)
    U = np.zeros((F, T), dtype=int)
    ids = iter(plan.vue_ids)
    for f in plan.interleaved:
        for t in range(T):
            vue = next(ids, 0)
            U[f - 1, t] = vue
    return Schedule(U, N)


def scheduling_order(F, A):
    """Greedy frequency-slot visiting order (1-based).

    Next slot: least summed leakage from the slots already chosen; ties go
    to the largest summed distance, then to the highest slot.
    """
    A = np.asarray(A, dtype=float)
    order = [0]
    left = list(range(1, F))
    while left:
        cand = np.array(left)
        aci = A[np.ix_(order, cand)].sum(axis=0)
        tied = cand[np.isclose(aci, aci.min(), rtol=1e-9, atol=0.0)]
        dist = np.abs(tied[:, None] - np.array(order)[None, :]).sum(axis=1)
        best = tied[dist == dist.max()].max()
        order.append(int(best))
        left.remove(best)
    return [f + 1 for f in order]


def _pick(scores, candidates, placed):
    """Index into ``candidates`` of the committed VUE (see tie rules)."""
    top = scores.max()
    winners = [c for c, s in zip(candidates, scores) if s == top]
    if 0 in winners:
        return 0
    fresh = [c for c in winners if c not in placed]
    return min(fresh) if fresh else min(winners)


def heuristic_schedule(params, H, A, P, links, incremental=True):
    """Greedy RB-by-RB scheduler.

    RBs are visited in :func:`scheduling_order` and timeslot order inside
    each slot; every RB gets the VUE (or the empty placeholder 0) that
    maximises the number of successful links given all earlier choices.
    A VUE already transmitting in a timeslot is not offered again in that
    timeslot. ``incremental=False`` re-evaluates the whole schedule for
    every candidate and exists to cross-check the fast path.
    """
    N, F, T = params.N, params.F, params.T
    P = np.broadcast_to(np.asarray(P, dtype=float), (N, T))
    mask = links.mask if isinstance(links, LinkSets) else np.asarray(links, dtype=bool)
    U = np.zeros((F, T), dtype=int)
    slots = -np.ones((N, T), dtype=int)
    per_t = np.zeros((T, N, N), dtype=bool)
    placed = set()

    for f in scheduling_order(F, A):
        f0 = f - 1
        for t in range(T):
            free = [v for v in range(1, N + 1) if slots[v - 1, t] < 0]
            candidates = [0] + free
            if incremental:
                batch = np.repeat(slots[None, :, t], len(candidates), axis=0)
                for row, v in enumerate(free, start=1):
                    batch[row, v - 1] = f0
                ok = timeslot_success(batch, P[:, t], H, A, mask, params.gamma_t,
                                      params.sigma2, params.half_duplex)
                rest = per_t[np.arange(T) != t].any(axis=0)
                scores = (ok | rest).sum(axis=(1, 2))
            else:
                scores = []
                for v in candidates:
                    U[f0, t] = v
                    scores.append(success_matrix(Schedule(U, N), P, H, A, mask, params).J)
                U[f0, t] = 0
                scores = np.array(scores)
            choice = _pick(scores, candidates, placed)
            U[f0, t] = choice
            if choice:
                slots[choice - 1, t] = f0
                placed.add(choice)
            if incremental:
                per_t[t] = timeslot_success(slots[:, t], P[:, t], H, A, mask, params.gamma_t,
                                            params.sigma2, params.half_duplex)
    return Schedule(U, N)
