"""Equal-power baseline and iterative heuristic power control."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Schedule, slots_from_x, timeslot_terms
from .environment import LinkSets
from .errors import ConfigurationError


def equal_power(params, level=None):
    """Every VUE transmits ``level`` mW (default: the maximum) in every timeslot."""
    level = params.p_max if level is None else float(level)
    if not 0.0 <= level <= params.p_max:
        raise ConfigurationError(f"equal power {level} mW outside [0, {params.p_max}]")
    return np.full((params.N, params.T), level)


@dataclass
class PowerControlResult:
    P: np.ndarray
    iterations: int
    initial_links: int
    converged: bool
    candidate_links: np.ndarray  # final candidate set as an N x N mask
    counters: np.ndarray


def _link_state(slots, P, H, A, params):
    """Link SINR and required power, both N x N x T.

    Required power is what i would need in t for link (i, j) to hit the
    threshold with the interference frozen at its current value; it is
    infinite when i is idle in t, when the gain is zero, or (half-duplex)
    when j is itself transmitting in t.
    """
    N, T = slots.shape
    ups = np.zeros((N, N, T))
    req = np.full((N, N, T), np.inf)
    H = np.asarray(H, dtype=float)
    for t in range(T):
        signal, denom, on = timeslot_terms(slots[:, t], P[:, t], H, A, params.sigma2)
        usable = on[:, None] & (H > 0)
        if params.half_duplex:
            usable &= ~on[None, :]
        with np.errstate(divide="ignore"):
            ups[:, :, t] = np.where(usable, signal / denom, 0.0)
            req[:, :, t] = np.where(usable, params.gamma_t * denom / np.where(H > 0, H, 1.0), np.inf)
    return ups, req


def heuristic_power(params, X, H, A, links, max_iterations=None, count_failing=True):
    """Iterative heuristic power control for a fixed schedule.

    Each round computes the power every candidate link needs, counts links
    that cannot be served within ``p_max`` in any of the transmitter's
    timeslots, drops links broken more than ``c_max`` times, and then
    packs each VUE's remaining receivers greedily into the timeslot that
    serves most of them, using the largest required power there.

    ``max_iterations`` is only a safety net against non-terminating
    inputs; when hit, ``converged`` is False.
    """
    slots = X.slots() if isinstance(X, Schedule) else slots_from_x(X)
    N, T = slots.shape
    mask = links.mask if isinstance(links, LinkSets) else np.asarray(links, dtype=bool)
    on = slots >= 0

    L = on.any(axis=1)[:, None] & mask
    n_links = int(L.sum())
    C = np.zeros((N, N), dtype=int)
    if n_links == 0:
        return PowerControlResult(np.zeros((N, T)), 0, 0, True, L, C)
    if params.p_init <= 0:
        raise ConfigurationError("p_init must be positive when there are links to serve")
    if max_iterations is None:
        max_iterations = 10 * (params.c_max + 1) * n_links + 10

    P = np.where(on, params.p_init, 0.0)
    ups, req = _link_state(slots, P, H, A, params)
    p_max = params.p_max
    iterations = 0
    converged = True
    while True:
        served = (ups >= params.gamma_t).any(axis=2)
        if not (L & ~served).any():
            break
        if iterations >= max_iterations:
            converged = False
            break
        iterations += 1

        broken = L & (req > p_max).all(axis=2)
        C[(L & ~served) if count_failing else broken] += 1
        L &= ~(C > params.c_max)
        pending_all = L & ~broken

        P = np.zeros((N, T))
        for i in np.flatnonzero(pending_all.any(axis=1)):
            need = req[i]                      # receivers x timeslots
            pending = pending_all[i].copy()
            while pending.any():
                feasible = (need <= p_max) & pending[:, None]
                t_star = int(np.argmax(feasible.sum(axis=0)))
                P[i, t_star] = need[feasible[:, t_star], t_star].max()
                pending &= ~(need[:, t_star] <= P[i, t_star])
        ups, req = _link_state(slots, P, H, A, params)

    return PowerControlResult(P, iterations, n_links, converged, L, C)
