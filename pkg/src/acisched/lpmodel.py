"""LP-format export of the joint, scheduling-only and power-only formulations.

Variables (all indices 1-based in names):

* ``X_i_f_t``  VUE i transmits in RB (f, t)                  binary
* ``Y_j_f_t``  VUE j decodes the signal in RB (f, t)          binary
* ``P_i_t``    transmit power of i in timeslot t, mW          [0, p_max]
* ``V_i_j_f_t`` linearisation of X_i_f_t * Y_j_f_t            >= 0
* ``W_i_j``    link (i, j) is successful                      [0, 1]
* ``L``        max-min level                                 >= 0

The joint model keeps the bilinear X * P products of the SINR rows in a
``[ ... ]`` block. Fixing P (scheduling) or X (power control) makes every
row linear. Coefficients are written with ``repr`` so a reader recovers
the exact doubles.
"""
from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .core import Schedule, rb_signal_interference, slots_from_x
from .environment import LinkSets
from .errors import ConfigurationError


class ModelKind(str, Enum):
    JOINT = "joint"   # MIQCP
    BLP = "blp"       # fixed powers
    MILP = "milp"     # fixed schedule


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind = ModelKind.JOINT
    half_duplex: bool = True
    maxmin: bool = False
    restrict_links: bool = False   # V and W only over intended links (unicast models)
    fixed_X: object = None         # Schedule or N x F x T Boolean, MILP only
    fixed_P: object = None         # N x T powers or a scalar, BLP only

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.MILP and self.fixed_X is None:
            raise ConfigurationError("the power-control model needs a fixed schedule")
        if self.kind is ModelKind.BLP and self.fixed_P is None:
            raise ConfigurationError("the scheduling model needs fixed powers")


@dataclass
class ModelStats:
    binaries: int
    continuous: int
    linear_rows: int
    quadratic_rows: int

    def to_json(self):
        return json.dumps(asdict(self))


@dataclass
class Row:
    name: str
    lin: dict
    quad: dict           # (var_a, var_b) -> coefficient
    sense: str           # "<=", ">=" or "="
    rhs: float


@dataclass
class LpModel:
    objective: dict
    rows: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)   # var -> (lo, hi); hi may be inf
    binaries: list = field(default_factory=list)
    name: str = "model"

    @property
    def variables(self):
        names = set(self.objective) | set(self.bounds) | set(self.binaries)
        for row in self.rows:
            names.update(row.lin)
            for a, b in row.quad:
                names.update((a, b))
        return names

    def stats(self):
        n_bin = len(self.binaries)
        quad = sum(1 for r in self.rows if r.quad)
        return ModelStats(n_bin, len(self.variables) - n_bin, len(self.rows) - quad, quad)


# --------------------------------------------------------------------------
# names

def xname(i, f, t):
    return f"X_{i + 1}_{f + 1}_{t + 1}"


def yname(j, f, t):
    return f"Y_{j + 1}_{f + 1}_{t + 1}"


def pname(i, t):
    return f"P_{i + 1}_{t + 1}"


def vname(i, j, f, t):
    return f"V_{i + 1}_{j + 1}_{f + 1}_{t + 1}"


def wname(i, j):
    return f"W_{i + 1}_{j + 1}"


def _pairs(mask, restrict):
    N = mask.shape[0]
    if restrict:
        return [tuple(p) for p in np.argwhere(mask)]
    return [(i, j) for i in range(N) for j in range(N)]


def _add(d, key, coef):
    d[key] = d.get(key, 0.0) + coef


# --------------------------------------------------------------------------
# build

def model_stats(spec, params, links=None):
    """Closed-form variable and row counts for ``spec``."""
    N, F, T = params.N, params.F, params.T
    if spec.restrict_links:
        if links is None:
            raise ConfigurationError("restricted models need the link sets for counting")
        n_pairs = int(_links_mask(links).sum())
    else:
        n_pairs = N * N
    n_active = N if links is None else int(_links_mask(links).any(axis=1).sum())
    hd = N * F * F * T if spec.half_duplex else 0
    mm = n_active if spec.maxmin else 0
    extra = 1 if spec.maxmin else 0
    nft = N * F * T
    if spec.kind is ModelKind.JOINT:
        return ModelStats(2 * nft, N * T + n_pairs * F * T + n_pairs + extra,
                          n_pairs + 2 * n_pairs * F * T + nft + N * T + hd + mm, nft)
    if spec.kind is ModelKind.BLP:
        return ModelStats(2 * nft, n_pairs * F * T + n_pairs + extra,
                          nft + n_pairs + 2 * n_pairs * F * T + nft + N * T + hd + mm, 0)
    return ModelStats(nft, N * T + n_pairs + extra, nft + n_pairs + nft + hd + mm, 0)


def _links_mask(links):
    return links.mask if isinstance(links, LinkSets) else np.asarray(links, dtype=bool)


def _fixed_x(spec, N, F, T):
    X = spec.fixed_X
    if isinstance(X, Schedule):
        return X.X
    X = np.asarray(X, dtype=bool)
    if X.shape != (N, F, T):
        raise ConfigurationError(f"fixed schedule has shape {X.shape}, expected {(N, F, T)}")
    return X


def build_model(spec, params, H, A, links):
    """Assemble the rows of the requested formulation in memory."""
    N, F, T = params.N, params.F, params.T
    H = np.array(H, dtype=float)
    if H.shape != (N, N) or np.asarray(A).shape != (F, F):
        raise ConfigurationError("H must be N x N and A must be F x F")
    if spec.half_duplex:
        np.fill_diagonal(H, 0.0)
    mask = _links_mask(links)
    gbar = params.gamma_bar
    eta = params.eta
    kind = spec.kind
    pairs = _pairs(mask, spec.restrict_links)
    X = _fixed_x(spec, N, F, T) if kind is ModelKind.MILP else None
    P = (np.broadcast_to(np.asarray(spec.fixed_P, dtype=float), (N, T))
         if kind is ModelKind.BLP else None)

    model = LpModel(objective={}, name=kind.value)
    rows = model.rows

    # objective
    if spec.maxmin:
        model.objective["L"] = 1.0
        model.bounds["L"] = (0.0, np.inf)
    else:
        for i, j in np.argwhere(mask):
            _add(model.objective, wname(i, j), 1.0)
    if kind is ModelKind.MILP:
        for i in range(N):
            for t in range(T):
                _add(model.objective, pname(i, t), -params.beta)

    # variable declarations
    if kind is not ModelKind.MILP:
        model.binaries += [xname(i, f, t) for i in range(N) for f in range(F) for t in range(T)]
    model.binaries += [yname(j, f, t) for j in range(N) for f in range(F) for t in range(T)]
    if kind is not ModelKind.BLP:
        for i in range(N):
            for t in range(T):
                model.bounds[pname(i, t)] = (0.0, params.p_max)
    for i, j in pairs:
        model.bounds[wname(i, j)] = (0.0, 1.0)
        if kind is not ModelKind.MILP:
            for f in range(F):
                for t in range(T):
                    model.bounds[vname(i, j, f, t)] = (0.0, np.inf)

    # SINR rows: S - gbar (S + I) - eta Y >= gbar sigma2 - eta
    for j in range(N):
        tx = mask[:, j]
        for f in range(F):
            for t in range(T):
                lin, quad = {}, {}
                for k in range(N):
                    for fp in range(F):
                        c = -gbar * A[fp, f] * H[k, j]
                        if fp == f and tx[k]:
                            c += H[k, j]
                        if c == 0.0:
                            continue
                        if kind is ModelKind.JOINT:
                            _add(quad, (xname(k, fp, t), pname(k, t)), c)
                        elif kind is ModelKind.BLP:
                            if P[k, t] != 0.0:
                                _add(lin, xname(k, fp, t), c * P[k, t])
                        elif X[k, fp, t]:
                            _add(lin, pname(k, t), c)
                lin[yname(j, f, t)] = -eta
                rows.append(Row(f"sinr_{j + 1}_{f + 1}_{t + 1}", lin, quad, ">=",
                                gbar * params.sigma2 - eta))

    # success linearisation
    for i, j in pairs:
        if kind is ModelKind.MILP:
            lin = {wname(i, j): 1.0}
            for f, t in np.argwhere(X[i]):
                _add(lin, yname(j, f, t), -1.0)
            rows.append(Row(f"w_{i + 1}_{j + 1}", lin, {}, "<=", 0.0))
            continue
        lin = {wname(i, j): 1.0}
        for f in range(F):
            for t in range(T):
                lin[vname(i, j, f, t)] = -1.0
        rows.append(Row(f"w_{i + 1}_{j + 1}", lin, {}, "<=", 0.0))
        for f in range(F):
            for t in range(T):
                v = vname(i, j, f, t)
                rows.append(Row(f"vx_{i + 1}_{j + 1}_{f + 1}_{t + 1}",
                                {v: 1.0, xname(i, f, t): -1.0}, {}, "<=", 0.0))
                rows.append(Row(f"vy_{i + 1}_{j + 1}_{f + 1}_{t + 1}",
                                {v: 1.0, yname(j, f, t): -1.0}, {}, "<=", 0.0))

    # at most one intended transmitter in a decoded RB: sum X + N Y <= 1 + N
    for j in range(N):
        tx = np.flatnonzero(mask[:, j])
        for f in range(F):
            for t in range(T):
                lin = {yname(j, f, t): float(N)}
                rhs = 1.0 + N
                if kind is ModelKind.MILP:
                    rhs -= float(X[tx, f, t].sum())
                else:
                    for i in tx:
                        lin[xname(i, f, t)] = 1.0
                rows.append(Row(f"one_{j + 1}_{f + 1}_{t + 1}", lin, {}, "<=", rhs))

    # one RB per VUE and timeslot
    if kind is not ModelKind.MILP:
        for i in range(N):
            for t in range(T):
                rows.append(Row(f"rb_{i + 1}_{t + 1}", {xname(i, f, t): 1.0 for f in range(F)},
                                {}, "<=", 1.0))

    # half-duplex: Y_j_f_t + X_j_f'_t <= 1
    if spec.half_duplex:
        for j in range(N):
            for f in range(F):
                for fp in range(F):
                    for t in range(T):
                        name = f"hd_{j + 1}_{f + 1}_{fp + 1}_{t + 1}"
                        if kind is ModelKind.MILP:
                            rows.append(Row(name, {yname(j, f, t): 1.0}, {}, "<=",
                                            1.0 - float(X[j, fp, t])))
                        else:
                            rows.append(Row(name, {yname(j, f, t): 1.0, xname(j, fp, t): 1.0},
                                            {}, "<=", 1.0))

    if spec.maxmin:
        for i in np.flatnonzero(mask.any(axis=1)):
            lin = {wname(i, j): 1.0 for j in np.flatnonzero(mask[i])}
            lin["L"] = -1.0
            rows.append(Row(f"maxmin_{i + 1}", lin, {}, ">=", 0.0))
    return model


# --------------------------------------------------------------------------
# write / read

def _num(x):
    return repr(float(x))


def _terms(lin, quad):
    parts = []
    for name, c in lin.items():
        parts.append(f"{'-' if c < 0 else '+'} {_num(abs(c))} {name}")
    if quad:
        q = [f"{'-' if c < 0 else '+'} {_num(abs(c))} {a} * {b}" for (a, b), c in quad.items()]
        q[0] = q[0][2:] if q[0].startswith("+ ") else q[0]
        parts.append("+ [ " + " ".join(q) + " ]")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _wrap(text, width=240):
    out, line = [], ""
    for tok in text.split(" "):
        if line and len(line) + 1 + len(tok) > width:
            out.append(line)
            line = "   " + tok
        else:
            line = f"{line} {tok}" if line else tok
    out.append(line)
    return "\n".join(out)


def format_lp(model):
    lines = [f"\\ {model.name} model", "Maximize"]
    lines.append(_wrap(" obj: " + _terms(model.objective, {})))
    lines.append("Subject To")
    for r in model.rows:
        lines.append(_wrap(f" {r.name}: {_terms(r.lin, r.quad)} {r.sense} {_num(r.rhs)}"))
    lines.append("Bounds")
    for name, (lo, hi) in model.bounds.items():
        hi_s = "+inf" if np.isinf(hi) else _num(hi)
        lines.append(f" {_num(lo)} <= {name} <= {hi_s}")
    if model.binaries:
        lines.append("Binaries")
        for k in range(0, len(model.binaries), 8):
            lines.append(" " + " ".join(model.binaries[k:k + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model, path):
    """Write atomically: temp file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lp-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(format_lp(model))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_model(spec, params, H, A, links, path):
    model = build_model(spec, params, H, A, links)
    write_lp(model, path)
    return model.stats()


_SECTIONS = {"maximize": "obj", "maximise": "obj", "subject to": "rows", "st": "rows",
             "bounds": "bounds", "binaries": "bin", "binary": "bin", "end": "end"}
_TOKEN = re.compile(r"\[|\]|\*|<=|>=|=|[+-]|[A-Za-z_][A-Za-z0-9_]*|[0-9.]+(?:[eE][+-]?[0-9]+)?|inf")


def _parse_expr(tokens):
    """Parse ``[+-] coef name`` terms and one optional ``[ a * b ... ]`` block."""
    lin, quad = {}, {}
    sign, coef, pending, in_quad = 1.0, None, None, False
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        if tok == "[":
            in_quad = True
        elif tok == "]":
            in_quad = False
        elif tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
        elif tok == "*":
            pass
        elif re.match(r"[0-9.]", tok):
            coef = float(tok)
        else:
            c = sign * (1.0 if coef is None else coef)
            if in_quad and k + 2 < len(tokens) and tokens[k + 1] == "*":
                _add(quad, (tok, tokens[k + 2]), c)
                k += 2
            else:
                _add(lin, tok, c)
            sign, coef = 1.0, None
        k += 1
    return lin, quad


def parse_lp(text):
    """Read the subset of LP format written by :func:`format_lp`."""
    section = None
    name = "model"
    chunks = {"obj": [], "rows": [], "bounds": [], "bin": []}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            m = re.match(r"\\\s*(\S+) model$", line)
            if m and section is None:
                name = m.group(1)
            continue
        low = line.lower()
        if low in _SECTIONS:
            section = _SECTIONS[low]
            continue
        if section is None or section == "end":
            raise ValueError(f"content outside a section: {line!r}")
        if section in ("obj", "rows") and raw.startswith("   ") and chunks[section]:
            chunks[section][-1] += " " + line
        else:
            chunks[section].append(line)

    model = LpModel(objective={}, name=name)
    for line in chunks["obj"]:
        _, expr = line.split(":", 1)
        model.objective, _ = _parse_expr(_TOKEN.findall(expr))
    for line in chunks["rows"]:
        name, expr = line.split(":", 1)
        tokens = _TOKEN.findall(expr)
        op = next(k for k, tok in enumerate(tokens) if tok in ("<=", ">=", "="))
        rhs_tokens = tokens[op + 1:]
        rhs = float("".join(rhs_tokens))
        lin, quad = _parse_expr(tokens[:op])
        model.rows.append(Row(name.strip(), lin, quad, tokens[op], rhs))
    for line in chunks["bounds"]:
        lo, name, hi = re.match(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)", line).groups()
        model.bounds[name] = (float(lo), float(hi))
    for line in chunks["bin"]:
        model.binaries += line.split()
    return model


def read_lp(path):
    with open(path) as fh:
        return parse_lp(fh.read())


# --------------------------------------------------------------------------
# evaluation

def row_activity(row, values):
    total = sum(c * values.get(v, 0.0) for v, c in row.lin.items())
    total += sum(c * values.get(a, 0.0) * values.get(b, 0.0) for (a, b), c in row.quad.items())
    return total


def row_violation(row, values):
    """Amount by which ``row`` is violated at ``values`` (0 when satisfied)."""
    act = row_activity(row, values)
    if row.sense == "<=":
        return max(0.0, act - row.rhs)
    if row.sense == ">=":
        return max(0.0, row.rhs - act)
    return abs(act - row.rhs)


def violations(model, values, tol=1e-9):
    """Names and amounts of rows and bounds violated by more than ``tol``."""
    bad = [(r.name, v) for r in model.rows if (v := row_violation(r, values)) > tol]
    for name, (lo, hi) in model.bounds.items():
        x = values.get(name, 0.0)
        if x < lo - tol or x > hi + tol:
            bad.append((f"bound:{name}", x))
    for name in model.binaries:
        if values.get(name, 0.0) not in (0.0, 1.0):
            bad.append((f"binary:{name}", values.get(name)))
    return bad


def objective_value(model, values):
    return sum(c * values.get(v, 0.0) for v, c in model.objective.items())


def feasible_assignment(spec, params, schedule, P, H, A, links):
    """Variable values implied by a simulator schedule and power matrix.

    ``Y`` is 1 exactly where the RB-centric SINR reaches the threshold,
    at most one intended transmitter is present, and (half-duplex) the
    receiver is silent in that timeslot; ``V`` and ``W`` take their
    largest feasible values.
    """
    N, F, T = params.N, params.F, params.T
    X = schedule.X if isinstance(schedule, Schedule) else np.asarray(schedule, dtype=bool)
    P = np.broadcast_to(np.asarray(P, dtype=float), (N, T))
    H = np.array(H, dtype=float)
    if spec.half_duplex:
        np.fill_diagonal(H, 0.0)
    mask = _links_mask(links)
    links = links if isinstance(links, LinkSets) else LinkSets(mask)
    busy = slots_from_x(X) >= 0

    Y = np.zeros((N, F, T), dtype=bool)
    for j in range(N):
        tx = mask[:, j]
        for f in range(F):
            for t in range(T):
                if X[tx, f, t].sum() > 1 or (spec.half_duplex and busy[j, t]):
                    continue
                S, I = rb_signal_interference(j, f, t, X, P, H, A, links)
                Y[j, f, t] = S >= params.gamma_t * (params.sigma2 + I)

    values = {}
    for i in range(N):
        for t in range(T):
            values[pname(i, t)] = float(P[i, t])
            for f in range(F):
                values[xname(i, f, t)] = float(X[i, f, t])
                values[yname(i, f, t)] = float(Y[i, f, t])
    Z = np.zeros((N, N))
    for i, j in _pairs(mask, spec.restrict_links):
        V = X[i] & Y[j]
        Z[i, j] = min(1.0, float(V.sum()))
        values[wname(i, j)] = Z[i, j]
        for f in range(F):
            for t in range(T):
                values[vname(i, j, f, t)] = float(V[f, t])
    if spec.maxmin:
        active = mask.any(axis=1)
        values["L"] = float((Z * mask).sum(axis=1)[active].min()) if active.any() else 0.0
    return values
