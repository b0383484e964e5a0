"""Monte Carlo driver: replications, parameter sweeps and fairness data."""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .csvio import write_rows_csv
from .core import derive_constants, empirical_cdf, metrics, success_matrix
from .environment import (AciModel, ChannelParams, Duplex, build_aci_matrix, channel_gain_matrix,
                          intended_sets, sample_convoy)
from .errors import ConfigurationError
from .exact import ExactConfig, exact_power, exact_schedule
from .power import equal_power, heuristic_power
from .schedulers import bis_plan, bis_schedule, heuristic_schedule

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SCHEDULERS = ("bis", "bis-opt", "heuristic", "exact")
POWER = ("equal", "heuristic", "exact")
SWEEP_AXES = ("N", "F", "T")
DEFAULT_ALGORITHMS = ("bis+equal", "bis-opt+equal", "heuristic+equal", "bis+heuristic")


@dataclass(frozen=True)
class Algorithm:
    scheduler: str
    power: str
    w: int = 1

    @classmethod
    def parse(cls, text, w=1):
        try:
            sched, power = text.strip().lower().split("+")
        except ValueError:
            raise ConfigurationError(f"algorithm {text!r} is not of the form scheduler+power") from None
        if sched not in SCHEDULERS:
            raise ConfigurationError(f"unknown scheduler {sched!r}; choose from {SCHEDULERS}")
        if power not in POWER:
            raise ConfigurationError(f"unknown power control {power!r}; choose from {POWER}")
        return cls(sched, power, int(w))

    @property
    def label(self):
        sched = f"bis_w{self.w}" if self.scheduler == "bis" else self.scheduler
        return f"{sched}+{self.power}"

    @property
    def optimized(self):
        return self.scheduler == "bis-opt"


@dataclass(frozen=True)
class ExperimentConfig:
    """Every simulation knob; defaults reproduce the benchmark scenario."""

    N: int = 20
    F: int = 20
    T: int = 2
    gamma_t_db: float = 5.0
    sigma2_dbm: float = -95.2
    p_max_dbm: float = 24.0
    p_init_dbm: float | None = None      # default: p_max / 10
    c_max: int = 100
    beta: float | None = None            # default: 1 / (N T p_max)
    duplex: str = "half"
    aci: str = "gpp3"
    pl0: float = 63.3
    n_exp: float = 1.77
    d0: float = 10.0
    sigma1: float = 3.1
    penetration_db_per_blocker: float = 10.0
    symmetric_shadowing: bool = True
    d_min: float = 10.0
    d_avg: float = 48.6
    replications: int = 500
    seed: int = 1
    algorithms: tuple = DEFAULT_ALGORITHMS
    w: int = 1
    grid_levels: int = 16
    objective: str = "sum"
    workers: int = 1
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    out: str = "results"

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if self.w < 1:
            raise ConfigurationError("w must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if not self.algorithms:
            raise ConfigurationError("at least one algorithm is required")
        for text in self.algorithms:
            Algorithm.parse(text)
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigurationError(f"sweep axis must be one of {SWEEP_AXES}")
            if not self.sweep_values:
                raise ConfigurationError("sweep needs at least one value")
            for v in self.sweep_values:
                if int(v) != v or v < 1:
                    raise ConfigurationError("sweep values must be positive integers")
        # validates the remaining fields
        self.params()
        self.channel()
        self.aci_model()
        ExactConfig(objective=self.objective, grid_levels=self.grid_levels)

    # -- derived objects
    def params(self):
        try:
            duplex = Duplex(self.duplex)
        except ValueError:
            raise ConfigurationError(f"duplex must be 'half' or 'full', got {self.duplex!r}") from None
        return derive_constants(self.N, self.F, self.T, self.gamma_t_db, self.sigma2_dbm,
                                self.p_max_dbm, self.p_init_dbm, duplex, self.c_max, self.beta)

    def channel(self):
        return ChannelParams(self.pl0, self.n_exp, self.d0, self.sigma1,
                             self.penetration_db_per_blocker, self.symmetric_shadowing)

    def aci_model(self):
        return AciModel.parse(self.aci)

    def exact_config(self):
        return ExactConfig(objective=self.objective, grid_levels=self.grid_levels)

    def parsed_algorithms(self):
        return [Algorithm.parse(a, self.w) for a in self.algorithms]

    def with_(self, **changes):
        return replace(self, **changes)

    def at(self, value):
        """Config at one sweep point."""
        return replace(self, **{self.sweep_axis: int(value)}, sweep_axis=None, sweep_values=())

    # -- file format
    @classmethod
    def from_mapping(cls, data):
        data = dict(data)
        sweep = data.pop("sweep", None)
        if sweep is not None:
            if not isinstance(sweep, dict):
                raise ConfigurationError("[sweep] must be a table with 'axis' and 'values'")
            unknown = set(sweep) - {"axis", "values"}
            if unknown:
                raise ConfigurationError(f"unknown sweep keys: {sorted(unknown)}")
            data["sweep_axis"] = sweep.get("axis")
            data["sweep_values"] = tuple(sweep.get("values", ()))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_toml(cls, path):
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"bad TOML in {path}: {exc}") from exc
        return cls.from_mapping(data)


def default_toml():
    """The default configuration as TOML text (every key spelled out)."""
    cfg = ExperimentConfig()
    lines = []
    for f in fields(cfg):
        if f.name in ("sweep_axis", "sweep_values"):
            continue
        v = getattr(cfg, f.name)
        if v is None:
            lines.append(f"# {f.name} =   (derived when unset)")
        elif isinstance(v, bool):
            lines.append(f"{f.name} = {'true' if v else 'false'}")
        elif isinstance(v, str):
            lines.append(f'{f.name} = "{v}"')
        elif isinstance(v, tuple):
            lines.append(f"{f.name} = [{', '.join(repr(x).replace(chr(39), chr(34)) for x in v)}]")
        else:
            lines.append(f"{f.name} = {v}")
    lines += ["", "# [sweep]", '# axis = "T"', "# values = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]"]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# one replication

@dataclass
class AlgorithmRun:
    success: object
    P: np.ndarray
    schedule: object
    iterations: int = 0


def replication_rng(base_seed, rep_index):
    return np.random.default_rng([int(base_seed), int(rep_index)])


def _schedule(algo, w, params, H, A, links, cfg):
    if algo.scheduler in ("bis", "bis-opt"):
        return bis_schedule(params.N, params.F, params.T, w)
    if algo.scheduler == "heuristic":
        return heuristic_schedule(params, H, A, params.p_max, links)
    return exact_schedule(params, H, A, params.p_max, links, cfg.exact_config()).schedule


def _power(algo, sched, params, H, A, links, cfg):
    if algo.power == "equal":
        return equal_power(params), 0
    if algo.power == "heuristic":
        res = heuristic_power(params, sched, H, A, links)
        return res.P, res.iterations
    return exact_power(params, sched, H, A, links, cfg.exact_config()).P, 0


def w_candidates(params):
    """Interleaver widths searched by the optimized-w variant."""
    f_tilde = bis_plan(params.N, params.F, params.T).f_tilde
    return list(range(1, max(f_tilde - 1, 1) + 1))


def draw_instance(config, rep_index=0):
    """Params, channel gains, ACI matrix and link sets of one replication."""
    params = config.params()
    rng = replication_rng(config.seed, rep_index)
    scenario = sample_convoy(params.N, config.d_min, config.d_avg, seed=rng)
    H = channel_gain_matrix(scenario, config.channel(), params.duplex, seed=rng).gains
    A = build_aci_matrix(params.F, config.aci_model())
    links = intended_sets(scenario, params.F, params.T)
    return params, H, A, links


def run_replication(config, rep_index):
    """Simulate one convoy draw for every configured algorithm.

    Returns ``{label: AlgorithmRun}``; the optimized-w variant contributes
    one entry per candidate width, labelled ``bis-opt[w=k]+power``.
    """
    params, H, A, links = draw_instance(config, rep_index)

    out = {}
    for algo in config.parsed_algorithms():
        widths = w_candidates(params) if algo.optimized else [algo.w]
        for w in widths:
            sched = _schedule(algo, w, params, H, A, links, config)
            P, iters = _power(algo, sched, params, H, A, links, config)
            label = f"bis-opt[w={w}]+{algo.power}" if algo.optimized else algo.label
            out[label] = AlgorithmRun(success_matrix(sched, P, H, A, links, params), P, sched, iters)
    return out


def _run_all(config):
    reps = range(config.replications)
    if config.workers == 1:
        return [run_replication(config, r) for r in reps]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(run_replication, [config] * config.replications, reps))


# --------------------------------------------------------------------------
# aggregation

@dataclass
class PointResult:
    reports: dict                      # label -> MetricsReport
    best_w: dict = field(default_factory=dict)
    seconds: float = 0.0

    def z_bar(self, label):
        return self.reports[label].z_bar

    def std_error(self, label):
        return self.reports[label].std_error


def _aggregate(config, runs, seconds):
    reports, best_w = {}, {}
    for algo in config.parsed_algorithms():
        if algo.optimized:
            candidates = {}
            for w in w_candidates(config.params()):
                key = f"bis-opt[w={w}]+{algo.power}"
                candidates[w] = _report([r[key] for r in runs])
            w_star = max(candidates, key=lambda w: (candidates[w].z_bar, -w))
            reports[algo.label] = candidates[w_star]
            best_w[algo.label] = w_star
        else:
            reports[algo.label] = _report([r[algo.label] for r in runs])
    return PointResult(reports, best_w, seconds)


def _report(runs):
    return metrics([r.success for r in runs], [r.P for r in runs], [r.schedule for r in runs])


def simulate(config):
    """Run all replications at a single parameter point."""
    start = time.perf_counter()
    runs = _run_all(config)
    return _aggregate(config, runs, time.perf_counter() - start)


@dataclass
class SweepResult:
    axis: str
    values: list
    labels: list
    points: list                      # PointResult per value

    def table(self, what="z_bar"):
        rows = []
        for v, pt in zip(self.values, self.points):
            row = {"xValues": v}
            for label in self.labels:
                rep = pt.reports[label]
                if what == "z_bar":
                    row[label] = rep.z_bar
                elif what == "std_error":
                    row[label] = rep.std_error
                else:
                    row[label] = rep.avg_tx_power_dbm
            for label, w in pt.best_w.items():
                row["W" if len(pt.best_w) == 1 else f"W[{label}]"] = w
            rows.append(row)
        return rows

    def write(self, out_dir, stem=None):
        stem = stem or f"sweep_{self.axis}"
        paths = []
        for what, suffix in (("z_bar", ""), ("std_error", "_stderr"), ("power", "_power_dbm")):
            path = os.path.join(out_dir, f"{stem}{suffix}.csv")
            write_rows_csv(path, self.table(what))
            paths.append(path)
        return paths


def run_sweep(config):
    if config.sweep_axis is None or not config.sweep_values:
        raise ConfigurationError("run_sweep needs a sweep axis and at least one value")
    points = []
    for v in config.sweep_values:
        points.append(simulate(config.at(v)))
    labels = [a.label for a in config.parsed_algorithms()]
    return SweepResult(config.sweep_axis, list(config.sweep_values), labels, points)


def fairness_report(config, point=None):
    """Pooled CDF of Z_i and per-position mean Z_i for every algorithm.

    Returns ``(cdf_rows, per_vue_rows)`` ready for :func:`write_rows_csv`.
    """
    point = simulate(config) if point is None else point
    cdf_rows, per_vue = [], []
    for label, rep in point.reports.items():
        values, cdf = empirical_cdf(rep.z_i)
        cdf_rows += [{"algorithm": label, "z": float(v), "cdf": float(c)} for v, c in zip(values, cdf)]
    for i in range(config.N):
        row = {"xValues": i + 1}
        row.update({label: float(rep.z_bar_i[i]) for label, rep in point.reports.items()})
        per_vue.append(row)
    return cdf_rows, per_vue


def summary_rows(point):
    rows = []
    for label, rep in point.reports.items():
        rows.append({"algorithm": label, "z_bar": rep.z_bar, "std_error": rep.std_error,
                     "avg_tx_power_dbm": rep.avg_tx_power_dbm, "w": point.best_w.get(label, "")})
    return rows
