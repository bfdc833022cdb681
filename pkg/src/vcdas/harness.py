"""Experiment runners producing plot-ready tables.

Topology ``t`` of an experiment is always drawn from the stream
``(seed, t, TOPOLOGY)``, so every runner and every V sees the same
placements for a given seed.  Work is split by topology; results are
gathered in topology order, so worker count never changes the output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds, seeding, vopt
from .geometry import Topology, form_virtual_cells, generate_topology, pairwise_gains
from .grouping import cluster_bs_baseline, group_users
from .mrt import MrtContext, ergodic_rate_mc
from .zfbf import zfbf_user_rates

WORKERS_ENV = "VCDAS_WORKERS"
MODES = ("mrt", "single", "bound", "vstar", "group", "compare", "topo")

COLUMNS = {
    "mrt": ["v", "avg_rate", "stderr", "upper_bound", "ub_stderr"],
    "single": ["v", "user", "closed_form", "mc", "mc_stderr", "quadrature"],
    "bound": ["v", "upper_bound", "ub_stderr", "e_log_signal", "e_log_signal_stderr",
              "e_log_interference_lb", "e_log_interference_lb_stderr"],
    "vstar": ["k", "l", "v_exact", "v_integer", "mean_nn_distance", "v_rule"],
    "group": ["v", "avg_rate", "stderr", "n_groups_mean", "max_group_size_mean"],
    "compare": ["topology", "user", "grouping_rate", "baseline_rate"],
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    K: int
    L: int
    V: tuple[int, ...] = (1,)
    alpha: float = 4.0
    snr_db: float = 10.0
    n_topologies: int = 200
    n_fading_samples: int = 200_000
    seed: int = 0
    mode: str = "mrt"
    out: str | None = None
    fmt: str = "csv"
    n_clusters: int = 4
    interference: str = "average"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.V = tuple(int(v) for v in np.atleast_1d(self.V))

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.K < 1 or self.L < 1:
            raise ConfigError("K and L must be at least 1")
        if not self.V or min(self.V) < 1 or max(self.V) > self.L:
            raise ConfigError(f"V values must lie in [1, L={self.L}]")
        if not (math.isfinite(self.alpha) and self.alpha > 2):
            raise ConfigError("alpha must be finite and exceed 2")
        if not math.isfinite(self.snr_db):
            raise ConfigError("snr_db must be finite")
        if self.n_topologies < 1:
            raise ConfigError("need at least one topology")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.interference not in ("average", "instantaneous"):
            raise ConfigError("interference must be average or instantaneous")
        if self.mode in ("bound", "group", "compare") and self.n_fading_samples < 1000:
            raise ConfigError("fading samples must be at least 1000")
        if self.mode == "single" and self.n_fading_samples < 1000:
            raise ConfigError("fading samples must be at least 1000")
        if self.mode == "bound" and self.K < 2:
            raise ConfigError("the bound needs K >= 2")
        if self.mode == "vstar" and self.K < 3:
            raise ConfigError("vstar needs K >= 3")
        if self.mode == "compare" and not 1 <= self.n_clusters <= self.L:
            raise ConfigError("n_clusters must lie in [1, L]")
        return self

    def echo(self) -> dict:
        d = asdict(self)
        d["V"] = list(self.V)
        d.pop("extra")
        return d


def topology(cfg: ExperimentConfig, t: int) -> Topology:
    topo = generate_topology(cfg.K, cfg.L, seeding.stream(cfg.seed, t, seeding.TOPOLOGY))
    return Topology(topo.user_positions, topo.bs_positions, seed=cfg.seed)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def _map(fn, args, workers=None):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, args))


def _mean_se(values, axis=0):
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    se = values.std(axis=axis, ddof=1) / np.sqrt(n) if n > 1 else np.full(
        np.delete(values.shape, axis), np.nan)
    return values.mean(axis=axis), se


# -- MRT --------------------------------------------------------------------

def _mrt_topology(job):
    cfg, t = job
    topo = topology(cfg, t)
    gains = pairwise_gains(topo, cfg.alpha)
    out = []
    for v in cfg.V:
        ctx = MrtContext(gains, form_virtual_cells(topo, v), cfg.snr)
        out.append(ctx.closed_form_rates())
    return np.array(out)   # (n_V, K)


def mrt_rates(cfg: ExperimentConfig, workers=None) -> np.ndarray:
    """Closed-form MRT rates, shape ``(n_topologies, n_V, K)``."""
    cfg.validate()
    return np.array(_map(_mrt_topology, [(cfg, t) for t in range(cfg.n_topologies)], workers))


def run_mrt_sweep(cfg: ExperimentConfig, workers=None, with_bound: bool = True) -> list[dict]:
    """Average MRT rate per V over topologies and users, with the upper bound."""
    per_topo = mrt_rates(cfg, workers).mean(axis=2)    # (T, n_V)
    avg, se = _mean_se(per_topo)
    rows = []
    for i, v in enumerate(cfg.V):
        ub, ub_se = math.nan, math.nan
        if with_bound and cfg.K >= 2:
            ub, ub_se = bounds.estimate_upper_bound(
                cfg.K, cfg.L, v, cfg.alpha, max(cfg.n_fading_samples, 1000),
                seeding.child(cfg.seed, seeding.BOUND, v))
        rows.append({"v": v, "avg_rate": float(avg[i]), "stderr": float(se[i]),
                     "upper_bound": ub, "ub_stderr": ub_se})
    return rows


def run_single_topology(cfg: ExperimentConfig, topology_index: int = 0) -> list[dict]:
    """Closed-form and Monte Carlo MRT rate of every user for one topology."""
    cfg.validate()
    topo = topology(cfg, topology_index)
    gains = pairwise_gains(topo, cfg.alpha)
    rows = []
    for v in cfg.V:
        ctx = MrtContext(gains, form_virtual_cells(topo, v), cfg.snr)
        closed = ctx.closed_form_rates()
        quad = ctx.fallback_mask
        for k in range(cfg.K):
            rng = seeding.stream(cfg.seed, topology_index, seeding.MRT_MC, v, k)
            mc, mc_se = ergodic_rate_mc(ctx, k, cfg.n_fading_samples, rng)
            rows.append({"v": v, "user": k, "closed_form": float(closed[k]), "mc": mc,
                         "mc_stderr": mc_se, "quadrature": int(quad[k])})
    return rows


def run_bound(cfg: ExperimentConfig) -> list[dict]:
    cfg.validate()
    rows = []
    for v in cfg.V:
        seed = seeding.child(cfg.seed, seeding.BOUND, v)
        ub, ub_se = bounds.estimate_upper_bound(cfg.K, cfg.L, v, cfg.alpha,
                                                cfg.n_fading_samples, seed)
        s, i, s_se, i_se = bounds.estimate_entropy_terms(
            cfg.K, cfg.L, v, cfg.alpha, cfg.n_fading_samples, seed, return_stderr=True)
        rows.append({"v": v, "upper_bound": ub, "ub_stderr": ub_se,
                     "e_log_signal": s, "e_log_signal_stderr": s_se,
                     "e_log_interference_lb": i, "e_log_interference_lb_stderr": i_se})
    return rows


def run_vstar(cfg: ExperimentConfig) -> list[dict]:
    cfg.validate()
    res = vopt.vstar(cfg.K, cfg.L)
    return [{"k": cfg.K, "l": cfg.L, "v_exact": res.v_exact, "v_integer": res.v_integer,
             "mean_nn_distance": res.mean_nn_distance, "v_rule": vopt.optimal_v(cfg.K, cfg.L)}]


# -- grouping / ZFBF ----------------------------------------------------------

def _zf_report(cfg, partition, gains, t, arm):
    n = cfg.n_fading_samples
    seed = seeding.child(cfg.seed, t, seeding.ZF_RATE, arm)
    return zfbf_user_rates(partition, gains, cfg.snr, n, n, seed, cfg.interference)


def _group_topology(job):
    cfg, t = job
    topo = topology(cfg, t)
    gains = pairwise_gains(topo, cfg.alpha)
    out = []
    for v in cfg.V:
        part = group_users(form_virtual_cells(topo, v))
        rep = _zf_report(cfg, part, gains, t, v)
        out.append((rep.average_rate, part.n_groups, max(part.sizes)))
    return np.array(out)   # (n_V, 3)


def grouping_stats(cfg: ExperimentConfig, workers=None) -> np.ndarray:
    """Per-topology (avg ZFBF rate, #groups, max group size), ``(T, n_V, 3)``."""
    cfg.validate()
    return np.array(_map(_group_topology, [(cfg, t) for t in range(cfg.n_topologies)], workers))


def run_grouping_sweep(cfg: ExperimentConfig, workers=None) -> list[dict]:
    stats = grouping_stats(cfg, workers)
    avg, se = _mean_se(stats[:, :, 0])
    rows = []
    for i, v in enumerate(cfg.V):
        rows.append({"v": v, "avg_rate": float(avg[i]), "stderr": float(se[i]),
                     "n_groups_mean": float(stats[:, i, 1].mean()),
                     "max_group_size_mean": float(stats[:, i, 2].mean())})
    return rows


def _compare_topology(job):
    cfg, t = job
    v = cfg.V[0]
    topo = topology(cfg, t)
    gains = pairwise_gains(topo, cfg.alpha)
    grouped = _zf_report(cfg, group_users(form_virtual_cells(topo, v)), gains, t, 0)
    base = _zf_report(cfg, cluster_bs_baseline(topo, cfg.n_clusters).as_partition(),
                      gains, t, 1)
    return grouped.per_user_rates, base.per_user_rates


def run_comparison(cfg: ExperimentConfig, workers=None) -> list[dict]:
    """Per-user ZFBF rates under virtual-cell grouping and the sector baseline.

    Both arms use the same topology for a given index; only ``cfg.V[0]`` is
    used.
    """
    cfg.validate()
    results = _map(_compare_topology, [(cfg, t) for t in range(cfg.n_topologies)], workers)
    rows = []
    for t, (g, b) in enumerate(results):
        for k in range(cfg.K):
            rows.append({"topology": t, "user": k, "grouping_rate": float(g[k]),
                         "baseline_rate": float(b[k])})
    return rows


# -- output -------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def render(rows: list[dict], columns: list[str], fmt: str, config: dict | None = None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        doc = {"config": config or {}, "columns": columns,
               "rows": [{c: clean(r[c]) for c in columns} for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


RUNNERS = {
    "mrt": run_mrt_sweep,
    "single": run_single_topology,
    "bound": run_bound,
    "vstar": run_vstar,
    "group": run_grouping_sweep,
    "compare": run_comparison,
}


def run(cfg: ExperimentConfig) -> str:
    """Run ``cfg.mode`` and return the rendered table."""
    cfg.validate()
    if cfg.mode == "topo":
        return topology(cfg, 0).to_json() + "\n"
    rows = RUNNERS[cfg.mode](cfg)
    return render(rows, COLUMNS[cfg.mode], cfg.fmt, cfg.echo())
