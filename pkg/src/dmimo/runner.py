"""Sweep driver: run (Q, S, side) points at a fixed antenna and power budget.

Every point re-derives the per-AP power p_d = P/Q so the total radiated power
is identical across the sweep; fairness (same M, P, K on every row) is checked
before anything is written. All randomness derives from (master seed, point
identity, network index, stream id), so results are independent of worker
scheduling and of which other points share the sweep.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import build_network
from .config import ConfigError, MonteCarloSettings, ScenarioConfig, with_point
from .precoding import estimate_uatf_stats, se_per_user, uatf_sinr
from .seeding import STREAM_DS_PASS, STREAM_MU_PASS, STREAM_NETWORK, derive_rng, derive_seq, point_key

log = logging.getLogger(__name__)

CSV_HEADER = ("Q,S,l_m,M,density_aps_per_km2,mean_se_bps_hz,stderr,"
              "se_p5,se_p50,se_p95,n_net,n_ch,seed")

WORKERS_ENV = "DMIMO_WORKERS"


@dataclass(frozen=True)
class PointResult:
    Q: int
    S: int
    side: float
    M: int
    density: float          # APs per km^2
    mean_se: float          # mean per-user SE [bit/s/Hz]
    stderr: float           # std of per-network means / sqrt(n_net)
    se_p5: float
    se_p50: float
    se_p95: float
    n_net: int
    n_ch: int
    seed: int
    wall_s: float           # not emitted to the CSV
    per_user_se: np.ndarray  # (n_net, K) diagnostics


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    m_total: int
    q_list: tuple
    side_list: tuple
    n_net: int
    n_ch: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    m_total: int
    seed: int
    wall_s: float


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _run_network(config: ScenarioConfig, seed: int, net_idx: int):
    """SE and SINR of every user for one network realization (deterministic)."""
    pk = point_key(config.Q, config.S, config.side)
    net = build_network(config, derive_rng(seed, *pk, net_idx, STREAM_NETWORK))
    seq_mu = derive_seq(seed, *pk, net_idx, STREAM_MU_PASS)
    seq_ds = derive_seq(seed, *pk, net_idx, STREAM_DS_PASS)
    stats = estimate_uatf_stats(net, config.mc.channels, (seq_mu, seq_ds))
    gamma = uatf_sinr(
        stats, config.p_dl_ap, config.sigma2,
        interference_power=config.p_ul if config.sinr_uses_uplink_p else None,
    )
    return se_per_user(gamma, config.tau_c, config.tau_d), gamma


def run_point(config: ScenarioConfig, seed: int | None = None,
              workers: int | None = None) -> PointResult:
    """Monte Carlo estimate of the mean per-user SE at one (Q, S, side) point.

    Realization counts come from config.mc. Per-network jobs may run in
    parallel (DMIMO_WORKERS or `workers`); results are reduced in network
    index order, so the output is bit-identical for any worker count.
    """
    seed = config.mc.seed if seed is None else int(seed)
    n_net, n_ch = config.mc.networks, config.mc.channels
    nworkers = _worker_count(workers)
    start = time.perf_counter()

    if nworkers > 1 and n_net > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            outcomes = list(pool.map(_run_network, [config] * n_net,
                                     [seed] * n_net, range(n_net)))
    else:
        outcomes = [_run_network(config, seed, i) for i in range(n_net)]

    per_user_se = np.stack([se for se, _ in outcomes])   # (n_net, K)
    if config.average_sinr_before_log:
        gamma_mean = np.stack([g for _, g in outcomes]).mean(axis=0)
        se_users = se_per_user(gamma_mean, config.tau_c, config.tau_d)
        mean_se = float(se_users.mean())
        pcts = np.percentile(se_users, [5.0, 50.0, 95.0])
    else:
        mean_se = float(per_user_se.mean())
        pcts = np.percentile(per_user_se, [5.0, 50.0, 95.0])
    net_means = per_user_se.mean(axis=1)
    stderr = float(net_means.std(ddof=1) / np.sqrt(n_net)) if n_net > 1 else 0.0

    return PointResult(
        Q=config.Q, S=config.S, side=config.side, M=config.M,
        density=config.Q / (config.side / 1000.0) ** 2,
        mean_se=mean_se, stderr=stderr,
        se_p5=float(pcts[0]), se_p50=float(pcts[1]), se_p95=float(pcts[2]),
        n_net=n_net, n_ch=n_ch, seed=seed,
        wall_s=time.perf_counter() - start,
        per_user_se=per_user_se,
    )


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every (Q, side) point of the sweep; rows ordered by the given lists."""
    if not spec.q_list or not spec.side_list:
        raise ConfigError(["sweep needs at least one Q and one side value"])
    mc = MonteCarloSettings(networks=spec.n_net, channels=spec.n_ch, seed=spec.seed)
    configs = []
    for q in spec.q_list:
        if spec.m_total % q != 0:
            raise ConfigError(
                [f"sweep point Q={q}: antenna budget M={spec.m_total} is not divisible by Q"]
            )
        for side in spec.side_list:
            try:
                cfg = with_point(replace(spec.base, mc=mc), q,
                                 spec.m_total // q, side)
            except ConfigError as exc:
                raise ConfigError(
                    [f"sweep point Q={q}, l={side}: {p}" for p in exc.problems]
                ) from exc
            configs.append(cfg)

    # Fairness: identical antenna budget, radiated power, and UE count per row.
    budgets = {(c.M, c.p_dl_total, c.K) for c in configs}
    if len(budgets) != 1:
        raise ConfigError([f"sweep mixes budgets (M, P, K): {sorted(budgets)}"])

    start = time.perf_counter()
    points = []
    for cfg in configs:
        res = run_point(cfg, seed=spec.seed, workers=workers)
        log.info("point Q=%d S=%d l=%g: mean SE %.4f +/- %.4f bit/s/Hz (%.1fs)",
                 res.Q, res.S, res.side, res.mean_se, res.stderr, res.wall_s)
        points.append(res)
    return SweepResult(points=tuple(points), m_total=spec.m_total,
                       seed=spec.seed, wall_s=time.perf_counter() - start)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def emit_csv(result: SweepResult, path) -> None:
    """Write the sweep as CSV, 9 significant digits, byte-stable across runs."""
    if not result.points:
        raise ValueError("refusing to write an empty sweep result")
    lines = [CSV_HEADER]
    for r in result.points:
        lines.append(",".join([
            str(r.Q), str(r.S), _fmt(r.side), str(r.M), _fmt(r.density),
            _fmt(r.mean_se), _fmt(r.stderr),
            _fmt(r.se_p5), _fmt(r.se_p50), _fmt(r.se_p95),
            str(r.n_net), str(r.n_ch), str(r.seed),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list:
    """Parse an emitted sweep CSV back into a list of per-row dicts."""
    text = Path(path).read_text().strip().split("\n")
    header = text[0].split(",")
    if header != CSV_HEADER.split(","):
        raise ValueError(f"unexpected CSV header: {text[0]!r}")
    int_cols = {"Q", "S", "M", "n_net", "n_ch", "seed"}
    rows = []
    for line in text[1:]:
        values = line.split(",")
        rows.append({
            name: (int(v) if name in int_cols else float(v))
            for name, v in zip(header, values)
        })
    return rows
