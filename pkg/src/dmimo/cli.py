"""Command line front end: run a sweep and write the results CSV.

Precedence for realization counts: explicit --n-net/--n-ch, then --paper-scale
(50 networks x 1000 channels), then counts given in the config file, then the
desk-scale default of 10 x 200.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .config import ConfigError, MonteCarloSettings, load_config
from .precoding import StatisticalInconsistencyError
from .runner import SweepSpec, emit_csv, run_sweep

DESK_SCALE = (10, 200)
PAPER_SCALE = (50, 1000)
DEFAULT_Q_LIST = (1, 4, 16, 64)
DEFAULT_SIDE_LIST = (125.0, 250.0, 500.0, 1000.0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dmimo-simulate",
        description="Downlink Monte Carlo sweep over AP count and area size "
                    "at a fixed total antenna and power budget.",
    )
    p.add_argument("--config", required=True, help="scenario YAML file")
    p.add_argument("--sweep", help="sweep YAML file (m_total, q_list, side_list_m, ...)")
    p.add_argument("--q-list", nargs="+", type=int, metavar="Q",
                   help="AP counts to sweep (perfect squares dividing M)")
    p.add_argument("--l-list", nargs="+", type=float, metavar="L",
                   help="area side lengths in meters")
    p.add_argument("--m", type=int, help="total antenna budget M = Q*S")
    p.add_argument("--n-net", type=int, help="network realizations per point")
    p.add_argument("--n-ch", type=int, help="channel realizations per pass")
    p.add_argument("--seed", type=int, help="master seed (non-negative integer)")
    p.add_argument("--out", default="sweep_results.csv", help="output CSV path")
    p.add_argument("--paper-scale", action="store_true",
                   help="full-scale run: 50 networks x 1000 channels")
    p.add_argument("--perfect-csi", action="store_true",
                   help="precode on true channels instead of LMMSE estimates")
    p.add_argument("--sinr-uplink-p", action="store_true",
                   help="weight the SINR interference term by the uplink power p")
    p.add_argument("--average-sinr-first", action="store_true",
                   help="average SINR across network realizations before the log")
    return p


def _load_sweep_file(path) -> dict:
    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError([f"sweep file must be a mapping, got {type(raw).__name__}"])
    known = {"m_total", "q_list", "side_list_m", "networks", "channels", "seed"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError([f"sweep file has unknown keys: {', '.join(unknown)}"])
    return raw


def _resolve_counts(args, sweep_raw: dict, config_raw_mc: dict) -> tuple:
    if args.paper_scale:
        n_net, n_ch = PAPER_SCALE
    else:
        n_net = sweep_raw.get("networks", config_raw_mc.get("networks"))
        n_ch = sweep_raw.get("channels", config_raw_mc.get("channels"))
        if n_net is None:
            n_net = DESK_SCALE[0]
        if n_ch is None:
            n_ch = DESK_SCALE[1]
    if args.n_net is not None:
        n_net = args.n_net
    if args.n_ch is not None:
        n_ch = args.n_ch
    return int(n_net), int(n_ch)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        raw = yaml.safe_load(Path(args.config).read_text()) or {}
        config_raw_mc = raw.get("monte_carlo") or {}
        sweep_raw = _load_sweep_file(args.sweep) if args.sweep else {}

        if args.perfect_csi:
            cfg = replace(cfg, perfect_csi=True)
        if args.sinr_uplink_p:
            cfg = replace(cfg, sinr_uses_uplink_p=True)
        if args.average_sinr_first:
            cfg = replace(cfg, average_sinr_before_log=True)

        m_total = args.m or sweep_raw.get("m_total") or cfg.M
        q_list = tuple(args.q_list or sweep_raw.get("q_list") or DEFAULT_Q_LIST)
        side_list = tuple(float(s) for s in
                          (args.l_list or sweep_raw.get("side_list_m") or DEFAULT_SIDE_LIST))
        n_net, n_ch = _resolve_counts(args, sweep_raw, config_raw_mc)
        seed = args.seed if args.seed is not None else \
            sweep_raw.get("seed", config_raw_mc.get("seed", cfg.mc.seed))
        if seed < 0:
            raise ConfigError([f"seed must be a non-negative integer, got {seed}"])

        spec = SweepSpec(base=cfg, m_total=m_total, q_list=q_list,
                         side_list=side_list, n_net=n_net, n_ch=n_ch, seed=int(seed))
        result = run_sweep(spec)
        emit_csv(result, args.out)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StatisticalInconsistencyError as exc:
        print(f"error: statistical inconsistency: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {len(result.points)} points to {args.out} "
          f"({result.wall_s:.1f}s, M={result.m_total}, seed={result.seed})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
