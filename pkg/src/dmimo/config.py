"""Scenario configuration: validated parameter container plus YAML I/O.

Powers are stored in linear watts internally; the file format accepts either
`*_dbm` or `*_watts` keys and converts on load. All validation problems are
collected and reported together, never silently corrected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

NOISE_FLOOR_DBM_PER_HZ = -174.0  # thermal noise density at T0 = 290 K


class ConfigError(ValueError):
    """Invalid scenario definition; `problems` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        msg = "invalid scenario configuration:\n" + "\n".join(
            f"  - {p}" for p in self.problems
        )
        super().__init__(msg)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0.0:
        raise ValueError(f"power must be positive to convert to dBm, got {watts}")
    return 10.0 * math.log10(watts) + 30.0


def derive_noise_power(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Receiver noise power sigma^2 in watts.

    sigma^2 [dBm] = -174 + 10 log10(B) + N_F
    """
    if bandwidth_hz <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    dbm = NOISE_FLOOR_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return dbm_to_watts(dbm)


@dataclass(frozen=True)
class ChannelConstants:
    """Propagation constants (3GPP-UMi-style defaults, all overridable).

    LoS probability:   P = min(near/d2D, 1) * (1 - exp(-d2D/decay)) + exp(-d2D/decay)
    Path loss [dB]:    LoS  pl_los_const  + pl_los_slope  * log10(d3D)
                       NLoS pl_nlos_const + pl_nlos_slope * log10(d3D)
    Rician factor:     kappa = 10^(kappa_log10_const - kappa_log10_slope * d3D) on LoS links
    """

    los_prob_near_m: float = 18.0
    los_prob_decay_m: float = 36.0
    pl_los_const_db: float = 30.18
    pl_los_slope_db: float = 26.0
    pl_nlos_const_db: float = 34.53
    pl_nlos_slope_db: float = 38.0
    kappa_log10_const: float = 1.3
    kappa_log10_slope_per_m: float = 0.003
    asd_deg: float = 15.0       # angular standard deviation of local scattering
    shadow_sigma_db: float = 0.0  # log-normal shadowing; 0 disables


@dataclass(frozen=True)
class MonteCarloSettings:
    networks: int = 50    # network realizations (UE drops)
    channels: int = 1000  # channel realizations per network and pass
    seed: int = 1         # master seed; all streams derive from it


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation point: geometry, radio parameters, and MC settings.

    Immutable after construction; safe to share across parallel workers.
    """

    K: int                  # UEs
    Q: int                  # APs (perfect square, placed on a uniform grid)
    S: int                  # antennas per AP (ULA)
    M: int                  # total antennas Q * S
    side: float             # side length l of the square coverage area [m]
    bandwidth: float        # B [Hz]
    carrier: float          # f_c [Hz]
    tau_c: int              # coherence block [samples]
    tau_p: int              # pilot length [samples]
    tau_d: int              # downlink data samples: tau_c - tau_p - 1
    p_ul: float             # uplink pilot power per UE [W]
    p_dl_total: float       # total downlink power P across all APs [W]
    p_dl_ap: float          # per-AP downlink power p_d = P / Q [W]
    sigma2: float           # noise power [W]
    noise_figure_db: float
    h_ap: float             # AP height [m]
    h_ue: float             # UE height [m]
    antenna_spacing: float  # ULA spacing in wavelengths
    channel: ChannelConstants = field(default_factory=ChannelConstants)
    mc: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    pilot_gain_tau_p: bool = False        # apply tau_p processing gain to pilots
    sinr_uses_uplink_p: bool = False      # interference term weighted by p instead of p_d
    perfect_csi: bool = False             # precode on true channels (test hook)
    average_sinr_before_log: bool = False  # average SINR across networks, then log

    @property
    def p_eff(self) -> float:
        """Effective pilot power entering reception, Psi, and the LMMSE gain."""
        return self.p_ul * self.tau_p if self.pilot_gain_tau_p else self.p_ul

    @property
    def prelog(self) -> float:
        return self.tau_d / self.tau_c


# Documented file schema with defaults. Keys carrying units say so in the name.
_DEFAULTS = {
    "ues": 20,
    "aps": 16,
    "antennas_per_ap": 4,
    "side_m": 500.0,
    "bandwidth_hz": 20e6,
    "carrier_hz": 2e9,
    "coherence_block": 200,
    "pilot_length": 10,
    "uplink_power_dbm": 23.0,
    "total_downlink_power_dbm": 49.03,
    "noise_figure_db": 9.0,
    "ap_height_m": 12.5,
    "ue_height_m": 1.5,
    "antenna_spacing": 0.5,
    "pilot_gain_tau_p": False,
    "sinr_uses_uplink_p": False,
    "perfect_csi": False,
    "average_sinr_before_log": False,
}

_POWER_KEYS = {
    # logical name -> (dbm key, watts key)
    "uplink_power": ("uplink_power_dbm", "uplink_power_watts"),
    "total_downlink_power": ("total_downlink_power_dbm", "total_downlink_power_watts"),
    "noise_power": ("noise_power_dbm", "noise_power_watts"),
}


def _read_power(raw: dict, name: str, problems: list, default_dbm=None):
    """Resolve one power from `<name>_dbm` or `<name>_watts`; watts returned."""
    dbm_key, watts_key = _POWER_KEYS[name]
    has_dbm, has_watts = dbm_key in raw, watts_key in raw
    if has_dbm and has_watts:
        problems.append(f"give either {dbm_key} or {watts_key}, not both")
        return None
    if has_watts:
        return float(raw[watts_key])
    if has_dbm:
        return dbm_to_watts(float(raw[dbm_key]))
    if default_dbm is not None:
        return dbm_to_watts(default_dbm)
    return None


def _validate(cfg: ScenarioConfig) -> list:
    problems = []
    if cfg.K < 1:
        problems.append(f"number of UEs must be >= 1, got {cfg.K}")
    if cfg.Q < 1:
        problems.append(f"number of APs must be >= 1, got {cfg.Q}")
    else:
        root = math.isqrt(cfg.Q)
        if root * root != cfg.Q:
            problems.append(
                f"number of APs must be a perfect square for the uniform grid, got {cfg.Q}"
            )
    if cfg.S < 1:
        problems.append(f"antennas per AP must be >= 1, got {cfg.S}")
    if cfg.K >= 1 and cfg.M < cfg.K:
        problems.append(
            f"total antennas M = Q*S = {cfg.M} must be at least the number of UEs K = {cfg.K}"
        )
    if cfg.side <= 0.0:
        problems.append(f"area side must be positive, got {cfg.side}")
    if cfg.bandwidth <= 0.0:
        problems.append(f"bandwidth must be positive, got {cfg.bandwidth}")
    if cfg.carrier <= 0.0:
        problems.append(f"carrier frequency must be positive, got {cfg.carrier}")
    if cfg.tau_p < 1:
        problems.append(f"pilot length must be >= 1, got {cfg.tau_p}")
    if cfg.tau_c <= cfg.tau_p + 1:
        problems.append(
            f"coherence block tau_c = {cfg.tau_c} must exceed tau_p + 1 = {cfg.tau_p + 1} "
            "to leave room for downlink data"
        )
    for label, value in (
        ("uplink power", cfg.p_ul),
        ("total downlink power", cfg.p_dl_total),
        ("noise power", cfg.sigma2),
    ):
        if value is None or value <= 0.0:
            problems.append(f"{label} must be positive, got {value}")
    if cfg.h_ap <= cfg.h_ue:
        problems.append(
            f"AP height {cfg.h_ap} m must exceed UE height {cfg.h_ue} m (d3D > 0)"
        )
    if cfg.h_ue <= 0.0:
        problems.append(f"UE height must be positive, got {cfg.h_ue}")
    if cfg.antenna_spacing <= 0.0:
        problems.append(f"antenna spacing must be positive, got {cfg.antenna_spacing}")
    if cfg.channel.asd_deg <= 0.0:
        problems.append(f"angular spread must be positive, got {cfg.channel.asd_deg}")
    if cfg.channel.shadow_sigma_db < 0.0:
        problems.append(f"shadowing sigma must be >= 0, got {cfg.channel.shadow_sigma_db}")
    if cfg.mc.networks < 1:
        problems.append(f"network realization count must be >= 1, got {cfg.mc.networks}")
    if cfg.mc.channels < 1:
        problems.append(f"channel realization count must be >= 1, got {cfg.mc.channels}")
    if cfg.mc.seed < 0:
        problems.append(f"seed must be a non-negative integer, got {cfg.mc.seed}")
    return problems


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from the documented key-value schema."""
    raw = dict(raw or {})
    problems = []

    known = set(_DEFAULTS) | {"channel", "monte_carlo"}
    for keys in _POWER_KEYS.values():
        known.update(keys)
    unknown = sorted(set(raw) - known)
    if unknown:
        problems.append(f"unknown keys: {', '.join(unknown)}")

    def get(key):
        return raw.get(key, _DEFAULTS[key])

    p_ul = _read_power(raw, "uplink_power", problems,
                       default_dbm=_DEFAULTS["uplink_power_dbm"])
    p_dl = _read_power(raw, "total_downlink_power", problems,
                       default_dbm=_DEFAULTS["total_downlink_power_dbm"])
    sigma2 = _read_power(raw, "noise_power", problems)  # optional, derived if absent

    try:
        channel = ChannelConstants(**(raw.get("channel") or {}))
    except TypeError as exc:
        problems.append(f"channel constants: {exc}")
        channel = ChannelConstants()
    try:
        mc = MonteCarloSettings(**(raw.get("monte_carlo") or {}))
    except TypeError as exc:
        problems.append(f"monte_carlo settings: {exc}")
        mc = MonteCarloSettings()

    bandwidth = float(get("bandwidth_hz"))
    noise_figure = float(get("noise_figure_db"))
    if sigma2 is None and bandwidth > 0.0:
        # Explicit noise power wins over recomputation; derive only when absent.
        sigma2 = derive_noise_power(bandwidth, noise_figure)

    q = int(get("aps"))
    s = int(get("antennas_per_ap"))
    tau_c = int(get("coherence_block"))
    tau_p = int(get("pilot_length"))
    cfg = ScenarioConfig(
        K=int(get("ues")),
        Q=q,
        S=s,
        M=q * s,
        side=float(get("side_m")),
        bandwidth=bandwidth,
        carrier=float(get("carrier_hz")),
        tau_c=tau_c,
        tau_p=tau_p,
        tau_d=tau_c - tau_p - 1,
        p_ul=p_ul,
        p_dl_total=p_dl,
        p_dl_ap=p_dl / q if (p_dl is not None and q >= 1) else None,
        sigma2=sigma2,
        noise_figure_db=noise_figure,
        h_ap=float(get("ap_height_m")),
        h_ue=float(get("ue_height_m")),
        antenna_spacing=float(get("antenna_spacing")),
        channel=channel,
        mc=mc,
        pilot_gain_tau_p=bool(get("pilot_gain_tau_p")),
        sinr_uses_uplink_p=bool(get("sinr_uses_uplink_p")),
        perfect_csi=bool(get("perfect_csi")),
        average_sinr_before_log=bool(get("average_sinr_before_log")),
    )
    problems.extend(_validate(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(source) -> ScenarioConfig:
    """Load a scenario from a YAML file path, YAML text, or a plain dict."""
    if isinstance(source, dict):
        return scenario_from_dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and source.strip().endswith((".yaml", ".yml", ".json"))):
        text = Path(source).read_text()
    else:
        text = str(source)
    raw = yaml.safe_load(text)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError([f"top level of the config must be a mapping, got {type(raw).__name__}"])
    return scenario_from_dict(raw)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Serialize to the file schema (watts keys, exact round-trip)."""
    from dataclasses import asdict

    return {
        "ues": cfg.K,
        "aps": cfg.Q,
        "antennas_per_ap": cfg.S,
        "side_m": cfg.side,
        "bandwidth_hz": cfg.bandwidth,
        "carrier_hz": cfg.carrier,
        "coherence_block": cfg.tau_c,
        "pilot_length": cfg.tau_p,
        "uplink_power_watts": cfg.p_ul,
        "total_downlink_power_watts": cfg.p_dl_total,
        "noise_power_watts": cfg.sigma2,
        "noise_figure_db": cfg.noise_figure_db,
        "ap_height_m": cfg.h_ap,
        "ue_height_m": cfg.h_ue,
        "antenna_spacing": cfg.antenna_spacing,
        "channel": asdict(cfg.channel),
        "monte_carlo": asdict(cfg.mc),
        "pilot_gain_tau_p": cfg.pilot_gain_tau_p,
        "sinr_uses_uplink_p": cfg.sinr_uses_uplink_p,
        "perfect_csi": cfg.perfect_csi,
        "average_sinr_before_log": cfg.average_sinr_before_log,
    }


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def with_point(cfg: ScenarioConfig, q: int, s: int | None = None,
               side: float | None = None) -> ScenarioConfig:
    """Re-target a config to a sweep point (Q, S, side), re-deriving M and p_d.

    S defaults to M/Q at the current antenna budget; raises ConfigError when
    the budget does not divide evenly or the new point is invalid.
    """
    if s is None:
        if cfg.M % q != 0:
            raise ConfigError(
                [f"antenna budget M = {cfg.M} is not divisible by Q = {q}"]
            )
        s = cfg.M // q
    new = replace(
        cfg,
        Q=q,
        S=s,
        M=q * s,
        side=cfg.side if side is None else float(side),
        p_dl_ap=cfg.p_dl_total / q,
    )
    problems = _validate(new)
    if problems:
        raise ConfigError(problems)
    return new
