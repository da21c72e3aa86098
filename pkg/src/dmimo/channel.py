"""Spatially correlated Rician channel model.

Each UE-AP link k,q carries an S-antenna channel h_kq ~ CN(h_bar_kq, R_kq).
The LoS state is a hard Bernoulli draw per link, frozen for the lifetime of a
network realization. On LoS links the mean points along the ULA steering
vector and the scattered part keeps beta/(kappa+1) of the power; NLoS links
are zero-mean with the full beta. The scattered covariance follows the
Gaussian local scattering model with a configurable angular spread.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .config import ChannelConstants, ScenarioConfig
from .geometry import LinkGeometry, drop_ues, link_geometry_grid, place_aps
from .pilots import PilotPlan, assign_pilots

_FIXTURE_MAGIC = b"DMCH"
_FIXTURE_VERSION = 1


@dataclass(frozen=True)
class LinkState:
    """Large-scale state of one UE-AP link, fixed per network realization."""

    is_los: bool
    beta: float          # total large-scale gain, linear
    kappa: float         # Rician factor, 0 on NLoS links
    h_bar: np.ndarray    # (S,) deterministic component, ||h_bar||^2 = S*beta*kappa/(kappa+1)
    cov: np.ndarray      # (S,S) covariance of the scattered part, trace = S*beta_nlos


@dataclass(frozen=True)
class NetworkRealization:
    """One UE drop with all link states and the pilot assignment.

    Arrays are stacked over (K, Q) so channel realizations can be sampled in
    vectorized batches.
    """

    config: ScenarioConfig
    ue_xyz: np.ndarray      # (K, 3)
    ap_xyz: np.ndarray      # (Q, 3)
    d2d: np.ndarray         # (K, Q)
    d3d: np.ndarray         # (K, Q)
    azimuth: np.ndarray     # (K, Q)
    is_los: np.ndarray      # (K, Q) bool
    beta: np.ndarray        # (K, Q)
    kappa: np.ndarray       # (K, Q)
    h_bar: np.ndarray       # (K, Q, S) complex
    cov: np.ndarray         # (K, Q, S, S) complex
    cov_factor: np.ndarray  # (K, Q, S, S), cov_factor @ cov_factor^H = cov
    plan: PilotPlan


def los_probability(d2d, constants: ChannelConstants | None = None):
    """LoS probability as a function of the 2D distance.

    P = min(near/d2D, 1) * (1 - exp(-d2D/decay)) + exp(-d2D/decay), which is 1
    for d2D <= near and decays monotonically beyond it.
    """
    c = constants or ChannelConstants()
    d = np.asarray(d2d, dtype=float)
    decay = np.exp(-d / c.los_prob_decay_m)
    with np.errstate(divide="ignore", over="ignore"):
        near = np.minimum(np.where(d > 0.0, c.los_prob_near_m / np.where(d > 0.0, d, 1.0), np.inf), 1.0)
    p = near * (1.0 - decay) + decay
    return p if p.ndim else float(p)


def path_loss_db(d3d, is_los, constants: ChannelConstants | None = None):
    """Distance-dependent path loss in dB (no shadowing term)."""
    c = constants or ChannelConstants()
    d = np.asarray(d3d, dtype=float)
    log_d = np.log10(d)
    los = c.pl_los_const_db + c.pl_los_slope_db * log_d
    nlos = c.pl_nlos_const_db + c.pl_nlos_slope_db * log_d
    out = np.where(is_los, los, nlos)
    return out if out.ndim else float(out)


def rician_factor(d3d, is_los, constants: ChannelConstants | None = None):
    """kappa = 10^(const - slope * d3D) on LoS links, 0 otherwise."""
    c = constants or ChannelConstants()
    d = np.asarray(d3d, dtype=float)
    kappa = 10.0 ** (c.kappa_log10_const - c.kappa_log10_slope_per_m * d)
    out = np.where(is_los, kappa, 0.0)
    return out if out.ndim else float(out)


def steering_vector(azimuth: float, s: int, spacing: float = 0.5) -> np.ndarray:
    """ULA response: element m gets phase 2*pi*spacing*m*sin(azimuth), m = 0..s-1."""
    m = np.arange(s)
    return np.exp(2j * np.pi * spacing * m * np.sin(azimuth))


def spatial_covariance(azimuth: float, beta_nlos: float, s: int,
                       asd_rad: float, spacing: float = 0.5) -> np.ndarray:
    """Gaussian local scattering covariance of the scattered component.

    [R]_{m,n} = beta_nlos * exp(j*2*pi*spacing*(m-n)*sin(az))
                          * exp(-(asd * 2*pi*spacing * (m-n) * cos(az))^2 / 2)

    Closed-form small-ASD approximation of averaging a(az + delta) a(az + delta)^H
    over delta ~ N(0, asd^2).
    """
    return _covariance_grid(np.asarray(azimuth, dtype=float),
                            np.asarray(beta_nlos, dtype=float), s, asd_rad, spacing)


def _covariance_grid(azimuth, beta_nlos, s, asd_rad, spacing=0.5):
    """Covariances for a whole stack of links; azimuth/beta broadcast to (..., S, S)."""
    m = np.arange(s)
    diff = (m[:, None] - m[None, :]) * (2.0 * np.pi * spacing)  # (S, S)
    sin_az = np.sin(azimuth)[..., None, None]
    cos_az = np.cos(azimuth)[..., None, None]
    phase = np.exp(1j * diff * sin_az)
    spread = np.exp(-0.5 * (asd_rad * diff * cos_az) ** 2)
    return beta_nlos[..., None, None] * phase * spread


def psd_cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower-triangular factor of a Hermitian PSD matrix.

    Falls back to an eigenfactor V diag(sqrt(max(w, 0))) when the matrix is
    numerically singular; the product factor @ factor^H still reconstructs cov.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (cov + cov.conj().T))
        return v * np.sqrt(np.clip(w, 0.0, None))


def _cholesky_stack(cov: np.ndarray) -> np.ndarray:
    """psd_cholesky over a (..., S, S) stack, vectorized on the happy path."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        flat = cov.reshape(-1, cov.shape[-2], cov.shape[-1])
        out = np.empty_like(flat)
        for i, mat in enumerate(flat):
            out[i] = psd_cholesky(mat)
        return out.reshape(cov.shape)


def large_scale(link: LinkGeometry, rng: np.random.Generator, s: int,
                constants: ChannelConstants | None = None,
                spacing: float = 0.5) -> LinkState:
    """Draw the LoS state and build the large-scale quantities of one link."""
    c = constants or ChannelConstants()
    is_los = bool(rng.random() < los_probability(link.d2d, c))
    pl_db = path_loss_db(link.d3d, is_los, c)
    if c.shadow_sigma_db > 0.0:
        pl_db += rng.normal(0.0, c.shadow_sigma_db)
    beta = 10.0 ** (-pl_db / 10.0)
    kappa = rician_factor(link.d3d, is_los, c)
    beta_nlos = beta / (kappa + 1.0)
    h_bar = math.sqrt(beta * kappa / (kappa + 1.0)) * steering_vector(link.azimuth, s, spacing)
    cov = spatial_covariance(link.azimuth, beta_nlos, s, math.radians(c.asd_deg), spacing)
    return LinkState(is_los=is_los, beta=float(beta), kappa=float(kappa),
                     h_bar=h_bar, cov=cov)


def build_network(config: ScenarioConfig, rng: np.random.Generator) -> NetworkRealization:
    """One network realization: UE drop, LoS draws, all link states, pilots.

    Draw order from `rng` is fixed (UE drop, then LoS, then shadowing) so a
    seeded generator reproduces the realization exactly.
    """
    c = config.channel
    ap_xyz = place_aps(config.Q, config.side, config.h_ap)
    ue_xyz = drop_ues(config.K, config.side, rng, config.h_ue)
    d2d, d3d, azimuth = link_geometry_grid(ue_xyz, ap_xyz, config.side)

    is_los = rng.random(d2d.shape) < los_probability(d2d, c)
    pl_db = path_loss_db(d3d, is_los, c)
    if c.shadow_sigma_db > 0.0:
        pl_db = pl_db + rng.normal(0.0, c.shadow_sigma_db, size=pl_db.shape)
    beta = 10.0 ** (-pl_db / 10.0)
    kappa = rician_factor(d3d, is_los, c)
    beta_nlos = beta / (kappa + 1.0)

    m = np.arange(config.S)
    phase = 2.0 * np.pi * config.antenna_spacing * m  # (S,)
    steer = np.exp(1j * phase * np.sin(azimuth)[..., None])  # (K, Q, S)
    h_bar = np.sqrt(beta * kappa / (kappa + 1.0))[..., None] * steer

    cov = _covariance_grid(azimuth, beta_nlos, config.S,
                           math.radians(c.asd_deg), config.antenna_spacing)
    cov_factor = _cholesky_stack(cov)
    plan = assign_pilots(config.K, config.tau_p)
    return NetworkRealization(
        config=config, ue_xyz=ue_xyz, ap_xyz=ap_xyz,
        d2d=d2d, d3d=d3d, azimuth=azimuth,
        is_los=is_los, beta=beta, kappa=kappa,
        h_bar=h_bar, cov=cov, cov_factor=cov_factor, plan=plan,
    )


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly symmetric CN(0, var) samples: (x + jy) * sqrt(var/2)."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(var / 2.0)


def sample_channel_batch(net: NetworkRealization, n: int,
                         rng: np.random.Generator) -> np.ndarray:
    """n channel realizations h = h_bar + cov_factor @ e, shape (n, K, Q, S)."""
    k, q, s = net.h_bar.shape
    e = complex_normal(rng, (n, k, q, s))
    et = np.moveaxis(e, 0, -1)                 # (K, Q, S, n)
    colored = np.matmul(net.cov_factor, et)    # stacked gemm per (k, q)
    return np.moveaxis(colored, -1, 0) + net.h_bar


def sample_channel(net: NetworkRealization, rng: np.random.Generator) -> np.ndarray:
    """One channel realization, shape (K, Q, S)."""
    return sample_channel_batch(net, 1, rng)[0]


def dump_channel_fixture(path, h: np.ndarray) -> None:
    """Binary dump of one channel realization for cross-language regression.

    Layout: magic 'DMCH', uint32 version, uint32 K, Q, S (little-endian),
    then row-major (K, Q, S) float64 pairs (real, imag) interleaved.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    if h.ndim != 3:
        raise ValueError(f"expected a (K, Q, S) array, got shape {h.shape}")
    k, q, s = h.shape
    pairs = np.empty(h.shape + (2,), dtype="<f8")
    pairs[..., 0] = h.real
    pairs[..., 1] = h.imag
    with open(path, "wb") as fh:
        fh.write(_FIXTURE_MAGIC)
        fh.write(struct.pack("<IIII", _FIXTURE_VERSION, k, q, s))
        fh.write(pairs.tobytes())


def load_channel_fixture(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FIXTURE_MAGIC:
            raise ValueError(f"not a channel fixture (magic {magic!r})")
        version, k, q, s = struct.unpack("<IIII", fh.read(16))
        if version != _FIXTURE_VERSION:
            raise ValueError(f"unsupported fixture version {version}")
        pairs = np.frombuffer(fh.read(), dtype="<f8").reshape(k, q, s, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex128)
