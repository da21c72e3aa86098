"""MRT precoding, power normalization, and hardening-bound SE statistics.

The achievable SE uses the use-and-then-forget (UatF) bound: only the average
of the precoded channel acts as the desired signal, everything else counts as
interference. The bound needs

    DS_kq     = E{ sqrt(mu_q) h_kq^H w_kq }
    INT[k][i] = E{ | sum_q sqrt(mu_q) h_kq^H w_iq |^2 }

conditioned on one network realization. Both expectations run over channel
realizations and pilot noise. mu_q is estimated on a first pass of draws and
DS/INT on a second, independent pass, which keeps the normalization constant
uncorrelated with the statistics it scales.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import NetworkRealization, sample_channel_batch
from .pilots import EstimationOperators, _estimate_batch, _receive_pilots_batch, estimation_operators

# Channel realizations processed per vectorized block. Fixed constant: results
# must never depend on worker count or available memory.
_BATCH = 256


class StatisticalInconsistencyError(RuntimeError):
    """SINR denominator fell below the hard floor; statistics are unusable."""


@dataclass(frozen=True)
class UatfStats:
    """Monte Carlo UatF statistics of one network realization."""

    ds: np.ndarray        # (K, Q) complex, sqrt(mu_q) E{h^H w}
    interf: np.ndarray    # (K, K) real, INT[k][i]
    mu: np.ndarray        # (Q,) normalization constants (0 marks a silent AP)
    n_samples: int        # draws per pass
    degenerate_aps: tuple = ()


def mrt_precoders(h_hat: np.ndarray) -> np.ndarray:
    """Maximum ratio transmission: w_kq = h_hat_kq (element-wise copy)."""
    return np.array(h_hat, copy=True)


def normalization(w_samples: np.ndarray) -> np.ndarray:
    """Per-AP normalization from precoder samples of shape (n, K, Q, S).

    1/mu_q estimates sum_i E{||w_iq||^2}; an AP whose precoders are all zero
    gets mu_q = 0 and transmits nothing.
    """
    if w_samples.ndim != 4:
        raise ValueError(f"expected (n, K, Q, S) samples, got shape {w_samples.shape}")
    power = (w_samples.real**2 + w_samples.imag**2).sum(axis=(1, 3)).mean(axis=0)
    with np.errstate(divide="ignore"):
        return np.where(power > 0.0, 1.0 / np.where(power > 0.0, power, 1.0), 0.0)


def _draw_precoders(net: NetworkRealization, ops: EstimationOperators | None,
                    n: int, rng: np.random.Generator):
    """One batch of channels and matched precoders: (h, w), each (n, K, Q, S)."""
    cfg = net.config
    h = sample_channel_batch(net, n, rng)
    if ops is None:  # perfect CSI hook: precode on the true channel
        return h, h
    y = _receive_pilots_batch(h, net.plan, cfg.p_eff, cfg.sigma2, rng)
    return h, _estimate_batch(y, net, ops)


def estimate_uatf_stats(net: NetworkRealization, n_realizations: int,
                        seed) -> UatfStats:
    """Two-pass UatF statistics over 2 * n_realizations independent draws.

    `seed` is an int, a SeedSequence (two child streams are spawned), or an
    explicit (SeedSequence, SeedSequence) pair for the mu and DS/INT passes.
    """
    if n_realizations < 1:
        raise ValueError(
            f"insufficient realizations: need at least 1 per pass, got {n_realizations}"
        )
    cfg = net.config
    if isinstance(seed, tuple):
        seq_mu, seq_ds = seed
    else:
        seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        seq_mu, seq_ds = seq.spawn(2)

    ops = None if cfg.perfect_csi else estimation_operators(net)
    k, q = cfg.K, cfg.Q

    # Pass 1: sum_i E{||w_iq||^2} per AP.
    rng = np.random.default_rng(seq_mu)
    power = np.zeros(q)
    done = 0
    while done < n_realizations:
        nb = min(_BATCH, n_realizations - done)
        _, w = _draw_precoders(net, ops, nb, rng)
        power += (w.real**2 + w.imag**2).sum(axis=(0, 1, 3))
        done += nb
    mean_power = power / n_realizations
    with np.errstate(divide="ignore"):
        mu = np.where(mean_power > 0.0, 1.0 / np.where(mean_power > 0.0, mean_power, 1.0), 0.0)
    degenerate = tuple(int(i) for i in np.nonzero(mean_power == 0.0)[0])

    # Pass 2: DS and INT on independent draws, mu held fixed.
    rng = np.random.default_rng(seq_ds)
    sqrt_mu = np.sqrt(mu)
    ds = np.zeros((k, q), dtype=complex)
    interf = np.zeros((k, k))
    done = 0
    while done < n_realizations:
        nb = min(_BATCH, n_realizations - done)
        h, w = _draw_precoders(net, ops, nb, rng)
        hc = h.conj()
        ds += np.einsum("nkqs,nkqs->kq", hc, w)
        g = np.einsum("nkqs,niqs->nki", hc * sqrt_mu[None, None, :, None], w,
                      optimize=True)
        interf += (g.real**2 + g.imag**2).sum(axis=0)
        done += nb
    ds = sqrt_mu[None, :] * ds / n_realizations
    interf /= n_realizations
    return UatfStats(ds=ds, interf=interf, mu=mu, n_samples=n_realizations,
                     degenerate_aps=degenerate)


def uatf_sinr(stats: UatfStats, p_d: float, sigma2: float,
              interference_power: float | None = None) -> np.ndarray:
    """Per-user SINR from UatF statistics.

    gamma_k = p_d |sum_q DS_kq|^2 /
              (w_int * sum_i INT[k][i] - p_d |sum_q DS_kq|^2 + sigma2)

    w_int is p_d unless `interference_power` overrides it. The denominator is
    clamped to sigma2/2 (warning) when Monte Carlo noise pushes it low and a
    StatisticalInconsistencyError names the offending users below sigma2*1e-3.
    """
    w_int = p_d if interference_power is None else interference_power
    desired = p_d * np.abs(stats.ds.sum(axis=1)) ** 2
    den = w_int * stats.interf.sum(axis=1) - desired + sigma2
    hard_floor = 1e-3 * sigma2
    bad = np.nonzero(den < hard_floor)[0]
    if bad.size:
        worst = int(bad[np.argmin(den[bad])])
        raise StatisticalInconsistencyError(
            f"SINR denominator of user {worst} is {den[worst]:.3e} "
            f"(< sigma2*1e-3 = {hard_floor:.3e}); users affected: {bad.tolist()}"
        )
    low = den < 0.5 * sigma2
    if np.any(low):
        warnings.warn(
            f"clamping SINR denominator to sigma2/2 for users {np.nonzero(low)[0].tolist()}",
            RuntimeWarning, stacklevel=2,
        )
        den = np.maximum(den, 0.5 * sigma2)
    return desired / den


def se_per_user(gamma: np.ndarray, tau_c: int, tau_d: int) -> np.ndarray:
    """SE_k = (tau_d / tau_c) * log2(1 + gamma_k) [bit/s/Hz]."""
    return (tau_d / tau_c) * np.log2(1.0 + np.asarray(gamma, dtype=float))
