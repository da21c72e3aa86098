"""Pilot assignment, pilot reception, and LMMSE channel estimation.

With K > tau_p the pilots repeat cyclically, so UEs sharing a pilot contaminate
each other's estimates. Estimation applies the zero-mean LMMSE form
h_hat = sqrt(p) R Psi^-1 y to every link; Psi collects the covariances of the
co-pilot UEs plus noise and is always positive definite.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.linalg import solve as hermitian_solve

if TYPE_CHECKING:
    from .channel import NetworkRealization


@dataclass(frozen=True)
class PilotPlan:
    tau_p: int
    indices: np.ndarray             # (K,) 1-based pilot index n_k
    cohorts: tuple                  # tau_p tuples of 0-based UE indices sharing a pilot

    def cohort_matrix(self) -> np.ndarray:
        """(tau_p, K) 0/1 matrix T with T[t, k] = 1 iff UE k sends pilot t+1."""
        t = np.zeros((self.tau_p, len(self.indices)))
        t[self.indices - 1, np.arange(len(self.indices))] = 1.0
        return t


@dataclass(frozen=True)
class EstimationOperators:
    """Per-network precomputation: Psi matrices and LMMSE gains.

    psi:  (Q, tau_p, S, S), Psi of each pilot slot at each AP
    gain: (K, Q, S, S), sqrt(p) R Psi^-1 so that h_hat = gain @ y
    """

    psi: np.ndarray
    gain: np.ndarray


@dataclass(frozen=True)
class EstimationOutput:
    h_hat: np.ndarray  # (K, Q, S) LMMSE estimates
    psi: np.ndarray    # (Q, tau_p, S, S)


def assign_pilots(k: int, tau_p: int) -> PilotPlan:
    """Cyclic pilot assignment n_k = k - floor((k-1)/tau_p) * tau_p (1-based k).

    Cohort sizes differ by at most one (floor/ceil of K/tau_p).
    """
    if k < 1 or tau_p < 1:
        raise ValueError(f"need K >= 1 and tau_p >= 1, got K={k}, tau_p={tau_p}")
    ks = np.arange(1, k + 1)
    indices = ks - ((ks - 1) // tau_p) * tau_p
    cohorts = tuple(tuple(np.nonzero(indices == t)[0]) for t in range(1, tau_p + 1))
    return PilotPlan(tau_p=tau_p, indices=indices, cohorts=cohorts)


def receive_pilots(chan: np.ndarray, plan: PilotPlan, p: float, sigma2: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Received pilot signal per AP and slot, shape (Q, tau_p, S).

    y_{q,t} = sqrt(p) * sum_{i in cohort t} h_iq + z,  z ~ CN(0, sigma2 I_S).
    Slots with no assigned UE carry pure noise.
    """
    return _receive_pilots_batch(chan[None], plan, p, sigma2, rng)[0]


def _receive_pilots_batch(chan: np.ndarray, plan: PilotPlan, p: float,
                          sigma2: float, rng: np.random.Generator) -> np.ndarray:
    from .channel import complex_normal

    n, k, q, s = chan.shape
    t = plan.cohort_matrix()
    signal = np.sqrt(p) * np.einsum("tk,nkqs->nqts", t, chan)
    noise = complex_normal(rng, (n, q, plan.tau_p, s), var=sigma2)
    return signal + noise


def psi_matrix(covs: Sequence[np.ndarray], p: float, sigma2: float,
               s: int | None = None) -> np.ndarray:
    """Psi = p * sum of cohort covariances + sigma2 * I_S (positive definite).

    An empty cohort needs `s` to size the identity.
    """
    if len(covs) == 0:
        if s is None:
            raise ValueError("empty cohort: pass s to size the identity")
        return sigma2 * np.eye(s, dtype=complex)
    acc = p * np.sum(np.asarray(covs), axis=0)
    return acc + sigma2 * np.eye(acc.shape[-1], dtype=complex)


def lmmse_estimate(y: np.ndarray, cov: np.ndarray, psi: np.ndarray,
                   p: float) -> np.ndarray:
    """h_hat = sqrt(p) R Psi^-1 y via a Hermitian LDL^H solve, no explicit inverse."""
    return np.sqrt(p) * (cov @ hermitian_solve(psi, y, assume_a="her"))


def lmmse_gain(cov: np.ndarray, psi: np.ndarray, p: float) -> np.ndarray:
    """sqrt(p) R Psi^-1 as a matrix, for repeated application to observations."""
    # R Psi^-1 = (Psi^-1 R)^H for Hermitian R and Psi.
    return np.sqrt(p) * hermitian_solve(psi, cov, assume_a="her").conj().T


def estimation_operators(net: "NetworkRealization") -> EstimationOperators:
    """Precompute Psi and the LMMSE gains of every link of a network realization.

    Uses a batched LU solve on the (always positive definite) Psi stack; agrees
    with lmmse_gain to numerical precision.
    """
    cfg = net.config
    p_eff = cfg.p_eff
    t = net.plan.cohort_matrix()
    psi = p_eff * np.einsum("tk,kqab->qtab", t, net.cov)
    psi += cfg.sigma2 * np.eye(cfg.S, dtype=complex)
    idx0 = net.plan.indices - 1
    psi_per_ue = psi[:, idx0].swapaxes(0, 1)          # (K, Q, S, S)
    solved = np.linalg.solve(psi_per_ue, net.cov)     # Psi^-1 R per link
    gain = np.sqrt(p_eff) * solved.conj().swapaxes(-1, -2)
    return EstimationOperators(psi=psi, gain=gain)


def estimate_channels(y_pilot: np.ndarray, net: "NetworkRealization",
                      ops: EstimationOperators | None = None) -> EstimationOutput:
    """LMMSE estimates of all K*Q links from one pilot observation (Q, tau_p, S)."""
    if ops is None:
        ops = estimation_operators(net)
    h_hat = _estimate_batch(y_pilot[None], net, ops)[0]
    return EstimationOutput(h_hat=h_hat, psi=ops.psi)


def _estimate_batch(y_pilot: np.ndarray, net: "NetworkRealization",
                    ops: EstimationOperators) -> np.ndarray:
    """Batched h_hat = gain @ y over (n, K, Q, S) from pilot slabs (n, Q, tau_p, S)."""
    idx0 = net.plan.indices - 1
    y_per_ue = y_pilot[:, :, idx0].swapaxes(1, 2)     # (n, K, Q, S)
    yt = np.moveaxis(y_per_ue, 0, -1)                 # (K, Q, S, n)
    est = np.matmul(ops.gain, yt)                     # stacked gemm per (k, q)
    return np.moveaxis(est, -1, 0)
