"""Photon-number-resolving detector models.

A PNR(M) detector reports counts ``0..M-1`` and lumps everything at or above
``M`` into the overflow outcome ``M``. Loss acts as a binomial thinning with
efficiency ``eta``; dark counts add an independent Poisson(``nu``) count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln, logsumexp
from scipy.stats import binom, poisson

from .errors import DimensionError, InsufficientCutoffError, PreconditionError
from .fock import FockDensity, photon_distribution

NORM_TOL = 1e-10


@dataclass(frozen=True)
class PnrModel:
    M: int
    eta: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise PreconditionError(f"resolution M must be an integer >= 1, got {self.M!r}")
        if not 0 < self.eta <= 1:
            raise PreconditionError(f"efficiency must lie in (0, 1], got {self.eta!r}")
        if not self.nu >= 0:
            raise PreconditionError(f"dark count rate must be >= 0, got {self.nu!r}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def ideal(self) -> bool:
        return self.eta == 1 and self.nu == 0


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probabilities of outcomes ``0..M``; the last entry is the overflow bin."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if (p < 0).any():
            raise PreconditionError("negative outcome probability")
        if abs(p.sum() - 1) > NORM_TOL:
            raise PreconditionError(f"outcome probabilities sum to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def M(self) -> int:
        return len(self.probs) - 1

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, n):
        return self.probs[n]


def _binned(head: np.ndarray, overflow: float | None = None) -> OutcomeDistribution:
    head = np.clip(head, 0.0, None)
    if overflow is None:
        overflow = max(0.0, 1.0 - head.sum())
    return OutcomeDistribution(np.append(head, overflow))


def poisson_binned(mean: float, M: int) -> OutcomeDistribution:
    head = poisson.pmf(np.arange(M), mean)
    overflow = float(gammainc(M, mean)) if mean > 0 else 0.0
    return _binned(head, overflow)


def outcome_probs_coherent(det: PnrModel, mu: float) -> OutcomeDistribution:
    """Counts for a coherent state of mean photon number ``mu``."""
    if mu < 0:
        raise PreconditionError("mean photon number must be >= 0")
    return poisson_binned(det.eta * mu + det.nu, det.M)


def count_matrix(det: PnrModel, cutoff: int) -> np.ndarray:
    """``T[n, k]`` = probability of outcome ``n`` given ``k`` photons, ``k <= cutoff``."""
    if cutoff < det.M:
        raise DimensionError(f"cutoff {cutoff} is below the resolution M = {det.M}")
    k = np.arange(cutoff + 1)
    t = np.zeros((det.M + 1, cutoff + 1))
    dark = poisson.pmf(np.arange(det.M), det.nu)
    for n in range(det.M):
        for l in range(n + 1):
            t[n] += dark[l] * binom.pmf(n - l, k, det.eta)
    t[det.M] = 1.0 - t[: det.M].sum(axis=0)
    t[det.M] = np.clip(t[det.M], 0.0, 1.0)
    return t


def povm_matrices(det: PnrModel, cutoff: int) -> list[np.ndarray]:
    """Diagonal POVM elements ``Pi_0..Pi_M`` on photon numbers ``0..cutoff``."""
    return [np.diag(row) for row in count_matrix(det, cutoff)]


def outcome_probs_density(det: PnrModel, rho: FockDensity) -> OutcomeDistribution:
    """``Tr(Pi_n rho)``; truncated mass is credited to the overflow outcome."""
    if rho.cutoff < det.M:
        raise InsufficientCutoffError(
            f"density cutoff {rho.cutoff} is below the resolution M = {det.M}",
            cutoff=rho.cutoff,
        )
    head = count_matrix(det, rho.cutoff)[: det.M] @ photon_distribution(rho)
    return _binned(head)


def displaced_thermal_pmf(mu: float, n_t: float, nmax: int) -> np.ndarray:
    """Photon statistics of ``D(d) rho_th(n_t) D^+(d)`` with ``|d|^2 = mu``.

    Uses the Laguerre law expanded into positive terms,
    ``p(n) = exp(-mu/(1+n_t)) sum_k C(n,k) n_t^(n-k) mu^k / (k! (1+n_t)^(n+k+1))``,
    which stays finite as ``n_t -> 0``.
    """
    n = np.arange(nmax + 1)
    if n_t == 0:
        return poisson.pmf(n, mu)
    if mu == 0:
        return np.exp(n * math.log(n_t) - (n + 1) * math.log1p(n_t))
    out = np.empty(nmax + 1)
    lnt, lmu, l1p = math.log(n_t), math.log(mu), math.log1p(n_t)
    for m in range(nmax + 1):
        k = np.arange(m + 1)
        logs = (gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
                + (m - k) * lnt + k * lmu - gammaln(k + 1) - (m + k + 1) * l1p)
        out[m] = math.exp(logsumexp(logs) - mu / (1 + n_t))
    return out


def outcome_probs_displaced_thermal(det: PnrModel, d: complex, n_t: float) -> OutcomeDistribution:
    """Counts for a displaced thermal state with displacement ``d``.

    Loss maps ``(d, n_t)`` to ``(sqrt(eta) d, eta n_t)``; dark counts are
    convolved afterwards.
    """
    if n_t < 0:
        raise PreconditionError("n_t must be >= 0")
    mu = det.eta * abs(d) ** 2
    if n_t == 0:
        return poisson_binned(mu + det.nu, det.M)
    photons = displaced_thermal_pmf(mu, det.eta * n_t, det.M - 1)
    dark = poisson.pmf(np.arange(det.M), det.nu)
    head = np.convolve(photons, dark)[: det.M]
    return _binned(head)
