"""The displacement-squeeze receiver.

The receiver applies ``U = S(-r) D(alpha)`` (displacement first, then a
squeeze of the transmitter's strength about the p axis), counts photons with
a PNR(M) detector and decides with a MAP rule. For the ideal BPSK pair
``|-alpha, r>, |+alpha, r>`` this maps the inputs to ``|0>`` and
``|gamma>`` with ``gamma = 2 alpha e^r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import gaussian as gc
from .channels import PhaseDiffusionSpec, ThermalSpec, rotated_components, thermal_contaminate_density
from .detection import (
    OutcomeDistribution,
    PnrModel,
    outcome_probs_coherent,
    outcome_probs_density,
    outcome_probs_displaced_thermal,
)
from .errors import DimensionError, PreconditionError
from .fock import DEFAULT_TAIL_TOL, FockDensity, auto_cutoff, mixture_density


def beta_opt(N: float) -> float:
    """Squeezing fraction minimizing the Helstrom bound at energy ``N``."""
    if N < 0:
        raise PreconditionError("N must be >= 0")
    return N / (2 * N + 1)


@dataclass(frozen=True)
class SignalSpec:
    """BPSK displaced squeezed vacuum ensemble of mean photon number ``N``.

    ``beta`` is the share of ``N`` held in squeezing; ``None`` selects
    :func:`beta_opt`.
    """

    N: float
    beta: float | None = None
    p0: float = 0.5
    p1: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.N) and self.N >= 0):
            raise PreconditionError(f"N must be finite and >= 0, got {self.N!r}")
        if self.beta is None:
            object.__setattr__(self, "beta", beta_opt(self.N))
        if not 0 <= self.beta <= 1:
            raise PreconditionError(f"beta must lie in [0, 1], got {self.beta!r}")
        if self.p0 < 0 or self.p1 < 0 or abs(self.p0 + self.p1 - 1) > 1e-12:
            raise PreconditionError("priors must be non-negative and sum to 1")

    @property
    def alpha(self) -> float:
        return math.sqrt(self.N * (1 - self.beta))

    @property
    def r(self) -> float:
        return math.asinh(math.sqrt(self.N * self.beta))

    @property
    def gamma(self) -> float:
        # alpha e^r = sqrt(N(1-b)) (sqrt(1+Nb) + sqrt(Nb))
        nb = self.N * self.beta
        return 2 * self.alpha * (math.sqrt(1 + nb) + math.sqrt(nb))

    def state(self, symbol: int) -> gc.GaussianState:
        sign = 1 if symbol else -1
        return gc.make_dss(sign * self.alpha, self.r)

    def receiver_unitaries(self):
        return [gc.displacement(self.alpha), gc.squeeze(self.r, math.pi / 2)]


@dataclass(frozen=True)
class DecisionRule:
    """``threshold``: decide 1 iff ``n >= threshold``. ``map_regions``: decide 1 iff ``n in regions``."""

    kind: str
    threshold: int | None = None
    regions: frozenset = frozenset()

    @classmethod
    def at_threshold(cls, n_th: int) -> "DecisionRule":
        return cls("threshold", threshold=int(n_th))

    @classmethod
    def from_regions(cls, regions) -> "DecisionRule":
        return cls("map_regions", regions=frozenset(int(n) for n in regions))

    def decides_one(self, M: int) -> np.ndarray:
        n = np.arange(M + 1)
        if self.kind == "threshold":
            return n >= self.threshold
        return np.isin(n, sorted(self.regions))


class Decision(NamedTuple):
    p_err: float
    n_th: int


def _probs(q):
    return q.probs if isinstance(q, OutcomeDistribution) else np.asarray(q, dtype=float)


def error_from_distributions(q0, q1, rule: DecisionRule, p0: float = 0.5, p1: float = 0.5) -> float:
    a, b = _probs(q0), _probs(q1)
    if len(a) != len(b):
        raise DimensionError(f"outcome lengths differ: {len(a)} vs {len(b)}")
    one = rule.decides_one(len(a) - 1)
    err = p0 * a[one].sum() + p1 * b[~one].sum()
    return float(min(max(err, 0.0), 1.0))


def threshold_errors(q0, q1, p0: float = 0.5, p1: float = 0.5) -> np.ndarray:
    """Error of every threshold ``0..M+1``."""
    a, b = _probs(q0), _probs(q1)
    if len(a) != len(b):
        raise DimensionError(f"outcome lengths differ: {len(a)} vs {len(b)}")
    tail0 = np.append(np.cumsum(a[::-1])[::-1], 0.0)
    head1 = np.concatenate(([0.0], np.cumsum(b)))
    return p0 * tail0 + p1 * head1


def optimal_threshold(q0, q1, p0: float = 0.5, p1: float = 0.5) -> Decision:
    errs = threshold_errors(q0, q1, p0, p1)
    n = int(np.argmin(errs))
    return Decision(float(min(max(errs[n], 0.0), 1.0)), n)


def optimal_map_rule(q0, q1, p0: float = 0.5, p1: float = 0.5):
    """Per-outcome MAP partition; returns ``(rule, p_err)``."""
    a, b = _probs(q0), _probs(q1)
    if len(a) != len(b):
        raise DimensionError(f"outcome lengths differ: {len(a)} vs {len(b)}")
    regions = np.flatnonzero(p1 * b > p0 * a)
    rule = DecisionRule.from_regions(regions)
    return rule, error_from_distributions(a, b, rule, p0, p1)


def ceiling_threshold(mu: float, nu: float, M: int) -> int:
    """MAP threshold for Poisson(nu) vs Poisson(mu + nu) in closed form."""
    if nu == 0:
        return 1 if mu > 0 else 0
    return min(math.ceil(mu / (math.log(mu + nu) - math.log(nu))), M)


def dsr_error_ideal(N: float) -> float:
    if N < 0:
        raise PreconditionError("N must be >= 0")
    return 0.5 * math.exp(-4 * N * (N + 1))


def dsr_error_eta(N: float, eta: float) -> float:
    if not 0 < eta <= 1:
        raise PreconditionError("eta must lie in (0, 1]")
    return 0.5 * math.exp(-4 * N * (N + 1) * eta)


def pnr_distributions(signal: SignalSpec, det: PnrModel):
    return outcome_probs_coherent(det, 0.0), outcome_probs_coherent(det, signal.gamma ** 2)


def dsr_error_pnr(signal: SignalSpec, det: PnrModel) -> Decision:
    q0, q1 = pnr_distributions(signal, det)
    return optimal_threshold(q0, q1, signal.p0, signal.p1)


def dsr_fock_pipeline(signal: SignalSpec, det: PnrModel, tail_tol: float = DEFAULT_TAIL_TOL):
    """Ideal inputs pushed through the receiver in the Fock basis.

    Returns ``(zeta0, zeta1, q0, q1)``.
    """
    us = signal.receiver_unitaries()
    zetas = [mixture_density([(1.0, gc.apply_unitaries(signal.state(i), us))], None, tail_tol)
             for i in (0, 1)]
    qs = [outcome_probs_density(det, z) for z in zetas]
    return zetas[0], zetas[1], qs[0], qs[1]


def phase_diffusion_states(signal: SignalSpec, pd: PhaseDiffusionSpec,
                           tail_tol: float = DEFAULT_TAIL_TOL):
    """Post-receiver densities ``zeta_0, zeta_1`` for phase-diffused inputs.

    Each quadrature node is rotated and sent through the receiver in the
    Gaussian picture, then converted to photon numbers.
    """
    us = signal.receiver_unitaries()
    out = []
    for i in (0, 1):
        comps = [(w, gc.apply_unitaries(g, us)) for w, g in rotated_components(signal.state(i), pd)]
        out.append(mixture_density(comps, None, tail_tol))
    return tuple(out)


def phase_diffusion_distributions(signal: SignalSpec, det: PnrModel, pd: PhaseDiffusionSpec,
                                  tail_tol: float = DEFAULT_TAIL_TOL):
    z0, z1 = phase_diffusion_states(signal, pd, tail_tol)
    return outcome_probs_density(det, z0), outcome_probs_density(det, z1)


def dsr_error_phase_diffusion(signal: SignalSpec, det: PnrModel, pd: PhaseDiffusionSpec,
                              tail_tol: float = DEFAULT_TAIL_TOL) -> Decision:
    q0, q1 = phase_diffusion_distributions(signal, det, pd, tail_tol)
    return optimal_threshold(q0, q1, signal.p0, signal.p1)


def thermal_distributions(signal: SignalSpec, det: PnrModel, th: ThermalSpec):
    q0 = outcome_probs_displaced_thermal(det, 0.0, th.n_t)
    q1 = outcome_probs_displaced_thermal(det, signal.gamma, th.n_t)
    return q0, q1


def dsr_error_thermal(signal: SignalSpec, det: PnrModel, th: ThermalSpec) -> Decision:
    q0, q1 = thermal_distributions(signal, det, th)
    return optimal_threshold(q0, q1, signal.p0, signal.p1)


def combined_noise_states(signal: SignalSpec, pd: PhaseDiffusionSpec, th: ThermalSpec,
                          tail_tol: float = DEFAULT_TAIL_TOL, quad_order: int = 32):
    """Phase diffusion on the channel followed by thermal noise at the detector.

    Not studied in the source model; the thermal step uses 2D quadrature.
    """
    zetas = phase_diffusion_states(signal, pd, tail_tol)
    out = []
    for z in zetas:
        mu = max(g.mean_photon for _, g in z.components)
        cutoff = max(z.cutoff, auto_cutoff(mu + 8 * th.n_t, tail_tol))
        padded = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        padded[: z.cutoff + 1, : z.cutoff + 1] = z.matrix
        out.append(thermal_contaminate_density(FockDensity(padded, tail_tol), th, quad_order))
    return tuple(out)


def dsr_error_combined(signal: SignalSpec, det: PnrModel, pd: PhaseDiffusionSpec, th: ThermalSpec,
                       tail_tol: float = DEFAULT_TAIL_TOL) -> Decision:
    z0, z1 = combined_noise_states(signal, pd, th, tail_tol)
    q0, q1 = outcome_probs_density(det, z0), outcome_probs_density(det, z1)
    return optimal_threshold(q0, q1, signal.p0, signal.p1)


def plateau_onset(Ns, p_errs, n_ths, M: int, slope_tol: float = 1e-12):
    """First grid index where the threshold sits at ``M`` and the error stops falling.

    Saturation means ``dP/dN`` changes sign or drops below ``slope_tol``
    in magnitude. Returns ``None`` when the curve never saturates.
    """
    Ns, p, nth = (np.asarray(x, dtype=float) for x in (Ns, p_errs, n_ths))
    slope = np.diff(p) / np.diff(Ns)
    for i in range(len(slope)):
        if nth[i] != M:
            continue
        flat = abs(slope[i]) < slope_tol or slope[i] > 0
        if flat or (i > 0 and slope[i] * slope[i - 1] < 0):
            return i
    return None
