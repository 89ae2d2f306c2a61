"""Helstrom bounds and homodyne limits for squeezed and coherent BPSK."""

from __future__ import annotations

import math

from scipy.special import erfc

from . import gaussian as gc
from .channels import DEFAULT_QUAD_ORDER, PhaseDiffusionSpec, rotated_components
from .fock import DEFAULT_TAIL_TOL, helstrom_mixed, mixture_density
from .receiver import SignalSpec

KINDS = ("HB_DSS", "SQL_DSS", "HB_CS", "SQL_CS", "SQL_DSS_PD", "HB_DSS_PD")


def _pure_helstrom(overlap_sq: float) -> float:
    # 1 - sqrt(1 - x) written without cancellation for small x
    return 0.5 * overlap_sq / (1 + math.sqrt(1 - overlap_sq))


def hb_dss(N: float, beta: float | None = None) -> float:
    s = SignalSpec(N, beta)
    return _pure_helstrom(math.exp(-4 * (s.alpha * math.exp(s.r)) ** 2))


def sql_dss(N: float, beta: float | None = None) -> float:
    s = SignalSpec(N, beta)
    return 0.5 * float(erfc(math.sqrt(2) * s.alpha * math.exp(s.r)))


def hb_cs(N: float) -> float:
    if N < 0:
        raise ValueError("N must be >= 0")
    return _pure_helstrom(math.exp(-4 * N))


def sql_cs(N: float) -> float:
    if N < 0:
        raise ValueError("N must be >= 0")
    return 0.5 * float(erfc(math.sqrt(2 * N)))


def homodyne_error(state0: gc.GaussianState) -> float:
    """Probability that an x measurement of ``state0`` lands on ``x > 0``."""
    var = state0.cov[0, 0]
    return 0.5 * float(erfc(-state0.mean[0] / math.sqrt(2 * var)))


def sql_dss_phase_diffused(N: float, sigma: float, quad_order: int = DEFAULT_QUAD_ORDER,
                           beta: float | None = None) -> float:
    """Homodyne error averaged over the phase-diffusion angle."""
    spec = PhaseDiffusionSpec(sigma, quad_order)
    s = SignalSpec(N, beta)
    return float(sum(w * homodyne_error(g) for w, g in rotated_components(s.state(0), spec)))


def hb_dss_phase_diffused(N: float, sigma: float, cutoff: int | None = None,
                          quad_order: int = DEFAULT_QUAD_ORDER, beta: float | None = None,
                          p0: float = 0.5, p1: float = 0.5,
                          tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    spec = PhaseDiffusionSpec(sigma, quad_order)
    s = SignalSpec(N, beta, p0, p1)
    comps = [rotated_components(s.state(i), spec) for i in (0, 1)]
    if cutoff is None:
        # both densities must share one cutoff; size it on the larger one
        cutoff = max(mixture_density(c, None, tail_tol).cutoff for c in comps)
    rho0, rho1 = (mixture_density(c, cutoff, tail_tol) for c in comps)
    return helstrom_mixed(rho0, rho1, p0, p1)


def benchmark(kind: str, N: float, beta: float | None = None, sigma: float = 0.0,
              quad_order: int = DEFAULT_QUAD_ORDER) -> float:
    kind = kind.upper()
    if kind == "HB_DSS":
        return hb_dss(N, beta)
    if kind == "SQL_DSS":
        return sql_dss(N, beta)
    if kind == "HB_CS":
        return hb_cs(N)
    if kind == "SQL_CS":
        return sql_cs(N)
    if kind == "SQL_DSS_PD":
        return sql_dss_phase_diffused(N, sigma, quad_order, beta)
    if kind == "HB_DSS_PD":
        return hb_dss_phase_diffused(N, sigma, quad_order=quad_order, beta=beta)
    raise ValueError(f"unknown benchmark {kind!r}; expected one of {', '.join(KINDS)}")


def ratio_db(reference: float, p_err: float) -> float:
    """``10 log10(reference / p_err)``; positive when ``p_err`` is smaller."""
    if reference <= 0 or p_err <= 0:
        return math.inf if p_err <= 0 < reference else math.nan
    return 10 * math.log10(reference / p_err)
