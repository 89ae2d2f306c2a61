"""Phase diffusion and receiver thermal noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss

from . import gaussian as gc
from .errors import InsufficientCutoffError, PreconditionError
from .fock import DEFAULT_TAIL_TOL, FockDensity, displacement_matrix, mixture_density

DEFAULT_QUAD_ORDER = 41


@dataclass(frozen=True)
class PhaseDiffusionSpec:
    """Gaussian random rotation with standard deviation ``sigma`` (radians)."""

    sigma: float
    quad_order: int = DEFAULT_QUAD_ORDER

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise PreconditionError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if int(self.quad_order) != self.quad_order or self.quad_order < 1 or self.quad_order % 2 == 0:
            raise PreconditionError(f"quad_order must be a positive odd integer, got {self.quad_order!r}")

    def nodes(self):
        """Angles and normalized weights of the Gauss-Hermite rule."""
        t, w = hermgauss(self.quad_order)
        return math.sqrt(2.0) * self.sigma * t, w / math.sqrt(math.pi)


@dataclass(frozen=True)
class ThermalSpec:
    n_t: float

    def __post_init__(self):
        if not (math.isfinite(self.n_t) and self.n_t >= 0):
            raise PreconditionError(f"n_t must be finite and >= 0, got {self.n_t!r}")


@dataclass(frozen=True)
class DisplacedThermal:
    """``D(d) rho_th(n_t) D^+(d)``."""

    d: complex
    n_t: float

    @property
    def mean_photon(self) -> float:
        return abs(self.d) ** 2 + self.n_t


def rotated_components(state: gc.GaussianState, spec: PhaseDiffusionSpec):
    """``((w_k, R(phi_k) state), ...)`` on the quadrature nodes."""
    phis, ws = spec.nodes()
    return tuple((float(w), gc.apply_unitary(state, gc.rotation(phi))) for phi, w in zip(phis, ws))


def phase_diffuse_pure(alpha: complex, r: float, spec: PhaseDiffusionSpec,
                       cutoff: int | None = None,
                       tail_tol: float = DEFAULT_TAIL_TOL) -> FockDensity:
    """Phase-diffused ``D(alpha) S(r) |0>`` as a mixture of rotated copies."""
    comps = rotated_components(gc.make_dss(alpha, r), spec)
    return mixture_density(comps, cutoff, tail_tol)


def thermal_contaminate_coherent(d: complex, spec: ThermalSpec) -> DisplacedThermal:
    return DisplacedThermal(complex(d), float(spec.n_t))


def thermal_contaminate_density(rho: FockDensity, spec: ThermalSpec, quad_order: int = 64,
                                cutoff: int | None = None, trace_tol: float = 1e-8,
                                chunk: int = 256) -> FockDensity:
    """Average ``D(lam) rho D^+(lam)`` over the thermal Gaussian by 2D Gauss-Hermite.

    The output lives on ``0..cutoff`` (default: the input cutoff).
    """
    if cutoff is None:
        cutoff = rho.cutoff
    if spec.n_t == 0:
        out = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        k = min(cutoff, rho.cutoff) + 1
        out[:k, :k] = rho.matrix[:k, :k]
        return _checked(out, rho, trace_tol)
    t, w = hermgauss(quad_order)
    scale = math.sqrt(spec.n_t)
    lam = (scale * (t[:, None] + 1j * t[None, :])).ravel()
    wts = (w[:, None] * w[None, :]).ravel() / math.pi
    keep = wts > 1e-300
    lam, wts = lam[keep], wts[keep]
    out = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for s in range(0, len(lam), chunk):
        d = displacement_matrix(lam[s:s + chunk], cutoff + 1, rho.cutoff + 1)
        out += np.einsum("j,jmk,kl,jnl->mn", wts[s:s + chunk], d, rho.matrix, d.conj(), optimize=True)
    return _checked((out + out.conj().T) / 2, rho, trace_tol)


def _checked(out, rho, trace_tol):
    loss = rho.trace - np.trace(out).real
    if loss >= trace_tol:
        raise InsufficientCutoffError(
            f"thermal channel output loses trace {loss!r}; raise the cutoff",
            achieved_norm=float(np.trace(out).real), cutoff=out.shape[0] - 1,
        )
    return FockDensity(out, tail_tol=max(rho.tail_tol, trace_tol))
