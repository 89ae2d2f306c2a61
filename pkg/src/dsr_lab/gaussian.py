"""Single-mode pure Gaussian states in the (x, p) quadrature picture.

Conventions: vacuum variance is 1/2 and a coherent amplitude ``a`` sits at
``(sqrt(2) Re a, sqrt(2) Im a)``. The squeeze operator is
``S(xi) = exp((xi* a^2 - xi a^+^2) / 2)``, so ``S(r)`` with real ``r > 0``
squeezes the x quadrature. A squeeze of magnitude ``r`` about axis ``theta``
means ``S(r exp(2i theta))``. ``rotation(phi)`` is ``exp(-i phi a^+ a)``,
which maps a coherent amplitude ``a`` to ``a exp(-i phi)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, PreconditionError

SQRT2 = math.sqrt(2.0)
PURITY_TOL = 1e-9


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """Mean vector ``(d_x, d_p)`` and 2x2 covariance ``V``."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _readonly(self.mean).reshape(2)
        cov = _readonly(self.cov).reshape(2, 2)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def det(self) -> float:
        c = self.cov
        return float(c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0])

    @property
    def is_pure(self) -> bool:
        return abs(self.det - 0.25) <= PURITY_TOL

    @property
    def mean_photon(self) -> float:
        """``<a^+ a> = (tr V - 1)/2 + |d|^2 / 2``."""
        n = (np.trace(self.cov) - 1.0) / 2.0 + self.mean @ self.mean / 2.0
        return max(float(n), 0.0)  # rounding can leave vacuum at -1e-17

    def allclose(self, other: "GaussianState", atol: float = 1e-10) -> bool:
        return bool(
            np.allclose(self.mean, other.mean, rtol=0, atol=atol)
            and np.allclose(self.cov, other.cov, rtol=0, atol=atol)
        )


@dataclass(frozen=True)
class GaussianUnitary:
    """One of ``displacement``, ``squeeze`` or ``rotation``.

    Use the module-level constructors rather than building this directly.
    ``amount`` is the complex displacement, the squeeze magnitude, or the
    rotation angle; ``axis`` is only meaningful for squeezes.
    """

    kind: str
    amount: complex = 0.0
    axis: float = 0.0

    def __post_init__(self):
        if self.kind not in ("displacement", "squeeze", "rotation"):
            raise ValueError(f"unknown unitary kind {self.kind!r}")
        if not cmath.isfinite(complex(self.amount)) or not math.isfinite(self.axis):
            raise ValueError("unitary parameters must be finite")
        if self.kind == "squeeze":
            r, axis = float(np.real(self.amount)), float(self.axis)
            # S(-r) about theta equals S(r) about theta + pi/2
            if r < 0:
                r, axis = -r, axis + math.pi / 2
            object.__setattr__(self, "amount", r)
            object.__setattr__(self, "axis", axis)
        elif self.kind == "rotation":
            object.__setattr__(self, "amount", float(np.real(self.amount)))

    def symplectic(self) -> np.ndarray:
        if self.kind == "displacement":
            return np.eye(2)
        if self.kind == "rotation":
            return _rot(-self.amount)
        rot = _rot(self.axis)
        return rot @ np.diag([math.exp(-self.amount), math.exp(self.amount)]) @ rot.T

    @property
    def shift(self) -> np.ndarray:
        if self.kind != "displacement":
            return np.zeros(2)
        b = complex(self.amount)
        return SQRT2 * np.array([b.real, b.imag])


def displacement(beta: complex) -> GaussianUnitary:
    return GaussianUnitary("displacement", complex(beta))


def squeeze(r: float, axis: float = 0.0) -> GaussianUnitary:
    """``S(r exp(2i axis))``; ``squeeze(r, pi/2)`` is the same as ``squeeze(-r)``."""
    return GaussianUnitary("squeeze", float(r), float(axis))


def rotation(phi: float) -> GaussianUnitary:
    return GaussianUnitary("rotation", float(phi))


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class PureNormalForm:
    """Parameters of ``D(displacement) S(squeeze) |0>`` (global phase dropped)."""

    displacement: complex
    squeeze: complex

    @property
    def r(self) -> float:
        return abs(self.squeeze)

    @property
    def theta(self) -> float:
        """Squeeze axis angle, half the phase of ``squeeze``."""
        return cmath.phase(self.squeeze) / 2 if self.squeeze != 0 else 0.0

    def to_state(self) -> GaussianState:
        return from_normal_form(self)


def vacuum() -> GaussianState:
    return GaussianState(np.zeros(2), np.eye(2) / 2)


def make_dss(alpha: complex, r: float) -> GaussianState:
    """Displaced squeezed vacuum ``D(alpha) S(r) |0>``."""
    a = complex(alpha)
    mean = SQRT2 * np.array([a.real, a.imag])
    cov = np.diag([math.exp(-2 * r) / 2, math.exp(2 * r) / 2])
    return GaussianState(mean, cov)


def from_normal_form(nf: PureNormalForm) -> GaussianState:
    state = apply_unitary(vacuum(), squeeze(nf.r, nf.theta))
    return apply_unitary(state, displacement(nf.displacement))


def apply_unitary(state: GaussianState, u: GaussianUnitary) -> GaussianState:
    if u.kind == "displacement":
        return GaussianState(state.mean + u.shift, state.cov)
    s = u.symplectic()
    cov = s @ state.cov @ s.T
    return GaussianState(s @ state.mean, (cov + cov.T) / 2)


def apply_unitaries(state: GaussianState, us) -> GaussianState:
    """Apply ``us`` in order; the first element acts first."""
    for u in us:
        state = apply_unitary(state, u)
    return state


def wigner(state: GaussianState, x, p):
    det = state.det
    if not det > 0:
        raise InvalidStateError(f"covariance is singular (det = {det})")
    inv = np.linalg.inv(state.cov)
    dx = np.asarray(x, dtype=float) - state.mean[0]
    dp = np.asarray(p, dtype=float) - state.mean[1]
    q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dp + inv[1, 1] * dp * dp
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(det))


def homodyne_x_pdf(state: GaussianState, x):
    """Density of an ideal x-quadrature measurement."""
    var = state.cov[0, 0]
    dx = np.asarray(x, dtype=float) - state.mean[0]
    return np.exp(-dx * dx / (2 * var)) / math.sqrt(2 * math.pi * var)


def _require_pure(state, name):
    if not state.is_pure:
        raise PreconditionError(f"{name} is not pure (det V = {state.det!r})")


def pure_overlap_sq(a: GaussianState, b: GaussianState) -> float:
    """``|<a|b>|^2`` for two pure Gaussian states."""
    _require_pure(a, "a")
    _require_pure(b, "b")
    s = a.cov + b.cov
    d = a.mean - b.mean
    val = math.exp(-0.5 * d @ np.linalg.solve(s, d)) / math.sqrt(np.linalg.det(s))
    return min(max(val, 0.0), 1.0)


def normal_form(state: GaussianState) -> PureNormalForm:
    """Write a pure state as ``D(beta) S(r exp(2i theta)) |0>``.

    Gauge: ``r >= 0`` and ``theta`` in ``(-pi/2, pi/2]``; ``theta = 0`` when
    ``r = 0``.
    """
    _require_pure(state, "state")
    v = state.cov
    # V = (cosh 2r I + sinh 2r [[-cos 2t, -sin 2t], [-sin 2t, cos 2t]]) / 2
    a = v[1, 1] - v[0, 0]
    b = -2 * v[0, 1]
    s2r = math.hypot(a, b)
    if s2r < 1e-15:
        r, theta = 0.0, 0.0
    else:
        r = 0.5 * math.asinh(s2r)
        theta = 0.5 * math.atan2(b, a)
        if theta <= -math.pi / 2:
            theta += math.pi
    beta = complex(state.mean[0], state.mean[1]) / SQRT2
    return PureNormalForm(beta, r * cmath.exp(2j * theta))
