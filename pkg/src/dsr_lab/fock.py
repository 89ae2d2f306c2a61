"""Truncated photon-number representations.

Densities built from Gaussian mixtures keep their components around so that
later Gaussian unitaries can be pushed through each component exactly rather
than through truncated matrix exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson

from . import gaussian as gc
from .errors import DimensionError, InsufficientCutoffError, PreconditionError

DEFAULT_TAIL_TOL = 1e-10
SAFETY_FACTOR = 2
MIN_CUTOFF = 16
MAX_CUTOFF = 2048


@dataclass(frozen=True)
class FockVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoff(self) -> int:
        return len(self.amplitudes) - 1

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class FockDensity:
    """Hermitian density matrix on photon numbers ``0..cutoff``.

    ``components`` optionally records the state as a convex mixture of pure
    Gaussian states, as ``((weight, GaussianState), ...)``.
    """

    matrix: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL
    components: tuple | None = None
    validate: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.validate:
            check_density(self)

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def purity(self) -> float:
        m = self.matrix
        return float(np.vdot(m, m).real)


def check_density(rho: FockDensity, herm_tol=1e-12, psd_tol=1e-9):
    """Raise ``InsufficientCutoffError`` or ``PreconditionError`` on violations."""
    m = rho.matrix
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.conj().T).max(initial=0.0) > herm_tol * scale:
        raise PreconditionError("density matrix is not Hermitian")
    tr = np.trace(m).real
    if tr > 1 + 1e-12:
        raise PreconditionError(f"density trace {tr!r} exceeds 1")
    if 1 - tr >= rho.tail_tol:
        raise InsufficientCutoffError(
            f"truncated density keeps trace {tr!r} at cutoff {rho.cutoff}",
            achieved_norm=float(tr), cutoff=rho.cutoff,
        )
    lo = np.linalg.eigvalsh((m + m.conj().T) / 2)[0] if len(m) else 0.0
    if lo < -psd_tol:
        raise PreconditionError(f"density has eigenvalue {lo!r} < 0")


def auto_cutoff(mean_photon: float, tail_tol: float = DEFAULT_TAIL_TOL,
                reference: str = "poisson") -> int:
    """Cutoff whose reference-distribution tail is below ``tail_tol``, doubled.

    ``reference`` is ``"poisson"`` (coherent light) or ``"thermal"``
    (geometric law, much heavier tail).
    """
    if mean_photon < 0 or not 0 < tail_tol < 1:
        raise PreconditionError("need mean_photon >= 0 and 0 < tail_tol < 1")
    if mean_photon == 0:
        c = 0
    elif reference == "poisson":
        c = int(mean_photon)
        while poisson.sf(c, mean_photon) >= tail_tol:
            c += 1
    elif reference == "thermal":
        # P(n > c) = (mu / (1 + mu))^(c + 1)
        ratio = math.log(mean_photon / (1 + mean_photon))
        c = max(0, math.ceil(math.log(tail_tol) / ratio - 1))
        while (mean_photon / (1 + mean_photon)) ** (c + 1) >= tail_tol:
            c += 1
    else:
        raise ValueError(f"unknown reference {reference!r}")
    return max(MIN_CUTOFF, SAFETY_FACTOR * c)


def dss_amplitudes(nf: gc.PureNormalForm, cutoff: int) -> np.ndarray:
    """``<n| D(beta) S(xi) |0>`` for ``n = 0..cutoff`` (no norm check).

    With ``t = exp(i arg xi) tanh|xi|`` the state is proportional to
    ``exp(-t a^+^2 / 2 + (beta + t beta*) a^+) |0>``, whose Taylor
    coefficients obey the Hermite-type three-term recursion
    ``sqrt(n+1) c[n+1] = b c[n] - t sqrt(n) c[n-1]``.
    """
    beta = complex(nf.displacement)
    r = nf.r
    t = np.exp(2j * nf.theta) * math.tanh(r)
    b = beta + t * beta.conjugate()
    c = np.zeros(cutoff + 1, dtype=complex)
    c[0] = np.exp(-0.5 * abs(beta) ** 2 - 0.5 * t * beta.conjugate() ** 2) / math.sqrt(math.cosh(r))
    if cutoff >= 1:
        c[1] = b * c[0]
    for n in range(1, cutoff):
        c[n + 1] = (b * c[n] - t * math.sqrt(n) * c[n - 1]) / math.sqrt(n + 1)
    return c


def dss_fock(nf: gc.PureNormalForm, cutoff: int,
             tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    amps = dss_amplitudes(nf, cutoff)
    norm = float(np.vdot(amps, amps).real)
    if 1 - norm >= tail_tol:
        raise InsufficientCutoffError(
            f"cutoff {cutoff} keeps norm {norm!r}", achieved_norm=norm, cutoff=cutoff
        )
    return FockVector(amps)


def density_from_pure(v: FockVector, tail_tol: float = DEFAULT_TAIL_TOL) -> FockDensity:
    a = v.amplitudes
    return FockDensity(np.outer(a, a.conj()), tail_tol=tail_tol)


def photon_distribution(rho: FockDensity) -> np.ndarray:
    p = np.diagonal(rho.matrix).real.copy()
    p[p < 0] = 0.0
    return p


def thermal_density(n_t: float, cutoff: int, tail_tol: float = DEFAULT_TAIL_TOL) -> FockDensity:
    n = np.arange(cutoff + 1)
    p = n_t ** n / (1 + n_t) ** (n + 1) if n_t > 0 else (n == 0).astype(float)
    return FockDensity(np.diag(p), tail_tol=tail_tol)


def trace_norm(h) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if h.size == 0:
        return 0.0
    if np.abs(h - h.conj().T).max() > 1e-10:
        raise PreconditionError("trace_norm needs a Hermitian matrix")
    return float(np.abs(np.linalg.eigvalsh((h + h.conj().T) / 2)).sum())


def helstrom_mixed(rho0: FockDensity, rho1: FockDensity, p0: float = 0.5,
                   p1: float = 0.5) -> float:
    if rho0.cutoff != rho1.cutoff:
        raise DimensionError(f"cutoff mismatch: {rho0.cutoff} vs {rho1.cutoff}")
    if p0 < 0 or p1 < 0 or abs(p0 + p1 - 1) > 1e-12:
        raise PreconditionError("priors must be non-negative and sum to 1")
    val = 0.5 * (1 - trace_norm(p0 * rho0.matrix - p1 * rho1.matrix))
    return min(max(val, 0.0), 0.5)


def mixture_density(components, cutoff: int | None = None,
                    tail_tol: float = DEFAULT_TAIL_TOL) -> FockDensity:
    """Density of ``sum_k w_k |g_k><g_k|`` for pure Gaussian states ``g_k``.

    With ``cutoff=None`` the cutoff starts from :func:`auto_cutoff` of the
    largest component energy and doubles until the trace deficit is below
    ``tail_tol``.
    """
    components = tuple((float(w), g) for w, g in components)
    forms = [(w, gc.normal_form(g)) for w, g in components]
    fixed = cutoff is not None
    if not fixed:
        cutoff = auto_cutoff(max(g.mean_photon for _, g in components), tail_tol)
    while True:
        mat = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        for w, nf in forms:
            a = dss_amplitudes(nf, cutoff)
            mat += w * np.outer(a, a.conj())
        mat = (mat + mat.conj().T) / 2
        deficit = 1 - np.trace(mat).real
        if deficit < tail_tol:
            return FockDensity(mat, tail_tol=tail_tol, components=components)
        if fixed or cutoff >= MAX_CUTOFF:
            raise InsufficientCutoffError(
                f"cutoff {cutoff} keeps trace {1 - deficit!r}",
                achieved_norm=float(1 - deficit), cutoff=cutoff,
            )
        cutoff = min(2 * cutoff, MAX_CUTOFF)


def ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def unitary_matrix(u: gc.GaussianUnitary, dim: int) -> np.ndarray:
    """Exponentiated truncated generator of ``u`` on a ``dim``-level space."""
    a = ladder(dim)
    ad = a.conj().T
    if u.kind == "displacement":
        b = complex(u.amount)
        gen = b * ad - b.conjugate() * a
    elif u.kind == "squeeze":
        xi = u.amount * np.exp(2j * u.axis)
        gen = 0.5 * (np.conj(xi) * a @ a - xi * ad @ ad)
    else:
        gen = -1j * u.amount * np.diag(np.arange(dim))
    return expm(gen)


def apply_gaussian_unitary_fock(rho: FockDensity, unitaries, cutoff: int | None = None,
                                trace_tol: float = 1e-8) -> FockDensity:
    """Conjugate ``rho`` by the product of ``unitaries`` (first acts first).

    Mixtures of Gaussian components are transformed exactly; anything else
    goes through truncated matrix exponentials on a working space at least
    four times the output cutoff.
    """
    unitaries = list(unitaries)
    if not unitaries:
        raise PreconditionError("empty unitary sequence")
    if rho.components is not None:
        comps = [(w, gc.apply_unitaries(g, unitaries)) for w, g in rho.components]
        return mixture_density(comps, cutoff, rho.tail_tol)
    if cutoff is None:
        cutoff = rho.cutoff
    work = max(4 * (cutoff + 1), rho.cutoff + 1)
    big = np.zeros((work, work), dtype=complex)
    k = rho.cutoff + 1
    big[:k, :k] = rho.matrix
    u = np.eye(work, dtype=complex)
    for g in unitaries:
        u = unitary_matrix(g, work) @ u
    out = (u @ big @ u.conj().T)[: cutoff + 1, : cutoff + 1]
    out = (out + out.conj().T) / 2
    loss = rho.trace - np.trace(out).real
    if loss >= trace_tol:
        raise InsufficientCutoffError(
            f"output cutoff {cutoff} loses trace {loss!r}",
            achieved_norm=float(np.trace(out).real), cutoff=cutoff,
        )
    return FockDensity(out, tail_tol=max(rho.tail_tol, trace_tol))


def displacement_matrix(lam, rows: int, cols: int) -> np.ndarray:
    """Exact ``<m|D(lam)|n>`` for ``m < rows``, ``n < cols``.

    ``lam`` may be an array; the result then has shape ``lam.shape + (rows, cols)``.
    """
    lam = np.asarray(lam, dtype=complex)
    d = np.zeros(lam.shape + (rows, cols), dtype=complex)
    d[..., 0, 0] = np.exp(-0.5 * np.abs(lam) ** 2)
    for m in range(1, rows):
        d[..., m, 0] = lam * d[..., m - 1, 0] / math.sqrt(m)
    lc = lam.conj()
    for n in range(1, cols):
        d[..., 0, n] = -lc * d[..., 0, n - 1] / math.sqrt(n)
        for m in range(1, rows):
            d[..., m, n] = (math.sqrt(m) * d[..., m - 1, n - 1] - lc * d[..., m, n - 1]) / math.sqrt(n)
    return d
