"""Input states of the swapping experiment and Gaussian unitaries.

Conventions (frozen, the tomography and measurement modules rely on them):

* quadrature x = (a + a^dag)/sqrt(2), vacuum variance 1/2;
* beam splitter: real symmetric coupling, a^dag -> sqrt(t) a^dag +
  e^{i phi} sqrt(1-t) b^dag, so `phi` is a relative phase on the reflected
  arm;
* displacement D(alpha) = exp(alpha a^dag - alpha* a), which shifts x by
  sqrt(2) Re(alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainc

from .constants import DISPLACEMENT_TRUNC_TOL, KET_NORM_TOL
from .fock import (
    FockDensityMatrix,
    FockKet,
    InvariantViolation,
    basis_index,
    basis_ket,
    space_dim,
)


@dataclass(frozen=True)
class StateImpurity:
    """Measured composition of the split-photon state."""

    weight_ideal: float
    weight_vacuum: float
    weight_multiphoton: float

    def __post_init__(self):
        w = (self.weight_ideal, self.weight_vacuum, self.weight_multiphoton)
        if any(x < 0 for x in w):
            raise ValueError(f"impurity weights must be nonnegative, got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"impurity weights must sum to 1, got {sum(w)!r}")


@dataclass(frozen=True)
class SplitPhotonSpec:
    """Single photon split at a beam splitter of the given reflectivity."""

    reflectivity: float
    impurity: StateImpurity | None = None

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")


@dataclass(frozen=True)
class TmsvSpec:
    """Two-mode squeezed vacuum resource with squeezing parameter r."""

    r: float
    cutoff: int

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"squeezing parameter must be >= 0, got {self.r}")
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")


def split_photon_ket(reflectivity: float, cutoff: int = 1) -> FockKet:
    """sqrt(1-R)|1,0> + sqrt(R)|0,1> on two modes."""
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    amps = np.zeros(space_dim(2, cutoff), dtype=np.complex128)
    amps[basis_index((1, 0), cutoff)] = math.sqrt(1.0 - reflectivity)
    amps[basis_index((0, 1), cutoff)] = math.sqrt(reflectivity)
    return FockKet(2, cutoff, amps)


def split_photon(
    spec: SplitPhotonSpec,
    cutoff: int = 1,
    multiphoton_state: FockDensityMatrix | None = None,
) -> FockDensityMatrix:
    """Two-mode split-photon state, optionally with the measured impurity mix.

    The multiphoton component defaults to |1,1><1,1|; pass
    `multiphoton_state` to model a different distribution.
    """
    ideal = split_photon_ket(spec.reflectivity, cutoff).to_density_matrix()
    if spec.impurity is None:
        return ideal
    imp = spec.impurity
    if multiphoton_state is None:
        multiphoton_state = basis_ket(2, cutoff, (1, 1)).to_density_matrix()
    if multiphoton_state.modes != 2 or multiphoton_state.cutoff != cutoff:
        raise ValueError("multiphoton override must be a two-mode state at the same cutoff")
    data = (
        imp.weight_ideal * ideal.data
        + imp.weight_vacuum * basis_ket(2, cutoff, (0, 0)).to_density_matrix().data
        + imp.weight_multiphoton * multiphoton_state.data
    )
    return FockDensityMatrix(2, cutoff, data)


def tmsv(spec: TmsvSpec) -> FockKet:
    """Two-mode squeezed vacuum, amplitudes ~ tanh(r)^n on |n,n>.

    The amplitudes are renormalized over the truncated space; before
    truncation the prefactor is sqrt(1 - tanh(r)^2).
    """
    lam = math.tanh(spec.r)
    amps = np.zeros(space_dim(2, spec.cutoff), dtype=np.complex128)
    for n in range(spec.cutoff + 1):
        amps[basis_index((n, n), spec.cutoff)] = lam**n
    amps /= np.linalg.norm(amps)
    return FockKet(2, spec.cutoff, amps)


def tmsv_tail_weight(r: float, cutoff: int) -> float:
    """Probability weight sum_{n>cutoff} (1-lam^2) lam^(2n) lost to truncation."""
    lam2 = math.tanh(r) ** 2
    return lam2 ** (cutoff + 1)


@lru_cache(maxsize=64)
def _bs_kernel(dim: int, transmissivity: float, phase: float) -> np.ndarray:
    """Two-mode beam-splitter matrix on the (dim*dim)-dim truncated pair space.

    Matrix elements are evaluated in closed form from the binomial expansion
    of the transformed creation operators, so each total-photon-number block
    with m+n < dim is exactly unitary; amplitudes that would leave the
    truncated space are dropped.
    """
    ct = math.sqrt(transmissivity)
    st = math.sqrt(1.0 - transmissivity)
    kernel = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for m in range(dim):
        for n in range(dim):
            col = m * dim + n
            for k in range(m + 1):
                for l in range(n + 1):
                    p = k + l
                    q = m + n - p
                    if p >= dim or q >= dim:
                        continue
                    if ct == 0.0 and (k + n - l) > 0:
                        continue
                    if st == 0.0 and (m - k + l) > 0:
                        continue
                    log_coeff = 0.5 * (
                        math.lgamma(p + 1)
                        + math.lgamma(q + 1)
                        - math.lgamma(m + 1)
                        - math.lgamma(n + 1)
                    )
                    amp = (
                        math.comb(m, k)
                        * math.comb(n, l)
                        * ct ** (k + n - l)
                        * st ** (m - k + l)
                        * (-1.0) ** l
                        * math.exp(log_coeff)
                    )
                    if phase != 0.0:
                        amp = amp * np.exp(1j * phase * (m - k - l))
                    kernel[p * dim + q, col] += amp
    kernel.setflags(write=False)
    return kernel


@lru_cache(maxsize=64)
def _displacement_eigensystem(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigensystem of the Hermitian generator i(a^dag - a) on the truncated space."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    h = 1j * (a.conj().T - a)
    w, v = np.linalg.eigh(h)
    return w, v


def _displacement_matrix(dim: int, alpha: complex) -> np.ndarray:
    """exp(alpha a^dag - alpha* a) via the cached eigensystem.

    The truncated generator is exactly anti-Hermitian, so the matrix is
    exactly unitary and D(-alpha) is its exact inverse; matrix elements are
    accurate for states supported away from the cutoff.
    """
    s = abs(alpha)
    if s == 0.0:
        return np.eye(dim, dtype=np.complex128)
    gamma = math.atan2(alpha.imag, alpha.real)
    w, v = _displacement_eigensystem(dim)
    core = (v * np.exp(-1j * s * w)) @ v.conj().T
    if gamma == 0.0:
        return core
    rot = np.exp(1j * gamma * np.arange(dim))
    return (core * rot[:, None]) * rot.conj()[None, :]


@lru_cache(maxsize=16)
def _tms_kernel(dim: int, s: float) -> np.ndarray:
    """Two-mode squeezer exp(s(a^dag b^dag - a b)) on the truncated pair space."""
    from scipy.linalg import expm

    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    adag_bdag = np.kron(a.conj().T, a.conj().T)
    kernel = expm(s * (adag_bdag - adag_bdag.conj().T))
    kernel.setflags(write=False)
    return kernel


def _apply_pair(state, mode_i: int, mode_j: int, kernel: np.ndarray, norm_tol: float):
    """Apply a two-mode operator, preserving the carrier kind."""
    m = state.modes
    d = state.cutoff + 1
    if mode_i == mode_j or not (0 <= mode_i < m and 0 <= mode_j < m):
        raise ValueError(f"invalid mode pair ({mode_i}, {mode_j}) for {m} modes")

    def act(tensor_arr, axes):
        moved = np.moveaxis(tensor_arr, axes, (0, 1))
        shape = moved.shape
        out = (kernel @ moved.reshape(d * d, -1)).reshape(shape)
        return np.moveaxis(out, (0, 1), axes)

    if isinstance(state, FockKet):
        t = act(state.amplitudes.reshape((d,) * m), (mode_i, mode_j))
        flat = t.reshape(-1)
        drop = abs(np.linalg.norm(flat) - state.norm())
        if drop > norm_tol:
            raise InvariantViolation(
                f"two-mode unitary lost norm {drop:.3e}; raise the cutoff"
            )
        return FockKet(m, state.cutoff, flat, normalized=state.normalized and drop <= KET_NORM_TOL)
    if isinstance(state, FockDensityMatrix):
        t = state.reshaped()
        t = act(t, (mode_i, mode_j))
        t = np.moveaxis(t, (m + mode_i, m + mode_j), (0, 1))
        shape = t.shape
        t = (kernel.conj() @ t.reshape(d * d, -1)).reshape(shape)
        t = np.moveaxis(t, (0, 1), (m + mode_i, m + mode_j))
        flat = t.reshape(state.dim, state.dim)
        flat = 0.5 * (flat + flat.conj().T)
        drop = abs(np.trace(flat).real - state.trace())
        if drop > norm_tol:
            raise InvariantViolation(
                f"two-mode unitary lost trace {drop:.3e}; raise the cutoff"
            )
        return FockDensityMatrix(
            m, state.cutoff, flat, normalized=state.normalized and drop <= 1e-10
        )
    raise TypeError("expected a FockKet or FockDensityMatrix")


def beam_splitter(state, modes: tuple[int, int], transmissivity: float,
                  phase: float = 0.0, *, norm_tol: float = 1e-10):
    """Beam splitter on the given mode pair.

    Photon number is conserved; for inputs supported on total photon number
    below the cutoff the operation is exactly unitary. Amplitude pushed past
    the cutoff raises unless `norm_tol` is loosened by the caller.
    """
    if not 0.0 <= transmissivity <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    kernel = _bs_kernel(state.cutoff + 1, float(transmissivity), float(phase))
    return _apply_pair(state, modes[0], modes[1], kernel, norm_tol)


def two_mode_squeezer(state, modes: tuple[int, int], s: float, *, norm_tol: float = 1e-8):
    """exp(s(a^dag b^dag - ab)) on the given mode pair.

    Unitary on the truncated space by construction; accuracy requires enough
    cutoff headroom above the populated levels. Used as the dilation oracle
    for the amplifier stage of the teleportation channel.
    """
    kernel = _tms_kernel(state.cutoff + 1, float(s))
    return _apply_pair(state, modes[0], modes[1], kernel, norm_tol)


def max_displacement(cutoff: int, tol: float = DISPLACEMENT_TRUNC_TOL) -> float:
    """Largest |alpha| whose coherent tail beyond the cutoff stays below tol.

    gammainc(cutoff+1, s^2) is the Poisson tail P(N > cutoff) at mean s^2.
    """
    lo, hi = 0.0, math.sqrt(cutoff + 1.0)
    while gammainc(cutoff + 1, hi * hi) < tol:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gammainc(cutoff + 1, mid * mid) < tol:
            lo = mid
        else:
            hi = mid
    return lo


def _apply_single(state, mode: int, op: np.ndarray):
    m = state.modes
    d = state.cutoff + 1
    if not 0 <= mode < m:
        raise ValueError(f"mode {mode} out of range for {m} modes")

    def act(tensor_arr, axis, matrix):
        moved = np.moveaxis(tensor_arr, axis, 0)
        shape = moved.shape
        out = (matrix @ moved.reshape(d, -1)).reshape(shape)
        return np.moveaxis(out, 0, axis)

    if isinstance(state, FockKet):
        t = act(state.amplitudes.reshape((d,) * m), mode, op)
        return FockKet(m, state.cutoff, t.reshape(-1), normalized=state.normalized)
    if isinstance(state, FockDensityMatrix):
        t = state.reshaped()
        t = act(t, mode, op)
        t = act(t, m + mode, op.conj())
        flat = t.reshape(state.dim, state.dim)
        flat = 0.5 * (flat + flat.conj().T)
        return FockDensityMatrix(m, state.cutoff, flat, normalized=state.normalized)
    raise TypeError("expected a FockKet or FockDensityMatrix")


def displacement(state, mode: int, alpha: complex, *, check: bool = True):
    """Phase-space displacement of one mode by alpha.

    With `check` enabled the amplitude must respect max_displacement(cutoff),
    which keeps the truncation error of the matrix elements below the
    documented bound for vacuum-centered states. Monte-Carlo feedforward
    disables the check and relies on cutoff headroom instead.
    """
    alpha = complex(alpha)
    if check and abs(alpha) > max_displacement(state.cutoff):
        raise ValueError(
            f"|alpha| = {abs(alpha):.4f} exceeds the documented bound "
            f"{max_displacement(state.cutoff):.4f} at cutoff {state.cutoff}"
        )
    op = _displacement_matrix(state.cutoff + 1, alpha)
    return _apply_single(state, mode, op)


def phase_shift(state, mode: int, phi: float):
    """Single-mode phase rotation exp(i phi n)."""
    d = state.cutoff + 1
    op = np.diag(np.exp(1j * phi * np.arange(d)))
    return _apply_single(state, mode, op)
