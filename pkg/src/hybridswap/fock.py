"""Dense complex linear algebra on truncated multi-mode Fock spaces.

Every state in the package shares one basis convention: row and column
indices enumerate photon-number tuples (n_0, ..., n_{m-1}) in lexicographic
order with mode 0 slowest, i.e.

    index = sum_k n_k * (cutoff + 1)**(m - 1 - k).

The ordering is frozen because serialized matrices and CSV exports depend
on it bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .constants import (
    EIG_RESIDUAL_TOL,
    HERMITICITY_TOL,
    KET_NORM_TOL,
    PSD_TOL,
    TRACE_TOL,
)


class InvariantViolation(ValueError):
    """A state or an operation broke one of the library's numerical contracts."""


def space_dim(modes: int, cutoff: int) -> int:
    """Hilbert-space dimension (cutoff + 1)**modes."""
    return (cutoff + 1) ** modes


def occupations(modes: int, cutoff: int) -> np.ndarray:
    """All photon-number tuples in basis order, shape (dim, modes)."""
    grids = np.indices((cutoff + 1,) * modes)
    return grids.reshape(modes, -1).T


def basis_index(occupation: Sequence[int], cutoff: int) -> int:
    """Basis index of the photon-number tuple |n_0, ..., n_{m-1}>."""
    idx = 0
    for n in occupation:
        if not 0 <= n <= cutoff:
            raise ValueError(f"occupation {tuple(occupation)} exceeds cutoff {cutoff}")
        idx = idx * (cutoff + 1) + int(n)
    return idx


def _as_complex(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.complex128))


@dataclass(frozen=True)
class FockKet:
    """Pure state on `modes` modes truncated at `cutoff` photons per mode."""

    modes: int
    cutoff: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _as_complex(self.amplitudes)
        dim = space_dim(self.modes, self.cutoff)
        if amps.shape != (dim,):
            raise ValueError(f"amplitude vector has shape {amps.shape}, expected ({dim},)")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > KET_NORM_TOL:
            raise InvariantViolation(
                f"ket flagged normalized has norm {np.linalg.norm(amps)!r}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_density_matrix(self) -> "FockDensityMatrix":
        data = np.outer(self.amplitudes, self.amplitudes.conj())
        return FockDensityMatrix(self.modes, self.cutoff, data, normalized=self.normalized)


@dataclass(frozen=True)
class FockDensityMatrix:
    """Density operator on `modes` modes truncated at `cutoff` photons per mode.

    Unnormalized carriers (post-selected blocks, intermediate subspace
    extractions) must set ``normalized=False``; they are still required to be
    Hermitian with a real trace.
    """

    modes: int
    cutoff: int
    data: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        data = _as_complex(self.data)
        dim = space_dim(self.modes, self.cutoff)
        if data.shape != (dim, dim):
            raise ValueError(f"matrix has shape {data.shape}, expected ({dim}, {dim})")
        herm_defect = np.max(np.abs(data - data.conj().T)) if dim else 0.0
        if herm_defect > HERMITICITY_TOL:
            raise InvariantViolation(f"Hermiticity defect {herm_defect:.3e} exceeds tolerance")
        tr = np.trace(data)
        if abs(tr.imag) > TRACE_TOL:
            raise InvariantViolation(f"trace has imaginary part {tr.imag:.3e}")
        if self.normalized and abs(tr.real - 1.0) > TRACE_TOL:
            raise InvariantViolation(f"state flagged normalized has trace {tr.real!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def eigenvalues(self) -> np.ndarray:
        return eigh_checked(self.data)[0]

    def validate(self) -> "FockDensityMatrix":
        """Full invariant check (includes the O(d^3) positivity test)."""
        if self.normalized:
            lo = float(self.eigenvalues().min())
            if lo < -PSD_TOL:
                raise InvariantViolation(f"negative eigenvalue {lo:.3e} in normalized state")
        return self

    def reshaped(self) -> np.ndarray:
        """View with one row axis and one column axis per mode."""
        d = self.cutoff + 1
        return self.data.reshape((d,) * (2 * self.modes))


def basis_ket(modes: int, cutoff: int, occupation: Sequence[int]) -> FockKet:
    """|n_0, ..., n_{m-1}> as a FockKet."""
    if len(occupation) != modes:
        raise ValueError("occupation length must equal the mode count")
    amps = np.zeros(space_dim(modes, cutoff), dtype=np.complex128)
    amps[basis_index(occupation, cutoff)] = 1.0
    return FockKet(modes, cutoff, amps)


def vacuum_density_matrix(modes: int, cutoff: int) -> FockDensityMatrix:
    return basis_ket(modes, cutoff, (0,) * modes).to_density_matrix()


def tensor(a, b):
    """Tensor product of two states of the same kind and cutoff.

    Modes add; the first factor's modes come first (and are slower) in the
    combined basis order. For density matrices the trace multiplies.
    """
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} != {b.cutoff}")
    if isinstance(a, FockKet) and isinstance(b, FockKet):
        return FockKet(
            a.modes + b.modes,
            a.cutoff,
            np.kron(a.amplitudes, b.amplitudes),
            normalized=a.normalized and b.normalized,
        )
    if isinstance(a, FockDensityMatrix) and isinstance(b, FockDensityMatrix):
        return FockDensityMatrix(
            a.modes + b.modes,
            a.cutoff,
            np.kron(a.data, b.data),
            normalized=a.normalized and b.normalized,
        )
    raise TypeError("tensor requires two kets or two density matrices")


def _check_mode_indices(indices: Iterable[int], modes: int) -> list[int]:
    idx = sorted(set(int(i) for i in indices))
    if any(i < 0 or i >= modes for i in idx):
        raise ValueError(f"mode indices {idx} out of range for {modes} modes")
    return idx


def partial_trace(rho: FockDensityMatrix, keep: Iterable[int]) -> FockDensityMatrix:
    """Trace out every mode not listed in `keep` (kept modes stay in order)."""
    keep_idx = _check_mode_indices(keep, rho.modes)
    if not keep_idx:
        raise ValueError("keep must name at least one mode")
    drop = [i for i in range(rho.modes) if i not in keep_idx]
    t = rho.reshaped()
    m = rho.modes
    for i in sorted(drop, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + m)
        m -= 1
    dim = space_dim(len(keep_idx), rho.cutoff)
    return FockDensityMatrix(
        len(keep_idx), rho.cutoff, t.reshape(dim, dim), normalized=rho.normalized
    )


def partial_transpose(rho: FockDensityMatrix, part: Iterable[int]) -> FockDensityMatrix:
    """Transpose the indices of the modes in `part`.

    The result is Hermitian with unchanged trace but is generally not
    positive, so it is returned with ``normalized=False``.
    """
    part_idx = _check_mode_indices(part, rho.modes)
    t = rho.reshaped()
    m = rho.modes
    for i in part_idx:
        t = np.swapaxes(t, i, i + m)
    return FockDensityMatrix(
        rho.modes, rho.cutoff, t.reshape(rho.dim, rho.dim), normalized=False
    )


def eigh_checked(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with a residual check on every pair."""
    w, v = np.linalg.eigh(matrix)
    residual = np.linalg.norm(matrix @ v - v * w, axis=0)
    worst = float(residual.max()) if residual.size else 0.0
    if worst > EIG_RESIDUAL_TOL * max(1.0, float(np.abs(w).max(initial=0.0))):
        raise InvariantViolation(f"eigenpair residual {worst:.3e} exceeds tolerance")
    return w, v


def trace_norm(m: FockDensityMatrix) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    w, _ = eigh_checked(m.data)
    return float(np.abs(w).sum())


def trace_distance(a: FockDensityMatrix, b: FockDensityMatrix) -> float:
    """(1/2) || a - b ||_1 for same-shape Hermitian carriers."""
    if a.data.shape != b.data.shape:
        raise ValueError("trace_distance requires equal dimensions")
    w = np.linalg.eigvalsh(a.data - b.data)
    return 0.5 * float(np.abs(w).sum())


def fidelity(rho: FockDensityMatrix, psi: FockKet) -> float:
    """<psi| rho |psi> for a normalized pure target."""
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} != {psi.dim}")
    if not psi.normalized and abs(psi.norm() - 1.0) > KET_NORM_TOL:
        raise ValueError("fidelity target ket must be normalized")
    val = np.vdot(psi.amplitudes, rho.data @ psi.amplitudes)
    if abs(val.imag) > 1e-9:
        raise InvariantViolation(f"fidelity has imaginary part {val.imag:.3e}")
    f = float(val.real)
    if rho.normalized and not -1e-9 <= f <= 1.0 + 1e-9:
        raise InvariantViolation(f"fidelity {f!r} outside [0, 1]")
    return f


def state_fidelity(rho: FockDensityMatrix, sigma: FockDensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))**2.

    Reduces to <psi| sigma |psi> when rho is pure.
    """
    if rho.dim != sigma.dim:
        raise ValueError("state_fidelity requires equal dimensions")
    w, v = eigh_checked(rho.data)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_rho @ sigma.data @ sqrt_rho
    lam = np.linalg.eigvalsh(inner)
    return float(np.sqrt(np.clip(lam, 0.0, None)).sum() ** 2)


def to_json_dict(rho: FockDensityMatrix) -> dict:
    """Serialize to {modes, cutoff, data: [[re, im], ...]} (row-major)."""
    flat = rho.data.reshape(-1)
    payload = {
        "modes": rho.modes,
        "cutoff": rho.cutoff,
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }
    if not rho.normalized:
        payload["normalized"] = False
    return payload


def from_json_dict(payload: dict) -> FockDensityMatrix:
    modes = int(payload["modes"])
    cutoff = int(payload["cutoff"])
    dim = space_dim(modes, cutoff)
    flat = np.array([complex(re, im) for re, im in payload["data"]], dtype=np.complex128)
    return FockDensityMatrix(
        modes, cutoff, flat.reshape(dim, dim), normalized=payload.get("normalized", True)
    )


def save_density_matrix(rho: FockDensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(rho)) + "\n", encoding="utf-8")


def load_density_matrix(path) -> FockDensityMatrix:
    return from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))
