"""Gain-tunable CV teleportation channel acting on one mode of a Fock state.

The deterministic path models the protocol as the phase-insensitive Gaussian
channel fixed by linear feedforward: amplitude gain g with added quadrature
noise (vacuum units 1/2)

    sigma^2 = [(1+g)^2 e^{-2r} + (1-g)^2 e^{2r}] / 4,

which at the optimal gain g = tanh r collapses to pure loss eta = g^2. Any
(gain, noise) pair at or above the quantum limit is realized as a loss
followed by a quantum-limited amplifier. A Monte-Carlo oracle simulates the
physical Bell measurement and displacement feedforward event by event.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constants import CHANNEL_TRACE_TOL, TRACE_TOL
from .fock import (
    FockDensityMatrix,
    FockKet,
    InvariantViolation,
    basis_index,
    basis_ket,
    eigh_checked,
    partial_trace,
    space_dim,
    tensor,
)
from .states import TmsvSpec, _displacement_matrix, beam_splitter, tmsv
from .tomography import quadrature_wavefunctions, sample_inverse_cdf


@dataclass(frozen=True)
class ChannelSpec:
    """Teleportation channel parameters.

    `gain=None` means the optimal feedforward gain tanh(r). The loss knobs
    model propagation and homodyne inefficiency: `pre_loss` attenuates the
    input, `post_loss` the output, `bsm_efficiency` the Bell-measurement
    homodyne detection (which both rescales the gain and injects feedforward
    noise), and `dephasing` is the coherence retention factor of residual
    phase noise (1 = none).
    """

    squeezing: float
    gain: float | None = None
    pre_loss: float = 1.0
    post_loss: float = 1.0
    bsm_efficiency: float = 1.0
    dephasing: float = 1.0

    def __post_init__(self):
        if self.squeezing < 0:
            raise ValueError(f"squeezing must be >= 0, got {self.squeezing}")
        if self.gain is not None and self.gain < 0:
            raise ValueError(f"gain must be >= 0, got {self.gain}")
        for name in ("pre_loss", "post_loss", "bsm_efficiency"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if not 0.0 <= self.dephasing <= 1.0:
            raise ValueError(f"dephasing must lie in [0, 1], got {self.dephasing}")

    @property
    def effective_gain(self) -> float:
        return math.tanh(self.squeezing) if self.gain is None else self.gain


@dataclass(frozen=True)
class GaussianChannelParams:
    """Phase-insensitive channel: gain, noise and its loss-amplifier dilation."""

    amplitude_gain: float
    added_noise: float
    eta: float
    amplifier_gain: float

    def __post_init__(self):
        if self.added_noise < abs(self.amplitude_gain**2 - 1.0) / 2.0 - 1e-12:
            raise InvariantViolation(
                f"noise {self.added_noise!r} below the quantum limit for gain {self.amplitude_gain!r}"
            )
        if not 0.0 <= self.eta <= 1.0:
            raise InvariantViolation(f"loss transmissivity {self.eta!r} outside [0, 1]")
        if self.amplifier_gain < 1.0 - 1e-12:
            raise InvariantViolation(f"amplifier gain {self.amplifier_gain!r} below 1")
        if abs(self.eta * self.amplifier_gain - self.amplitude_gain**2) > 1e-12:
            raise InvariantViolation("dilation does not reproduce the amplitude gain")


def teleportation_noise(r: float, g: float) -> float:
    """Added x-quadrature variance of the feedforward channel (vacuum = 1/2)."""
    return ((1.0 + g) ** 2 * math.exp(-2.0 * r) + (1.0 - g) ** 2 * math.exp(2.0 * r)) / 4.0


def channel_params(spec: ChannelSpec) -> GaussianChannelParams:
    """Fold all imperfection knobs into one (gain, noise) pair and dilate it.

    BSM inefficiency eta_b rescales the feedforward gain to g*sqrt(eta_b)
    and adds g^2(1-eta_b) of displacement noise; pre/post losses compose as
    usual (gains multiply, noises add with gain^2 weights).
    """
    g = spec.effective_gain
    g_core = g * math.sqrt(spec.bsm_efficiency)
    noise_core = teleportation_noise(spec.squeezing, g_core) + g * g * (1.0 - spec.bsm_efficiency)
    gain2 = spec.pre_loss * spec.post_loss * g_core * g_core
    noise = (
        spec.post_loss * (g_core * g_core * (1.0 - spec.pre_loss) / 2.0 + noise_core)
        + (1.0 - spec.post_loss) / 2.0
    )
    big_g = (2.0 * noise + 1.0 + gain2) / 2.0
    big_g = max(big_g, 1.0)
    eta = gain2 / big_g
    return GaussianChannelParams(
        amplitude_gain=math.sqrt(gain2), added_noise=noise, eta=eta, amplifier_gain=big_g
    )


def optimal_swap_state(gain: float, cutoff: int = 1) -> FockDensityMatrix:
    """Closed-form swapped state at optimal gain for the R = 0.5 input:

    (1+g^2)/2 |psi'><psi'| + (1-g^2)/2 |00><00| with
    |psi'> = (|10> + g|01>)/sqrt(1+g^2).
    """
    g = float(gain)
    dim = space_dim(2, cutoff)
    psi = np.zeros(dim, dtype=np.complex128)
    psi[basis_index((1, 0), cutoff)] = 1.0 / math.sqrt(1.0 + g * g)
    psi[basis_index((0, 1), cutoff)] = g / math.sqrt(1.0 + g * g)
    data = (1.0 + g * g) / 2.0 * np.outer(psi, psi.conj())
    data[basis_index((0, 0), cutoff), basis_index((0, 0), cutoff)] += (1.0 - g * g) / 2.0
    return FockDensityMatrix(2, cutoff, data)


def pure_loss_kraus(eta: float, dim: int) -> list[np.ndarray]:
    """Damping Kraus operators K_k[n-k, n] = sqrt(C(n,k) eta^(n-k) (1-eta)^k)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta}")
    ops = []
    for k in range(dim):
        mat = np.zeros((dim, dim))
        for n in range(k, dim):
            mat[n - k, n] = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)
        ops.append(mat)
    return ops


def amplifier_kraus(big_g: float, dim_in: int, dim_out: int) -> list[np.ndarray]:
    """Quantum-limited amplifier Kraus operators (two-mode squeezer with a
    vacuum idler, idler photon number k resolved analytically):

    A_k[n+k, n] = sqrt(C(n+k, k)) tau^k G^{-(n+1)/2},  tau^2 = (G-1)/G.
    """
    if big_g < 1.0:
        raise ValueError(f"amplifier gain must be >= 1, got {big_g}")
    tau = math.sqrt((big_g - 1.0) / big_g)
    ops = []
    for k in range(dim_out):
        mat = np.zeros((dim_out, dim_in))
        for n in range(dim_in):
            if n + k >= dim_out:
                break
            mat[n + k, n] = math.sqrt(math.comb(n + k, k)) * tau**k * big_g ** (-(n + 1) / 2.0)
        if np.any(mat):
            ops.append(mat)
    return ops


def amplifier_headroom(big_g: float, n_top: int, tol: float) -> int:
    """Photons of headroom so the amplifier's negative-binomial tail stays below tol."""
    if big_g <= 1.0:
        return 0
    ratio = (big_g - 1.0) / big_g
    pmf = big_g ** (-(n_top + 1))
    cum = pmf
    k = 0
    while 1.0 - cum > tol and k < 10_000:
        k += 1
        pmf *= ratio * (k + n_top) / k
        cum += pmf
    return k


def _kraus_on_mode(tensor_arr: np.ndarray, modes: int, mode: int,
                   ops: list[np.ndarray]) -> np.ndarray:
    """Apply sum_k K rho K^dag on one mode of a (d,)*2m tensor; the mode axes
    may change dimension when the Kraus operators are rectangular."""
    d_out = ops[0].shape[0]
    out_shape = list(tensor_arr.shape)
    out_shape[mode] = d_out
    out_shape[modes + mode] = d_out
    acc = np.zeros(out_shape, dtype=np.complex128)
    for op in ops:
        step = np.moveaxis(np.tensordot(op, tensor_arr, axes=([1], [mode])), 0, mode)
        step = np.moveaxis(
            np.tensordot(op.conj(), step, axes=([1], [modes + mode])), 0, modes + mode
        )
        acc += step
    return acc


def apply_pure_loss(rho: FockDensityMatrix, mode: int, eta: float) -> FockDensityMatrix:
    """Pure loss on one mode via the closed-form Kraus series (exact on the
    truncated space). Serves as the independent route against the
    beam-splitter dilation used inside apply_channel."""
    if eta == 1.0:
        return rho
    t = _kraus_on_mode(rho.reshaped(), rho.modes, mode, pure_loss_kraus(eta, rho.cutoff + 1))
    flat = t.reshape(rho.dim, rho.dim)
    return FockDensityMatrix(rho.modes, rho.cutoff, 0.5 * (flat + flat.conj().T),
                             normalized=rho.normalized)


def loss_via_dilation(rho: FockDensityMatrix, mode: int, eta: float) -> FockDensityMatrix:
    """Loss as beam splitter + vacuum ancilla + partial trace (exact: the
    ancilla can absorb at most the photons present in the mode)."""
    if eta == 1.0:
        return rho
    big = tensor(rho, basis_ket(1, rho.cutoff, (0,)).to_density_matrix())
    big = beam_splitter(big, (mode, rho.modes), eta)
    return partial_trace(big, keep=range(rho.modes))


def dephase(rho: FockDensityMatrix, mode: int, factor: float) -> FockDensityMatrix:
    """Gaussian phase noise on one mode: rho_{mn} -> factor^((m-n)^2) rho_{mn}.

    `factor` is the coherence retention of the |m-n| = 1 elements; it
    commutes with loss and amplification, so its position in the channel
    chain is immaterial.
    """
    if not 0.0 <= factor <= 1.0:
        raise ValueError(f"dephasing factor must lie in [0, 1], got {factor}")
    if factor == 1.0:
        return rho
    d = rho.cutoff + 1
    delta = np.subtract.outer(np.arange(d), np.arange(d))
    damp = np.asarray(factor, dtype=np.float64) ** (delta * delta)
    m = rho.modes
    damp = damp[(slice(None), slice(None)) + (None,) * (2 * m - 2)]
    t = np.moveaxis(rho.reshaped(), (mode, m + mode), (0, 1)) * damp
    t = np.moveaxis(t, (0, 1), (mode, m + mode))
    return FockDensityMatrix(rho.modes, rho.cutoff, t.reshape(rho.dim, rho.dim),
                             normalized=rho.normalized)


def _mode_occupancy(tensor_arr: np.ndarray, modes: int, mode: int) -> np.ndarray:
    """Diagonal photon-number marginal of one mode from a (d,)*2m tensor."""
    t = tensor_arr
    m = modes
    for i in reversed(range(modes)):
        if i == mode:
            continue
        t = np.trace(t, axis1=i, axis2=i + m)
        m -= 1
    return np.real(np.diag(t))


def apply_channel(
    rho: FockDensityMatrix,
    mode: int,
    spec: ChannelSpec,
    *,
    out_cutoff: int | None = None,
    trace_tol: float = CHANNEL_TRACE_TOL,
) -> FockDensityMatrix:
    """Push one mode of a normalized state through the teleportation channel.

    The loss stage is dilated with a beam splitter and vacuum ancilla; the
    amplifier stage uses the analytic two-mode-squeezer Kraus series with
    enough cutoff headroom that the truncated trace defect stays below
    `trace_tol` (the output is renormalized afterwards). At the optimal gain
    the amplifier gain is 1 and the map reduces to pure loss eta = g^2.

    `out_cutoff` pins the cutoff of the returned state; leaving it None keeps
    the input cutoff unless the amplified state genuinely needs more room.
    """
    if not rho.normalized or abs(rho.trace() - 1.0) > TRACE_TOL:
        raise ValueError("apply_channel expects a normalized input state")
    if not 0 <= mode < rho.modes:
        raise ValueError(f"mode {mode} out of range for {rho.modes} modes")
    params = channel_params(spec)
    work = loss_via_dilation(rho, mode, params.eta)
    work = dephase(work, mode, spec.dephasing)
    d = rho.cutoff + 1
    m = rho.modes
    t = work.reshaped()

    if params.amplifier_gain > 1.0 + 1e-12:
        occupancy = _mode_occupancy(t, m, mode)
        populated = np.nonzero(occupancy > trace_tol / (10.0 * d))[0]
        n_top = int(populated.max()) if populated.size else 0
        headroom = amplifier_headroom(params.amplifier_gain, n_top, trace_tol / 4.0)
        d_work = max(d, n_top + headroom + 1)
        ops = amplifier_kraus(params.amplifier_gain, d, d_work)
        t = _kraus_on_mode(t, m, mode, ops)

    # settle the output cutoff, truncating the amplified tail if allowed
    occupancy = _mode_occupancy(t, m, mode)
    if out_cutoff is None:
        cum = np.cumsum(occupancy[::-1])[::-1]
        needed = int(np.nonzero(cum > trace_tol / 2.0)[0].max()) if np.any(cum > trace_tol / 2.0) else 0
        c_out = max(rho.cutoff, needed)
    else:
        c_out = int(out_cutoff)
    dropped = float(occupancy[c_out + 1:].sum()) if c_out + 1 < len(occupancy) else 0.0
    if dropped > trace_tol:
        raise InvariantViolation(
            f"cutoff {c_out} too small for amplifier gain {params.amplifier_gain:.4f}: "
            f"would drop trace {dropped:.3e} > {trace_tol:.1e}"
        )

    d_out = c_out + 1
    t = t[tuple(slice(0, min(d_out, s)) for s in t.shape)]
    if any(s < d_out for s in t.shape):
        padded = np.zeros([d_out] * (2 * m), dtype=np.complex128)
        padded[tuple(slice(0, s) for s in t.shape)] = t
        t = padded

    dim_out = space_dim(m, c_out)
    flat = t.reshape(dim_out, dim_out)
    flat = 0.5 * (flat + flat.conj().T)
    tr = float(np.trace(flat).real)
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolation(f"channel lost trace {1.0 - tr:.3e} > {trace_tol:.1e}")
    return FockDensityMatrix(m, c_out, flat / tr)


def _teleport_once(prepared, x_grid, gain, rng, fp_rows):
    """One Monte-Carlo trial on precomputed conditional amplitudes."""
    weights, streams = prepared
    k = int(np.searchsorted(weights, rng.random(), side="right"))
    k = min(k, len(streams) - 1)
    a1, cdf_x, rest_shape = streams[k]
    i = min(int(np.searchsorted(cdf_x, rng.random())), len(cdf_x) - 1)
    ket2 = a1[i].reshape(rest_shape)
    # ket2 axes: (bystander input modes..., C, D); measure p on C
    d = rest_shape[-1]
    c_axis = ket2.ndim - 2
    k2 = np.moveaxis(ket2, c_axis, 0).reshape(d, -1)
    a2 = fp_rows @ k2
    pdf_p = np.einsum("ij,ij->i", a2, a2.conj()).real
    cdf_p = np.cumsum(pdf_p)
    cdf_p /= cdf_p[-1]
    j = min(int(np.searchsorted(cdf_p, rng.random())), len(cdf_p) - 1)
    ket3 = a2[j].reshape(rest_shape[:-2] + (d,))
    ket3 = ket3 / np.linalg.norm(ket3)
    beta = gain * complex(x_grid[i], x_grid[j])
    dmat = _displacement_matrix(d, beta)
    out = np.moveaxis(np.tensordot(dmat, np.moveaxis(ket3, -1, 0), axes=([1], [0])), 0, -1)
    return out


def mc_teleport_oracle(
    rho: FockDensityMatrix,
    mode: int,
    spec: ChannelSpec,
    n_trials: int,
    seed: int,
    *,
    workers: int = 1,
    grid_points: int = 1001,
    chunk_size: int = 512,
    force_outcome: tuple[float, float] | None = None,
) -> FockDensityMatrix:
    """Brute-force protocol simulation: explicit resource state, Bell
    measurement by homodyne sampling, and displacement feedforward.

    Trials are split into fixed-size chunks, each with a counter-derived RNG
    stream from the master seed and merged in chunk order, so the result is
    bit-identical for any worker count. Converges to apply_channel's output
    in trace distance as O(1/sqrt(n_trials)); a cutoff of at least 10 is
    recommended so the resource-state and feedforward truncation bias stays
    far below the Monte-Carlo noise.

    `force_outcome=(x, p)` skips sampling and returns the pure conditional
    output for that Bell-measurement result.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    cutoff = rho.cutoff
    d = cutoff + 1
    m = rho.modes
    gain = spec.effective_gain

    work = rho if spec.pre_loss == 1.0 else apply_pure_loss(rho, mode, spec.pre_loss)
    w, v = eigh_checked(work.data)
    keep = w > 1e-12
    weights = w[keep] / w[keep].sum()
    kets = [v[:, i] for i in np.nonzero(keep)[0]]

    resource = tmsv(TmsvSpec(spec.squeezing, cutoff))

    # grid wide enough for the post-splitter marginals
    nbar = max(
        float(np.real(np.sum(np.diag(work.data).real * _total_photon_diag(m, cutoff)))),
        math.sinh(spec.squeezing) ** 2,
    )
    span = 6.0 * math.sqrt(nbar + 1.0)
    x_grid = np.linspace(-span, span, grid_points)
    f0 = quadrature_wavefunctions(x_grid, cutoff)  # (d, Ng), theta = 0
    fp = f0.astype(np.complex128) * ((-1j) ** np.arange(d))[:, None]
    fp_t = fp.T  # (Ng, d) projector rows for the p quadrature

    streams = []
    for ket in kets:
        psi = np.kron(ket, resource.amplitudes).reshape((d,) * (m + 2))
        psi_state = FockKet(m + 2, cutoff, psi.reshape(-1) / np.linalg.norm(psi), normalized=True)
        mixed = beam_splitter(psi_state, (mode, m), 0.5, 0.0, norm_tol=1e-3)
        arr = mixed.amplitudes / mixed.norm()
        arr = arr.reshape((d,) * (m + 2))
        moved = np.moveaxis(arr, mode, 0).reshape(d, -1)
        a1 = f0.T @ moved  # (Ng, rest)
        pdf_x = np.einsum("ij,ij->i", a1, a1.conj()).real
        cdf_x = np.cumsum(pdf_x)
        cdf_x /= cdf_x[-1]
        rest_shape = (d,) * (m + 1)
        streams.append((a1, cdf_x, rest_shape))

    if force_outcome is not None:
        x_u, p_v = force_outcome
        fx = quadrature_wavefunctions(np.array([x_u]), cutoff)[:, 0]
        fpv = quadrature_wavefunctions(np.array([p_v]), cutoff)[:, 0] * ((-1j) ** np.arange(d))
        acc = np.zeros((space_dim(m, cutoff),) * 2, dtype=np.complex128)
        for wk, ket in zip(weights, kets):
            psi = np.kron(ket, resource.amplitudes).reshape((d,) * (m + 2))
            psi /= np.linalg.norm(psi)
            mixed = beam_splitter(
                FockKet(m + 2, cutoff, psi.reshape(-1)), (mode, m), 0.5, 0.0, norm_tol=1e-3
            )
            arr = mixed.amplitudes.reshape((d,) * (m + 2))
            cond = np.tensordot(fx, np.moveaxis(arr, mode, 0), axes=([0], [0]))
            cond = np.tensordot(fpv, np.moveaxis(cond, cond.ndim - 2, 0), axes=([0], [0]))
            cond = cond / np.linalg.norm(cond)
            beta = gain * complex(x_u, p_v)
            dmat = _displacement_matrix(d, beta)
            out = np.moveaxis(np.tensordot(dmat, np.moveaxis(cond, -1, 0), axes=([1], [0])), 0, -1)
            vec = np.moveaxis(out, -1, mode).reshape(-1)
            acc += wk * np.outer(vec, vec.conj())
        return _finish_mc_state(acc, m, cutoff, mode, spec)

    prepared = (np.cumsum(weights), streams)
    n_chunks = (n_trials + chunk_size - 1) // chunk_size

    def run_chunk(ci: int) -> np.ndarray:
        rng = np.random.default_rng([seed, ci])
        count = min(chunk_size, n_trials - ci * chunk_size)
        acc = np.zeros((space_dim(m, cutoff),) * 2, dtype=np.complex128)
        for _ in range(count):
            out = _teleport_once(prepared, x_grid, gain, rng, fp_t)
            vec = np.moveaxis(out, -1, mode).reshape(-1)
            acc += np.outer(vec, vec.conj())
        return acc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, range(n_chunks)))
    else:
        parts = [run_chunk(ci) for ci in range(n_chunks)]
    total = np.zeros((space_dim(m, cutoff),) * 2, dtype=np.complex128)
    for part in parts:
        total += part
    return _finish_mc_state(total / n_trials, m, cutoff, mode, spec)


def _total_photon_diag(modes: int, cutoff: int) -> np.ndarray:
    from .fock import occupations

    return occupations(modes, cutoff).sum(axis=1)


def _finish_mc_state(acc: np.ndarray, modes: int, cutoff: int, mode: int,
                     spec: ChannelSpec) -> FockDensityMatrix:
    flat = 0.5 * (acc + acc.conj().T)
    flat /= np.trace(flat).real
    out = FockDensityMatrix(modes, cutoff, flat)
    if spec.dephasing < 1.0:
        out = dephase(out, mode, spec.dephasing)
    if spec.post_loss < 1.0:
        out = apply_pure_loss(out, mode, spec.post_loss)
    return out
