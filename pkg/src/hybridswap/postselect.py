"""Post-selection analysis of the swapped state.

Two copies of the two-mode state are projected onto the one-photon-per-site
subspace; everything downstream (success probability, purified 4x4 block,
CHSH correlations, post-selected qubit teleportation) is computed
analytically from the five numbers (p00, p01, p10, p11, d) of the two-qubit
subspace. The purified block lives on a two-qubit carrier whose basis order
is {A1D1, A1D2, A2D1, A2D2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import FockDensityMatrix, basis_index, tensor
from .negativity import log_negativity

CANONICAL_ANGLES = (0.0, math.pi / 4.0, 3.0 * math.pi / 8.0, math.pi / 8.0)


@dataclass(frozen=True)
class QubitBlock:
    """Five-number summary of the two-qubit subspace of a two-mode state.

    p_ij is the probability of i photons in the first and j in the second
    mode; `coherence` is the <01|rho|10> element.
    """

    p00: float
    p01: float
    p10: float
    p11: float
    coherence: complex

    def __post_init__(self):
        probs = (self.p00, self.p01, self.p10, self.p11)
        if any(p < -1e-12 for p in probs):
            raise ValueError(f"negative block probability in {probs}")
        if sum(probs) > 1.0 + 1e-9:
            raise ValueError(f"block probabilities sum to {sum(probs)!r} > 1")
        if abs(self.coherence) ** 2 > self.p01 * self.p10 + 1e-9:
            raise ValueError("block coherence exceeds sqrt(p01 p10)")


def extract_qubit_block(rho: FockDensityMatrix) -> QubitBlock:
    """Read the {00, 01, 10, 11} subspace of a two-mode state."""
    if rho.modes != 2:
        raise ValueError("qubit-block extraction expects a two-mode state")
    c = rho.cutoff

    def diag(i, j):
        k = basis_index((i, j), c)
        return float(rho.data[k, k].real)

    d = complex(rho.data[basis_index((0, 1), c), basis_index((1, 0), c)])
    return QubitBlock(diag(0, 0), diag(0, 1), diag(1, 0), diag(1, 1), d)


def success_probability(block: QubitBlock) -> float:
    """P = 2(p00 p11 + p01 p10), the trace of the post-selected subspace."""
    return 2.0 * (block.p00 * block.p11 + block.p01 * block.p10)


def xy_weights(block: QubitBlock) -> tuple[float, float, float]:
    """Normalized weights x = 2 p01 p10 / P and y = 2|d|^2 / P, plus P."""
    p = success_probability(block)
    if p <= 0.0:
        raise ValueError("no post-selectable events (P = 0)")
    x = 2.0 * block.p01 * block.p10 / p
    y = 2.0 * abs(block.coherence) ** 2 / p
    return x, y, p


def purify(block: QubitBlock) -> tuple[FockDensityMatrix, float]:
    """Post-selected two-copy state on {A1D1, A1D2, A2D1, A2D2} and its P.

    Diagonal (p00 p11, p01 p10, p01 p10, p00 p11) with |d|^2 coherence
    between the middle entries, renormalized by P.
    """
    p = success_probability(block)
    if p <= 0.0:
        raise ValueError("no post-selectable events (P = 0)")
    a = block.p00 * block.p11
    b = block.p01 * block.p10
    coh = abs(block.coherence) ** 2
    mat = np.array(
        [
            [a, 0.0, 0.0, 0.0],
            [0.0, b, coh, 0.0],
            [0.0, coh, b, 0.0],
            [0.0, 0.0, 0.0, a],
        ],
        dtype=np.complex128,
    ) / p
    return FockDensityMatrix(2, 1, mat), p


def purify_via_tensor(rho: FockDensityMatrix) -> tuple[FockDensityMatrix, float]:
    """Same projection done on the explicit two-copy tensor product.

    Builds rho (x) rho on modes (A1, D1, A2, D2) and extracts the
    one-photon-per-site subspace; validates the analytic 4x4 construction.
    """
    if rho.modes != 2:
        raise ValueError("expects a two-mode state")
    big = tensor(rho, rho)
    c = rho.cutoff
    basis = [
        basis_index((1, 1, 0, 0), c),  # |A1 D1>
        basis_index((1, 0, 0, 1), c),  # |A1 D2>
        basis_index((0, 1, 1, 0), c),  # |A2 D1>
        basis_index((0, 0, 1, 1), c),  # |A2 D2>
    ]
    sub = big.data[np.ix_(basis, basis)]
    p = float(np.trace(sub).real)
    if p <= 0.0:
        raise ValueError("no post-selectable events (P = 0)")
    return FockDensityMatrix(2, 1, sub / p), p


def rotation_matrix(delta: float, phi: float) -> np.ndarray:
    """Joint measurement-basis rotation: delta on {A1, A2}, phi on {D1, D2}."""
    def r2(t):
        return np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])

    return np.kron(r2(delta), r2(phi))


def coincidence_probabilities(block: QubitBlock, theta_a: float, theta_d: float) -> np.ndarray:
    """2x2 table P_ij of coincidences between the A_i and D_j detectors,
    computed by the explicit rotation of the purified block."""
    rho_ps, _ = purify(block)
    r = rotation_matrix(theta_a, theta_d)
    rotated = r.T @ rho_ps.data @ r
    diag = np.real(np.diag(rotated))
    return diag.reshape(2, 2)


def chsh_correlation(block: QubitBlock, theta_a: float, theta_d: float) -> float:
    """Correlation E(theta_a, theta_d) of the post-selected state:

    (1/2)[(1 - 2x + y) cos 2(theta_a - theta_d) + (1 - 2x - y) cos 2(theta_a + theta_d)].
    """
    x, y, _ = xy_weights(block)
    return 0.5 * (
        (1.0 - 2.0 * x + y) * math.cos(2.0 * (theta_a - theta_d))
        + (1.0 - 2.0 * x - y) * math.cos(2.0 * (theta_a + theta_d))
    )


def chsh_correlation_projective(block: QubitBlock, theta_a: float, theta_d: float) -> float:
    """Same correlation from the coincidence table; the two routes must agree."""
    p = coincidence_probabilities(block, theta_a, theta_d)
    return float(p[0, 0] - p[0, 1] - p[1, 0] + p[1, 1])


def chsh_s(block: QubitBlock, angles: tuple[float, float, float, float] = CANONICAL_ANGLES) -> float:
    """S = |E(a,d) + E(a',d) - E(a,d') + E(a',d')|."""
    a, a_p, d, d_p = angles
    return abs(
        chsh_correlation(block, a, d)
        + chsh_correlation(block, a_p, d)
        - chsh_correlation(block, a, d_p)
        + chsh_correlation(block, a_p, d_p)
    )


def chsh_s_closed_form(block: QubitBlock) -> float:
    """|sqrt(2) (2x + y - 1)|, the canonical-angle value of S."""
    x, y, _ = xy_weights(block)
    return abs(math.sqrt(2.0) * (2.0 * x + y - 1.0))


def teleport_qubit(block: QubitBlock, alpha: complex, beta: complex
                   ) -> tuple[FockDensityMatrix, float, float]:
    """Teleport the dual-rail qubit alpha|X> + beta|Y> through the
    post-selected resource.

    Returns the normalized output state on {D1, D2} (carried as a one-mode
    qubit: index 0 = D1, 1 = D2), the fidelity with the ideal output, and
    the success probability P/4.
    """
    alpha, beta = complex(alpha), complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise ValueError("input qubit must be normalized")
    x, y, p = xy_weights(block)
    aa, bb = abs(alpha) ** 2, abs(beta) ** 2
    rho_out = np.array(
        [
            [aa * x + bb * (1.0 - x), alpha * np.conj(beta) * y],
            [np.conj(alpha) * beta * y, aa * (1.0 - x) + bb * x],
        ],
        dtype=np.complex128,
    )
    state = FockDensityMatrix(1, 1, rho_out)
    ideal = np.array([alpha, beta])
    fid = float(np.real(np.vdot(ideal, rho_out @ ideal)))
    closed = (aa**2 + bb**2) * x + 2.0 * aa * bb * (1.0 - x + y)
    if abs(fid - closed) > 1e-12:
        raise AssertionError("teleportation fidelity disagrees with its closed form")
    return state, closed, p / 4.0


def average_fidelity(block: QubitBlock) -> float:
    """(1 + x + y)/3, the Bloch-sphere average of the teleportation fidelity."""
    x, y, _ = xy_weights(block)
    return (1.0 + x + y) / 3.0


def mc_average_fidelity(block: QubitBlock, n_samples: int, seed: int = 0
                        ) -> tuple[float, float]:
    """Monte-Carlo Bloch-sphere average of F(alpha, beta); returns (mean, stderr)."""
    x, y, _ = xy_weights(block)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1.0, 1.0, n_samples)  # cos(theta)
    aa = (1.0 + u) / 2.0
    bb = 1.0 - aa
    f = (aa**2 + bb**2) * x + 2.0 * aa * bb * (1.0 - x + y)
    return float(f.mean()), float(f.std(ddof=1) / math.sqrt(n_samples))


@dataclass(frozen=True)
class PostSelectSummary:
    """Everything the post-selection analysis says about one swapped state."""

    success_probability: float
    x: float
    y: float
    chsh_s: float
    log_negativity_ps: float
    average_fidelity: float
    teleport_success: float
    rho_ps: FockDensityMatrix

    def to_json_dict(self) -> dict:
        from .fock import to_json_dict

        return {
            "P": self.success_probability,
            "x": self.x,
            "y": self.y,
            "S": self.chsh_s,
            "E_ps": self.log_negativity_ps,
            "F_av": self.average_fidelity,
            "tele_success": self.teleport_success,
            "rho_ps": to_json_dict(self.rho_ps),
        }


def summarize(rho_ad: FockDensityMatrix) -> PostSelectSummary:
    """Full post-selection summary of a swapped two-mode state."""
    block = extract_qubit_block(rho_ad)
    x, y, p = xy_weights(block)
    rho_ps, _ = purify(block)
    e_ps = log_negativity(rho_ps, part=[0]).log_negativity
    return PostSelectSummary(
        success_probability=p,
        x=x,
        y=y,
        chsh_s=chsh_s(block),
        log_negativity_ps=e_ps,
        average_fidelity=average_fidelity(block),
        teleport_success=p / 4.0,
        rho_ps=rho_ps,
    )
