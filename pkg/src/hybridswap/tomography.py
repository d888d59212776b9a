"""Two-mode homodyne simulation and iterative maximum-likelihood reconstruction.

Quadrature eigenstates follow the x = (a + a^dag)/sqrt(2) convention
(vacuum variance 1/2): <x; theta|n> = psi_n(x) e^{-i n theta} with psi_n the
Hermite functions. The reconstruction is the binned R*rho*R fixed point and
never inverts measurement inefficiency.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import FockDensityMatrix, partial_trace, space_dim


@dataclass(frozen=True)
class QuadratureSample:
    """One joint homodyne outcome at local-oscillator phases (theta1, theta2)."""

    theta1: float
    theta2: float
    x1: float
    x2: float


@dataclass
class TomoDataset:
    """Column store of quadrature samples plus provenance."""

    theta1: np.ndarray
    theta2: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    seed: int | None = None
    source: str = ""

    def __post_init__(self):
        cols = [np.asarray(c, dtype=np.float64) for c in (self.theta1, self.theta2, self.x1, self.x2)]
        n = len(cols[0])
        if any(len(c) != n for c in cols) or n == 0:
            raise ValueError("dataset columns must be nonempty and equally long")
        self.theta1, self.theta2, self.x1, self.x2 = cols

    def __len__(self) -> int:
        return len(self.x1)

    def __getitem__(self, i: int) -> QuadratureSample:
        return QuadratureSample(
            float(self.theta1[i]), float(self.theta2[i]), float(self.x1[i]), float(self.x2[i])
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta1", "theta2", "x1", "x2"])
        for row in zip(self.theta1, self.theta2, self.x1, self.x2):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int | None = None, source: str = "") -> "TomoDataset":
        rows = list(csv.reader(io.StringIO(text)))
        body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
        return cls(body[:, 0], body[:, 1], body[:, 2], body[:, 3], seed=seed, source=source)

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "n": len(self),
            "schedule": [[t1, t2] for t1, t2 in sorted({(float(a), float(b)) for a, b in zip(self.theta1, self.theta2)})],
            "source": self.source,
        }


def quadrature_wavefunctions(x, n_max: int) -> np.ndarray:
    """Hermite-function amplitudes <x|n> for n = 0..n_max, shape (n_max+1, len(x)).

    Stable two-term recurrence; vacuum row integrates to variance 1/2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty((n_max + 1, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def phased_wavefunctions(x, n_max: int, theta: float) -> np.ndarray:
    """<x; theta|n> = psi_n(x) exp(-i n theta)."""
    psi = quadrature_wavefunctions(x, n_max).astype(np.complex128)
    return psi * np.exp(-1j * theta * np.arange(n_max + 1))[:, None]


def _single_mode_sigma(rho: FockDensityMatrix, mode: int) -> float:
    """Upper bound on the quadrature standard deviation of one mode over all phases."""
    red = partial_trace(rho, [mode]) if rho.modes > 1 else rho
    d = red.cutoff + 1
    n = np.arange(d)
    a = np.diag(np.sqrt(n[1:]), 1)
    nbar = float(np.real(np.sum(np.diag(red.data) * n)))
    mean_a = complex(np.trace(red.data @ a))
    mean_aa = complex(np.trace(red.data @ (a @ a)))
    var = nbar + 0.5 + abs(mean_aa) + 2.0 * abs(mean_a) ** 2
    return math.sqrt(max(var, 0.5))


def default_grid(rho: FockDensityMatrix, points: int = 201, n_sigma: float = 6.0) -> np.ndarray:
    """Symmetric quadrature grid covering +-n_sigma standard deviations."""
    span = n_sigma * max(_single_mode_sigma(rho, m) for m in range(rho.modes))
    return np.linspace(-span, span, points)


def homodyne_pdf(rho: FockDensityMatrix, phases: tuple[float, float], grid: np.ndarray,
                 norm_tol: float = 1e-4) -> np.ndarray:
    """Joint density p(x1, x2) of a two-mode state on grid x grid.

    Raises when the grid misses more than `norm_tol` of the probability,
    which signals a too coarse or too narrow grid.
    """
    if rho.modes != 2:
        raise ValueError("homodyne_pdf expects a two-mode state")
    d = rho.cutoff + 1
    f1 = phased_wavefunctions(grid, rho.cutoff, phases[0])
    f2 = phased_wavefunctions(grid, rho.cutoff, phases[1])
    g1 = np.einsum("mi,ni->imn", f1, f1.conj())
    g2 = np.einsum("mj,nj->jmn", f2, f2.conj())
    rho_r = rho.data.reshape(d, d, d, d)
    t = np.einsum("imn,mpnq->ipq", g1, rho_r)
    pdf = np.einsum("ipq,jpq->ij", t, g2).real
    pdf = np.clip(pdf, 0.0, None)
    dx = grid[1] - grid[0]
    total = pdf.sum() * dx * dx
    if abs(total - rho.trace()) > norm_tol:
        raise ValueError(
            f"grid too coarse: density integrates to {total!r} (expected {rho.trace()!r})"
        )
    return pdf


def phase_schedule(n_phases: int = 12, theta_sum: float = 0.0) -> list[tuple[float, float]]:
    """Uniform scan of theta1 - theta2 over [0, pi) with theta1 + theta2 fixed."""
    if n_phases < 1:
        raise ValueError("need at least one phase pair")
    pairs = []
    for k in range(n_phases):
        delta = math.pi * k / n_phases
        t1 = (theta_sum + delta) / 2.0 % (2 * math.pi)
        t2 = (theta_sum - delta) / 2.0 % (2 * math.pi)
        pairs.append((t1, t2))
    return pairs


def sample_inverse_cdf(pdf_values: np.ndarray, grid: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Continuous draws from a density tabulated on a uniform grid.

    Grid values act as per-cell masses; draws are uniform within a cell.
    """
    w = np.clip(np.asarray(pdf_values, dtype=np.float64), 0.0, None)
    total = w.sum()
    if total <= 0:
        raise ValueError("density is identically zero on the grid")
    cdf = np.cumsum(w) / total
    dx = grid[1] - grid[0]
    idx = np.searchsorted(cdf, u, side="left")
    idx = np.clip(idx, 0, len(grid) - 1)
    lower = np.concatenate(([0.0], cdf))[idx]
    frac = (u - lower) / np.maximum(cdf[idx] - lower, 1e-300)
    return grid[idx] - 0.5 * dx + frac * dx


def sample_homodyne(
    rho: FockDensityMatrix,
    schedule: list[tuple[float, float]] | None = None,
    n: int = 100_000,
    seed: int = 0,
    grid_points: int = 2001,
    source: str = "",
) -> TomoDataset:
    """Draw n joint homodyne samples, split evenly across the phase schedule.

    Each phase pair gets its own counter-derived RNG stream, so the dataset
    is reproducible and independent of evaluation order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if schedule is None:
        schedule = phase_schedule()
    grid = default_grid(rho, points=grid_points)
    dx = grid[1] - grid[0]
    counts = [n // len(schedule)] * len(schedule)
    for k in range(n - sum(counts)):
        counts[k] += 1
    cols = {key: [] for key in ("theta1", "theta2", "x1", "x2")}
    for k, ((t1, t2), n_k) in enumerate(zip(schedule, counts)):
        if n_k == 0:
            continue
        rng = np.random.default_rng([seed, k])
        pdf = homodyne_pdf(rho, (t1, t2), grid)
        marginal = pdf.sum(axis=1)
        x1 = sample_inverse_cdf(marginal, grid, rng.random(n_k))
        # condition on the sampled position; rows are blended linearly between
        # neighbouring grid rows to keep the conditional continuous in x1
        pos = np.clip((x1 - grid[0]) / dx, 0.0, len(grid) - 1.0)
        left = np.clip(pos.astype(int), 0, len(grid) - 2)
        lam = pos - left
        x2 = np.empty(n_k)
        for start in range(0, n_k, 1024):
            sl = slice(start, min(start + 1024, n_k))
            rows = (1.0 - lam[sl, None]) * pdf[left[sl]] + lam[sl, None] * pdf[left[sl] + 1]
            rows = np.clip(rows, 0.0, None)
            cdf = np.cumsum(rows, axis=1)
            cdf /= cdf[:, -1:]
            u = rng.random(sl.stop - sl.start)
            idx = np.clip((cdf < u[:, None]).sum(axis=1), 0, len(grid) - 1)
            lower = np.where(idx > 0, np.take_along_axis(cdf, np.maximum(idx - 1, 0)[:, None], 1)[:, 0], 0.0)
            upper = np.take_along_axis(cdf, idx[:, None], 1)[:, 0]
            frac = (u - lower) / np.maximum(upper - lower, 1e-300)
            x2[sl] = grid[idx] - 0.5 * dx + frac * dx
        cols["theta1"].append(np.full(n_k, t1))
        cols["theta2"].append(np.full(n_k, t2))
        cols["x1"].append(x1)
        cols["x2"].append(x2)
    return TomoDataset(
        np.concatenate(cols["theta1"]),
        np.concatenate(cols["theta2"]),
        np.concatenate(cols["x1"]),
        np.concatenate(cols["x2"]),
        seed=seed,
        source=source,
    )


def _bin_overlap_matrices(edges: np.ndarray, n_max: int) -> np.ndarray:
    """O[b, m, n] = integral over bin b of psi_m(x) psi_n(x) dx.

    The first and last bins are extended to -inf/+inf so that the binned
    POVM sums exactly to identity for every phase.
    """
    order = 16
    nodes, weights = np.polynomial.legendre.leggauss(order)
    n_bins = len(edges) - 1
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
    psi = quadrature_wavefunctions(xs, n_max).reshape(n_max + 1, n_bins, order)
    o = np.einsum("mbq,nbq,q,b->bmn", psi, psi, weights, half)
    # right tail by brute quadrature, left tail by parity of psi_m psi_n
    tail_nodes = np.linspace(edges[-1], edges[-1] + 12.0, 4001)
    psi_t = quadrature_wavefunctions(tail_nodes, n_max)
    right = np.einsum("mq,nq->mn", psi_t, psi_t * np.gradient(tail_nodes))
    parity = (-1.0) ** (np.add.outer(np.arange(n_max + 1), np.arange(n_max + 1)))
    o[-1] += right
    o[0] += parity * right
    return o


@dataclass
class MleDiagnostics:
    iterations: int
    final_loglik: float
    converged: bool
    loglik_history: np.ndarray = field(repr=False)
    dilutions: int = 0

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_loglik": self.final_loglik,
            "converged": self.converged,
            "dilutions": self.dilutions,
        }


def mle_reconstruct(
    data: TomoDataset,
    cutoff: int,
    max_iter: int = 2000,
    tol: float = 1e-7,
    n_bins: int = 201,
    span: float | None = None,
) -> tuple[FockDensityMatrix, MleDiagnostics]:
    """Iterative R*rho*R maximum-likelihood reconstruction of a two-mode state.

    Quadrature outcomes are binned into `n_bins` equal bins per axis (edge
    bins extended to infinity); the log-likelihood is checked to be
    nondecreasing, falling back to a diluted step when a plain iteration
    would decrease it. No inefficiency compensation is applied.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    d = cutoff + 1
    dim = space_dim(2, cutoff)
    if span is None:
        span = 6.0 * max(float(np.std(data.x1)), float(np.std(data.x2)), math.sqrt(0.5))
    edges = np.linspace(-span, span, n_bins + 1)
    overlaps = _bin_overlap_matrices(edges, cutoff)

    # group samples by phase pair and histogram them on the bin grid
    keys = np.round(np.stack([data.theta1, data.theta2], axis=1), 12)
    phase_pairs, inverse = np.unique(keys, axis=0, return_inverse=True)
    povm1, povm2, counts = [], [], []
    for p, (t1, t2) in enumerate(phase_pairs):
        sel = inverse == p
        i1 = np.clip(np.digitize(data.x1[sel], edges) - 1, 0, n_bins - 1)
        i2 = np.clip(np.digitize(data.x2[sel], edges) - 1, 0, n_bins - 1)
        hist = np.zeros((n_bins, n_bins))
        np.add.at(hist, (i1, i2), 1.0)
        counts.append(hist)
        delta_n = np.subtract.outer(np.arange(d), np.arange(d))
        povm1.append(overlaps * np.exp(1j * t1 * delta_n)[None, :, :])
        povm2.append(overlaps * np.exp(1j * t2 * delta_n)[None, :, :])

    n_total = float(len(data))
    rho = np.eye(dim, dtype=np.complex128) / dim
    history = []
    dilutions = 0
    converged = False

    def loglik_and_r(r_mat):
        # longdouble accumulation keeps the iteration-to-iteration loglik
        # noise far below the 1e-9 monotonicity slack
        ll = np.longdouble(0.0)
        r_acc = np.zeros((d, d, d, d), dtype=np.complex128)
        rho_r = r_mat.reshape(d, d, d, d)
        for p in range(len(phase_pairs)):
            b1, b2, c = povm1[p], povm2[p], counts[p]
            t = np.einsum("mpnq,inm->ipq", rho_r, b1)
            probs = np.einsum("ipq,jqp->ij", t, b2).real
            probs = np.clip(probs, 1e-300, None)
            mask = c > 0
            ll += np.sum((c[mask] * np.log(probs[mask])).astype(np.longdouble))
            w = np.where(mask, c / probs, 0.0)
            m2 = np.einsum("ij,jmn->imn", w, b2)
            r_acc += np.einsum("imn,ipq->mpnq", b1, m2)
        return float(ll), r_acc.reshape(dim, dim) / n_total

    ll, r_op = loglik_and_r(rho)
    history.append(ll)
    it = 0
    for it in range(1, max_iter + 1):
        candidate = r_op @ rho @ r_op
        candidate /= np.trace(candidate).real
        new_ll, new_r = loglik_and_r(candidate)
        if new_ll < ll - 1e-9:
            # diluted step keeps the likelihood monotone near stationary points
            eps, recovered = 0.5, False
            while eps > 1e-6:
                dilutions += 1
                mixed = np.eye(dim, dtype=np.complex128) + eps * r_op
                candidate = mixed @ rho @ mixed
                candidate /= np.trace(candidate).real
                new_ll, new_r = loglik_and_r(candidate)
                if new_ll >= ll - 1e-9:
                    recovered = True
                    break
                eps *= 0.5
            if not recovered:
                # likelihood is stationary to floating precision; keep the
                # previous iterate rather than record a decreasing step
                converged = True
                it -= 1
                break
        rho = 0.5 * (candidate + candidate.conj().T)
        delta = new_ll - ll
        ll, r_op = new_ll, new_r
        history.append(ll)
        # an absolute log-likelihood change IS the relative likelihood change
        if abs(delta) < tol:
            converged = True
            break

    result = FockDensityMatrix(2, cutoff, rho / np.trace(rho).real)
    diag = MleDiagnostics(
        iterations=it,
        final_loglik=ll,
        converged=converged,
        loglik_history=np.asarray(history),
        dilutions=dilutions,
    )
    return result, diag


def bootstrap_errors(
    data: TomoDataset,
    statistic,
    cutoff: int,
    n_resamples: int = 200,
    seed: int = 0,
    **mle_kwargs,
) -> dict[str, float]:
    """Bootstrap standard errors of statistics of the reconstructed state.

    `statistic` maps a FockDensityMatrix to a dict of named floats; each
    resample redraws the dataset with replacement and reconstructs.
    """
    collected: dict[str, list[float]] = {}
    for k in range(n_resamples):
        rng = np.random.default_rng([seed, k])
        idx = rng.integers(0, len(data), size=len(data))
        resampled = TomoDataset(
            data.theta1[idx], data.theta2[idx], data.x1[idx], data.x2[idx],
            seed=data.seed, source=data.source,
        )
        rho, _ = mle_reconstruct(resampled, cutoff, **mle_kwargs)
        for key, val in statistic(rho).items():
            collected.setdefault(key, []).append(float(val))
    return {key: float(np.std(vals, ddof=1)) for key, vals in collected.items()}
