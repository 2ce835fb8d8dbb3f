"""Time-scan drivers and analysis tools for correlation backflows.

Backflow detection over a time grid with bisection-refined onsets, the
entanglement-breaking time of an evolved maximally entangled pair, Haar
sampling of pure states with a vectorized mutual-information scan, the
generalized-amplitude-damping scan over weakly entangled probes, a spectral
first/second-derivative toolkit for functions of parametrized Hermitian
families, the closed-form Hessian spectrum of the mutual-information rate at
stationary states of random-unitary qubit dynamics, and the zero-eigenspace
coordinate-length derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import prod
from typing import Callable, Sequence

import numpy as np

from . import correlations, qmat
from .channels import GadcChannel, apply_map
from .errors import (
    BoundaryStateError,
    CrossingTooCloseError,
    NeverBreakingError,
    PrecisionLossWarning,
    ZeroVectorError,
)
from .numutil import chunk_indices, parallel_map, thread_count
from .qmat import PAULIS, DensityState, maximally_entangled

ONSET_MARGIN = 1e-10
ONSET_REFINE_TOL = 1e-4
EPS_MACHINE = float(np.finfo(float).eps)

_PAULI_PROD = np.array([np.kron(PAULIS[i], PAULIS[j]) for i in range(4) for j in range(4)])


# ---------------------------------------------------------------------------
# Trajectories and backflow reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    """An initial state, the channel evolving one subsystem, and a time grid."""

    initial: np.ndarray
    channel: object
    dims: tuple[int, ...]
    grid: np.ndarray
    subsystem: int = -1

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with >= 2 points")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "initial", qmat._as_matrix(self.initial))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        sub = self.subsystem
        if sub < 0:
            sub += len(self.dims)
        object.__setattr__(self, "subsystem", sub)

    def state_at(self, t: float) -> np.ndarray:
        return apply_map(self.channel.as_affine(t), self.initial, self.dims, self.subsystem)

    def measure_at(self, measure: Callable, t: float) -> float:
        return float(measure(self.state_at(t), self.dims))

    def measure_series(self, measure: Callable) -> np.ndarray:
        return np.array([self.measure_at(measure, t) for t in self.grid])


@dataclass(frozen=True)
class BackflowReport:
    """Detected increase intervals of a correlation measure along a trajectory."""

    measure: str
    onsets: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    max_derivative: float

    @property
    def detected(self) -> bool:
        return bool(self.intervals)


def _increase_intervals(grid: np.ndarray, series: np.ndarray, margin: float):
    diffs = np.diff(series)
    rising = diffs > margin
    intervals = []
    i = 0
    n = rising.size
    while i < n:
        if rising[i]:
            j = i
            while j + 1 < n and rising[j + 1]:
                j += 1
            intervals.append((float(grid[i]), float(grid[j + 1]), i))
            i = j + 1
        i += 1
    max_deriv = float(np.max(diffs / np.diff(grid))) if diffs.size else 0.0
    return intervals, max_deriv


def scan_backflow(measure: Callable, traj: Trajectory, margin: float = ONSET_MARGIN,
                  refine_tol: float = ONSET_REFINE_TOL, name: str | None = None) -> BackflowReport:
    """Locate intervals where a correlation measure increases along a trajectory.

    Onsets are the first grid times of each increase interval, refined by
    bisection on the local (central-difference) time derivative to refine_tol.
    Empty report on CP-divisible dynamics.
    """
    series = traj.measure_series(measure)
    raw, max_deriv = _increase_intervals(traj.grid, series, margin)
    onsets = []
    intervals = []
    for (start, end, idx) in raw:
        onsets.append(_refine_onset(measure, traj, idx, refine_tol))
        intervals.append((start, end))
    label = name or getattr(measure, "__name__", "measure")
    return BackflowReport(measure=label, onsets=tuple(onsets), intervals=tuple(intervals),
                          max_derivative=max_deriv)


def _refine_onset(measure: Callable, traj: Trajectory, idx: int, tol: float) -> float:
    grid = traj.grid
    if idx == 0:
        return float(grid[0])
    delta = min(1e-5, float(grid[idx] - grid[idx - 1]) / 4.0)

    def deriv(t: float) -> float:
        lo = max(t - delta, float(grid[0]))
        return traj.measure_at(measure, t + delta) - traj.measure_at(measure, lo)

    lo, hi = float(grid[idx - 1]), float(grid[idx + 1] if idx + 1 < grid.size else grid[idx])
    if deriv(lo) > 0:
        return float(grid[idx])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def find_t_eb(channel, tol: float = 1e-3, t_max: float = 20.0, coarse: float = 0.05,
              floor: float = 1e-12) -> float:
    """First time the negativity of the evolved maximally entangled pair hits 0.

    Coarse scan followed by bisection to tol; raises NeverBreakingError when
    the negativity stays positive up to t_max.
    """
    phi = maximally_entangled(2)

    def neg(t: float) -> float:
        state = apply_map(channel.as_affine(t), phi, (2, 2), subsystem=1)
        return correlations.negativity(state, (2, 2), transpose=0)

    t_prev, n_prev = 0.0, neg(0.0)
    t = coarse
    while t <= t_max + 1e-12:
        n_t = neg(t)
        if n_t <= floor:
            if n_prev <= floor:
                return t_prev  # already separable at the previous point
            lo, hi = t_prev, t
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if neg(mid) > floor:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        t_prev, n_prev = t, n_t
        t += coarse
    raise NeverBreakingError(f"negativity still {n_prev:.3e} at t = {t_max}")


# ---------------------------------------------------------------------------
# Random pure states and vectorized mutual-information scans
# ---------------------------------------------------------------------------

def sample_pure_vectors(dims: Sequence[int], count: int, seed: int) -> np.ndarray:
    """Haar-random pure state vectors, one per row: complex Gaussian amplitudes
    normalized; deterministic for a fixed seed."""
    d = prod(int(x) for x in dims)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, d)) + 1j * rng.normal(size=(count, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_pure(dims: Sequence[int], count: int, seed: int) -> list[DensityState]:
    """Haar-random pure DensityStates (see sample_pure_vectors)."""
    dims = tuple(int(x) for x in dims)
    vecs = sample_pure_vectors(dims, count, seed)
    return [DensityState(np.outer(v, v.conj()), dims) for v in vecs]


def pauli_coords(states: np.ndarray) -> np.ndarray:
    """Tr(rho sigma_i (x) sigma_j)/4 coordinates of stacked two-qubit states."""
    return np.real(np.einsum("...ab,kba->...k", states, _PAULI_PROD)) / 4.0


def pauli_states(coords: np.ndarray) -> np.ndarray:
    return np.einsum("...k,kab->...ab", coords.astype(complex), _PAULI_PROD)


def _binary_entropy(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    out = np.zeros_like(x)
    for y in (x, 1.0 - x):
        mask = y > 1e-14
        out = out - np.where(mask, y * np.log(np.where(mask, y, 1.0)), 0.0)
    return out


def _map_arrays(channel, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = np.empty((grid.size, 3))
    w = np.empty((grid.size, 3))
    for k, t in enumerate(grid):
        qmap = channel.as_affine(float(t))
        lam[k] = qmap.lambdas
        w[k] = qmap.translation
    return lam, w


def _evolve_coords(coords: np.ndarray, lam: np.ndarray, w: np.ndarray) -> np.ndarray:
    # coords (N, 16) -> (T, N, 4, 4) with the channel acting on the second
    # (system) Pauli index: a_{i,j} -> lam_j a_{i,j} + w_j a_{i,0}.
    n = coords.shape[0]
    c = coords.reshape(n, 4, 4)
    t = lam.shape[0]
    lfull = np.ones((t, 4))
    lfull[:, 1:] = lam
    wfull = np.zeros((t, 4))
    wfull[:, 1:] = w
    return c[None, :, :, :] * lfull[:, None, None, :] + wfull[:, None, None, :] * c[None, :, :, :1]


def _mi_from_coords4(coords4: np.ndarray) -> np.ndarray:
    # coords4 (..., 4, 4) -> mutual information (...,)
    w_a = 4.0 * np.linalg.norm(coords4[..., 1:, 0], axis=-1)
    w_s = 4.0 * np.linalg.norm(coords4[..., 0, 1:], axis=-1)
    s_a = _binary_entropy((1.0 + w_a) / 2.0)
    s_s = _binary_entropy((1.0 + w_s) / 2.0)
    states = pauli_states(coords4.reshape(*coords4.shape[:-2], 16))
    vals = np.linalg.eigvalsh(states)
    safe = np.where(vals > 1e-14, vals, 1.0)
    s_joint = -np.sum(np.where(vals > 1e-14, vals * np.log(safe), 0.0), axis=-1)
    return s_a + s_s - s_joint


def mi_series(channel, vectors: np.ndarray, grid: np.ndarray, chunk: int = 128,
              workers: int | None = None) -> np.ndarray:
    """Mutual information I(t) for a batch of two-qubit pure initial states
    under 1 (x) Lambda_t; returns an array of shape (len(grid), n_states)."""
    grid = np.asarray(grid, dtype=float)
    states0 = np.einsum("na,nb->nab", vectors, vectors.conj())
    coords = pauli_coords(states0)
    lam, w = _map_arrays(channel, grid)
    out = np.empty((grid.size, coords.shape[0]))

    def run(piece):
        lo, hi = piece
        coords_t = _evolve_coords(coords, lam[lo:hi], w[lo:hi])
        out[lo:hi] = _mi_from_coords4(coords_t)

    parallel_map(run, list(chunk_indices(grid.size, chunk)),
                 workers=workers if workers is not None else thread_count())
    return out


def _first_onset_indices(series: np.ndarray, margin: float) -> np.ndarray:
    # series (T, N): first index i per column with series[i+1]-series[i] > margin.
    rising = np.diff(series, axis=0) > margin
    any_rise = rising.any(axis=0)
    first = rising.argmax(axis=0).astype(float)
    first[~any_rise] = np.nan
    return first


SCAN_MARGIN = 1e-12


def min_t_nm_scan(channel, count: int, grid: np.ndarray, seed: int = 0,
                  margin: float = SCAN_MARGIN, refine_tol: float = ONSET_REFINE_TOL,
                  workers: int | None = None):
    """Minimum mutual-information backflow onset over Haar-random pure states.

    Returns (min onset time, argmin state vector, per-state onset times with
    NaN for states showing no backflow). The argmin onset is refined by
    bisection; the rest are grid-resolution values.

    The increase margin defaults to 1e-12 rather than the generic 1e-10 of
    scan_backflow: the earliest-onset states are nearly product states whose
    mutual information tops out around 1e-4 .. 1e-6, so an absolute 1e-10
    threshold would systematically delay their detected onsets, while 1e-12
    still sits three decades above the arithmetic noise of the scan.
    """
    grid = np.asarray(grid, dtype=float)
    vectors = sample_pure_vectors((2, 2), count, seed)
    series = mi_series(channel, vectors, grid, workers=workers)
    idx = _first_onset_indices(series, margin)
    onsets = np.where(np.isnan(idx), np.nan, grid[np.nan_to_num(idx, nan=0.0).astype(int)])
    if np.all(np.isnan(onsets)):
        return float("nan"), None, onsets
    best = int(np.nanargmin(onsets))
    traj = Trajectory(np.outer(vectors[best], vectors[best].conj()), channel, (2, 2), grid)
    refined = _refine_onset(lambda m, dims: correlations.mutual_information(m, dims), traj,
                            int(idx[best]), refine_tol)
    return float(refined), vectors[best], onsets


# ---------------------------------------------------------------------------
# GADC scan over weakly entangled probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsilonScanResult:
    eps: float
    interval: tuple[float, float] | None
    mi_max: float
    precision_loss: bool


def gadc_epsilon_scan(eps_list: Sequence[float], grid: np.ndarray | None = None,
                      margin: float | None = None) -> list[EpsilonScanResult]:
    """Mutual-information increase intervals of sqrt(1-eps^2)|00> + eps|11>
    under the two-parameter generalized amplitude damping, per eps.

    Valid for eps >= 1e-6 in double precision; results carry a precision-loss
    flag when the whole signal sits within 1e3 machine epsilons of zero. The
    increase margin scales with the eps^2 signal size unless given.
    """
    gadc = GadcChannel()
    if grid is None:
        grid = np.arange(0.10, 0.35 + 1e-12, 2.5e-4)
    grid = np.asarray(grid, dtype=float)
    results = []
    for eps in eps_list:
        eps = float(eps)
        vec = np.zeros(4, dtype=complex)
        vec[0] = np.sqrt(1.0 - eps * eps)
        vec[3] = eps
        series = mi_series(gadc, vec[None, :], grid, workers=1)[:, 0]
        mi_max = float(np.max(series))
        loss = mi_max < 1e3 * EPS_MACHINE
        if loss:
            warnings.warn(f"eps = {eps}: mutual information at machine-noise level",
                          PrecisionLossWarning)
        use_margin = margin if margin is not None else max(1e-14, 1e-4 * eps * eps
                                                           * float(np.mean(np.diff(grid))) / 1e-3)
        raw, _ = _increase_intervals(grid, series, use_margin)
        interval = None
        if raw:
            interval = (raw[0][0], raw[-1][1])
        results.append(EpsilonScanResult(eps=eps, interval=interval, mi_max=mi_max,
                                         precision_loss=loss))
    return results


# ---------------------------------------------------------------------------
# Spectral derivative toolkit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralFunction:
    """A symmetric function of eigenvalues with its gradient and Hessian in
    the eigenvalues."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


def entropy_spectral(floor: float = 1e-14) -> SpectralFunction:
    def value(lam):
        lam = np.asarray(lam)
        safe = np.where(lam > floor, lam, 1.0)
        return float(-np.sum(np.where(lam > floor, lam * np.log(safe), 0.0)))

    def grad(lam):
        return -(np.log(np.maximum(lam, floor)) + 1.0)

    def hess(lam):
        return np.diag(-1.0 / np.maximum(lam, floor))

    return SpectralFunction(value=value, grad=grad, hess=hess)


def trace_spectral() -> SpectralFunction:
    return SpectralFunction(value=lambda lam: float(np.sum(lam)),
                            grad=lambda lam: np.ones_like(lam),
                            hess=lambda lam: np.zeros((lam.size, lam.size)))


def sum_squares_spectral() -> SpectralFunction:
    return SpectralFunction(value=lambda lam: float(np.sum(lam ** 2)),
                            grad=lambda lam: 2.0 * np.asarray(lam),
                            hess=lambda lam: 2.0 * np.eye(lam.size))


def spectral_derivs(fn: SpectralFunction, a: np.ndarray, da: Sequence[np.ndarray],
                    d2a: dict | None = None, deg_tol: float = 1e-12,
                    cross_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of f(A(a)) at a point, from the eigensystem of A.

    df/da_i = sum_k f'_k u_k^dag (dA/da_i) u_k, and the second derivatives add
    the eigenvector-rotation terms with energy denominators (restricted to
    non-degenerate pairs) plus the degenerate-pair correction weighted by
    f''. Exactly degenerate eigenvalues (within deg_tol) are grouped; a pair
    closer than cross_tol but not grouped raises CrossingTooCloseError.
    d2a maps index pairs (i, j) to the constant second-derivative matrices
    (omitted pairs are zero, which covers linear families).
    """
    a = np.asarray(a, dtype=complex)
    vals, vecs = np.linalg.eigh(a)
    n = vals.size
    # Group exactly-degenerate eigenvalues (sorted ascending).
    group = np.zeros(n, dtype=int)
    for k in range(1, n):
        group[k] = group[k - 1] + (0 if vals[k] - vals[k - 1] <= deg_tol else 1)
    for k in range(1, n):
        gap = vals[k] - vals[k - 1]
        if group[k] != group[k - 1] and gap < cross_tol:
            raise CrossingTooCloseError(
                f"eigenvalue gap {gap:.3e} below {cross_tol:.1e} but above {deg_tol:.1e}")

    w = np.stack([vecs.conj().T @ np.asarray(m, dtype=complex) @ vecs for m in da])
    h1 = np.real(np.einsum("ikk->ik", w))
    f1 = np.asarray(fn.grad(vals), dtype=float)
    f2 = np.asarray(fn.hess(vals), dtype=float)
    gradient = h1 @ f1

    hess = h1 @ f2 @ h1.T
    diff = vals[:, None] - vals[None, :]
    distinct = group[:, None] != group[None, :]
    # Cross term of h_ij^k: sum over l outside k's group of alpha_ij^{kl}
    # divided by (lam_k - lam_l), weighted by f'_k.
    b = f1[:, None] * np.where(distinct, 1.0 / np.where(distinct, diff, 1.0), 0.0)
    hess = hess + 2.0 * np.real(np.einsum("kl,ikl,jkl->ij", b, w, w.conj(), optimize=True))
    same_upper = (~distinct) & (np.arange(n)[:, None] < np.arange(n)[None, :])
    d_weights = np.where(same_upper, np.diag(f2)[:, None], 0.0)
    hess = hess + 2.0 * np.real(np.einsum("kl,ikl,jkl->ij", d_weights, w, w.conj(),
                                          optimize=True))
    if d2a:
        for (i, j), m in d2a.items():
            term = float(np.sum(f1 * np.real(np.einsum("ik,ij,jk->k", vecs.conj(),
                                                       np.asarray(m, dtype=complex), vecs))))
            hess[i, j] += term
            if i != j:
                hess[j, i] += term
    return gradient, (hess + hess.T) / 2.0


# ---------------------------------------------------------------------------
# Mutual-information rate Hessian at stationary states
# ---------------------------------------------------------------------------

def _contraction_rates(gx: float, gy: float, gz: float) -> np.ndarray:
    # Decay rate c_i of coordinate a_{i_A, i_S} in the convention of the
    # closed-form Hessian spectrum: a system Pauli index contracts at the
    # pairwise rate sum, the identity not at all.
    per_pauli = np.array([0.0, gy + gz, gx + gz, gx + gy])
    return np.tile(per_pauli, 4)[1:]


def mi_rate_hessian(gx: float, gy: float, gz: float, a12: float) -> np.ndarray:
    """Numeric Hessian (15 x 15) of d/dt I at the stationary state
    rho = 1/4 (1 (x) 1) + a12 (sigma_z (x) 1), over the 15 traceless
    coordinates, via the spectral-derivative toolkit.

    The derivative convention matches the closed-form spectrum: coordinates
    contract as da_i/ds = -c_i a_i with c_i the pairwise rate sum of the
    system Pauli factor. Since the base point is stationary, the Hessian of
    d/dt I = -sum_i c_i a_i dI/da_i reduces to
    H_jk = -(c_j + c_k) d2I/da_j da_k, needing only second derivatives of I.
    """
    basis = qmat.operator_basis((2, 2))
    e = basis.elements
    fn = entropy_spectral()
    rho0 = 0.25 * np.eye(4, dtype=complex) + a12 * e[12]
    da_joint = [e[i] for i in range(1, 16)]
    _, h_joint = spectral_derivs(fn, rho0, da_joint)

    zero2 = np.zeros((2, 2), dtype=complex)
    # The system marginal depends on coordinates 1..3, the ancilla marginal on
    # 4, 8, 12; all other coordinate derivatives vanish.
    rho_s = 0.5 * np.eye(2, dtype=complex)
    da_s = [2.0 * PAULIS[k] if k in (1, 2, 3) else zero2 for k in range(1, 16)]
    _, h_s = spectral_derivs(fn, rho_s, da_s)

    rho_a = 0.5 * np.eye(2, dtype=complex) + 2.0 * a12 * PAULIS[3]
    da_a = [2.0 * PAULIS[k // 4] if k in (4, 8, 12) else zero2 for k in range(1, 16)]
    _, h_a = spectral_derivs(fn, rho_a, da_a)

    h_mi = h_a + h_s - h_joint
    c = _contraction_rates(gx, gy, gz)
    return -np.add.outer(c, c) * h_mi


def hessian_eigs_closed(gx: float, gy: float, gz: float, a12: float) -> np.ndarray:
    """The nine nonzero Hessian eigenvalues of d/dt I at interior stationary
    states (|a12| < 1/4); the remaining six are structural zeros.

    Three eigenvalues are 32 (gamma_j + gamma_k) (16 a12^2 + 1)/(16 a12^2 - 1)
    and six are -8 (gamma_j + gamma_k) atanh(4 a12)/a12 (two per pair), all
    nonpositive exactly when the pairwise rate sums are nonnegative.
    """
    if abs(a12) >= 0.25:
        raise BoundaryStateError(f"|a12| = {abs(a12)} >= 1/4 lies on the state-space boundary")
    q = (16.0 * a12 * a12 + 1.0) / (16.0 * a12 * a12 - 1.0)
    x = 4.0 * a12
    if abs(x) < 1e-5:
        t = 4.0 * (1.0 + x * x / 3.0 + x ** 4 / 5.0)
    else:
        t = float(np.arctanh(x) / a12)
    pairs = (gy + gz, gx + gz, gx + gy)
    vals = [32.0 * p * q for p in pairs]
    for p in pairs:
        vals.extend([-8.0 * p * t, -8.0 * p * t])
    return np.array(vals)


def zero_space_lambda_deriv(a1: float, a2: float, a3: float,
                            gx: float, gy: float, gz: float) -> float:
    """Time derivative of the coordinate length sqrt(a1^2 + a2^2 + a3^2) in
    the Hessian zero eigenspace: nonpositive whenever the pairwise rate sums
    are nonnegative."""
    norm_sq = a1 * a1 + a2 * a2 + a3 * a3
    if norm_sq == 0.0:
        raise ZeroVectorError("coordinate vector is zero")
    num = a1 * a1 * (gz + gy) + a2 * a2 * (gx + gz) + a3 * a3 * (gx + gy)
    return -num / float(np.sqrt(norm_sq))


def unital_witness_state(phi_vec, p: float) -> DensityState:
    """Correlated mixing state (1/2)|0><0| (x) (p|phi><phi| + (1-p) 1/2)
    + (1/2)|1><1| (x) (p|phi_perp><phi_perp| + (1-p) 1/2): both reduced states
    are maximally mixed, and it lies in the image of any bijective unital
    qubit evolution for small enough p."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"need 0 < p < 1, got {p}")
    v = np.asarray(phi_vec, dtype=complex).ravel()
    if v.shape != (2,):
        raise ValueError("phi must be a qubit state vector")
    v = v / np.linalg.norm(v)
    v_perp = np.array([-np.conj(v[1]), np.conj(v[0])])
    eye2 = np.eye(2, dtype=complex)
    block0 = p * np.outer(v, v.conj()) + (1.0 - p) * eye2 / 2.0
    block1 = p * np.outer(v_perp, v_perp.conj()) + (1.0 - p) * eye2 / 2.0
    full = 0.5 * (np.kron(np.diag([1.0, 0.0]), block0) + np.kron(np.diag([0.0, 1.0]), block1))
    return DensityState(full, (2, 2))
