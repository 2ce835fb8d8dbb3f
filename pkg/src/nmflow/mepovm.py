"""Maximally-entropic two-outcome measurements and the distinguishability
correlation measures C_A, C_B, C (two-outcome versions).

C_A(rho_AB) is the best guessing probability, minus 1/2, of the two-state
equiprobable ensemble that a 2-outcome ME-POVM on side A steers on side B.
Writing the POVM as {(1+X)/2, (1-X)/2} with -1 <= X <= 1 and Tr(rho_A X) = 0,

    C_A(rho_AB) = max_X ||Tr_A[rho_AB (X (x) 1)]||_1 / 2,

optimized here by a monotone see-saw with exact subproblem solutions:
given X, the trace norm's sign operator Y is read off an eigendecomposition;
given Y, Tr(X M) with M = Tr_B[rho_AB (1 (x) Y)] is maximized over the X
polytope in the eigenbasis of M - mu rho_A, with a scalar bisection on the
multiplier mu enforcing the maximal-entropy constraint.

Also here: the outcome-count bound for ME-POVM optimization, and the
classical-quantum probe state of the quasi-eternal family whose C backflow
is equivalent to non-CP intermediate dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

from .channels import quasi_eternal
from .divisibility import physicality_threshold
from .errors import DimMismatchError, NotYetNonMarkovianError, UnphysicalProbeError
from .numutil import parallel_map
from .qmat import (
    DensityState,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    _as_matrix,
    herm_eig,
    partial_trace,
    trace_norm,
)

EFFECT_PSD_SLACK = 1e-10
COMPLETENESS_TOL = 1e-10
ME_TOL = 1e-9
SEESAW_GAIN_TOL = 1e-10
SEESAW_MAX_ITER = 400
DEFAULT_RESTARTS = 16


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive effects summing to the identity."""

    effects: tuple[np.ndarray, ...]

    def __init__(self, effects: Sequence[np.ndarray]):
        ops = tuple(np.asarray(e, dtype=complex) for e in effects)
        if not ops:
            raise DimMismatchError("empty POVM")
        d = ops[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in ops:
            if e.shape != (d, d):
                raise DimMismatchError("POVM effects differ in dimension")
            if float(np.linalg.eigvalsh((e + e.conj().T) / 2)[0]) < -EFFECT_PSD_SLACK:
                raise DimMismatchError("POVM effect is not positive semidefinite")
            total += e
        if float(np.max(np.abs(total - np.eye(d)))) > COMPLETENESS_TOL:
            raise DimMismatchError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", ops)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.effects)


@dataclass(frozen=True, eq=False)
class MePovm2:
    """Two-outcome POVM with uniform outcome statistics on a reference state."""

    povm: Povm
    reference: np.ndarray

    def __init__(self, effects: Sequence[np.ndarray], reference):
        povm = Povm(effects)
        if povm.size != 2:
            raise DimMismatchError("MePovm2 needs exactly two effects")
        ref = _as_matrix(reference)
        for e in povm.effects:
            q = float(np.real(np.trace(ref @ e)))
            if abs(q - 0.5) > ME_TOL:
                raise DimMismatchError(f"outcome probability {q} deviates from 1/2")
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "reference", ref)

    @property
    def effects(self) -> tuple[np.ndarray, ...]:
        return self.povm.effects


def construct_me_povm(rho_a) -> MePovm2:
    """Two-outcome ME-POVM for any state, diagonal in its eigenbasis.

    With eigenvalues pi_1 >= pi_2 >= ... pick the first index where the
    cumulative weight reaches 1/2 and split that eigenprojector by
    omega = (1/2 - S(i-1)) / pi_i; the construction always succeeds.
    """
    ref = _as_matrix(rho_a)
    vals, vecs = herm_eig(ref)
    cum = np.cumsum(vals)
    i_bar = int(np.searchsorted(cum, 0.5, side="left"))
    i_bar = min(i_bar, len(vals) - 1)
    s_prev = float(cum[i_bar - 1]) if i_bar > 0 else 0.0
    missing = 0.5 - s_prev
    omega = 0.0 if missing <= 0.0 else float(np.clip(missing / vals[i_bar], 0.0, 1.0))
    d = ref.shape[0]
    p1 = np.zeros((d, d), dtype=complex)
    for k in range(i_bar):
        p1 += np.outer(vecs[:, k], vecs[:, k].conj())
    p1 += omega * np.outer(vecs[:, i_bar], vecs[:, i_bar].conj())
    return MePovm2((p1, np.eye(d) - p1), ref)


def c2_closed_probe(rho1, rho2) -> float:
    """C of the classical-quantum probe in closed form: ||rho1 - rho2||_1 / 4."""
    a, b = _as_matrix(rho1), _as_matrix(rho2)
    if a.shape != b.shape:
        raise DimMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return trace_norm(a - b) / 4.0


def povm_count_bound(d_a: int, d_b: int) -> float:
    """Sufficient number of ME-POVM outcomes when maximizing over the outcome
    count: min over z in [1/2, 1] of max(d_a/z, d_b(3z-1)/z)."""
    if d_a < 2 or d_b < 2:
        raise DimMismatchError("need d_a, d_b >= 2")
    ratio = d_a / d_b
    if ratio <= 0.5:
        return float(d_b)
    if ratio >= 2.0:
        return float(d_a)
    return 3.0 * d_a * d_b / (d_a + d_b)


# ---------------------------------------------------------------------------
# See-saw optimizer for C_A
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class C2Result:
    value: float
    povm: MePovm2
    x: np.ndarray = field(repr=False)
    iterations: int
    pure_marginal: bool = False


def _steered_difference(rho4: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Tr_A[rho (X (x) 1)] for rho reshaped to (dA, dB, dA, dB).
    return np.einsum("aicj,ca->ij", rho4, x, optimize=True)


def _back_operator(rho4: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Tr_B[rho (1 (x) Y)].
    return np.einsum("aibk,ki->ab", rho4, y, optimize=True)


def _sign_trace(m: np.ndarray, rho_a: np.ndarray, mu: float) -> float:
    vals, vecs = np.linalg.eigh(m - mu * rho_a)
    s = np.where(vals >= 0.0, 1.0, -1.0)
    r = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), rho_a, vecs))
    return float(np.sum(s * r))


def _solve_x(m: np.ndarray, rho_a: np.ndarray, rho_a_min: float | None = None) -> np.ndarray:
    """Maximize Tr(X m) over Hermitian -1 <= X <= 1 with Tr(rho_a X) = 0.

    The optimum is X = sign(m - mu rho_a) for the multiplier mu that zeroes
    Tr(rho_a X); at the crossing, the weight on (near-)kernel eigenvectors is
    chosen fractionally to meet the constraint exactly.
    """
    m = (m + m.conj().T) / 2.0
    scale = float(np.linalg.norm(m, 2)) + 1.0
    if rho_a_min is None:
        rho_a_min = float(np.linalg.eigvalsh(rho_a)[0])
    if rho_a_min > 1e-12:
        # m - mu rho_a is definite beyond |mu| = ||m||_2 / lambda_min(rho_a).
        hi = scale / rho_a_min
        lo = -hi
    else:
        lo, hi = -scale, scale
        for _ in range(80):
            if _sign_trace(m, rho_a, lo) > 0:
                break
            lo *= 2.0
        for _ in range(80):
            if _sign_trace(m, rho_a, hi) < 0:
                break
            hi *= 2.0
        if _sign_trace(m, rho_a, lo) < 0 or _sign_trace(m, rho_a, hi) > 0:
            lo = hi = 0.0  # constraint trivially satisfiable by sign(m)
    mu = 0.5 * (lo + hi)
    for _ in range(44):
        g = _sign_trace(m, rho_a, mu)
        if g == 0.0 or hi - lo <= 1e-13 * scale:
            break
        if g > 0:
            lo = mu
        else:
            hi = mu
        mu = 0.5 * (lo + hi)

    vals, vecs = np.linalg.eigh(m - mu * rho_a)
    r = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), rho_a, vecs))
    eps_free = 1e-9 * scale
    x_diag = np.where(vals >= 0.0, 1.0, -1.0)
    for _ in range(3):
        free = np.abs(vals) <= eps_free
        fixed_sum = float(np.sum(x_diag[~free] * r[~free]))
        target = -fixed_sum
        x_new = x_diag.copy()
        remaining = target
        order = np.argsort(-r)
        for k in order:
            if not free[k]:
                continue
            if r[k] <= 1e-14:
                x_new[k] = 0.0
                continue
            take = float(np.clip(remaining / r[k], -1.0, 1.0))
            x_new[k] = take
            remaining -= take * r[k]
        if abs(remaining) <= 1e-11:
            x_diag = x_new
            break
        eps_free *= 100.0  # widen the free set and retry
    else:
        x_diag = x_new
    return (vecs * x_diag) @ vecs.conj().T


def _seesaw_once(rho4: np.ndarray, rho_a: np.ndarray, x0: np.ndarray,
                 rho_a_min: float) -> tuple[float, np.ndarray, int]:
    x = x0
    value = -np.inf
    for it in range(1, SEESAW_MAX_ITER + 1):
        delta = _steered_difference(rho4, x)
        delta = (delta + delta.conj().T) / 2.0
        vals, vecs = np.linalg.eigh(delta)
        new_value = 0.5 * float(np.sum(np.abs(vals)))
        if new_value <= value + SEESAW_GAIN_TOL:
            value = max(value, new_value)
            return value, x, it
        value = new_value
        y = (vecs * np.where(vals >= 0.0, 1.0, -1.0)) @ vecs.conj().T
        x = _solve_x(_back_operator(rho4, y), rho_a, rho_a_min)
    return value, x, SEESAW_MAX_ITER


def _bipartite(rho, dims, cut):
    m, dims = (rho.matrix, rho.dims) if isinstance(rho, DensityState) else \
        (np.asarray(rho, dtype=complex), tuple(int(d) for d in dims or ()))
    if not dims:
        raise DimMismatchError("dims required")
    if not 0 < cut < len(dims):
        raise DimMismatchError(f"cut {cut} does not bipartition {len(dims)} subsystems")
    d_a = prod(dims[:cut])
    d_b = prod(dims[cut:])
    if d_a * d_b != m.shape[0]:
        raise DimMismatchError("dims inconsistent with matrix")
    return m, d_a, d_b


def c2_A(rho, dims: Sequence[int] | None = None, cut: int = 1,
         restarts: int = DEFAULT_RESTARTS, seed: int = 0,
         x0: np.ndarray | None = None, workers: int | None = 1) -> C2Result:
    """Maximize the steered distinguishability over 2-outcome ME-POVMs on the
    A side (first `cut` subsystems). Returns the best see-saw result over a
    deterministic start (the eigenbasis ME-POVM) plus `restarts` seeded random
    starts; `x0` adds a caller-supplied warm start.
    """
    m, d_a, d_b = _bipartite(rho, dims, cut)
    rho_a = partial_trace(m, (d_a, d_b), keep=0)
    rank = int(np.sum(np.linalg.eigvalsh(rho_a) > 1e-12))
    if rank <= 1:
        # Pure marginal: rho_AB is a product, every ME-POVM steers identical
        # states and the measure vanishes.
        return C2Result(value=0.0, povm=construct_me_povm(rho_a),
                        x=np.zeros((d_a, d_a)), iterations=0, pure_marginal=True)
    rho4 = m.reshape(d_a, d_b, d_a, d_b)
    rho_a_min = float(np.linalg.eigvalsh(rho_a)[0])

    app_f = construct_me_povm(rho_a)
    starts = [app_f.effects[0] - app_f.effects[1]]
    if x0 is not None:
        # Route the warm start through one dual/primal projection so the
        # see-saw begins at a feasible ME-POVM.
        delta0 = _steered_difference(rho4, np.asarray(x0, dtype=complex))
        delta0 = (delta0 + delta0.conj().T) / 2.0
        vals0, vecs0 = np.linalg.eigh(delta0)
        y0 = (vecs0 * np.where(vals0 >= 0.0, 1.0, -1.0)) @ vecs0.conj().T
        starts.append(_solve_x(_back_operator(rho4, y0), rho_a, rho_a_min))
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        h = rng.normal(size=(d_b, d_b)) + 1j * rng.normal(size=(d_b, d_b))
        h = (h + h.conj().T) / 2.0
        vals, vecs = np.linalg.eigh(h)
        y = (vecs * np.where(vals >= 0.0, 1.0, -1.0)) @ vecs.conj().T
        starts.append(_solve_x(_back_operator(rho4, y), rho_a, rho_a_min))

    runs = parallel_map(lambda x: _seesaw_once(rho4, rho_a, x, rho_a_min), starts,
                        workers=workers)
    best_value, best_x, best_it = -np.inf, None, 0
    for value, x, it in runs:
        if value > best_value:
            best_value, best_x, best_it = value, x, it
    p1 = (np.eye(d_a) + best_x) / 2.0
    povm = MePovm2((p1, np.eye(d_a) - p1), rho_a)
    return C2Result(value=float(best_value), povm=povm, x=best_x, iterations=best_it)


def _swap_sides(m: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    return m.reshape(d_a, d_b, d_a, d_b).transpose(1, 0, 3, 2).reshape(m.shape)


def c2_B(rho, dims: Sequence[int] | None = None, cut: int = 1, **kwargs) -> C2Result:
    """Same optimization with the ME-POVM on the B side."""
    m, d_a, d_b = _bipartite(rho, dims, cut)
    return c2_A(_swap_sides(m, d_a, d_b), (d_b, d_a), cut=1, **kwargs)


def c2(rho, dims: Sequence[int] | None = None, cut: int = 1, **kwargs) -> float:
    """Symmetrized measure: max of the A-side and B-side optima."""
    return max(c2_A(rho, dims, cut, **kwargs).value, c2_B(rho, dims, cut, **kwargs).value)


# ---------------------------------------------------------------------------
# The quasi-eternal probe
# ---------------------------------------------------------------------------

def _embed3(op2: np.ndarray) -> np.ndarray:
    m = np.zeros((3, 3), dtype=complex)
    m[:2, :2] = op2
    return m


_Q2 = _embed3(np.eye(2))
_PROJ2 = np.diag([0.0, 0.0, 1.0]).astype(complex)
_XX = np.kron(_embed3(SIGMA_X), SIGMA_X)
_YY = np.kron(_embed3(SIGMA_Y), SIGMA_Y)
_ZZ = np.kron(_embed3(SIGMA_Z), SIGMA_Z)


@dataclass(frozen=True, eq=False)
class ProbeState:
    """Classical-quantum probe (1/2)(|0><0| (x) rho1_B(t) + |1><1| (x) rho2_B(t))
    on qubit (x) (qutrit (x) qubit), built at time tau for the quasi-eternal
    family; rho2_B is stationary and rho1_B revives distinguishability exactly
    when the intermediate dynamics fails complete positivity.
    """

    alpha: float
    t0: float
    tau: float
    p: float

    def __post_init__(self):
        if self.t0 < physicality_threshold(self.alpha):
            raise UnphysicalProbeError(
                f"t0 = {self.t0} below the physicality threshold "
                f"{physicality_threshold(self.alpha):.6f}")
        if self.tau <= self.t0:
            raise NotYetNonMarkovianError(
                f"tau = {self.tau} must exceed t0 = {self.t0} for non-CP intermediates")
        lam_z = float(np.exp(-self.alpha * self.tau))
        if not 0.0 < self.p < lam_z:
            raise UnphysicalProbeError(
                f"need 0 < p < exp(-alpha tau) = {lam_z:.6f}, got p = {self.p}")

    @property
    def channel(self):
        return quasi_eternal(self.alpha, self.t0)

    def _lambdas(self, t: float) -> tuple[float, float]:
        lx, _, lz = self.channel.lambdas(t)
        return lx, lz

    def pair_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(rho1_B(t), rho2_B(t)) on the qutrit (x) qubit side."""
        lxy_tau, lz_tau = self._lambdas(self.tau)
        lxy_t, lz_t = self._lambdas(t)
        cxy = self.p * lxy_t / lxy_tau
        cz = self.p * lz_t / lz_tau
        rho1 = np.kron(_Q2, np.eye(2, dtype=complex)) / 4.0 \
            + cxy * (_XX - _YY) / 4.0 + cz * _ZZ / 4.0
        rho2 = np.kron((1.0 - self.p) * _Q2 / 2.0 + self.p * _PROJ2,
                       np.eye(2, dtype=complex) / 2.0)
        return rho1, rho2

    def state_at(self, t: float) -> DensityState:
        rho1, rho2 = self.pair_at(t)
        e00 = np.diag([1.0, 0.0]).astype(complex)
        e11 = np.diag([0.0, 1.0]).astype(complex)
        full = 0.5 * (np.kron(e00, rho1) + np.kron(e11, rho2))
        return DensityState(full, (2, 3, 2))

    def closed_c2(self, t: float) -> float:
        rho1, rho2 = self.pair_at(t)
        return c2_closed_probe(rho1, rho2)


def build_probe(alpha: float, t0: float, tau: float, p: float) -> ProbeState:
    """Probe for the quasi-eternal family; requires t0 past the physicality
    threshold, tau > t0, and 0 < p < exp(-alpha tau)."""
    return ProbeState(alpha=alpha, t0=t0, tau=tau, p=p)
