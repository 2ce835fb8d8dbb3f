"""CP/P classification of qubit maps and divisibility criteria.

Complete positivity via the minimum Choi eigenvalue, positivity of affine
qubit maps via a Bloch-sphere search, the CPTP combinations
B_ijk = 1 + A_ij - A_jk - A_ki for rate channels, the physicality threshold
T(alpha) = (1/2) log(2^(1/alpha) - 1) of the quasi-eternal family, the
trace-norm witness g(t), and a scan classifier that splits single-parameter
evolutions into CP-divisible and not-P intervals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize

from .channels import AffineQubitMap, RateChannel, apply_map, choi
from .errors import BadIntervalError
from .numutil import bisect_root, fibonacci_sphere
from .qmat import maximally_entangled

CP_TOL = 1e-9
P_TOL = 1e-9
P_GRID_POINTS = 4096


class DivisibilityLabel(str, Enum):
    CP_DIVISIBLE = "CPDivisible"
    P_NOT_CP = "PNotCP"
    NOT_P = "NotP"


@dataclass(frozen=True)
class IntervalClass:
    """A classified time interval; adjacent intervals carry different labels."""

    t_start: float
    t_end: float
    label: DivisibilityLabel

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise BadIntervalError(f"need t_start < t_end, got [{self.t_start}, {self.t_end}]")


def min_choi_eig(qmap, dim: int) -> float:
    c = choi(qmap, dim)
    c = (c + c.conj().T) / 2.0
    return float(np.linalg.eigvalsh(c)[0])


def is_cp(qmap, dim: int, tol: float = CP_TOL) -> tuple[bool, float]:
    """Whether the map is completely positive, plus the minimum Choi eigenvalue
    for diagnostics."""
    m = min_choi_eig(qmap, dim)
    return m >= -tol, m


def _bloch_image_norm(qmap: AffineQubitMap, n: np.ndarray) -> np.ndarray:
    lam = np.asarray(qmap.lambdas)
    w = np.asarray(qmap.translation)
    return np.linalg.norm(n * lam + w, axis=-1)


def is_p_qubit(qmap: AffineQubitMap, tol: float = P_TOL) -> bool:
    """Positivity of an affine qubit map.

    Unital diagonal maps are positive iff max |lambda_i| <= 1. Otherwise the
    minimum output eigenvalue (1 - ||diag(lambda) n + w||)/2 is minimized over
    pure-state Bloch vectors n on a 4096-point Fibonacci grid and polished by
    Nelder-Mead; the map is positive when that minimum stays above -tol.
    """
    if qmap.is_unital:
        return max(abs(l) for l in qmap.lambdas) <= 1.0 + 2.0 * tol
    grid = fibonacci_sphere(P_GRID_POINTS)
    norms = _bloch_image_norm(qmap, grid)
    n0 = grid[int(np.argmax(norms))]
    theta0 = np.arccos(np.clip(n0[2], -1.0, 1.0))
    phi0 = np.arctan2(n0[1], n0[0])

    def neg_norm(ang):
        th, ph = ang
        n = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        return -_bloch_image_norm(qmap, n)

    res = minimize(neg_norm, x0=[theta0, phi0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
    worst = max(float(np.max(norms)), float(-res.fun))
    min_eig = 0.5 * (1.0 - worst)
    return min_eig >= -tol


def physicality_threshold(alpha: float) -> float:
    """T(alpha) = (1/2) log(2^(1/alpha) - 1): the quasi-eternal family with
    offset t0 is CPTP for all times iff t0 >= T(alpha)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 0.5 * float(np.log(2.0 ** (1.0 / alpha) - 1.0))


def cptp_conditions(ch: RateChannel, t: float) -> tuple[float, float, float]:
    """(B_xyz, B_yzx, B_zxy) with B_ijk = 1 + A_ij - A_jk - A_ki; the channel
    is CPTP at t iff all three are nonnegative."""
    axy = ch.a("x", "y", t)
    ayz = ch.a("y", "z", t)
    azx = ch.a("z", "x", t)
    return (1.0 + axy - ayz - azx, 1.0 + ayz - azx - axy, 1.0 + azx - axy - ayz)


def divisibility_rates(gx: float, gy: float, gz: float) -> dict:
    """Pointwise divisibility from the instantaneous rates: CP needs all rates
    nonnegative, P needs all pairwise sums nonnegative (so cp implies p)."""
    cp = gx >= 0.0 and gy >= 0.0 and gz >= 0.0
    p = gx + gy >= 0.0 and gy + gz >= 0.0 and gz + gx >= 0.0
    return {"cp": cp, "p": p}


def rhp_g(channel, t: float, dt: float = 1e-6) -> float:
    """Trace-norm witness g(t): the normalized growth rate of
    ||(1 (x) V_{t+dt,t})(phi+)||_1, positive iff V_{t+dt,t} is not CP."""
    v = channel.intermediate(t, t + dt)
    phi = maximally_entangled(2)
    out = apply_map(v, phi, (2, 2), subsystem=1)
    out = (out + out.conj().T) / 2.0
    norm1 = float(np.sum(np.abs(np.linalg.eigvalsh(out))))
    return (norm1 - 1.0) / dt


def classify_intervals(gamma, t_max: float, step: float = 1e-2,
                       boundary_tol: float = 1e-6, channel=None) -> list[IntervalClass]:
    """Split [0, t_max] into CP-divisible (gamma >= 0) and not-P (gamma < 0)
    intervals for a single-parameter evolution with rate function gamma(t).

    Interval boundaries are located by a coarse scan followed by bisection to
    boundary_tol. Rates oscillating faster than the scan step are out of
    scope. When `channel` (providing intermediate(t, s)) is passed, each
    interval midpoint is cross-checked: a map that is P but not CP would
    falsify the two-label classification and triggers a warning.
    """
    if t_max <= 0 or step <= 0:
        raise BadIntervalError("need t_max > 0 and step > 0")
    ts = [0.0, t_max]
    t = 0.0
    g_prev = gamma(0.0)
    while t < t_max:
        t_next = min(t + step, t_max)
        g_next = gamma(t_next)
        if g_prev == 0.0:
            ts.append(t)
        elif g_prev * g_next < 0:
            ts.append(bisect_root(gamma, t, t_next, tol=boundary_tol))
        t, g_prev = t_next, g_next
    ts = sorted(set(ts))

    intervals: list[IntervalClass] = []
    for a, b in zip(ts[:-1], ts[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        label = DivisibilityLabel.CP_DIVISIBLE if gamma(mid) >= 0 else DivisibilityLabel.NOT_P
        if intervals and intervals[-1].label is label:
            intervals[-1] = IntervalClass(intervals[-1].t_start, b, label)
        else:
            intervals.append(IntervalClass(a, b, label))
        if channel is not None:
            _check_interval_consistency(channel, mid, min(step, b - mid), label)
    return intervals


def _check_interval_consistency(channel, t: float, dt: float, label: DivisibilityLabel) -> None:
    v = channel.intermediate(t, t + dt)
    cp, _ = is_cp(v, 2, tol=1e-7)
    p = is_p_qubit(v, tol=1e-7)
    if (not cp) and p:
        warnings.warn(f"intermediate map at t={t:.6f} is P but not CP; "
                      "single-parameter classification premise violated")
    if label is DivisibilityLabel.CP_DIVISIBLE and not cp:
        warnings.warn(f"interval labeled CP-divisible but map at t={t:.6f} is not CP")
    if label is DivisibilityLabel.NOT_P and p:
        warnings.warn(f"interval labeled not-P but map at t={t:.6f} is P")
