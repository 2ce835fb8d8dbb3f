"""Channel families and map machinery.

Random-unitary qubit channels built from three time-dependent rates
(gamma_x, gamma_y, gamma_z), the quasi-eternal family
gamma = (alpha/2)(1, 1, -tanh(t - t0)), pure dephasing, generalized amplitude
damping with either a fixed decay profile G(t) or the two-parameter
s(t) = cos^2(5t), r(t) = exp(-t) family, plus application to subsystems,
composition/inversion of affine qubit maps, intermediate maps V_{s,t},
Choi matrices, and operator-basis transfer components.

Conventions: subsystem order is (ancillas..., system); channels act on the
last subsystem unless told otherwise. A qubit map is stored by its diagonal
Pauli action lambda = (lx, ly, lz) plus an affine Bloch translation, so that
rho = (1 + v.sigma)/2 maps to (1 + (diag(lambda) v + w).sigma)/2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import qmat
from .errors import (
    BadAxisError,
    BadIntervalError,
    ConfigParseError,
    DimMismatchError,
    SingularMapError,
    UnphysicalError,
)
from .numutil import adaptive_simpson
from .qmat import PAULIS, DensityState

AXES = {"x": 0, "y": 1, "z": 2}
KRAUS_TOL = 1e-10
PROB_SLACK = 1e-8
DEFAULT_SCAN_STEP = 1e-3


def _log_cosh(x: float) -> float:
    ax = abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)


# ---------------------------------------------------------------------------
# Rate specifications
# ---------------------------------------------------------------------------

class RateSpec:
    """A real rate function of time, evaluable and integrable on [t1, t2]."""

    def rate(self, t: float) -> float:
        raise NotImplementedError

    def integral(self, t1: float, t2: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantRate(RateSpec):
    value: float

    def rate(self, t: float) -> float:
        return self.value

    def integral(self, t1: float, t2: float) -> float:
        return self.value * (t2 - t1)


@dataclass(frozen=True)
class QuasiEternalZRate(RateSpec):
    """gamma(t) = -(alpha/2) tanh(t - t0), integrated in closed form."""

    alpha: float
    t0: float

    def rate(self, t: float) -> float:
        return -0.5 * self.alpha * np.tanh(t - self.t0)

    def integral(self, t1: float, t2: float) -> float:
        return 0.5 * self.alpha * (_log_cosh(t1 - self.t0) - _log_cosh(t2 - self.t0))


@dataclass(frozen=True, eq=False)
class TabulatedRate(RateSpec):
    """Piecewise-linear interpolation of (t, gamma) samples, clamped outside.

    Integrals run adaptive Simpson (abs tol 1e-10) on panels aligned with the
    sample knots, where the quadrature is exact for the linear interpolant.
    """

    samples: tuple[tuple[float, float], ...]
    _ts: np.ndarray = field(init=False, repr=False)
    _gs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = sorted((float(t), float(g)) for t, g in self.samples)
        if len(pts) < 2:
            raise ConfigParseError("tabulated rate needs at least two samples")
        object.__setattr__(self, "samples", tuple(pts))
        object.__setattr__(self, "_ts", np.array([p[0] for p in pts]))
        object.__setattr__(self, "_gs", np.array([p[1] for p in pts]))

    def rate(self, t: float) -> float:
        return float(np.interp(t, self._ts, self._gs))

    def integral(self, t1: float, t2: float) -> float:
        if t1 == t2:
            return 0.0
        knots = [t1] + [float(t) for t in self._ts if t1 < t < t2] + [t2]
        total = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            total += adaptive_simpson(self.rate, a, b, tol=1e-10 / max(1, len(knots) - 1))
        return total


@dataclass(frozen=True)
class CallableRate(RateSpec):
    """Rate given by an arbitrary callable; integral by adaptive Simpson unless
    a closed-form antiderivative-style integral callable is supplied."""

    fn: Callable[[float], float]
    integral_fn: Callable[[float, float], float] | None = None

    def rate(self, t: float) -> float:
        return float(self.fn(t))

    def integral(self, t1: float, t2: float) -> float:
        if self.integral_fn is not None:
            return float(self.integral_fn(t1, t2))
        return adaptive_simpson(self.rate, t1, t2, tol=1e-10)


def as_rate_spec(obj) -> RateSpec:
    if isinstance(obj, RateSpec):
        return obj
    if isinstance(obj, (int, float)):
        return ConstantRate(float(obj))
    if callable(obj):
        return CallableRate(obj)
    raise ConfigParseError(f"cannot interpret {obj!r} as a rate")


# ---------------------------------------------------------------------------
# Qubit maps: affine (Pauli-diagonal + translation) and Kraus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineQubitMap:
    """Trace-preserving qubit map with diagonal Pauli action and a Bloch shift.

    Lambda(sigma_i) = lambdas[i] * sigma_i and
    Lambda(1) = 1 + translation . sigma, so Bloch vectors map as
    v -> diag(lambdas) v + translation.
    """

    lambdas: tuple[float, float, float]
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def is_unital(self) -> bool:
        return all(w == 0.0 for w in self.translation)

    def apply_operator(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (2, 2):
            raise DimMismatchError(f"affine qubit map acts on 2x2 operators, got {x.shape}")
        tr = np.trace(x)
        out = 0.5 * tr * np.eye(2, dtype=complex)
        for i in range(3):
            sig = PAULIS[i + 1]
            out += 0.5 * (tr * self.translation[i] + self.lambdas[i] * np.trace(x @ sig)) * sig
        return out

    def compose(self, inner: "AffineQubitMap") -> "AffineQubitMap":
        """self after inner: linear parts multiply, translations compose."""
        lam = tuple(a * b for a, b in zip(self.lambdas, inner.lambdas))
        w = tuple(a * wi + wo for a, wi, wo in zip(self.lambdas, inner.translation, self.translation))
        return AffineQubitMap(lam, w)

    def inverse(self) -> "AffineQubitMap":
        if any(l == 0.0 for l in self.lambdas):
            raise SingularMapError("map is not bijective: a Pauli component vanishes")
        inv = tuple(1.0 / l for l in self.lambdas)
        w = tuple(-li * wi for li, wi in zip(inv, self.translation))
        return AffineQubitMap(inv, w)


IDENTITY_MAP = AffineQubitMap((1.0, 1.0, 1.0))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel given by Kraus operators with sum_k K_k^dag K_k = 1."""

    kraus: tuple[np.ndarray, ...]

    def __init__(self, kraus: Sequence[np.ndarray]):
        ops = tuple(np.asarray(k, dtype=complex) for k in kraus)
        if not ops:
            raise DimMismatchError("empty Kraus list")
        d = ops[0].shape[1]
        comp = sum(k.conj().T @ k for k in ops)
        defect = float(np.max(np.abs(comp - np.eye(d))))
        if defect > KRAUS_TOL:
            raise UnphysicalError(f"Kraus completeness defect {defect:.3e} > {KRAUS_TOL:.1e}")
        object.__setattr__(self, "kraus", ops)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[1]

    def apply_operator(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x)
        for k in self.kraus:
            out += k @ x @ k.conj().T
        return out


def elementary_tensor(qmap, d: int) -> np.ndarray:
    """K[a, b, c, e] = Lambda(|c><e|)[a, b]: the map's action on matrix units."""
    k = np.zeros((d, d, d, d), dtype=complex)
    unit = np.zeros((d, d), dtype=complex)
    for c in range(d):
        for e in range(d):
            unit[c, e] = 1.0
            k[:, :, c, e] = qmap.apply_operator(unit)
            unit[c, e] = 0.0
    return k


def apply_map(qmap, rho, dims: Sequence[int] | None = None, subsystem: int | None = None):
    """Apply 1 (x) ... (x) Lambda (x) ... (x) 1 with Lambda on one subsystem.

    Accepts a DensityState (dims taken from it, output re-validated) or a raw
    ndarray with explicit dims. The map acts on the last subsystem by default.
    """
    if isinstance(rho, DensityState):
        out = apply_map(qmap, rho.matrix, rho.dims, subsystem)
        return DensityState(out, rho.dims)
    m = np.asarray(rho, dtype=complex)
    if dims is None:
        raise DimMismatchError("dims required when applying a map to a raw matrix")
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != m.shape[0]:
        raise DimMismatchError(f"prod{dims} != matrix dim {m.shape[0]}")
    n = len(dims)
    if subsystem is None:
        subsystem = n - 1
    if subsystem < 0 or subsystem >= n:
        raise DimMismatchError(f"subsystem {subsystem} out of range")
    d = dims[subsystem]
    pre = int(np.prod(dims[:subsystem], dtype=int)) if subsystem else 1
    post = int(np.prod(dims[subsystem + 1:], dtype=int)) if subsystem < n - 1 else 1
    k = elementary_tensor(qmap, d)
    t = m.reshape(pre, d, post, pre, d, post)
    out = np.einsum("abce,icjkel->iajkbl", k, t, optimize=True)
    return out.reshape(m.shape)


def choi(qmap, dim: int) -> np.ndarray:
    """Choi matrix sum_ij |i><j| (x) Lambda(|i><j|); identity map gives dim * phi+."""
    k = elementary_tensor(qmap, dim)
    c = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            c[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = k[:, :, i, j]
    return c


def transfer(qmap, basis: qmat.OperatorBasis) -> np.ndarray:
    """Components V_ij = Tr[e_i (1 (x) Lambda)(e_j)] / prod(dims).

    The map acts on the last subsystem of the basis; trace preservation forces
    V_00 = 1 and V_0j = 0 for j != 0.
    """
    dims = basis.dims
    n = basis.size
    v = np.zeros((n, n))
    for j, ej in enumerate(basis.elements):
        mapped = apply_map(qmap, ej, dims, subsystem=len(dims) - 1)
        for i, ei in enumerate(basis.elements):
            v[i, j] = float(np.real(np.trace(ei @ mapped))) / basis.total_dim
    return v


# ---------------------------------------------------------------------------
# Random-unitary qubit channels from rate triples
# ---------------------------------------------------------------------------

def _axis(i) -> int:
    if isinstance(i, str):
        if i not in AXES:
            raise BadAxisError(f"axis {i!r} not in x, y, z")
        return AXES[i]
    i = int(i)
    if i < 0 or i > 2:
        raise BadAxisError(f"axis index {i} not in 0..2")
    return i


@dataclass(frozen=True)
class RateChannel:
    """Qubit random-unitary (unital) channel defined by three rate functions.

    The generator L_t(rho) = sum_k gamma_k(t) (sigma_k rho sigma_k - rho)
    contracts the Pauli components as
    Lambda_t(sigma_i) = A_jk(t) sigma_i, A_jk(t) = exp(-2 int_0^t (gamma_j + gamma_k)),
    with (i, j, k) cyclic. `contractions` returns those map factors (used by
    as_affine/apply/intermediate and by the mixing weights p_k), while
    `lambdas` returns their square roots, the representation in which the
    quasi-eternal family reads lambda_z(t) = exp(-alpha t); the
    distinguishability-probe construction is stated in terms of the latter.
    """

    gamma_x: RateSpec
    gamma_y: RateSpec
    gamma_z: RateSpec

    @property
    def specs(self) -> tuple[RateSpec, RateSpec, RateSpec]:
        return (self.gamma_x, self.gamma_y, self.gamma_z)

    def rates(self, t: float) -> tuple[float, float, float]:
        return tuple(s.rate(t) for s in self.specs)

    def pair_integral(self, i: int, j: int, t1: float, t2: float) -> float:
        return self.specs[i].integral(t1, t2) + self.specs[j].integral(t1, t2)

    def a(self, i, j, t: float) -> float:
        """A_ij(t) = exp(-2 int_0^t (gamma_i + gamma_j)), i != j."""
        ii, jj = _axis(i), _axis(j)
        if ii == jj:
            raise BadAxisError("A_ij requires two distinct axes")
        return float(np.exp(-2.0 * self.pair_integral(ii, jj, 0.0, t)))

    def contractions(self, t: float) -> tuple[float, float, float]:
        """Pauli contraction factors of the dynamical map: (A_yz, A_zx, A_xy)."""
        return (
            float(np.exp(-2.0 * self.pair_integral(1, 2, 0.0, t))),
            float(np.exp(-2.0 * self.pair_integral(2, 0, 0.0, t))),
            float(np.exp(-2.0 * self.pair_integral(0, 1, 0.0, t))),
        )

    def lambdas(self, t: float) -> tuple[float, float, float]:
        """(lambda_x, lambda_y, lambda_z) with lambda_i = sqrt(A_jk), cyclic."""
        return tuple(float(np.sqrt(c)) for c in self.contractions(t))

    def as_affine(self, t: float) -> AffineQubitMap:
        return AffineQubitMap(self.contractions(t))

    def intermediate(self, t: float, s: float) -> AffineQubitMap:
        """V_{s,t} with Lambda_s = V_{s,t} Lambda_t; requires 0 <= t <= s."""
        if not (0.0 <= t <= s):
            raise BadIntervalError(f"need 0 <= t <= s, got t={t}, s={s}")
        return AffineQubitMap((
            float(np.exp(-2.0 * self.pair_integral(1, 2, t, s))),
            float(np.exp(-2.0 * self.pair_integral(2, 0, t, s))),
            float(np.exp(-2.0 * self.pair_integral(0, 1, t, s))),
        ))

    def _a_triple(self, t: float) -> tuple[float, float, float]:
        axy = float(np.exp(-2.0 * self.pair_integral(0, 1, 0.0, t)))
        axz = float(np.exp(-2.0 * self.pair_integral(0, 2, 0.0, t)))
        ayz = float(np.exp(-2.0 * self.pair_integral(1, 2, 0.0, t)))
        return axy, axz, ayz

    def probs(self, t: float) -> tuple[float, float, float, float]:
        """Mixing weights (p_0, p_x, p_y, p_z) of the random-unitary form."""
        axy, axz, ayz = self._a_triple(t)
        p = (0.25 * (1 + axy + axz + ayz), 0.25 * (1 - axy - axz + ayz),
             0.25 * (1 - axy + axz - ayz), 0.25 * (1 + axy - axz - ayz))
        if min(p) < -PROB_SLACK:
            raise UnphysicalError(f"p_k(t={t}) = {p}: channel not CPTP here")
        return p

    def probs_derivative(self, t: float) -> tuple[float, float, float, float]:
        """d/dt of (p_0, p_x, p_y, p_z) via dA_ij/dt = -2(gamma_i+gamma_j) A_ij."""
        axy, axz, ayz = self._a_triple(t)
        gx, gy, gz = self.rates(t)
        daxy = -2.0 * (gx + gy) * axy
        daxz = -2.0 * (gx + gz) * axz
        dayz = -2.0 * (gy + gz) * ayz
        return (0.25 * (daxy + daxz + dayz), 0.25 * (-daxy - daxz + dayz),
                0.25 * (-daxy + daxz - dayz), 0.25 * (daxy - daxz - dayz))


def quasi_eternal(alpha: float, t0: float) -> RateChannel:
    """Rates (alpha/2) * (1, 1, -tanh(t - t0)): CP-divisible until t0, P-divisible
    but not CP-divisible afterwards (when physical)."""
    if alpha <= 0:
        raise ConfigParseError("quasi_eternal needs alpha > 0")
    if t0 < 0:
        raise ConfigParseError("quasi_eternal needs t0 >= 0")
    half = ConstantRate(0.5 * alpha)
    return RateChannel(half, half, QuasiEternalZRate(alpha, t0))


@dataclass(frozen=True)
class ScaledRate(RateSpec):
    base: RateSpec
    factor: float

    def rate(self, t: float) -> float:
        return self.factor * self.base.rate(t)

    def integral(self, t1: float, t2: float) -> float:
        return self.factor * self.base.integral(t1, t2)


def dephasing(gamma) -> RateChannel:
    """Pure dephasing with rate gamma(t): sigma_x and sigma_y decay by
    exp(-int_0^t gamma) while sigma_z is preserved."""
    return RateChannel(ConstantRate(0.0), ConstantRate(0.0),
                       ScaledRate(as_rate_spec(gamma), 0.5))


def depolarizing(gamma) -> RateChannel:
    spec = as_rate_spec(gamma)
    return RateChannel(spec, spec, spec)


# ---------------------------------------------------------------------------
# Generalized amplitude damping
# ---------------------------------------------------------------------------

def amp_damp_map(g: float, p: float) -> AffineQubitMap:
    """Generalized amplitude damping map at decay value G:
    sigma_x, sigma_y -> G sigma_xy, sigma_z -> G^2 sigma_z,
    1 -> 1 + (2p-1)(1-G^2) sigma_z."""
    if not (0.0 < g <= 1.0):
        if g == 0.0:
            raise SingularMapError("G = 0: map is many-to-one")
        raise UnphysicalError(f"G must lie in (0, 1], got {g}")
    if not (0.0 <= p <= 1.0):
        raise UnphysicalError(f"p must lie in [0, 1], got {p}")
    return _gad_affine(g, p)


def _gad_affine(g: float, p: float) -> AffineQubitMap:
    return AffineQubitMap((g, g, g * g), (0.0, 0.0, (2.0 * p - 1.0) * (1.0 - g * g)))


def amp_damp_gamma(g: float, dg_dt: float) -> float:
    """Single rate gamma(t) = -(2/G) dG/dt of the amplitude-damping generator."""
    if g == 0.0:
        raise SingularMapError("gamma undefined at G = 0")
    return -2.0 * dg_dt / g


@dataclass(frozen=True, eq=False)
class AmpDampChannel:
    """Amplitude damping with decay profile G(t) and fixed excitation weight p."""

    g_of_t: Callable[[float], float]
    p: float
    dg_dt: Callable[[float], float] | None = None

    def g(self, t: float) -> float:
        return float(self.g_of_t(t))

    def gamma(self, t: float, h: float = 1e-6) -> float:
        if self.dg_dt is not None:
            dg = float(self.dg_dt(t))
        else:
            lo = max(0.0, t - h)
            dg = (self.g(t + h) - self.g(lo)) / (t + h - lo)
        return amp_damp_gamma(self.g(t), dg)

    def as_affine(self, t: float) -> AffineQubitMap:
        return amp_damp_map(self.g(t), self.p)

    def intermediate(self, t: float, s: float) -> AffineQubitMap:
        if not (0.0 <= t <= s):
            raise BadIntervalError(f"need 0 <= t <= s, got t={t}, s={s}")
        gt, gs = self.g(t), self.g(s)
        if gt == 0.0:
            if gs == 0.0:
                return IDENTITY_MAP
            raise SingularMapError("G(t) = 0 with G(s) != 0: intermediate map does not exist")
        return _gad_affine(gs / gt, self.p)


def _tabulated_callable(samples: Sequence[Sequence[float]]) -> Callable[[float], float]:
    pts = sorted((float(a), float(b)) for a, b in samples)
    ts = np.array([q[0] for q in pts])
    vs = np.array([q[1] for q in pts])
    return lambda t: float(np.interp(t, ts, vs))


@dataclass(frozen=True)
class GadcChannel:
    """Two-parameter generalized amplitude damping with s(t) = cos^2(5t) and
    r(t) = exp(-t).

    Defined primarily by its Kraus operators; the equivalent generator has
    jump operators |0><1| and |1><0| with rates
    gamma_minus(t) = cos^2(5t) - 5 (1 - e^-t) sin(10t) and
    gamma_plus(t)  = sin^2(5t) + 5 (1 - e^-t) sin(10t),
    which sum to 1 for all t.
    """

    @staticmethod
    def s(t: float) -> float:
        return float(np.cos(5.0 * t) ** 2)

    @staticmethod
    def r(t: float) -> float:
        return float(np.exp(-t))

    def kraus(self, t: float) -> KrausChannel:
        s, r = self.s(t), self.r(t)
        sq_s, sq_1s = np.sqrt(s), np.sqrt(1.0 - s)
        sq_r, sq_1r = np.sqrt(r), np.sqrt(1.0 - r)
        k1 = sq_s * np.array([[1.0, 0.0], [0.0, sq_r]], dtype=complex)
        k2 = sq_s * np.array([[0.0, sq_1r], [0.0, 0.0]], dtype=complex)
        k3 = sq_1s * np.array([[sq_r, 0.0], [0.0, 1.0]], dtype=complex)
        k4 = sq_1s * np.array([[0.0, 0.0], [sq_1r, 0.0]], dtype=complex)
        return KrausChannel((k1, k2, k3, k4))

    def rates(self, t: float) -> tuple[float, float]:
        drive = 5.0 * (1.0 - np.exp(-t)) * np.sin(10.0 * t)
        gm = float(np.cos(5.0 * t) ** 2 - drive)
        return gm, 1.0 - gm

    def as_affine(self, t: float) -> AffineQubitMap:
        s, r = self.s(t), self.r(t)
        return AffineQubitMap((np.sqrt(r), np.sqrt(r), r),
                              (0.0, 0.0, (2.0 * s - 1.0) * (1.0 - r)))

    def intermediate(self, t: float, s: float) -> AffineQubitMap:
        if not (0.0 <= t <= s):
            raise BadIntervalError(f"need 0 <= t <= s, got t={t}, s={s}")
        return self.as_affine(s).compose(self.as_affine(t).inverse())

    @staticmethod
    def generator_ops() -> tuple[np.ndarray, np.ndarray]:
        """Jump operators paired with (gamma_minus, gamma_plus): decay toward
        |0> and toward |1> respectively."""
        toward0 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        toward1 = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
        return toward0, toward1


def gadc_kraus(t: float) -> KrausChannel:
    return GadcChannel().kraus(t)


def gadc_rates(t: float) -> tuple[float, float]:
    return GadcChannel().rates(t)


# ---------------------------------------------------------------------------
# JSON channel descriptions
# ---------------------------------------------------------------------------

def channel_from_json(obj):
    """Build a channel from a JSON object or string.

    Schemas:
      {"family": "quasi_eternal", "alpha": 0.4, "t0": 2.0}
      {"family": "gadc"}
      {"family": "dephasing", "gamma": [[t, g], ...]}
      {"family": "amp_damp", "p": 0.3, "G": [[t, G], ...]}
    """
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"invalid channel JSON: {exc}") from exc
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigParseError("channel description must be an object with a 'family' key")
    family = obj["family"]
    try:
        if family == "quasi_eternal":
            return quasi_eternal(float(obj["alpha"]), float(obj["t0"]))
        if family == "gadc":
            return GadcChannel()
        if family == "dephasing":
            return dephasing(TabulatedRate(tuple((float(a), float(b)) for a, b in obj["gamma"])))
        if family == "amp_damp":
            return AmpDampChannel(_tabulated_callable(obj["G"]), float(obj["p"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParseError(f"bad parameters for channel family {family!r}: {exc}") from exc
    raise ConfigParseError(f"unknown channel family {family!r}")


def evolve(channel, rho, dims: Sequence[int] | None = None, subsystem: int | None = None,
           t: float = 0.0):
    """State at time t under 1 (x) ... (x) Lambda_t acting on one subsystem."""
    return apply_map(channel.as_affine(t), rho, dims, subsystem)
