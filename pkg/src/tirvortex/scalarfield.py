"""Complex scalar representation of the wave field and its flow densities.

The field is represented by a single complex potential V(x, t).  For a
transverse vector-potential mode with real wavevector k (k_z > 0) and real
amplitude vectors a, b, the scalar coefficients are obtained by projecting
onto the complex basis L(k) = l1(k) + i l2(k) built from a fixed reference
vector n:

    l1 = (n x k)/|n x k|,   l2 = (k x l1)/|k x l1|,
    alpha = a.l1 + i a.l2,  beta = b.l1 + i b.l2,

and the scalar potential of a mode set is

    V(x, t) = sum_k [alpha cos(k.x) + beta sin(k.x)] * exp(-i omega t),

the positive-frequency monochromatic time convention used throughout.  The
map is linear and exactly invertible; both directions are provided.

From V the momentum density g and energy density w follow as quadratic
forms analogous to the quantum-mechanical probability current and density
(Gaussian normalization, c = 1):

    g = -(1/8 pi) [dV*/dt grad V + dV/dt grad V*]
    w =  (1/8 pi) [|dV/dt|^2 + grad V . grad V*]

Note on w: the first term is the time-derivative bilinear, which is the
form that satisfies the continuity equation dw/dt + div g = 0 together
with g above (and coincides with the |V|^2 form for unit-frequency
monochromatic fields).  ``continuity_residual`` is the numerical arbiter.

Amplitude/phase (Madelung) decomposition: V = A exp(iB), velocity field
v = grad B / k0, with the eikonal momentum (k0^2/4 pi) A^2 grad S equal to
g away from nodes.

Derivatives of V are always evaluated analytically from the mode sum;
finite differences appear only in ``continuity_residual``, where measuring
the residual of the continuity equation is the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import ModeField, Scenario

__all__ = [
    "DegenerateBasisError",
    "InvalidModeError",
    "NodeError",
    "VectorMode",
    "ComplexBasis",
    "ScalarMode",
    "FieldSample",
    "FieldArrays",
    "PlaneField",
    "ScenarioField",
    "ModeSumField",
    "as_plane_field",
    "make_basis",
    "vector_to_scalar",
    "scalar_to_vector",
    "eval_field",
    "velocity",
    "velocity_from",
    "eikonal_momentum",
    "continuity_residual",
    "DEFAULT_REFERENCE",
]

DEFAULT_REFERENCE = np.array([1.0, 0.0, 0.0])
_FOUR_PI = 4 * math.pi
_EIGHT_PI = 8 * math.pi


class DegenerateBasisError(ValueError):
    """The reference vector is (nearly) parallel to the wavevector."""


class InvalidModeError(ValueError):
    """A mode violates a structural requirement (e.g. transversality)."""


class NodeError(ValueError):
    """The phase (and anything built on it) is undefined at a field node."""


@dataclass(frozen=True)
class VectorMode:
    """Transverse vector-potential Fourier mode: a cos(k.x) + b sin(k.x)."""

    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    omega: float

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        for name, v in (("k", k), ("a", a), ("b", b)):
            if v.shape != (3,):
                raise InvalidModeError(f"{name} must be a real 3-vector")
            v.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not k[2] > 0:
            raise InvalidModeError("vector modes live on the half-space k_z > 0")
        knorm = np.linalg.norm(k)
        for name, v in (("a", a), ("b", b)):
            vnorm = np.linalg.norm(v)
            if vnorm > 0 and abs(np.dot(k, v)) > 1e-9 * knorm * vnorm:
                raise InvalidModeError(
                    f"transversality violated: k.{name} = {np.dot(k, v):.3e}"
                )


@dataclass(frozen=True)
class ComplexBasis:
    """Right-handed orthonormal pair (l1, l2) transverse to a wavevector."""

    l1: np.ndarray
    l2: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        for name in ("l1", "l2", "k"):
            v = np.asarray(getattr(self, name), dtype=float)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def L(self) -> np.ndarray:
        """Complex base vector l1 + i l2."""
        return self.l1 + 1j * self.l2


def make_basis(k, n=DEFAULT_REFERENCE) -> ComplexBasis:
    """Transverse orthonormal basis for wavevector k and reference vector n."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    knorm = np.linalg.norm(k)
    nnorm = np.linalg.norm(n)
    if knorm == 0:
        raise DegenerateBasisError("zero wavevector")
    cross = np.cross(n, k)
    cnorm = np.linalg.norm(cross)
    if cnorm <= 1e-10 * knorm * nnorm:
        raise DegenerateBasisError(
            f"reference vector {n.tolist()} is parallel to k {k.tolist()}"
        )
    l1 = cross / cnorm
    kl1 = np.cross(k, l1)
    l2 = kl1 / np.linalg.norm(kl1)
    return ComplexBasis(l1=l1, l2=l2, k=k)


@dataclass(frozen=True)
class ScalarMode:
    """Scalar-potential mode: [alpha cos(k.x) + beta sin(k.x)] e^{-i omega t}."""

    k: np.ndarray
    alpha: complex
    beta: complex
    omega: float

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        if k.shape != (3,):
            raise InvalidModeError("k must be a real 3-vector")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        if not k[2] > 0:
            raise InvalidModeError("scalar modes live on the half-space k_z > 0")


def vector_to_scalar(modes, n=DEFAULT_REFERENCE) -> list[ScalarMode]:
    """Project vector-potential modes onto the complex basis.

    Per mode: alpha = a.l1 + i a.l2 and beta = b.l1 + i b.l2.
    """
    out = []
    for m in modes:
        basis = make_basis(m.k, n)
        alpha = complex(np.dot(m.a, basis.l1), np.dot(m.a, basis.l2))
        beta = complex(np.dot(m.b, basis.l1), np.dot(m.b, basis.l2))
        out.append(ScalarMode(k=m.k, alpha=alpha, beta=beta, omega=m.omega))
    return out


def scalar_to_vector(modes, n=DEFAULT_REFERENCE) -> list[VectorMode]:
    """Exact inverse of :func:`vector_to_scalar`."""
    out = []
    for m in modes:
        basis = make_basis(m.k, n)
        a = m.alpha.real * basis.l1 + m.alpha.imag * basis.l2
        b = m.beta.real * basis.l1 + m.beta.imag * basis.l2
        out.append(VectorMode(k=m.k, a=a, b=b, omega=m.omega))
    return out


class _TermSet:
    """Sum of complex-exponential terms c_j exp(i(k_j.x - omega_j t)).

    The common currency of field evaluation: scenario modes map to one term
    each, scalar modes to a pair of terms at +-k.  Wavevectors may be
    complex (evanescent decay in the imaginary part).
    """

    __slots__ = ("amps", "ks", "omegas", "amp_scale")

    def __init__(self, amps, ks, omegas, amp_scale=None):
        self.amps = np.asarray(amps, dtype=complex)
        self.ks = np.asarray(ks, dtype=complex).reshape(-1, 3)
        self.omegas = np.asarray(omegas, dtype=float)
        if self.amps.size == 0:
            raise ValueError("empty mode list")
        self.amp_scale = float(np.max(np.abs(self.amps))) if amp_scale is None else amp_scale

    @classmethod
    def from_modes(cls, modes) -> "_TermSet":
        modes = list(modes)
        if not modes:
            raise ValueError("empty mode list")
        if isinstance(modes[0], ScalarMode):
            amps, ks, oms = [], [], []
            for m in modes:
                amps.append((m.alpha - 1j * m.beta) / 2)
                ks.append(m.k)
                amps.append((m.alpha + 1j * m.beta) / 2)
                ks.append(-m.k)
                oms += [m.omega, m.omega]
            return cls(amps, ks, oms)
        return cls([m.amplitude for m in modes], [m.k for m in modes],
                   [m.omega for m in modes])

    def common_omega(self):
        o = self.omegas
        return float(o[0]) if np.all(np.abs(o - o[0]) <= 1e-12 * abs(o[0])) else None

    def _basis(self, phase, t):
        return self.amps * np.exp(1j * (phase - self.omegas * t))

    def eval2d(self, y, z, t=0.0, order=1) -> "FieldArrays":
        """Field and derivatives on the x = 0 plane; y, z broadcastable."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        phase = y[..., None] * self.ks[:, 1] + z[..., None] * self.ks[:, 2]
        E = self._basis(phase, t)
        fa = FieldArrays(V=E.sum(-1))
        if order >= 1:
            fa.Vt = E @ (-1j * self.omegas)
            fa.Vx = E @ (1j * self.ks[:, 0])
            fa.Vy = E @ (1j * self.ks[:, 1])
            fa.Vz = E @ (1j * self.ks[:, 2])
        if order >= 2:
            ky, kz = self.ks[:, 1], self.ks[:, 2]
            fa.Vyy = E @ (-ky * ky)
            fa.Vyz = E @ (-ky * kz)
            fa.Vzz = E @ (-kz * kz)
            fa.Vty = E @ (self.omegas * ky)
            fa.Vtz = E @ (self.omegas * kz)
        return fa

    def eval3d(self, x, t=0.0):
        """V, grad V and dV/dt at 3-points x (shape (..., 3))."""
        x = np.asarray(x, dtype=float)
        phase = x @ self.ks.T
        E = self._basis(phase, t)
        V = E.sum(-1)
        Vt = E @ (-1j * self.omegas)
        grad = np.stack([E @ (1j * self.ks[:, a]) for a in range(3)], axis=-1)
        return V, grad, Vt

    def point_first(self, y: float, z: float, t: float):
        """Scalar fast path: V, Vt, Vy, Vz at one in-plane point."""
        phase = self.ks[:, 1] * y + self.ks[:, 2] * z - self.omegas * t
        E = self.amps * np.exp(1j * phase)
        return (complex(E.sum()), complex(E @ (-1j * self.omegas)),
                complex(E @ (1j * self.ks[:, 1])), complex(E @ (1j * self.ks[:, 2])))


@dataclass
class FieldArrays:
    """Pointwise analytic derivatives of V on the (y, z) plane."""

    V: np.ndarray
    Vt: np.ndarray = None
    Vx: np.ndarray = None
    Vy: np.ndarray = None
    Vz: np.ndarray = None
    Vyy: np.ndarray = None
    Vyz: np.ndarray = None
    Vzz: np.ndarray = None
    Vty: np.ndarray = None
    Vtz: np.ndarray = None


@dataclass(frozen=True)
class FieldSample:
    """Everything the scalar theory yields at one point and time."""

    V: complex
    grad_V: np.ndarray
    dV_dt: complex
    A: float
    B: float
    g: np.ndarray
    w: float
    phase_defined: bool


class PlaneField:
    """Analytic complex field restricted to the (y, z) plane.

    Subclasses implement :meth:`arrays`; everything else (momentum density,
    its Jacobian, energy density) derives from it.  ``amp_scale`` sets the
    node threshold: the phase counts as undefined where |V| <= 1e-12 * scale.
    """

    lambda0: float = 1.0
    omega: float | None = None
    amp_scale: float = 1.0

    @property
    def node_threshold(self) -> float:
        return 1e-12 * self.amp_scale

    def arrays(self, y, z, t=0.0, order=1) -> FieldArrays:
        raise NotImplementedError

    def values(self, y, z, t=0.0):
        return self.arrays(y, z, t, order=0).V

    def momentum(self, y, z, t=0.0):
        """In-plane momentum density (g_y, g_z)."""
        fa = self.arrays(y, z, t, order=1)
        ct = np.conj(fa.Vt)
        gy = -np.real(ct * fa.Vy) / _FOUR_PI
        gz = -np.real(ct * fa.Vz) / _FOUR_PI
        return gy, gz

    def momentum_at(self, y: float, z: float, t: float = 0.0) -> tuple[float, float]:
        """Scalar momentum density, the hot path of streamline tracing."""
        gy, gz = self.momentum(y, z, t)
        return float(gy), float(gz)

    def first_at(self, y: float, z: float, t: float = 0.0):
        """Scalar (V, Vt, Vy, Vz), the hot path of Newton refinement."""
        fa = self.arrays(y, z, t, order=1)
        return complex(fa.V), complex(fa.Vt), complex(fa.Vy), complex(fa.Vz)

    def momentum_jacobian(self, y, z, t=0.0):
        """g and the 2x2 Jacobian d(g_y, g_z)/d(y, z) at scalar points."""
        fa = self.arrays(y, z, t, order=2)
        ct = np.conj(fa.Vt)
        gy = -np.real(ct * fa.Vy) / _FOUR_PI
        gz = -np.real(ct * fa.Vz) / _FOUR_PI
        dgy_dy = -np.real(np.conj(fa.Vty) * fa.Vy + ct * fa.Vyy) / _FOUR_PI
        dgy_dz = -np.real(np.conj(fa.Vtz) * fa.Vy + ct * fa.Vyz) / _FOUR_PI
        dgz_dy = -np.real(np.conj(fa.Vty) * fa.Vz + ct * fa.Vyz) / _FOUR_PI
        dgz_dz = -np.real(np.conj(fa.Vtz) * fa.Vz + ct * fa.Vzz) / _FOUR_PI
        return gy, gz, np.array([[dgy_dy, dgy_dz], [dgz_dy, dgz_dz]])

    def energy(self, y, z, t=0.0):
        """Energy density w >= 0."""
        fa = self.arrays(y, z, t, order=1)
        return (np.abs(fa.Vt) ** 2 + np.abs(fa.Vx) ** 2
                + np.abs(fa.Vy) ** 2 + np.abs(fa.Vz) ** 2) / _EIGHT_PI


class ModeSumField(PlaneField):
    """Plane field backed by a single mode sum (one homogeneous region)."""

    def __init__(self, modes_or_terms, lambda0=1.0):
        if isinstance(modes_or_terms, _TermSet):
            self._terms = modes_or_terms
        else:
            self._terms = _TermSet.from_modes(modes_or_terms)
        self.lambda0 = lambda0
        self.omega = self._terms.common_omega()
        self.amp_scale = self._terms.amp_scale

    def arrays(self, y, z, t=0.0, order=1) -> FieldArrays:
        return self._terms.eval2d(y, z, t, order)

    def momentum_at(self, y, z, t=0.0):
        _, vt, vy, vz = self._terms.point_first(y, z, t)
        ct = vt.conjugate()
        return (-(ct * vy).real / _FOUR_PI, -(ct * vz).real / _FOUR_PI)

    def first_at(self, y, z, t=0.0):
        return self._terms.point_first(y, z, t)


class ScenarioField(PlaneField):
    """Piecewise field of a scenario: dense modes for z <= 0, rare for z > 0."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._dense = _TermSet.from_modes(scenario.dense.modes)
        self._rare = _TermSet.from_modes(scenario.rare.modes)
        self.lambda0 = scenario.lambda0
        self.omega = scenario.omega
        self.amp_scale = max(self._dense.amp_scale, self._rare.amp_scale)

    def arrays(self, y, z, t=0.0, order=1) -> FieldArrays:
        y, z = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(z, dtype=float))
        shape = y.shape
        yf, zf = y.reshape(-1), z.reshape(-1)
        names = ["V"]
        if order >= 1:
            names += ["Vt", "Vx", "Vy", "Vz"]
        if order >= 2:
            names += ["Vyy", "Vyz", "Vzz", "Vty", "Vtz"]
        flat = {nm: np.zeros(yf.shape, dtype=complex) for nm in names}
        mask = zf <= 0.0
        for terms, sel in ((self._dense, mask), (self._rare, ~mask)):
            if sel.any():
                fa = terms.eval2d(yf[sel], zf[sel], t, order)
                for nm in names:
                    flat[nm][sel] = getattr(fa, nm)
        return FieldArrays(**{nm: arr.reshape(shape) for nm, arr in flat.items()})

    def momentum_at(self, y, z, t=0.0):
        terms = self._dense if z <= 0.0 else self._rare
        _, vt, vy, vz = terms.point_first(y, z, t)
        ct = vt.conjugate()
        return (-(ct * vy).real / _FOUR_PI, -(ct * vz).real / _FOUR_PI)

    def first_at(self, y, z, t=0.0):
        terms = self._dense if z <= 0.0 else self._rare
        return terms.point_first(y, z, t)


def as_plane_field(field) -> PlaneField:
    """Coerce a Scenario, ModeField, mode list or PlaneField to a PlaneField."""
    if isinstance(field, PlaneField):
        return field
    if isinstance(field, Scenario):
        return ScenarioField(field)
    if isinstance(field, ModeField):
        return ModeSumField(field.modes)
    if isinstance(field, (list, tuple)):
        return ModeSumField(field)
    raise TypeError(f"cannot interpret {type(field).__name__} as a plane field")


def _terms_at(field, x) -> tuple[_TermSet, float]:
    """Term set governing point x, plus the node-threshold amplitude scale."""
    if isinstance(field, Scenario):
        side = field.dense.modes if x[2] <= 0 else field.rare.modes
        scale = max(abs(m.amplitude) for m in field.dense.modes + field.rare.modes)
        return _TermSet.from_modes(side), scale
    if isinstance(field, ModeField):
        ts = _TermSet.from_modes(field.modes)
        return ts, ts.amp_scale
    if isinstance(field, (list, tuple)):
        ts = _TermSet.from_modes(field)
        return ts, ts.amp_scale
    raise TypeError(f"cannot evaluate {type(field).__name__}")


def eval_field(field, x, t=0.0) -> FieldSample:
    """Evaluate V, its analytic derivatives and the flow densities at x.

    ``field`` is a Scenario (the mode list is chosen by the half-space of x,
    dense for z <= 0), a ModeField, or a list of ScalarMode/Mode.
    """
    x = np.asarray(x, dtype=float)
    terms, scale = _terms_at(field, x)
    V, grad, Vt = terms.eval3d(x, t)
    V = complex(V)
    Vt = complex(Vt)
    grad = grad.reshape(3)
    g = -np.real(np.conj(Vt) * grad) / _FOUR_PI
    w = (abs(Vt) ** 2 + float(np.sum(np.abs(grad) ** 2))) / _EIGHT_PI
    A = abs(V)
    defined = A > 1e-12 * scale
    B = math.atan2(V.imag, V.real) if defined else math.nan
    return FieldSample(V=V, grad_V=grad, dV_dt=Vt, A=A, B=B, g=g, w=w,
                       phase_defined=defined)


def velocity_from(V: complex, grad_V, k0: float) -> np.ndarray:
    """Madelung velocity v = grad B / k0 = Im(V* grad V) / (k0 |V|^2)."""
    a2 = abs(V) ** 2
    if a2 == 0:
        raise NodeError("velocity undefined at a node (A = 0)")
    return np.imag(np.conj(V) * np.asarray(grad_V)) / (k0 * a2)


def velocity(field, x, t=0.0, k0=None) -> np.ndarray:
    """Velocity field of the flow at point x; k0 defaults to omega (c = 1)."""
    sample = eval_field(field, x, t)
    if not sample.phase_defined:
        raise NodeError(f"velocity undefined at node near {np.asarray(x).tolist()}")
    if k0 is None:
        terms, _ = _terms_at(field, np.asarray(x, dtype=float))
        k0 = terms.common_omega()
        if k0 is None:
            raise ValueError("field is not monochromatic; pass k0 explicitly")
    return velocity_from(sample.V, sample.grad_V, k0)


def eikonal_momentum(sample: FieldSample, k0: float) -> np.ndarray:
    """Momentum density from the eikonal form (k0^2/4 pi) A^2 grad S.

    With grad S = grad B / k0 this reduces to (k0/4 pi) Im(V* grad V); away
    from nodes it must agree with the bilinear form in ``FieldSample.g``.
    """
    if sample.A <= 1e-12 or not sample.phase_defined:
        raise NodeError("eikonal momentum undefined at a node (A = 0)")
    return k0 * np.imag(np.conj(sample.V) * sample.grad_V) / _FOUR_PI


def continuity_residual(field, x, t=0.0, h=1e-3) -> float:
    """|dw/dt + div g| measured by central finite differences with step h.

    Both terms are formed from :func:`eval_field`; for mode sets satisfying
    the dispersion relation the residual vanishes at second order in h.
    Points within h of the interface of a scenario see the curvature jump
    of the piecewise field and are not expected to converge.
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    dw = (eval_field(field, x, t + h).w - eval_field(field, x, t - h).w) / (2 * h)
    div = 0.0
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        div += (eval_field(field, x + e, t).g[axis]
                - eval_field(field, x - e, t).g[axis]) / (2 * h)
    return abs(dw + div)
