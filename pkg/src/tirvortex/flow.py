"""Energy-flow analysis of a plane field.

Streamline tracing follows the normalized momentum density dx/ds = g/|g|
(arc-length parameterization, so speed collapse near stagnation points does
not wreck step control).  Critical points come in two kinds:

* nodes: zeros of the complex potential V, the phase singularities; found
  by plaquette winding of the phase on a grid and refined by 2D Newton on
  (Re V, Im V) with the analytic Jacobian,
* stagnation points: zeros of the momentum density g with V != 0; found by
  sign changes of both g components and refined by Newton on g, with the
  Jacobian determinant recorded (negative determinant = saddle).

Circulation along a closed contour is accumulated as wrapped phase
increments, which are exact modulo 2 pi and immune to the stiffness of
grad S near nodes; the sampling density doubles until the value settles.

The Bernoulli ODE y' = a(z)/y + b y describing the energy streamlines near
the total-reflection origin is solved both in closed form (u = y^2 turns it
into a linear equation with polynomial particular solution) and by a
classical Runge-Kutta integrator for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .scalarfield import PlaneField, as_plane_field

__all__ = [
    "InvalidContourError",
    "Streamline",
    "CriticalPoint",
    "CirculationResult",
    "BernoulliParams",
    "GeneralBernoulli",
    "BernoulliSolution",
    "BernoulliTrace",
    "trace_streamline",
    "find_nodes",
    "find_stagnation",
    "circulation",
    "circle_contour",
    "bernoulli_closed_form",
    "bernoulli_rk4",
]

_TWO_PI = 2 * math.pi


class InvalidContourError(ValueError):
    """The contour is not closed or passes through a nodal region."""


@dataclass(frozen=True)
class Streamline:
    """Polyline traced along the energy flow."""

    points: np.ndarray  # (N, 2) array of (y, z)
    closed: bool
    terminated_reason: str  # max_steps | left_domain | stagnation | closed_loop

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class CriticalPoint:
    """A node (V = 0) or stagnation point (g = 0) of the flow."""

    position: tuple[float, float]
    kind: str  # "node" | "stagnation"
    winding: int | None = None
    circulation: float | None = None
    residual: float = math.nan
    converged: bool = True
    jacobian_det: float | None = None  # stagnation points: det d(g)/d(y,z)

    @property
    def y(self) -> float:
        return self.position[0]

    @property
    def z(self) -> float:
        return self.position[1]

    @property
    def saddle(self) -> bool | None:
        if self.kind != "stagnation" or self.jacobian_det is None:
            return None
        return self.jacobian_det < 0


@dataclass(frozen=True)
class CirculationResult:
    """Closed-loop phase circulation in radians and its quantized index."""

    value: float
    n: int
    defect: float  # |value / 2 pi - n|


def _region_grid(region, grid):
    y0, y1, z0, z1 = region
    ny, nz = grid
    if not (y0 < y1 and z0 < z1):
        raise ValueError(f"degenerate region {region}")
    if ny < 2 or nz < 2:
        raise ValueError("grid must have at least 2 points per direction")
    return np.linspace(y0, y1, ny), np.linspace(z0, z1, nz)


def _require_resolution(region, grid, lambda0):
    y0, y1, z0, z1 = region
    ny, nz = grid
    per_y = (ny - 1) / (y1 - y0) * lambda0
    per_z = (nz - 1) / (z1 - z0) * lambda0
    if per_y < 8 - 1e-9 or per_z < 8 - 1e-9:
        raise ValueError(
            f"grid too coarse: {per_y:.2f} x {per_z:.2f} points per wavelength, "
            "need at least 8 in each direction"
        )


def _wrap(delta):
    return np.mod(delta + math.pi, _TWO_PI) - math.pi


def _plaquette_windings(phase):
    """Integer winding per grid cell from wrapped phase differences."""
    dy = _wrap(np.diff(phase, axis=0))
    dz = _wrap(np.diff(phase, axis=1))
    total = dy[:, :-1] + dz[1:, :] - dy[:, 1:] - dz[:-1, :]
    return np.rint(total / _TWO_PI).astype(int)


def _merge_points(items, tol):
    """Deduplicate (y, z, payload) candidates, keeping the smallest residual."""
    kept = []
    for it in sorted(items, key=lambda r: r.residual):
        if all(math.hypot(it.y - k.y, it.z - k.z) > tol for k in kept):
            kept.append(it)
    return kept


def find_nodes(fieldlike, region, t=0.0, grid=(256, 256)) -> list[CriticalPoint]:
    """Locate the phase singularities of V inside a rectangular region.

    Plaquette winding flags candidate cells; each candidate is polished by
    Newton iteration on (Re V, Im V).  Zeros whose local structure is a
    nodal line rather than an isolated vortex (degenerate Jacobian of the
    map (y, z) -> (Re V, Im V)) are discarded: they carry no winding.
    Candidates whose Newton iteration stalls are reported with
    ``converged=False`` rather than dropped.
    """
    f = as_plane_field(fieldlike)
    _require_resolution(region, grid, f.lambda0)
    yy, zz = _region_grid(region, grid)
    Y, Z = np.meshgrid(yy, zz, indexing="ij")
    V = f.values(Y, Z, t)
    windings = _plaquette_windings(np.angle(V))
    cell = math.hypot(yy[1] - yy[0], zz[1] - zz[0])
    tol_v = 1e-10 * f.amp_scale
    k0 = _TWO_PI / f.lambda0
    margin = cell
    y0, y1, z0, z1 = region

    results = []
    for iy, iz in zip(*np.nonzero(windings)):
        py = 0.5 * (yy[iy] + yy[iy + 1])
        pz = 0.5 * (zz[iz] + zz[iz + 1])
        converged = False
        for _ in range(50):
            v, _, vy, vz = f.first_at(py, pz, t)
            if abs(v) <= tol_v:
                converged = True
                break
            J = np.array([[vy.real, vz.real], [vy.imag, vz.imag]])
            rhs = np.array([v.real, v.imag])
            try:
                step = np.linalg.solve(J, rhs)
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(J, rhs, rcond=None)
            norm = math.hypot(*step)
            if norm > 2 * cell:
                step *= 2 * cell / norm
            py, pz = py - step[0], pz - step[1]
        if not (y0 - margin <= py <= y1 + margin and z0 - margin <= pz <= z1 + margin):
            continue
        v, _, vy, vz = f.first_at(py, pz, t)
        grad2 = abs(vy) ** 2 + abs(vz) ** 2
        det = (np.conj(vy) * vz).imag
        if converged:
            if grad2 < (1e-6 * f.amp_scale * k0) ** 2:
                # higher-order zero: grad V vanishes too; read the winding
                # off a small loop
                winding = _loop_winding(f, (py, pz), 2 * cell, t)
            elif abs(det) <= 1e-9 * grad2 / 2:
                continue  # nodal line, not a vortex
            else:
                winding = 1 if det > 0 else -1
        else:
            winding = int(windings[iy, iz])
        results.append(CriticalPoint(
            position=(float(py), float(pz)), kind="node", winding=winding,
            residual=abs(v), converged=converged))

    merged = _merge_points(results, 1e-6 * f.lambda0)
    merged = [_with_circulation(f, cp, merged, t) for cp in merged]
    return sorted(merged, key=lambda c: (c.z, c.y))


def _loop_winding(f, center, radius, t, samples=512):
    th = np.linspace(0.0, _TWO_PI, samples + 1)
    V = f.values(center[0] + radius * np.cos(th), center[1] + radius * np.sin(th), t)
    return int(round(float(_wrap(np.diff(np.angle(V))).sum() / _TWO_PI)))


def _with_circulation(f, cp, all_nodes, t):
    """Attach the measured circulation on a small circle around a node."""
    if not cp.converged:
        return cp
    radius = 0.05 * f.lambda0
    others = [o for o in all_nodes if o is not cp]
    if others:
        nearest = min(math.hypot(cp.y - o.y, cp.z - o.z) for o in others)
        radius = min(radius, 0.45 * nearest)
    for _ in range(4):
        try:
            res = circulation(f, circle_contour((cp.y, cp.z), radius), t)
        except InvalidContourError:
            radius /= 2
            continue
        return CriticalPoint(position=cp.position, kind=cp.kind,
                             winding=cp.winding, circulation=res.value,
                             residual=cp.residual, converged=cp.converged)
    return cp


def find_stagnation(fieldlike, region, t=0.0, grid=(256, 256)) -> list[CriticalPoint]:
    """Locate zeros of the momentum density that are not nodes of V.

    Candidate cells are those where both components of g change sign; each
    is refined by Newton iteration on g with the analytic Jacobian.  The
    determinant of the Jacobian at the solution is recorded: a negative
    determinant marks a saddle of the flow.
    """
    f = as_plane_field(fieldlike)
    _require_resolution(region, grid, f.lambda0)
    yy, zz = _region_grid(region, grid)
    Y, Z = np.meshgrid(yy, zz, indexing="ij")
    gy, gz = f.momentum(Y, Z, t)
    gscale = float(np.hypot(gy, gz).max())
    if gscale == 0.0:
        return []
    tau = 1e-14 * gscale
    tol_g = 1e-10 * gscale
    cell = math.hypot(yy[1] - yy[0], zz[1] - zz[0])
    y0, y1, z0, z1 = region
    margin = cell

    def corners(a):
        return np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])

    cy = corners(gy)
    cz = corners(gz)
    flagged = ((cy.min(axis=0) < -tau) & (cy.max(axis=0) > tau)
               & (cz.min(axis=0) < -tau) & (cz.max(axis=0) > tau))
    starts = [(0.5 * (yy[iy] + yy[iy + 1]), 0.5 * (zz[iz] + zz[iz + 1]), True)
              for iy, iz in zip(*np.nonzero(flagged))]
    # sign-change cells miss saddles whose two zero lines cross near a cell
    # edge; interior local minima of |g| catch those
    mag = np.hypot(gy, gz)
    interior = mag[1:-1, 1:-1]
    is_min = np.ones_like(interior, dtype=bool)
    for dy_ in (-1, 0, 1):
        for dz_ in (-1, 0, 1):
            if dy_ == dz_ == 0:
                continue
            is_min &= interior < mag[1 + dy_:mag.shape[0] - 1 + dy_,
                                     1 + dz_:mag.shape[1] - 1 + dz_]
    is_min &= interior < 0.2 * gscale
    starts += [(float(yy[iy + 1]), float(zz[iz + 1]), False)
               for iy, iz in zip(*np.nonzero(is_min))]

    results = []
    for py, pz, from_sign_change in starts:
        py, pz = float(py), float(pz)
        converged = False
        degenerate_seed = False
        for it in range(50):
            gy1, gz1, J = f.momentum_jacobian(py, pz, t)
            gy1, gz1 = float(gy1), float(gz1)
            if math.hypot(gy1, gz1) <= tol_g:
                converged = True
                break
            J = np.asarray(J, dtype=float)
            if it == 0 and abs(np.linalg.det(J)) <= 1e-9 * float(np.sum(J * J)) / 2:
                degenerate_seed = True  # the seed sits on a zero line of g
                break
            try:
                step = np.linalg.solve(J, [gy1, gz1])
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(J, np.array([gy1, gz1]), rcond=None)
            norm = math.hypot(*step)
            if norm > 2 * cell:
                step *= 2 * cell / norm
            elif norm < 1e-14 * cell:
                break  # stalled
            py, pz = py - step[0], pz - step[1]
        if degenerate_seed:
            continue
        if not (y0 - margin <= py <= y1 + margin and z0 - margin <= pz <= z1 + margin):
            continue
        if not converged and not from_sign_change:
            continue  # extra seeds only count when they land on a zero
        gy1, gz1, J = f.momentum_jacobian(py, pz, t)
        if abs(complex(f.values(py, pz, t))) < 1e-6 * f.amp_scale:
            continue  # a node: g vanishes there trivially, reported by find_nodes
        J = np.asarray(J, dtype=float)
        det = float(np.linalg.det(J))
        if converged and abs(det) <= 1e-9 * float(np.sum(J * J)) / 2:
            continue  # g vanishes on a line through this point, not at a point
        results.append(CriticalPoint(
            position=(float(py), float(pz)), kind="stagnation",
            residual=float(np.hypot(gy1, gz1)), converged=converged,
            jacobian_det=det))

    merged = _merge_points(results, 1e-6 * f.lambda0)
    return sorted(merged, key=lambda c: (c.z, c.y))


def circle_contour(center, radius, samples=128) -> np.ndarray:
    """Closed circular polygon around ``center`` (counterclockwise)."""
    th = np.linspace(0.0, _TWO_PI, samples + 1)
    return np.stack([center[0] + radius * np.cos(th),
                     center[1] + radius * np.sin(th)], axis=1)


def circulation(fieldlike, contour, t=0.0) -> CirculationResult:
    """Phase circulation of V along a closed contour, in radians.

    The sum of wrapped phase increments equals the loop integral of grad B
    once the sampling resolves every increment below pi; the density starts
    at 64 samples per wavelength of arc length and doubles until the value
    moves by less than 1e-4.
    """
    f = as_plane_field(fieldlike)
    pts = np.asarray(contour, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise InvalidContourError("contour needs at least 3 vertices")
    if math.hypot(*(pts[0] - pts[-1])) > 1e-9 * f.lambda0:
        raise InvalidContourError("contour must be closed (first vertex = last)")
    seglen = np.hypot(*np.diff(pts, axis=0).T)
    value = None
    density = 1
    while True:
        samples = [pts[0]]
        for p0, p1, sl in zip(pts[:-1], pts[1:], seglen):
            nseg = max(1, math.ceil(64 * sl / f.lambda0) * density)
            frac = np.arange(1, nseg + 1)[:, None] / nseg
            samples.append(p0 + frac * (p1 - p0))
        sp = np.concatenate([np.atleast_2d(s) for s in samples])
        V = f.values(sp[:, 0], sp[:, 1], t)
        if np.abs(V).min() <= f.node_threshold:
            raise InvalidContourError("contour passes through a nodal region")
        total = float(_wrap(np.diff(np.angle(V))).sum())
        if value is not None and abs(total - value) < 1e-4:
            value = total
            break
        if density > 256:
            value = total
            break
        value = total
        density *= 2
    n = int(round(value / _TWO_PI))
    return CirculationResult(value=value, n=n, defect=abs(value / _TWO_PI - n))


def _median_momentum(f: PlaneField, bounds, t):
    yy = np.linspace(bounds[0], bounds[1], 64)
    zz = np.linspace(bounds[2], bounds[3], 64)
    Y, Z = np.meshgrid(yy, zz, indexing="ij")
    gy, gz = f.momentum(Y, Z, t)
    return float(np.median(np.hypot(gy, gz)))


def trace_streamline(fieldlike, start, t=0.0, step=0.02, max_steps=2000,
                     bounds=(-3.0, 3.0, -2.0, 2.0),
                     g_threshold=None) -> Streamline:
    """Trace the energy streamline through ``start``.

    Classical 4th-order Runge-Kutta on dx/ds = g/|g|.  Stops on leaving
    ``bounds``, on |g| dropping below the stagnation threshold (default
    1e-8 times the median |g| over the bounding box), on step exhaustion,
    or by closing onto the start point after at least 10 steps.
    """
    f = as_plane_field(fieldlike)
    if not 0 < step <= 0.1 * f.lambda0:
        raise ValueError(f"step must lie in (0, 0.1 lambda0], got {step}")
    if g_threshold is None:
        g_threshold = 1e-8 * _median_momentum(f, bounds, t)

    def direction(p):
        gy, gz = f.momentum_at(float(p[0]), float(p[1]), t)
        norm = math.hypot(gy, gz)
        if norm <= g_threshold:
            return None
        return np.array([gy / norm, gz / norm])

    y0, y1, z0, z1 = bounds
    p = np.array(start, dtype=float)
    points = [p.copy()]
    if direction(p) is None:
        return Streamline(np.array(points), closed=False, terminated_reason="stagnation")

    reason = "max_steps"
    closed = False
    snap = 0.6 * step
    for i in range(max_steps):
        k1 = direction(p)
        k2 = direction(p + 0.5 * step * k1) if k1 is not None else None
        k3 = direction(p + 0.5 * step * k2) if k2 is not None else None
        k4 = direction(p + step * k3) if k3 is not None else None
        if k4 is None:
            reason = "stagnation"
            break
        p = p + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        points.append(p.copy())
        if not (y0 <= p[0] <= y1 and z0 <= p[1] <= z1):
            reason = "left_domain"
            break
        if i + 1 >= 10 and math.hypot(*(p - points[0])) < snap:
            points[-1] = points[0].copy()
            closed = True
            reason = "closed_loop"
            break
    return Streamline(np.array(points), closed=closed, terminated_reason=reason)


# --- Bernoulli streamline equation y' = a(z)/y + b y ----------------------


@dataclass(frozen=True)
class GeneralBernoulli:
    """Generalized coefficients: polynomial a(z) (ascending) and constant b."""

    a_coeffs: tuple[float, ...]
    b: float
    y0: float
    domain: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "a_coeffs", tuple(float(c) for c in self.a_coeffs))
        if not self.domain[0] < self.domain[1]:
            raise ValueError(f"empty domain {self.domain}")

    def a(self, z):
        return np.polyval(self.a_coeffs[::-1], z)


@dataclass(frozen=True)
class BernoulliParams:
    """Streamline-equation parameters with a(z) = z (1 + 2 pi f z), b = 1/F."""

    f: float
    F: float
    y0: float
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.F == 0:
            raise ValueError("F must be nonzero")

    def general(self) -> GeneralBernoulli:
        return GeneralBernoulli(a_coeffs=(0.0, 1.0, _TWO_PI * self.f),
                                b=1.0 / self.F, y0=self.y0, domain=self.domain)


def _as_general(params) -> GeneralBernoulli:
    return params.general() if isinstance(params, BernoulliParams) else params


def _particular_poly(a_coeffs, b):
    """Polynomial P with P' = 2 b P + 2 a(z), coefficients ascending."""
    a = list(a_coeffs)
    while len(a) > 1 and a[-1] == 0.0:
        a.pop()
    if a == [0.0]:
        return [0.0]
    d = len(a) - 1
    p = [0.0] * (d + 1)
    p[d] = -a[d] / b
    for j in range(d - 1, -1, -1):
        p[j] = ((j + 1) * p[j + 1] - 2 * a[j]) / (2 * b)
    return p


class BernoulliSolution:
    """Closed-form solution y(z) = sign(y0) sqrt(C e^{2bz} + P(z)).

    ``crossing`` is the first point inside the domain where u = y^2 reaches
    zero: there the streamline meets y = 0 and the regular branch ends (the
    neighborhood of the special, circulatory solution).  Evaluation past
    the crossing raises.
    """

    def __init__(self, general: GeneralBernoulli):
        self.params = general
        self.p_coeffs = _particular_poly(general.a_coeffs, general.b)
        z_min, z_max = general.domain
        self.C = general.y0**2 - self._poly(z_min)
        self.sign = -1.0 if general.y0 < 0 else 1.0
        self.crossing = self._find_crossing()

    def _poly(self, z):
        return np.polyval(self.p_coeffs[::-1], z)

    def u(self, z):
        """Squared solution u = y^2 (valid for any z, may be negative)."""
        z = np.asarray(z, dtype=float)
        return self.C * np.exp(2 * self.params.b * z) + self._poly(z)

    def _find_crossing(self):
        z_min, z_max = self.params.domain
        zs = np.linspace(z_min, z_max, 4001)
        us = self.u(zs)
        pos = us[0] > 0
        for i in range(1, len(zs)):
            if pos and us[i] <= 0:
                return float(brentq(lambda z: float(self.u(z)), zs[i - 1], zs[i]))
            pos = us[i] > 0
        return None

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        z_min, z_max = self.params.domain
        if np.any(z < z_min - 1e-12) or np.any(z > z_max + 1e-12):
            raise ValueError(f"z outside domain [{z_min}, {z_max}]")
        if self.crossing is not None and np.any(z > self.crossing + 1e-12):
            raise ValueError(
                f"branch terminates at y = 0 near z = {self.crossing:.6g}; "
                "cannot evaluate beyond it"
            )
        u = np.maximum(self.u(z), 0.0)
        return self.sign * np.sqrt(u)


def bernoulli_closed_form(params) -> BernoulliSolution:
    """Closed-form solution of y' = a(z)/y + b y via the substitution u = y^2."""
    return BernoulliSolution(_as_general(params))


@dataclass(frozen=True)
class BernoulliTrace:
    """Runge-Kutta sampling of the streamline equation."""

    z: np.ndarray
    y: np.ndarray
    singular: bool  # approached y = 0 and stopped early


def bernoulli_rk4(params, step) -> BernoulliTrace:
    """Classical RK4 on y' = a(z)/y + b y, stopping if |y| falls below 1e-8."""
    g = _as_general(params)
    if not step > 0:
        raise ValueError("step must be positive")
    z_min, z_max = g.domain
    n = max(1, round((z_max - z_min) / step))
    h = (z_max - z_min) / n
    acoef = np.asarray(g.a_coeffs[::-1], dtype=float)

    def rhs(z, y):
        return float(np.polyval(acoef, z)) / y + g.b * y

    zs = [z_min]
    ys = [g.y0]
    z, y = z_min, g.y0
    singular = abs(y) < 1e-8
    if not singular:
        for _ in range(n):
            try:
                k1 = rhs(z, y)
                k2 = rhs(z + h / 2, y + h * k1 / 2)
                k3 = rhs(z + h / 2, y + h * k2 / 2)
                k4 = rhs(z + h, y + h * k3)
            except ZeroDivisionError:
                singular = True
                break
            y_new = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
            if abs(y_new) < 1e-8 or y_new == 0.0 or (y_new < 0) != (y < 0):
                singular = True  # reached (or shot through) the y = 0 pole
                break
            z, y = z + h, y_new
            zs.append(z)
            ys.append(y)
    return BernoulliTrace(z=np.array(zs), y=np.array(ys), singular=singular)
