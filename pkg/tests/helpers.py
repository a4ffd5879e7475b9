"""Shared test utilities: synthetic analytic fields and small geometry helpers."""

import math

import numpy as np

from tirvortex.scalarfield import FieldArrays, PlaneField


class PolynomialVortexField(PlaneField):
    """V = prod_j (y - y_j + i (z - z_j)) * exp(-i omega t).

    Analytic product field with isolated zeros of winding +1 at the given
    centers (a double zero if a center repeats).
    """

    def __init__(self, centers=((0.0, 0.0),), omega=2 * math.pi, lambda0=1.0):
        self.centers = [(float(a), float(b)) for a, b in centers]
        self.omega = omega
        self.lambda0 = lambda0
        self.amp_scale = 1.0

    def _factors(self, y, z):
        return [(y - a) + 1j * (z - b) for a, b in self.centers]

    def arrays(self, y, z, t=0.0, order=1):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        rot = np.exp(-1j * self.omega * t)
        fs = self._factors(y, z)
        U = np.prod(np.stack(np.broadcast_arrays(*fs)), axis=0) if len(fs) > 1 else fs[0]
        fa = FieldArrays(V=U * rot)
        if order >= 1:
            dU = np.zeros_like(U)
            for i in range(len(fs)):
                term = np.ones_like(U)
                for j, fj in enumerate(fs):
                    if j != i:
                        term = term * fj
                dU = dU + term
            fa.Vt = -1j * self.omega * U * rot
            fa.Vx = np.zeros_like(U)
            fa.Vy = dU * rot
            fa.Vz = 1j * dU * rot
        if order >= 2:
            ddU = np.zeros_like(U)
            n = len(fs)
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    term = np.ones_like(U)
                    for m, fm in enumerate(fs):
                        if m != i and m != j:
                            term = term * fm
                    ddU = ddU + term
            fa.Vyy = ddU * rot
            fa.Vyz = 1j * ddU * rot
            fa.Vzz = -ddU * rot
            fa.Vty = -1j * self.omega * dU * rot
            fa.Vtz = self.omega * dU * rot
        return fa


class QuadraticPhaseField(PlaneField):
    """V = exp(i((y^2 - z^2)/2 - omega t)): unit amplitude, saddle flow.

    Momentum density g = (omega/4 pi) (y, -z): a linear saddle at the origin
    with no node anywhere.
    """

    def __init__(self, omega=2 * math.pi, lambda0=1.0):
        self.omega = omega
        self.lambda0 = lambda0
        self.amp_scale = 1.0

    def arrays(self, y, z, t=0.0, order=1):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        V = np.exp(1j * ((y**2 - z**2) / 2 - self.omega * t))
        V = V * np.ones(np.broadcast(y, z).shape, dtype=complex)
        yb, zb = np.broadcast_arrays(y, z)
        fa = FieldArrays(V=V)
        if order >= 1:
            fa.Vt = -1j * self.omega * V
            fa.Vx = np.zeros_like(V)
            fa.Vy = 1j * yb * V
            fa.Vz = -1j * zb * V
        if order >= 2:
            fa.Vyy = (1j - yb**2) * V
            fa.Vyz = yb * zb * V
            fa.Vzz = (-1j - zb**2) * V
            fa.Vty = self.omega * yb * V
            fa.Vtz = -self.omega * zb * V
        return fa


def plaquette_curl(field, y, z, h=1e-3, k0=2 * math.pi, t=0.0, subdiv=8):
    """Discrete curl of v = grad(arg V)/k0: loop circulation / plaquette area.

    The loop integral of the phase gradient around a small square is the
    wrapped-phase sum along its perimeter, exact up to rounding wherever the
    square encloses no node.
    """
    from tirvortex.scalarfield import as_plane_field

    f = as_plane_field(field)
    corners = np.array([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5),
                        (-0.5, -0.5)]) * h
    pts = [corners[0]]
    for p0, p1 in zip(corners[:-1], corners[1:]):
        frac = np.arange(1, subdiv + 1)[:, None] / subdiv
        pts.append(p0 + frac * (p1 - p0))
    pts = np.concatenate([np.atleast_2d(p) for p in pts])
    V = f.values(y + pts[:, 0], z + pts[:, 1], t)
    d = np.diff(np.angle(V))
    d = np.mod(d + math.pi, 2 * math.pi) - math.pi
    return float(d.sum()) / (k0 * h * h)


def polygon_contains(polygon, point) -> bool:
    """Ray-casting point-in-polygon test; polygon is an (N, 2) closed array."""
    pts = np.asarray(polygon, dtype=float)
    x, y = float(point[0]), float(point[1])
    inside = False
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        if (y0 > y) != (y1 > y):
            t = (y - y0) / (y1 - y0)
            if x < x0 + t * (x1 - x0):
                inside = not inside
    return inside
