"""Total-reflection field configurations at a planar dielectric interface.

Conventions used throughout the package:

* code units: c = 1 and lengths are measured in vacuum wavelengths, so a
  scenario with ``lambda0 = 1`` has vacuum wavenumber k0 = 2*pi and angular
  frequency omega = k0,
* geometry: the interface is the plane z = 0, the optically denser medium
  fills z < 0 and the rarer one z > 0; the plane of incidence is the y-z
  plane (k_x = 0 for every mode), with y running along the surface,
* polarization: s (the physical field is a single complex scalar),
* the incidence angle theta is measured from the interface normal, in
  radians everywhere except the human-facing config layer.

A scenario is a set of plane/evanescent modes on each side of the interface,
built so that the tangential wavevector is conserved and every incident wave
carries its Fresnel-reflected partner and its transmitted (evanescent, above
the critical angle) partner.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "DomainError",
    "Medium",
    "Interface",
    "Mode",
    "ModeField",
    "Scenario",
    "critical_angle",
    "fresnel_reflection",
    "evanescent_decay",
    "gh_shift",
    "build_single_wave",
    "build_wolter_scenario",
    "build_braunbek_scenario",
]

_REL_TOL = 1e-12


class DomainError(ValueError):
    """An input lies outside the physical domain of an operation."""


@dataclass(frozen=True)
class Medium:
    """Homogeneous dielectric, described by its refractive index."""

    refractive_index: float

    def __post_init__(self):
        if not self.refractive_index > 0:
            raise DomainError(f"refractive index must be positive, got {self.refractive_index}")


@dataclass(frozen=True)
class Interface:
    """Planar interface at z = 0: dense medium below (z < 0), rare above."""

    dense: Medium
    rare: Medium

    def __post_init__(self):
        if not self.dense.refractive_index > self.rare.refractive_index:
            raise DomainError(
                "total reflection requires n_dense > n_rare, got "
                f"{self.dense.refractive_index} / {self.rare.refractive_index}"
            )


def critical_angle(interface: Interface) -> float:
    """Angle of incidence (radians) at which total reflection sets in."""
    return math.asin(interface.rare.refractive_index / interface.dense.refractive_index)


@dataclass(frozen=True)
class Mode:
    """One plane or evanescent wave: amplitude * exp(i(k.x - omega t)).

    ``k`` may be complex; imaginary parts encode evanescent decay.  A valid
    mode is either purely propagating (k real) or has Im(k) orthogonal to
    Re(k).
    """

    k: np.ndarray
    amplitude: complex
    omega: float

    def __post_init__(self):
        k = np.asarray(self.k, dtype=complex)
        if k.shape != (3,):
            raise ValueError(f"wavevector must be a 3-vector, got shape {k.shape}")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        re, im = k.real, k.imag
        scale = np.linalg.norm(re) + np.linalg.norm(im)
        if np.linalg.norm(im) > _REL_TOL * scale:
            if abs(np.dot(re, im)) > 1e-9 * scale**2:
                raise ValueError("evanescent mode must have Im(k) orthogonal to Re(k)")

    @property
    def is_evanescent(self) -> bool:
        return bool(np.linalg.norm(self.k.imag) > _REL_TOL * np.linalg.norm(self.k.real))

    def dispersion_defect(self, refractive_index: float) -> float:
        """Relative defect of k.k (unconjugated) against (n*omega)^2, c = 1."""
        target = (refractive_index * self.omega) ** 2
        return abs(complex(np.dot(self.k, self.k)) - target) / abs(target)


@dataclass(frozen=True)
class ModeField:
    """Modes attached to one half-space, evaluable as a complex scalar."""

    modes: tuple[Mode, ...]
    medium: Medium
    z_sign: int  # -1: dense half-space z < 0, +1: rare half-space z > 0

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.z_sign not in (-1, +1):
            raise ValueError("z_sign must be -1 (dense) or +1 (rare)")


@dataclass(frozen=True)
class Scenario:
    """A physically consistent multi-wave total-reflection configuration."""

    interface: Interface
    lambda0: float
    dense: ModeField
    rare: ModeField
    label: str = ""

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise DomainError(f"lambda0 must be positive, got {self.lambda0}")
        self._validate()

    @property
    def k0(self) -> float:
        """Vacuum wavenumber, 2*pi / lambda0."""
        return 2 * math.pi / self.lambda0

    @property
    def omega(self) -> float:
        """Shared angular frequency of all modes (c = 1)."""
        return self.dense.modes[0].omega

    @property
    def dense_modes(self) -> tuple[Mode, ...]:
        return self.dense.modes

    @property
    def rare_modes(self) -> tuple[Mode, ...]:
        return self.rare.modes

    def _validate(self):
        modes = self.dense.modes + self.rare.modes
        if not self.dense.modes or not self.rare.modes:
            raise ValueError("scenario requires modes on both sides of the interface")
        omega = modes[0].omega
        for m in modes:
            if abs(m.omega - omega) > _REL_TOL * omega:
                raise ValueError("all modes of a scenario must share one frequency")
        for mf in (self.dense, self.rare):
            n = mf.medium.refractive_index
            for m in mf.modes:
                defect = m.dispersion_defect(n)
                if defect > _REL_TOL:
                    raise ValueError(
                        f"mode violates the dispersion relation (defect {defect:.3e})"
                    )
        for m in self.rare.modes:
            if m.is_evanescent and not m.k.imag[2] > 0:
                raise ValueError("rare-side evanescent modes must decay away from the interface")
        # Every incident dense mode needs a reflected and a transmitted partner
        # with the same tangential wavevector.  Compare within tangential groups
        # so coincident-wave (delta_theta = 0) scenarios stay valid.
        kt_scale = self.interface.dense.refractive_index * self.omega
        groups: dict[tuple[float, float], list[tuple[str, Mode]]] = {}

        def key(m: Mode):
            kt = m.k.real[:2]
            q = round(12 - math.log10(kt_scale)) if kt_scale > 0 else 12
            return (round(float(kt[0]), q), round(float(kt[1]), q))

        for m in self.dense.modes:
            role = "incident" if m.k.real[2] > 0 else "reflected"
            groups.setdefault(key(m), []).append((role, m))
        for m in self.rare.modes:
            groups.setdefault(key(m), []).append(("transmitted", m))
        for kt, members in groups.items():
            counts = {"incident": 0, "reflected": 0, "transmitted": 0}
            for role, _ in members:
                counts[role] += 1
            if counts["incident"] > min(counts["reflected"], counts["transmitted"]):
                raise ValueError(
                    f"incident mode at tangential k={kt} lacks a reflected or "
                    "transmitted partner"
                )

    def with_label(self, label: str) -> "Scenario":
        return replace(self, label=label)


def _kz_rare(interface: Interface, ky: float, k0: float) -> complex:
    """z-wavevector in the rare medium; i*kappa above the critical angle."""
    n2 = interface.rare.refractive_index
    return cmath.sqrt(complex(n2**2 * k0**2 - ky**2))


def fresnel_reflection(interface: Interface, theta: float) -> complex:
    """s-polarization amplitude reflection coefficient at incidence theta.

    Above the critical angle the coefficient is unimodular and carries the
    total-reflection phase shift -2*atan(kappa / k_z,dense); below it is real
    with |r| < 1.
    """
    if not 0 <= theta < math.pi / 2:
        raise DomainError(f"incidence angle must lie in [0, pi/2), got {theta}")
    n1 = interface.dense.refractive_index
    k0 = 2 * math.pi  # any scale cancels in the ratio
    ky = n1 * k0 * math.sin(theta)
    q1 = n1 * k0 * math.cos(theta)
    q2 = _kz_rare(interface, ky, k0)
    return (q1 - q2) / (q1 + q2)


def evanescent_decay(interface: Interface, theta: float, lambda0: float = 1.0) -> float:
    """Exponential decay constant kappa of the transmitted field, in 1/length.

    The transmitted amplitude falls off as exp(-kappa z); 1/kappa is the
    penetration depth, of order one wavelength just above the critical angle.
    """
    thc = critical_angle(interface)
    if theta < thc:
        raise DomainError(
            f"no evanescent regime: theta={theta:.6f} < critical angle {thc:.6f}"
        )
    if not theta <= math.pi / 2:
        raise DomainError(f"incidence angle must not exceed pi/2, got {theta}")
    n1 = interface.dense.refractive_index
    n2 = interface.rare.refractive_index
    k0 = 2 * math.pi / lambda0
    # the radicand can round slightly negative right at the onset
    return k0 * math.sqrt(max(0.0, n1**2 * math.sin(theta) ** 2 - n2**2))


def gh_shift(interface: Interface, theta: float, lambda0: float = 1.0) -> float:
    """Longitudinal (Goos-Haenchen) shift of the totally reflected beam.

    Stationary-phase estimate: the negative derivative of the reflection
    phase with respect to the tangential wavenumber, evaluated by central
    differences with step (2*pi/lambda0) * 1e-6.
    """
    thc = critical_angle(interface)
    margin = 1e-6
    if not (thc + margin < theta < math.pi / 2 - margin):
        raise DomainError(
            "shift diverges at the critical angle: theta must lie strictly inside "
            f"({thc:.6f} + 1e-6, pi/2 - 1e-6), got {theta:.6f}"
        )
    n1 = interface.dense.refractive_index
    k0 = 2 * math.pi / lambda0
    ky = n1 * k0 * math.sin(theta)
    dk = k0 * 1e-6
    if ky + dk >= n1 * k0:
        raise DomainError(
            "too close to grazing incidence: the differentiation step leaves "
            "the propagating band"
        )

    def phase(kt: float) -> float:
        q1 = math.sqrt(n1**2 * k0**2 - kt**2)
        q2 = _kz_rare(interface, kt, k0)
        return cmath.phase((q1 - q2) / (q1 + q2))

    return -(phase(ky + dk) - phase(ky - dk)) / (2 * dk)


def _tir_triple(interface: Interface, theta: float, lambda0: float,
                amplitude: complex, omega: float) -> tuple[Mode, Mode, Mode]:
    """Incident, reflected and transmitted modes for one wave at angle theta."""
    n1 = interface.dense.refractive_index
    k0 = 2 * math.pi / lambda0
    ky = n1 * k0 * math.sin(theta)
    q1 = n1 * k0 * math.cos(theta)
    q2 = _kz_rare(interface, ky, k0)
    r = (q1 - q2) / (q1 + q2)
    t = 1 + r
    incident = Mode(np.array([0, ky, q1], dtype=complex), amplitude, omega)
    reflected = Mode(np.array([0, ky, -q1], dtype=complex), amplitude * r, omega)
    transmitted = Mode(np.array([0, ky, q2], dtype=complex), amplitude * t, omega)
    return incident, reflected, transmitted


def _require_tir(interface: Interface, thetas, lambda0: float):
    if not lambda0 > 0:
        raise DomainError(f"lambda0 must be positive, got {lambda0}")
    thc = critical_angle(interface)
    for th in thetas:
        if not thc < th < math.pi / 2:
            raise DomainError(
                f"angle {th:.6f} rad is not in the total-reflection range "
                f"({thc:.6f}, pi/2)"
            )


def build_single_wave(interface: Interface, theta: float,
                      lambda0: float = 1.0) -> Scenario:
    """Control scenario: one incident wave, its reflection, one evanescent mode."""
    _require_tir(interface, [theta], lambda0)
    omega = 2 * math.pi / lambda0  # c = 1
    inc, refl, tr = _tir_triple(interface, theta, lambda0, 1.0, omega)
    return Scenario(
        interface=interface,
        lambda0=lambda0,
        dense=ModeField((inc, refl), interface.dense, -1),
        rare=ModeField((tr,), interface.rare, +1),
        label="single",
    )


def build_wolter_scenario(interface: Interface, theta_mean: float, delta_theta: float,
                          lambda0: float = 1.0,
                          amplitudes: tuple[complex, complex] = (1.0, 1.0)) -> Scenario:
    """Four-wave configuration: two slightly inclined incident waves plus
    their reflections on the dense side, two evanescent modes on the rare side.
    """
    thetas = [theta_mean - delta_theta / 2, theta_mean + delta_theta / 2]
    _require_tir(interface, thetas, lambda0)
    omega = 2 * math.pi / lambda0
    dense: list[Mode] = []
    rare: list[Mode] = []
    for th, a in zip(thetas, amplitudes):
        inc, refl, tr = _tir_triple(interface, th, lambda0, a, omega)
        dense += [inc, refl]
        rare.append(tr)
    return Scenario(
        interface=interface,
        lambda0=lambda0,
        dense=ModeField(tuple(dense), interface.dense, -1),
        rare=ModeField(tuple(rare), interface.rare, +1),
        label="wolter",
    )


def build_braunbek_scenario(interface: Interface, theta_mean: float, delta_theta: float,
                            lambda0: float = 1.0) -> Scenario:
    """Three-wave variant: the second incident wave is dropped after the
    reflection bookkeeping, keeping its reflected and transmitted partners.
    """
    thetas = [theta_mean - delta_theta / 2, theta_mean + delta_theta / 2]
    _require_tir(interface, thetas, lambda0)
    omega = 2 * math.pi / lambda0
    inc1, refl1, tr1 = _tir_triple(interface, thetas[0], lambda0, 1.0, omega)
    _, refl2, tr2 = _tir_triple(interface, thetas[1], lambda0, 1.0, omega)
    return Scenario(
        interface=interface,
        lambda0=lambda0,
        dense=ModeField((inc1, refl1, refl2), interface.dense, -1),
        rare=ModeField((tr1, tr2), interface.rare, +1),
        label="braunbek",
    )
