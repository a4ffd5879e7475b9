import math

import numpy as np
import pytest

from tirvortex.scenario import (DomainError, Interface, Medium, Mode,
                                build_braunbek_scenario, build_single_wave,
                                build_wolter_scenario, critical_angle,
                                evanescent_decay, fresnel_reflection, gh_shift)

GLASS_AIR = Interface(Medium(1.5), Medium(1.0))


def test_medium_and_interface_validation():
    with pytest.raises(DomainError):
        Medium(-1.0)
    with pytest.raises(DomainError):
        Interface(Medium(1.0), Medium(1.5))  # not a denser incidence medium


def test_critical_angle_value():
    assert critical_angle(GLASS_AIR) == pytest.approx(math.asin(2 / 3), abs=0)


class TestFresnel:
    def test_unity_at_critical_angle(self):
        r = fresnel_reflection(GLASS_AIR, critical_angle(GLASS_AIR))
        assert abs(r - 1.0) < 1e-6  # limiting case, sqrt halves the precision

    def test_grazing_limit(self):
        r = fresnel_reflection(GLASS_AIR, math.pi / 2 - 1e-9)
        assert abs(r + 1.0) < 1e-6

    def test_fifty_degrees_closed_form(self):
        # independent high-precision evaluation of
        # -2*atan(sqrt(sin^2(50deg) - (2/3)^2)/cos(50deg))
        r = fresnel_reflection(GLASS_AIR, math.radians(50))
        assert abs(r) == pytest.approx(1.0, abs=1e-12)
        assert math.atan2(r.imag, r.real) == pytest.approx(
            -1.0616485687527151686, abs=1e-14)

    def test_unimodular_above_critical(self):
        thc = critical_angle(GLASS_AIR)
        for th in np.linspace(thc + 1e-6, math.pi / 2 - 1e-6, 200):
            assert abs(abs(fresnel_reflection(GLASS_AIR, th)) - 1.0) < 1e-12

    def test_partial_below_critical(self):
        for th in np.linspace(0.0, critical_angle(GLASS_AIR) - 1e-3, 50):
            r = fresnel_reflection(GLASS_AIR, th)
            assert abs(r.imag) < 1e-15
            assert abs(r) < 1.0

    def test_phase_monotone_from_zero_to_minus_pi(self):
        thc = critical_angle(GLASS_AIR)
        thetas = np.linspace(thc + 1e-9, math.pi / 2 - 1e-9, 1000)
        phases = [math.atan2(fresnel_reflection(GLASS_AIR, th).imag,
                             fresnel_reflection(GLASS_AIR, th).real)
                  for th in thetas]
        assert all(b < a for a, b in zip(phases, phases[1:]))
        assert phases[0] == pytest.approx(0.0, abs=1e-4)
        assert phases[-1] == pytest.approx(-math.pi, abs=1e-4)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            fresnel_reflection(GLASS_AIR, -0.1)
        with pytest.raises(DomainError):
            fresnel_reflection(GLASS_AIR, math.pi / 2)


class TestEvanescentDecay:
    def test_zero_at_onset(self):
        assert evanescent_decay(GLASS_AIR, critical_angle(GLASS_AIR)) == pytest.approx(
            0.0, abs=1e-6)

    def test_forty_five_degrees(self):
        # 2*pi*sqrt(2.25*0.5 - 1) evaluated independently at high precision
        kappa = evanescent_decay(GLASS_AIR, math.radians(45), 1.0)
        assert kappa == pytest.approx(2.2214414690791831235, abs=1e-13)

    def test_grazing(self):
        kappa = evanescent_decay(GLASS_AIR, math.radians(90), 1.0)
        assert kappa == pytest.approx(7.0248147310407263932, abs=1e-13)

    def test_penetration_depth_of_order_wavelength(self):
        # the evanescent tail lives within about a wavelength of the surface
        kappa = evanescent_decay(GLASS_AIR, math.radians(45), 1.0)
        assert 0.05 < 1 / kappa < 5.0

    def test_scaling_with_lambda0(self):
        assert evanescent_decay(GLASS_AIR, math.radians(45), 2.0) == pytest.approx(
            evanescent_decay(GLASS_AIR, math.radians(45), 1.0) / 2)

    def test_below_critical_raises(self):
        with pytest.raises(DomainError):
            evanescent_decay(GLASS_AIR, math.radians(30))


def _pairing_groups(scenario):
    """Group modes of a scenario by tangential wavevector."""
    groups = {}
    for m in scenario.dense_modes:
        role = "inc" if m.k.real[2] > 0 else "refl"
        groups.setdefault(round(float(m.k.real[1]), 9), {}).setdefault(role, []).append(m)
    for m in scenario.rare_modes:
        groups.setdefault(round(float(m.k.real[1]), 9), {}).setdefault("trans", []).append(m)
    return groups


class TestBuilders:
    def test_single_wave_structure(self):
        s = build_single_wave(GLASS_AIR, math.radians(45))
        assert len(s.dense_modes) == 2
        assert len(s.rare_modes) == 1
        kappa = evanescent_decay(GLASS_AIR, math.radians(45), 1.0)
        assert s.rare_modes[0].k.imag[2] == pytest.approx(kappa, rel=1e-12)
        inc, refl = s.dense_modes
        assert abs(refl.amplitude) == pytest.approx(abs(inc.amplitude), rel=1e-12)

    def test_single_wave_tangential_matching_and_dispersion(self):
        s = build_single_wave(GLASS_AIR, math.radians(50))
        kys = [m.k.real[1] for m in s.dense_modes + s.rare_modes]
        assert max(kys) - min(kys) <= 1e-12 * max(kys)
        for m, n in [(s.dense_modes[0], 1.5), (s.dense_modes[1], 1.5),
                     (s.rare_modes[0], 1.0)]:
            assert m.dispersion_defect(n) < 1e-12

    def test_single_wave_below_critical_raises(self):
        with pytest.raises(DomainError):
            build_single_wave(GLASS_AIR, math.radians(30))

    def test_wolter_structure(self):
        s = build_wolter_scenario(GLASS_AIR, math.radians(45), math.radians(1))
        assert len(s.dense_modes) == 4
        assert len(s.rare_modes) == 2
        for grp in _pairing_groups(s).values():
            assert len(grp["inc"]) == len(grp["refl"]) == len(grp["trans"]) == 1

    def test_wolter_angle_preconditions(self):
        with pytest.raises(DomainError):
            build_wolter_scenario(GLASS_AIR, math.radians(42), math.radians(1))
        with pytest.raises(DomainError):
            build_wolter_scenario(GLASS_AIR, math.radians(89.9), math.radians(1))

    def test_wolter_degenerate_equals_single_after_normalization(self):
        sw = build_wolter_scenario(GLASS_AIR, math.radians(45), 0.0)
        ss = build_single_wave(GLASS_AIR, math.radians(45))
        from tirvortex.scalarfield import eval_field
        rng = np.random.default_rng(7)
        for _ in range(25):
            x = (0.0, rng.uniform(-3, 3), rng.uniform(-2, 2))
            vw = eval_field(sw, x).V / 2  # two coincident unit waves
            vs = eval_field(ss, x).V
            assert vw == pytest.approx(vs, abs=1e-12 * 4)

    def test_braunbek_structure(self):
        s = build_braunbek_scenario(GLASS_AIR, math.radians(45), math.radians(1))
        assert len(s.dense_modes) == 3
        assert len(s.rare_modes) == 2
        incident = [m for m in s.dense_modes if m.k.real[2] > 0]
        assert len(incident) == 1

    def test_scenario_rejects_mixed_frequencies(self):
        s = build_single_wave(GLASS_AIR, math.radians(45))
        from tirvortex.scenario import ModeField, Scenario
        bad = Mode(s.rare_modes[0].k, 1.0, s.omega * 2)
        with pytest.raises(ValueError, match="frequency"):
            Scenario(GLASS_AIR, 1.0, s.dense,
                     ModeField((bad,), GLASS_AIR.rare, +1))

    def test_scenario_rejects_dispersion_violation(self):
        s = build_single_wave(GLASS_AIR, math.radians(45))
        from tirvortex.scenario import ModeField, Scenario
        bad = Mode(s.dense_modes[0].k * 1.1, 1.0, s.omega)
        with pytest.raises(ValueError, match="dispersion"):
            Scenario(GLASS_AIR, 1.0,
                     ModeField(s.dense_modes + (bad,), GLASS_AIR.dense, -1),
                     s.rare)


class TestGhShift:
    def test_positive_everywhere(self):
        thc = critical_angle(GLASS_AIR)
        for th in np.linspace(thc + 1e-3, math.pi / 2 - 2e-3, 40):
            assert gh_shift(GLASS_AIR, th) > 0

    def test_against_closed_form(self):
        # stationary phase in closed form: 2 tan(theta) / kappa
        for deg in (43, 45, 60, 75):
            th = math.radians(deg)
            expected = 2 * math.tan(th) / evanescent_decay(GLASS_AIR, th, 1.0)
            assert gh_shift(GLASS_AIR, th) == pytest.approx(expected, rel=1e-9)

    def test_order_of_magnitude_and_monotone(self):
        shifts = [gh_shift(GLASS_AIR, math.radians(d)) for d in (43, 45, 60)]
        for s in shifts:
            assert 0.1 <= s <= 100.0
        assert shifts[0] > shifts[1] > shifts[2]

    def test_step_refinement_stability(self):
        # halving the differentiation step must not move the result
        th = math.radians(50)
        n1 = 1.5
        k0 = 2 * math.pi
        ky = n1 * k0 * math.sin(th)

        def shift_with_step(dk):
            import cmath
            def phase(kt):
                q1 = math.sqrt(n1**2 * k0**2 - kt**2)
                q2 = cmath.sqrt(complex(k0**2 - kt**2))
                return cmath.phase((q1 - q2) / (q1 + q2))
            return -(phase(ky + dk) - phase(ky - dk)) / (2 * dk)

        d1 = shift_with_step(k0 * 1e-6)
        d2 = shift_with_step(k0 * 5e-7)
        assert abs(d2 - d1) / abs(d1) < 1e-6
        assert gh_shift(GLASS_AIR, th) == pytest.approx(d1, rel=1e-12)

    def test_domain_exclusions(self):
        thc = critical_angle(GLASS_AIR)
        with pytest.raises(DomainError):
            gh_shift(GLASS_AIR, thc + 1e-8)
        with pytest.raises(DomainError):
            gh_shift(GLASS_AIR, math.pi / 2 - 1e-8)
