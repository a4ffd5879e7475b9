import math

import numpy as np
import pytest

from helpers import PolynomialVortexField, QuadraticPhaseField, polygon_contains
from tirvortex.flow import (BernoulliParams, GeneralBernoulli,
                            InvalidContourError, bernoulli_closed_form,
                            bernoulli_rk4, circle_contour, circulation,
                            find_nodes, find_stagnation, trace_streamline)
from tirvortex.scalarfield import ModeSumField, ScalarMode
from tirvortex.scenario import (Interface, Medium, build_braunbek_scenario,
                                build_single_wave, build_wolter_scenario)

GLASS_AIR = Interface(Medium(1.5), Medium(1.0))
TWO_PI = 2 * math.pi

WOLTER_REGION = (20.0, 35.0, -1.2, 0.3)
WOLTER_GRID = (128, 16)


@pytest.fixture(scope="module")
def wolter():
    return build_wolter_scenario(GLASS_AIR, math.radians(45), math.radians(1))


@pytest.fixture(scope="module")
def wolter_nodes(wolter):
    return find_nodes(wolter, WOLTER_REGION, grid=WOLTER_GRID)


class TestFindNodes:
    def test_synthetic_vortex_single_node(self):
        field = PolynomialVortexField([(0.0, 0.0)])
        nodes = find_nodes(field, (-1.0, 1.0, -1.0, 1.0), grid=(33, 33))
        assert len(nodes) == 1
        assert nodes[0].position == pytest.approx((0.0, 0.0), abs=1e-10)
        assert nodes[0].winding == 1
        assert nodes[0].residual < 1e-10

    def test_wolter_has_core_below_interface(self, wolter_nodes):
        assert len(wolter_nodes) >= 1
        top = max(wolter_nodes, key=lambda n: n.z)
        assert top.z < 0
        assert abs(top.z) < 1.0
        for n in wolter_nodes:
            assert n.converged
            assert n.residual < 1e-10 * 4  # amp scale about 1.9

    def test_wolter_circulation_quantized(self, wolter_nodes):
        for n in wolter_nodes:
            assert n.circulation is not None
            assert abs(n.circulation / TWO_PI - n.winding) < 1e-3

    def test_no_nodes_in_rare_medium(self, wolter):
        nodes = find_nodes(wolter, (20.0, 35.0, 0.01, 1.0), grid=(128, 16))
        assert nodes == []

    def test_single_wave_empty(self):
        s = build_single_wave(GLASS_AIR, math.radians(45))
        assert find_nodes(s, (-3.0, 3.0, -2.0, 2.0), grid=(600, 400)) == []

    def test_braunbek_has_nodes(self):
        s = build_braunbek_scenario(GLASS_AIR, math.radians(45), math.radians(1))
        nodes = find_nodes(s, (0.0, 55.0, -1.5, 0.3), grid=(441, 16))
        assert len(nodes) >= 1
        assert {abs(n.winding) for n in nodes} == {1}

    def test_braunbek_degenerate_collapses(self):
        s = build_braunbek_scenario(GLASS_AIR, math.radians(45), 0.0)
        assert find_nodes(s, (-3.0, 3.0, -2.0, 2.0), grid=(128, 64)) == []

    def test_grid_resolution_enforced(self, wolter):
        with pytest.raises(ValueError, match="coarse"):
            find_nodes(wolter, (0.0, 10.0, -1.0, 1.0), grid=(20, 17))


class TestFindStagnation:
    def test_linear_saddle_field(self):
        field = QuadraticPhaseField()
        points = find_stagnation(field, (-0.6, 0.6, -0.6, 0.6), grid=(21, 21))
        assert len(points) == 1
        assert points[0].position == pytest.approx((0.0, 0.0), abs=1e-10)
        assert points[0].saddle is True
        assert points[0].jacobian_det < 0

    def test_single_wave_empty(self):
        s = build_single_wave(GLASS_AIR, math.radians(45))
        assert find_stagnation(s, (-3.0, 3.0, -2.0, 2.0), grid=(600, 400)) == []

    def test_wolter_saddle_in_rare_medium(self):
        # generic mean angle: the rare-side saddle sits strictly above z = 0
        s = build_wolter_scenario(GLASS_AIR, math.radians(44), math.radians(1))
        points = find_stagnation(s, (22.0, 32.0, -1.2, 0.3), grid=(96, 16))
        above = [p for p in points if p.z > 1e-9]
        assert len(above) >= 1
        assert all(p.saddle for p in above)

    def test_wolter_45_saddle_degenerates_onto_interface(self, wolter):
        # at exactly 45 deg the incident pair straddles the sin(2 theta)
        # maximum and the rare-side saddle lands on z = 0
        points = find_stagnation(wolter, (25.0, 30.0, -1.2, 0.3), grid=(80, 40))
        assert any(abs(p.z) < 1e-6 for p in points)


class TestCirculation:
    def test_unit_vortex(self):
        field = PolynomialVortexField([(0.0, 0.0)])
        res = circulation(field, circle_contour((0.0, 0.0), 0.2))
        assert res.value == pytest.approx(TWO_PI, abs=1e-3 * TWO_PI)
        assert res.n == 1
        assert res.defect < 1e-3

    def test_double_zero(self):
        field = PolynomialVortexField([(0.0, 0.0), (0.0, 0.0)])
        res = circulation(field, circle_contour((0.0, 0.0), 0.1))
        assert res.value == pytest.approx(2 * TWO_PI, abs=1e-3 * TWO_PI)
        assert res.n == 2

    def test_empty_region_zero(self):
        field = PolynomialVortexField([(0.0, 0.0)])
        res = circulation(field, circle_contour((1.0, 1.0), 0.3))
        assert abs(res.value) < 1e-6
        assert res.n == 0

    def test_additivity_two_vortices(self):
        field = PolynomialVortexField([(0.2, 0.0), (-0.2, 0.1)])
        both = circulation(field, circle_contour((0.0, 0.05), 0.6))
        one = circulation(field, circle_contour((0.2, 0.0), 0.1))
        other = circulation(field, circle_contour((-0.2, 0.1), 0.1))
        assert both.value == pytest.approx(one.value + other.value, abs=1e-3)

    def test_contour_deformation_invariance(self):
        field = PolynomialVortexField([(0.0, 0.0)])
        circle = circulation(field, circle_contour((0.0, 0.0), 0.25))
        th = np.linspace(0, TWO_PI, 5)[:-1]
        square = np.array([[0.4 * math.copysign(1, math.cos(a)),
                            0.4 * math.copysign(1, math.sin(a))]
                           for a in th + math.pi / 4])
        square = np.vstack([square, square[:1]])
        boxed = circulation(field, square)
        assert abs(boxed.value - circle.value) < 1e-3 * TWO_PI

    def test_open_contour_rejected(self):
        field = PolynomialVortexField([(0.0, 0.0)])
        with pytest.raises(InvalidContourError, match="closed"):
            circulation(field, [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])

    def test_contour_through_node_rejected(self):
        field = PolynomialVortexField([(0.2, 0.0)])
        with pytest.raises(InvalidContourError, match="nodal"):
            circulation(field, circle_contour((0.0, 0.0), 0.2))


class TestTraceStreamline:
    def test_plane_wave_straight_line(self):
        k = np.array([0.0, TWO_PI * 0.6, TWO_PI * 0.8])
        mode = ScalarMode(k=k, alpha=1.0, beta=1j, omega=TWO_PI)
        field = ModeSumField([mode])
        line = trace_streamline(field, (0.0, 0.0), step=0.05, max_steps=500,
                                bounds=(-2.0, 2.0, -2.0, 2.0))
        assert line.terminated_reason == "left_domain"
        assert not line.closed
        # every point lies on the ray through the origin along k
        pts = line.points
        cross = pts[:, 0] * 0.8 - pts[:, 1] * 0.6
        assert np.max(np.abs(cross)) < 1e-9

    def test_rk4_matches_fine_euler(self, wolter):
        from tirvortex.scalarfield import ScenarioField
        f = ScenarioField(wolter)
        start = np.array([26.0, -0.8])
        step, nsteps = 0.002, 100

        def unit_g(p):
            gy, gz = f.momentum_at(p[0], p[1], 0.0)
            n = math.hypot(gy, gz)
            return np.array([gy / n, gz / n])

        p = start.copy()
        fine = step / 1000
        for _ in range(nsteps * 1000):
            p = p + fine * unit_g(p)
        euler_end = p

        line = trace_streamline(wolter, start, step=step, max_steps=nsteps,
                                bounds=(20.0, 35.0, -1.5, 0.5))
        assert line.terminated_reason == "max_steps"
        assert np.linalg.norm(line.points[-1] - euler_end) < 1e-5

    def test_closed_ring_encloses_one_node(self, wolter, wolter_nodes):
        top = max(wolter_nodes, key=lambda n: n.z)
        line = trace_streamline(wolter, (top.y, top.z + 0.02), step=0.002,
                                max_steps=4000, bounds=(20.0, 35.0, -1.5, 0.5))
        assert line.closed
        assert line.terminated_reason == "closed_loop"
        assert np.linalg.norm(line.points[0] - line.points[-1]) < 1e-4
        inside = [n for n in wolter_nodes if polygon_contains(line.points, n.position)]
        assert len(inside) == 1
        assert inside[0].position == pytest.approx(top.position)

    def test_starts_at_stagnation(self):
        field = QuadraticPhaseField()
        line = trace_streamline(field, (0.0, 0.0), step=0.01, max_steps=100,
                                bounds=(-1.0, 1.0, -1.0, 1.0))
        assert line.terminated_reason == "stagnation"
        assert len(line.points) == 1

    def test_step_bounds_validated(self, wolter):
        with pytest.raises(ValueError):
            trace_streamline(wolter, (25.0, -0.5), step=0.3,
                             bounds=(20.0, 35.0, -1.5, 0.5))

    def test_consecutive_spacing_invariant(self, wolter):
        line = trace_streamline(wolter, (24.0, -0.9), step=0.05, max_steps=200,
                                bounds=(20.0, 35.0, -1.5, 0.5))
        gaps = np.linalg.norm(np.diff(line.points, axis=0), axis=1)
        assert np.all(gaps <= 2 * 0.05 + 1e-12)


class TestBernoulli:
    def test_exponential_branch(self):
        g = GeneralBernoulli(a_coeffs=(0.0,), b=0.5, y0=1.5, domain=(0.0, 2.0))
        sol = bernoulli_closed_form(g)
        zs = np.linspace(0.0, 2.0, 21)
        assert sol(zs) == pytest.approx(1.5 * np.exp(0.5 * zs), rel=1e-12)
        trace = bernoulli_rk4(g, step=1e-3)
        assert np.max(np.abs(trace.y - 1.5 * np.exp(0.5 * trace.z))) < 1e-9

    def test_linear_forcing_closed_form(self):
        # u' = 2u + 2z with y0 = 2: u = 4.5 e^{2z} - z - 1/2
        params = BernoulliParams(f=0.0, F=1.0, y0=2.0, domain=(0.0, 1.0))
        sol = bernoulli_closed_form(params)
        assert sol.p_coeffs == pytest.approx([-0.5, -1.0])
        assert sol.C == pytest.approx(4.5)
        # frozen: sqrt(4.5 e^2 - 1.5) at high precision
        assert sol(1.0) == pytest.approx(5.6347806031102866732, abs=1e-12)
        trace = bernoulli_rk4(params, step=1e-4)
        assert abs(trace.y[-1] - sol(1.0)) < 1e-8

    def test_generic_preset_against_rk4(self):
        params = BernoulliParams(f=0.5, F=2.0, y0=1.0, domain=(0.0, 2.0))
        sol = bernoulli_closed_form(params)
        trace = bernoulli_rk4(params, step=1e-4)
        assert np.max(np.abs(sol(trace.z) - trace.y)) < 1e-6
        # frozen independent evaluation of the closed form at z = 2
        assert sol(2.0) == pytest.approx(6.7962440108084432181, abs=1e-11)

    def test_rk4_fourth_order(self):
        params = BernoulliParams(f=0.0, F=1.0, y0=2.0, domain=(0.0, 1.0))
        exact = bernoulli_closed_form(params)(1.0)
        e1 = abs(bernoulli_rk4(params, step=0.02).y[-1] - exact)
        e2 = abs(bernoulli_rk4(params, step=0.01).y[-1] - exact)
        assert 3.7 <= math.log2(e1 / e2) <= 4.3

    def test_branch_termination_reported(self):
        # u = 1 - 0.75 e^{2z}: hits zero at z = ln(4/3)/2
        g = GeneralBernoulli(a_coeffs=(-1.0,), b=1.0, y0=0.5, domain=(0.0, 2.0))
        sol = bernoulli_closed_form(g)
        assert sol.crossing == pytest.approx(math.log(4 / 3) / 2, abs=1e-10)
        assert sol(0.1) > 0
        with pytest.raises(ValueError, match="terminates"):
            sol(0.5)
        trace = bernoulli_rk4(g, step=1e-3)
        assert trace.singular
        assert trace.z[-1] < 0.2

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            BernoulliParams(f=0.0, F=0.0, y0=1.0)
        with pytest.raises(ValueError):
            bernoulli_rk4(BernoulliParams(f=0.0, F=1.0, y0=1.0), step=0.0)
