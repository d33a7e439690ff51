"""Tests for the detection-screen observables derived from |psi|^2."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import argrelmax

from pairslit import (
    DegenerateGeometry,
    PhysicalParams,
    ScreenConfig,
    asymmetric_detection_probability,
    com_band_exceedance,
    fringe_spacing,
    joint_density,
    joint_detection_probability,
    marginal_pdf,
    total_probability_mass,
)
from pairslit.sqm import (
    _tensor_quad,
    default_screen,
    joint_bin_mass_grid,
    marginal_bin_masses,
    mirror_detection_probability,
)


def make_params(**kw):
    base = dict(sigma0=1.0, slit_offset=0.1, kx=10.0)
    base.update(kw)
    return PhysicalParams(**base)


def make_screen(params, distance=20.0, bin_delta=0.5, n_bins=50):
    return default_screen(params, distance=distance, bin_delta=bin_delta, n_bins=n_bins)


class TestJointDensity:
    @given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0, 6))
    @settings(max_examples=50)
    def test_exchange_symmetry(self, y1, y2, t):
        p = make_params(slit_offset=0.8, ky=0.4)
        a = float(joint_density(p, y1, y2, t))
        b = float(joint_density(p, y2, y1, t))
        assert a == pytest.approx(b, rel=1e-13, abs=1e-300)

    @given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0, 6))
    @settings(max_examples=50)
    def test_reflection_symmetry(self, y1, y2, t):
        p = make_params(slit_offset=0.8)
        a = float(joint_density(p, y1, y2, t))
        b = float(joint_density(p, -y1, -y2, t))
        assert a == pytest.approx(b, rel=1e-13, abs=1e-300)

    def test_normalized_at_t0(self):
        p = make_params()
        assert total_probability_mass(p, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_nonnegative(self):
        p = make_params()
        rng = np.random.default_rng(0)
        pts = rng.uniform(-6, 6, size=(100, 2))
        vals = joint_density(p, pts[:, 0], pts[:, 1], 1.0)
        assert np.all(np.asarray(vals) >= 0.0)


class TestJointDetectionProbability:
    def test_full_screen_is_unity(self):
        p = make_params()
        hw = 12.0
        screen = ScreenConfig(distance=20.0, bin_delta=2 * hw, y_min=-hw, y_max=hw)
        total = joint_detection_probability(p, screen, -hw, -hw)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_exchange_and_mirror_symmetries(self):
        p = make_params()
        screen = make_screen(p)
        d = screen.bin_delta
        p_ab = joint_detection_probability(p, screen, 1.0, -0.25)
        p_ba = joint_detection_probability(p, screen, -0.25, 1.0)
        p_mirror = joint_detection_probability(p, screen, -1.0 - d, 0.25 - d)
        assert p_ab == pytest.approx(p_ba, abs=2e-8)
        assert p_ab == pytest.approx(p_mirror, abs=2e-8)

    def test_monte_carlo_oracle(self):
        # fixed desk-scale config: quadrature against a 1e7-sample uniform-box
        # Monte Carlo estimate of the same integral
        p = make_params()
        screen = make_screen(p)
        q1, q2, d = 1.0, -1.0, screen.bin_delta
        quad = joint_detection_probability(p, screen, q1, q2)
        rng = np.random.default_rng(2024)
        n = 10_000_000
        y1 = rng.uniform(q1, q1 + d, size=n)
        y2 = rng.uniform(q2, q2 + d, size=n)
        vals = np.asarray(joint_density(p, y1, y2, screen.time_of_flight(p))) * d * d
        mc = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(n))
        assert abs(quad - mc) <= 3.0 * se

    def test_matches_factorized_product(self):
        p = make_params()
        screen = make_screen(p)
        t = screen.time_of_flight(p)
        rng = np.random.default_rng(7)
        for _ in range(6):
            q1, q2 = rng.uniform(-3, 3, size=2)
            edges1 = np.array([q1, q1 + screen.bin_delta])
            edges2 = np.array([q2, q2 + screen.bin_delta])
            m1 = marginal_bin_masses(p, edges1, t)[0]
            m2 = marginal_bin_masses(p, edges2, t)[0]
            quad = joint_detection_probability(p, screen, q1, q2)
            assert quad == pytest.approx(m1 * m2, abs=2e-8, rel=1e-6)

    def test_refinement_stability(self):
        p = make_params()
        screen = make_screen(p)
        loose = joint_detection_probability(p, screen, 0.7, -0.4, tol=1e-8)
        tight = joint_detection_probability(p, screen, 0.7, -0.4, tol=1e-8 / 16)
        assert abs(loose - tight) <= 1e-7 * max(abs(tight), 1e-12)

    def test_in_unit_interval(self):
        p = make_params()
        screen = make_screen(p)
        val = joint_detection_probability(p, screen, 0.5, 0.5)
        assert 0.0 <= val <= 1.0


class TestMarginal:
    def test_symmetric_about_axis(self):
        p = make_params()
        y = np.linspace(0.1, 5.0, 40)
        a = np.asarray(marginal_pdf(p, y, 2.0))
        b = np.asarray(marginal_pdf(p, -y, 2.0))
        np.testing.assert_allclose(a, b, rtol=1e-13)

    def test_bin_masses_sum_to_one(self):
        p = make_params()
        edges = np.linspace(-12, 12, 201)
        masses = marginal_bin_masses(p, edges, 2.0)
        assert np.all(masses >= 0)
        assert masses.sum() == pytest.approx(1.0, abs=1e-6)

    def test_bin_mass_matches_2d_quadrature(self):
        # integrating the joint density over bin x (full extent) must equal
        # the one-particle bin mass
        p = make_params()
        t = 2.0
        lo, hi = 0.3, 0.9
        ext = 14.0
        direct = _tensor_quad(lambda u, v: joint_density(p, u, v, t), lo, hi, -ext, ext)
        mass = marginal_bin_masses(p, np.array([lo, hi]), t)[0]
        assert direct == pytest.approx(mass, abs=2e-8)

    def test_far_field_peak_spacing(self):
        # strongly separated slits at large s*t show fringes; neighboring
        # maxima sit one fringe-spacing apart (envelope pull within 15%)
        p = make_params(slit_offset=8.0)
        stv = 8.0
        t = stv / p.spreading_rate
        screen = ScreenConfig(distance=p.group_velocity_x * t, bin_delta=0.5,
                              y_min=-40, y_max=40)
        y = np.linspace(0, 40, 400001)
        f = np.asarray(marginal_pdf(p, y, t))
        idx = argrelmax(f, order=100)[0]
        spacing = float(np.diff(y[idx[:2]])[0])
        dy = fringe_spacing(p, screen).geometric
        assert spacing == pytest.approx(dy, rel=0.15)


class TestFringeSpacing:
    def test_direct_evaluation(self):
        # wavelength 1 (kx = 2 pi), distance 100, slit offset 5 -> spacing 10
        p = make_params(kx=2 * math.pi, slit_offset=5.0)
        screen = ScreenConfig(distance=100.0, bin_delta=0.5, y_min=-1, y_max=1)
        fr = fringe_spacing(p, screen)
        assert fr.geometric == pytest.approx(10.0, rel=1e-12)

    def test_doubling_offset_halves_spacing(self):
        p1 = make_params(slit_offset=1.0)
        p2 = make_params(slit_offset=2.0)
        screen = ScreenConfig(distance=50.0, bin_delta=0.5, y_min=-1, y_max=1)
        assert fringe_spacing(p1, screen).geometric == pytest.approx(
            2.0 * fringe_spacing(p2, screen).geometric, rel=1e-12
        )

    def test_two_forms_agree(self):
        p = make_params(kx=7.3, slit_offset=0.8, mass=1.7, hbar=0.9)
        screen = ScreenConfig(distance=33.0, bin_delta=0.5, y_min=-1, y_max=1)
        fr = fringe_spacing(p, screen)
        assert fr.geometric == pytest.approx(fr.kinematic, rel=1e-12)

    def test_degenerate_geometry(self):
        p = make_params(slit_offset=0.0)
        screen = ScreenConfig(distance=10.0, bin_delta=0.5, y_min=-1, y_max=1)
        with pytest.raises(DegenerateGeometry):
            fringe_spacing(p, screen)


class TestAsymmetryMeasures:
    def test_mirror_and_asymmetric_sum_to_one(self):
        p = make_params()
        screen = make_screen(p)
        mirror = mirror_detection_probability(p, screen)
        asym = asymmetric_detection_probability(p, screen)
        assert mirror + asym == pytest.approx(1.0, rel=1e-12)
        assert 0.0 < mirror < 1.0

    def test_asymmetric_probability_large_in_reference_config(self):
        p = make_params()
        screen = make_screen(p)
        assert asymmetric_detection_probability(p, screen) > 0.05

    def test_mirror_terms_match_bin_quadrature(self):
        p = make_params()
        screen = make_screen(p)
        edges = screen.detector_edges()
        k = len(edges) // 2
        total = 0.0
        for i in range(k - 2, k + 2):
            q1 = edges[i]
            q2 = -edges[i + 1]
            total += joint_detection_probability(p, screen, q1, q2)
        assert total <= mirror_detection_probability(p, screen) + 1e-7

    def test_com_band_mass_strictly_positive_in_reference_config(self):
        p = make_params()
        screen = make_screen(p)
        dy = fringe_spacing(p, screen).geometric
        mass = com_band_exceedance(p, screen.time_of_flight(p), 0.5 * dy)
        assert mass > 0.0
        assert mass < 1e-100  # deep in the tail for this geometry

    def test_com_band_mass_monotone(self):
        p = make_params()
        masses = [com_band_exceedance(p, 2.0, b) for b in (0.5, 1.0, 2.0)]
        assert masses[0] > masses[1] > masses[2] > 0.0

    def test_com_band_mass_against_sampling_oracle(self):
        # moderate band: compare against Monte Carlo over i.i.d. marginal draws
        p = make_params()
        t = 2.0
        b = 1.0
        quad = com_band_exceedance(p, t, b)
        # sample i.i.d. coordinates directly from the time-t marginal tabulation
        ext = 14.0
        y = np.linspace(-ext, ext, 20001)
        pdf = np.asarray(marginal_pdf(p, y, t))
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(y))])
        cdf /= cdf[-1]
        rng = np.random.default_rng(99)
        q = rng.random((400000, 2))
        draws = np.interp(q, cdf, y)
        com = 0.5 * draws.sum(axis=1)
        frac = float((np.abs(com) > b).mean())
        se = math.sqrt(frac * (1 - frac) / com.size)
        assert abs(quad - frac) <= 4.0 * se + 1e-6


class TestJointGrid:
    def test_grid_nonnegative_and_normalized(self):
        p = make_params()
        screen = make_screen(p)
        edges = screen.histogram_edges()
        grid = joint_bin_mass_grid(p, edges, screen.time_of_flight(p))
        assert np.all(grid >= 0)
        assert grid.sum() <= 1.0 + 1e-6

    def test_grid_entry_matches_detection_probability(self):
        p = make_params()
        screen = make_screen(p)
        d = screen.bin_delta
        edges = np.array([0.5, 0.5 + d, 0.5 + 2 * d])
        grid = joint_bin_mass_grid(p, edges, screen.time_of_flight(p))
        direct = joint_detection_probability(p, screen, 0.5, 0.5 + d)
        assert grid[0, 1] == pytest.approx(direct, abs=2e-8)


class TestScreenConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ScreenConfig(distance=10.0, bin_delta=0.0, y_min=-1, y_max=1)
        with pytest.raises(ValueError):
            ScreenConfig(distance=10.0, bin_delta=0.5, y_min=1, y_max=-1)
        with pytest.raises(ValueError):
            ScreenConfig(distance=-1.0, bin_delta=0.5, y_min=-1, y_max=1)

    def test_time_of_flight(self):
        p = make_params()
        screen = ScreenConfig(distance=20.0, bin_delta=0.5, y_min=-1, y_max=1)
        assert screen.time_of_flight(p) == pytest.approx(2.0)

    def test_detector_grid_is_mirror_symmetric(self):
        screen = ScreenConfig(distance=20.0, bin_delta=0.5, y_min=-3.2, y_max=3.2)
        edges = screen.detector_edges()
        np.testing.assert_allclose(edges, -edges[::-1], atol=1e-15)
