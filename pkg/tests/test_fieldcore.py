import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magbb.fieldcore import (
    CoilSpec,
    Medium,
    Orientation,
    SphericalLocation,
    channel_batch,
    channel_matrix,
    field_regime,
    gamma_matrix,
    induced_voltage,
    scalar_coefficients,
    t_matrix,
    voltage_gain,
    wavenumber,
)

C_LIGHT = 299792458.0

polar = st.floats(0.0, math.pi)
azimuth = st.floats(0.0, 2 * math.pi, exclude_max=True)
ranges = st.floats(0.05, 50.0)


def _mp_coefficients(r, a=0.1, n=1):
    # independent high-precision evaluation of the closed form
    mp.mp.dps = 40
    k = 2 * mp.pi * mp.mpf("13.56e6") * mp.sqrt(mp.mpf("1.2566e-6") * mp.mpf("8.85e-12") * mp.mpf("1.0006"))
    j = mp.mpc(0, 1)
    r = mp.mpf(r)
    a = mp.mpf(a)
    cr = j * k * a**2 * n / (2 * r**2) * (1 + 1 / (j * k * r)) * mp.exp(-j * k * r)
    ct = k**2 * a**2 * n / (4 * r) * (1 + 1 / (j * k * r) - 1 / (k * r) ** 2) * mp.exp(-j * k * r)
    return complex(cr), complex(ct)


class TestWavenumber:
    def test_default_medium(self, medium):
        oracle = 2 * math.pi * 13.56e6 * math.sqrt(1.2566e-6 * 8.85e-12 * 1.0006)
        assert wavenumber(medium) == pytest.approx(oracle, rel=1e-14)
        assert wavenumber(medium) == pytest.approx(0.2843, abs=5e-4)

    def test_doubling_frequency(self, medium):
        double = Medium(frequency=2 * medium.frequency)
        assert wavenumber(double) == pytest.approx(2 * wavenumber(medium), rel=1e-15)

    def test_unit_wavenumber(self):
        eps0 = 8.85e-12
        mu0 = 1.0 / (C_LIGHT**2 * eps0)
        m = Medium(eps0, 1.0, mu0, 1.0, C_LIGHT / (2 * math.pi))
        assert wavenumber(m) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("name", ["permittivity_vacuum", "relative_permittivity", "permeability_vacuum",
                                      "relative_permeability", "frequency"])
    def test_rejects_nonpositive(self, name):
        with pytest.raises(ValueError):
            Medium(**{name: 0.0})


class TestScalarCoefficients:
    def test_example_at_1p2m(self, medium):
        c = scalar_coefficients(CoilSpec(0.1, 1, 1.0), medium, 1.2)
        cr, ct = _mp_coefficients(1.2)
        assert c.c_r == pytest.approx(cr, rel=1e-12)
        assert c.c_theta == pytest.approx(ct, rel=1e-12)
        assert abs(c.c_theta) == pytest.approx(1.371e-3, abs=1e-6)
        assert abs(c.c_r) == pytest.approx(3.058e-3, abs=1e-6)
        assert abs(c.c_r) / (2 * abs(c.c_theta)) == pytest.approx(1.116, abs=1e-3)

    def test_turns_scale_linearly(self, medium):
        c1 = scalar_coefficients(CoilSpec(0.1, 1, 1.0), medium, 0.9)
        c7 = scalar_coefficients(CoilSpec(0.1, 7, 1.0), medium, 0.9)
        assert c7.c_r == pytest.approx(7 * c1.c_r, rel=1e-14)

    @given(r=ranges, turns=st.integers(1, 100), radius=st.floats(0.001, 1.0))
    def test_theta_equals_phi(self, r, turns, radius):
        c = scalar_coefficients(CoilSpec(radius, turns, 1.0), Medium(), r)
        assert c.c_theta == c.c_phi

    def test_near_field_ratio_kr_0p01(self, medium):
        k = wavenumber(medium)
        r = 0.01 / k
        c = scalar_coefficients(CoilSpec(0.1, 1, 1.0), medium, r)
        kr = 0.01
        exact = abs((1 + 1j * kr) / (kr**2 - 1j * kr - 1))
        assert abs(c.c_r) / (2 * abs(c.c_theta)) == pytest.approx(exact, rel=1e-10)
        assert abs(abs(c.c_r) / (2 * abs(c.c_theta)) - 1) <= 1e-3

    @given(kr=st.floats(1e-4, 0.05))
    def test_near_field_limit(self, kr):
        m = Medium()
        c = scalar_coefficients(CoilSpec(0.1, 1, 1.0), m, kr / wavenumber(m))
        assert 0.99 <= abs(c.c_r) / (2 * abs(c.c_theta)) <= 1.01

    @pytest.mark.parametrize("r", [0.0, -1.0])
    def test_nonpositive_range(self, medium, r):
        with pytest.raises(ValueError):
            scalar_coefficients(CoilSpec(0.1, 1, 1.0), medium, r)

    def test_accepts_complex_wavenumber(self):
        from magbb.fieldcore import _coefficients

        c_r, c_t = _coefficients(0.3 - 0.05j, 0.1, 1, 1.0)
        assert np.isfinite(c_r) and np.isfinite(c_t)


class TestAngularMatrices:
    def test_gamma_pole(self):
        np.testing.assert_allclose(gamma_matrix(SphericalLocation(1, 0, 0)),
                                   [[0, 0, 1], [1, 0, 0], [0, 1, 0]], atol=1e-15)

    def test_gamma_equator(self):
        np.testing.assert_allclose(gamma_matrix(SphericalLocation(1, math.pi / 2, 0)),
                                   [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15)

    def test_t_pole(self):
        np.testing.assert_allclose(t_matrix(SphericalLocation(1, 0, 0)),
                                   [[0, 1, 0], [0, 0, 1], [1, 0, 0]], atol=1e-15)

    def test_t_south_pole_first_column(self):
        t = t_matrix(SphericalLocation(1, math.pi, 0))
        np.testing.assert_allclose(t[:, 0], [0, 0, -1], atol=1e-15)

    def test_random_orthogonality(self, rng):
        for th, ph in zip(rng.uniform(0, math.pi, 1000), rng.uniform(0, 2 * math.pi, 1000)):
            loc = SphericalLocation(1.0, th, ph)
            g = gamma_matrix(loc)
            t = t_matrix(loc)
            assert np.max(np.abs(g @ g.T - np.eye(3))) <= 1e-12
            assert np.max(np.abs(t @ g - np.eye(3))) <= 1e-12

    @given(th=polar, ph=azimuth)
    def test_t_is_gamma_transpose(self, th, ph):
        loc = SphericalLocation(1.0, th, ph)
        g = gamma_matrix(loc)
        assert np.array_equal(t_matrix(loc), g.T)
        assert np.max(np.abs(g.T @ g - np.eye(3))) <= 1e-12

    def test_location_validation(self):
        with pytest.raises(ValueError):
            SphericalLocation(0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            SphericalLocation(1.0, 4.0, 0.0)
        with pytest.raises(ValueError):
            SphericalLocation(1.0, 0.0, 2 * math.pi)


class TestChannel:
    def test_zero_current(self, params, optimized):
        ch = channel_matrix(params.tx, params.medium, optimized)
        assert np.all(ch.field(np.zeros(3)) == 0)

    def test_same_sphere_same_singular_values(self, params):
        a = channel_matrix(params.tx, params.medium, SphericalLocation(0.8, 0.3, 1.0))
        b = channel_matrix(params.tx, params.medium, SphericalLocation(0.8, 2.1, 4.0))
        np.testing.assert_allclose(np.linalg.svd(a.h_matrix, compute_uv=False),
                                   np.linalg.svd(b.h_matrix, compute_uv=False), rtol=1e-12)

    def test_optimized_location_regression(self, params, optimized):
        # z-coil current at the south pole drives a purely radial field of magnitude |C_r|
        ch = channel_matrix(params.tx, params.medium, optimized)
        h = ch.field([0, 0, 1])
        assert np.linalg.norm(h) == pytest.approx(0.07642932156408502, rel=1e-12)
        cr, _ = _mp_coefficients(1.2, n=25)
        assert np.linalg.norm(h) == pytest.approx(abs(cr), rel=1e-12)

    def test_batch_matches_single(self, params, rng):
        th = rng.uniform(0, math.pi, 20)
        ph = rng.uniform(0, 2 * math.pi, 20)
        hs = channel_batch(params.tx, params.medium, 1.1, th, ph)
        for k in range(20):
            single = channel_matrix(params.tx, params.medium, SphericalLocation(1.1, th[k], ph[k])).h_matrix
            np.testing.assert_allclose(hs[k], single, rtol=1e-12, atol=1e-16)

    @settings(max_examples=200)
    @given(th=polar, ph=azimuth, r=ranges,
           cur=st.lists(st.floats(-10, 10), min_size=6, max_size=6))
    def test_norm_sandwich(self, th, ph, r, cur):
        tx = CoilSpec(0.1, 25, 1.0)
        ch = channel_matrix(tx, Medium(), SphericalLocation(r, th, ph))
        i = np.array(cur[:3]) + 1j * np.array(cur[3:])
        c = ch.coefficients
        lo = min(abs(c.c_r), abs(c.c_theta)) * np.linalg.norm(i)
        hi = max(abs(c.c_r), abs(c.c_theta)) * np.linalg.norm(i)
        h = np.linalg.norm(ch.field(i))
        assert lo * (1 - 1e-12) - 1e-300 <= h <= hi * (1 + 1e-12) + 1e-300
        # the spherical-to-Cartesian step is norm preserving
        h_r = c.as_array() * (ch.gamma @ i)
        assert h == pytest.approx(np.linalg.norm(h_r), rel=1e-12, abs=1e-300)

    def test_pure(self, params):
        loc = SphericalLocation(0.7, 1.0, 2.0)
        a = channel_matrix(params.tx, params.medium, loc).h_matrix
        b = channel_matrix(params.tx, params.medium, loc).h_matrix
        assert np.array_equal(a, b)


class TestVoltage:
    def test_perpendicular_field(self, params):
        assert induced_voltage(np.array([1.0, 0, 0]), Orientation(0.0, 0.0), params.rx, params.medium) == 0

    def test_aligned_unit_field(self, medium):
        rx = CoilSpec(0.01, 1, 0.2)
        v = induced_voltage(np.array([0, 0, 1.0]), Orientation(0.0, 0.0), rx, medium)
        oracle = 2 * math.pi * 13.56e6 * 1.2566e-6 * math.pi * 0.01**2
        assert abs(v) == pytest.approx(oracle, rel=1e-14)
        assert abs(v) == pytest.approx(0.03364, abs=1e-5)
        assert v.real < 0  # leading minus sign

    def test_linearity(self, params, rng):
        h = rng.normal(size=3) + 1j * rng.normal(size=3)
        o = Orientation(1.0, 2.0)
        v1 = induced_voltage(h, o, params.rx, params.medium)
        v3 = induced_voltage(3.5 * h, o, params.rx, params.medium)
        assert abs(v3) == pytest.approx(3.5 * abs(v1), rel=1e-13)

    @given(th=polar, ph=azimuth, re=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
           im=st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    def test_cauchy_schwarz(self, th, ph, re, im):
        h = np.array(re) + 1j * np.array(im)
        rx = CoilSpec(0.01, 20, 0.2)
        v = induced_voltage(h, Orientation(th, ph), rx, Medium())
        assert abs(v) <= voltage_gain(rx, Medium()) * np.linalg.norm(h) * (1 + 1e-12) + 1e-300

    @given(th=st.floats(-10, 10), ph=st.floats(-10, 10))
    def test_orientation_unit(self, th, ph):
        assert abs(np.linalg.norm(Orientation(th, ph).u) - 1) <= 1e-12

    def test_from_vector_roundtrip(self, rng):
        for v in rng.normal(size=(50, 3)):
            o = Orientation.from_vector(v)
            np.testing.assert_allclose(o.u, v / np.linalg.norm(v), atol=1e-14)


class TestRegime:
    def test_1p2m(self, medium):
        rep = field_regime(medium, 1.2)
        assert rep.kr == pytest.approx(0.341, abs=1e-3)
        assert rep.near_field
        assert rep.radial_ratio == pytest.approx(1.1154394471382344, rel=1e-12)

    def test_0p6m(self, medium):
        rep = field_regime(medium, 0.6)
        assert rep.kr == pytest.approx(0.171, abs=1e-3)
        assert rep.near_field

    def test_far(self, medium):
        rep = field_regime(medium, 100.0)
        assert rep.kr == pytest.approx(28.42, abs=0.01)
        assert not rep.near_field
        assert rep.radial_ratio < 0.1
