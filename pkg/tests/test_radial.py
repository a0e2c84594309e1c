import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ctharm import radial as rd
from ctharm.density import build_model
from ctharm.errors import InconsistentCalibration, TailTooFat, UnboundedSupport

from oracles import phi_exact

DR12 = {"name": "damek_ricci", "p": 1, "q": 2}


@pytest.fixture(scope="module")
def h3():
    return build_model({"name": "hyperbolic", "n": 3})


@pytest.fixture(scope="module")
def dr():
    return build_model(DR12)


@pytest.fixture(scope="module")
def h3_table(h3):
    t = rd.build_c_table(h3)
    rd.calibrate_C0(h3, [rd.bump(s) for s in (1, 2, 4)], t)
    return t


@pytest.fixture(scope="module")
def dr_table(dr):
    t = rd.build_c_table(dr)
    rd.calibrate_C0(dr, [rd.bump(s) for s in (1, 2, 4)], t)
    return t


def h3_transform_quad(u, s, lam):
    """4 pi / lambda int_0^s u(r) sin(lambda r) sinh(r) dr, by adaptive quadrature."""
    val = integrate.quad(lambda r: float(u(np.array([r]))[0]) * np.sinh(r), 0, s,
                         weight="sin", wvar=lam, epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    return 4 * np.pi * val / lam


class TestGrids:
    def test_lambda_grid_integrates_polynomials(self):
        lam, w = rd.lambda_grid(4.0)
        a, b = rd.LAMBDA_MIN, rd.LAMBDA_MAX
        assert np.all(np.diff(lam) > 0)
        assert lam[0] > a and lam[-1] < b
        np.testing.assert_allclose(np.sum(w), b - a, rtol=1e-13)
        np.testing.assert_allclose(np.sum(w * lam**3), (b**4 - a**4) / 4, rtol=1e-12)

    def test_panel_widths_capped(self):
        lam, _ = rd.lambda_grid(4.0)
        assert len(lam) == 4352
        lam2, _ = rd.lambda_grid(2.0, lam_max=40.0)
        assert len(lam2) == 544

    def test_radial_nodes_resolve_oscillation(self):
        r, w = rd.radial_nodes(0.0, 3.0, 200.0)
        np.testing.assert_allclose(np.sum(w * np.cos(200 * r)), np.sin(600) / 200, atol=1e-13)


class TestProfiles:
    def test_bump_values(self):
        b = rd.bump(2.0)
        np.testing.assert_allclose(b(np.array([0.0, 1.0, 2.0, 3.0])), [np.exp(-1), np.exp(-4 / 3), 0, 0])

    def test_annulus_vanishes_outside(self):
        a = rd.annular_bump(1.0, 2.0)
        assert np.all(a(np.array([0.5, 1.0, 2.0, 2.5])) == 0)
        assert a(np.array([1.5]))[0] == pytest.approx(np.exp(-1))

    def test_grid_profile_spline(self):
        r = np.linspace(0, 2, 201)
        p = rd.RadialProfile(2.0, r_grid=r, values=np.cos(r))
        np.testing.assert_allclose(p(np.array([0.123, 1.5])), np.cos([0.123, 1.5]), atol=1e-8)

    def test_spec_dispatch(self):
        assert rd.profile_from_spec({"kind": "gauss", "sigma": 0.5, "s": 2.5}).support_radius == 2.5
        with pytest.raises(ValueError):
            rd.profile_from_spec({"kind": "triangle"})

    def test_unbounded_support_rejected(self):
        with pytest.raises(UnboundedSupport):
            rd.RadialProfile(np.inf, func=lambda r: np.exp(-r))

    def test_norm_h3(self, h3):
        p = rd.bump(1.0)
        ex = integrate.quad(lambda r: float(p(np.array([r]))[0]) ** 2 * 4 * np.pi * np.sinh(r) ** 2, 0, 1,
                            epsabs=1e-14)[0]
        assert p.norm(h3) == pytest.approx(np.sqrt(ex), rel=1e-10)


class TestForwardTransform:
    @pytest.mark.parametrize("s", [1.0, 2.0])
    @pytest.mark.parametrize("lam", [0.01, 0.7, 5.0, 40.0])
    def test_h3_against_quadrature(self, h3, s, lam):
        u = rd.bump(s)
        got = rd.spherical_transform(h3, u, [lam]).values[0]
        assert abs(got - h3_transform_quad(u, s, lam)) < 1e-10

    def test_dr_against_hypergeometric(self, dr):
        u = rd.bump(1.5)
        A = dr.A
        for lam in (0.5, 3.0):
            ex = integrate.quad(lambda r: float(u(np.array([r]))[0] * A(np.array([r]))[0])
                                * phi_exact(DR12, lam, [r])[0].real, 0, 1.5, epsabs=1e-13, limit=200)[0]
            got = rd.spherical_transform(dr, u, [lam]).values[0]
            assert abs(got - ex) < 1e-9

    def test_table_path_matches_direct(self, h3, h3_table):
        u = rd.bump(2.0)
        via_table = rd.spherical_transform(h3, u, table=h3_table).values
        idx = [0, 500, 2000, 4000]
        direct = rd.spherical_transform(h3, u, h3_table.lambda_grid[idx]).values
        np.testing.assert_allclose(via_table[idx], direct, atol=1e-12)

    def test_error_estimate(self, h3):
        T = rd.spherical_transform(h3, rd.bump(1.0), [0.5, 20.0], estimate_error=True)
        assert T.error < 1e-10

    def test_value_at_trivial_character_is_integral(self, h3):
        u = rd.bump(1.0)
        total = integrate.quad(lambda r: float(u(np.array([r]))[0]) * 4 * np.pi * np.sinh(r) ** 2, 0, 1,
                               epsabs=1e-14)[0]
        assert rd.spherical_transform(h3, u, [1j]).values[0].real == pytest.approx(total, rel=1e-10)


class TestCalibrationAndInversion:
    def test_h3_C0_is_classical(self, h3_table):
        # Plancherel measure on H^3 with A = 4 pi sinh^2: lambda^2 d lambda / (2 pi^2)
        assert h3_table.C0 == pytest.approx(1 / (2 * np.pi**2), rel=1e-8)
        assert h3_table.C0_dispersion < 1e-6

    def test_dr_C0_matches_leading_coefficient(self, dr_table):
        assert rel_diff(dr_table.C0, dr_table.predicted_C0()) < 1e-7
        assert dr_table.C0_dispersion < 1e-6

    def test_small_lambda_density_exponent(self, dr_table):
        assert dr_table.small_lambda_exponent() == pytest.approx(2.0, abs=1e-3)

    @pytest.mark.parametrize("which", ["h3", "dr"])
    @pytest.mark.parametrize("s", [1.0, 2.0, 4.0])
    def test_roundtrip(self, request, which, s):
        model = request.getfixturevalue(which)
        table = request.getfixturevalue(f"{which}_table")
        u = rd.bump(s)
        r = np.linspace(0.0, 4.5, 73)  # shared grid: the phi matrix is cached per table
        fh = rd.spherical_transform(model, u, table=table).values
        inv = rd.inverse_transform(model, fh, table, r)
        np.testing.assert_allclose(inv.values, u(r), atol=1e-7)
        assert inv.lambda_max < rd.LAMBDA_MAX

    def test_inverse_requires_C0(self, h3):
        t = rd.build_c_table(h3, s_max=1.0, lam_max=20.0)
        with pytest.raises(InconsistentCalibration):
            rd.inverse_transform(h3, np.ones(len(t.lambda_grid)), t, [0.0])

    def test_fat_tail_rejected(self, h3, h3_table):
        fh = 1.0 / h3_table.plancherel_density
        with pytest.raises(TailTooFat):
            rd.inverse_transform(h3, fh, h3_table, [0.0])

    def test_inconsistent_calibration(self, h3):
        t = rd.build_c_table(h3, s_max=4.0, lam_max=20.0)
        with pytest.raises(InconsistentCalibration):
            # a lambda grid cut at 20 cannot resolve the narrow bump
            rd.calibrate_C0(h3, [rd.bump(0.3), rd.bump(4.0)], t, max_dispersion=1e-8)


class TestPlancherel:
    def test_self(self, dr, dr_table):
        p = rd.plancherel_radial(dr, rd.bump(2.0), rd.bump(2.0), dr_table)
        assert p.relative_gap < 1e-6
        assert p.lhs.real == pytest.approx(p.norm_f**2, rel=1e-10)

    def test_disjoint_supports(self, h3, h3_table):
        p = rd.plancherel_radial(h3, rd.annular_bump(0.2, 1.0), rd.annular_bump(1.5, 3.0), h3_table)
        assert p.lhs == 0
        assert p.relative_gap < 1e-6

    def test_different_profiles(self, h3, h3_table):
        p = rd.plancherel_radial(h3, rd.bump(1.0), rd.gauss_bump(0.7, 3.0), h3_table)
        assert p.relative_gap < 1e-6


def rel_diff(a, b):
    return abs(a - b) / abs(b)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), lam=st.floats(0.01, 50))
def test_transform_is_linear(a, b, lam):
    m = build_model({"name": "hyperbolic", "n": 3})
    f, g = rd.bump(1.0), rd.annular_bump(0.5, 2.0)
    comb = rd.RadialProfile(2.0, func=lambda r: a * f(r) + b * g(r))
    lhs = rd.spherical_transform(m, comb, [lam]).values[0]
    rhs = a * rd.spherical_transform(m, f, [lam]).values[0] + b * rd.spherical_transform(m, g, [lam]).values[0]
    assert abs(lhs - rhs) < 1e-10 * (1 + abs(a) + abs(b))


@settings(max_examples=15, deadline=None)
@given(lam=st.floats(0.01, 100))
def test_transform_even_and_real(lam):
    m = build_model(DR12)
    u = rd.bump(1.0)
    v = rd.spherical_transform(m, u, [lam, -lam]).values
    assert abs(v[0].imag) < 1e-12
    assert abs(v[0] - v[1]) < 1e-12
