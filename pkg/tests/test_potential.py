"""Polarization, phase geometry, diastasis, and the contour check."""

import math
from fractions import Fraction

import pytest

from bergman.potential import (
    ContourReport,
    PotentialSpec,
    SpecValidationError,
    build_geometry,
    check_good_contour,
    diastasis,
    phi_value,
    make_preset,
    polarize,
    preset_chsc,
    preset_flat,
    preset_quartic,
)
from bergman.series import TruncatedSeries

F = Fraction


@pytest.fixture(scope="module")
def chsc11_geom():
    return build_geometry(preset_chsc(1, 1, 10))


@pytest.fixture(scope="module")
def quartic_geom():
    return build_geometry(preset_quartic(1, F(1, 10), 10))


class TestValidation:
    def test_presets_validate(self):
        for spec in (preset_flat(2, 6), preset_chsc(2, -1, 8), preset_quartic(1, F(1, 10), 8)):
            spec.validate()

    def test_c00_rejected(self):
        spec = preset_flat(1, 4)
        bad = PotentialSpec(1, 4, 0.5, {**spec.coeffs, ((0,), (0,)): F(1)})
        with pytest.raises(SpecValidationError, match="c00"):
            bad.validate()

    def test_hermitian_rejected(self):
        bad = PotentialSpec(
            1, 4, 0.5, {((1,), (1,)): F(1), ((2,), (1,)): F(1)}
        )
        with pytest.raises(SpecValidationError, match="hermitian"):
            bad.validate()

    def test_linear_term_rejected(self):
        bad = PotentialSpec(
            1, 4, 0.5, {((1,), (1,)): F(1), ((1,), (0,)): F(1), ((0,), (1,)): F(1)}
        )
        with pytest.raises(SpecValidationError, match="linear"):
            bad.validate()

    def test_indefinite_hessian_rejected(self):
        bad = PotentialSpec(1, 4, 0.5, {((1,), (1,)): F(-1)})
        with pytest.raises(SpecValidationError, match="positive"):
            bad.validate()

    def test_file_roundtrip(self, tmp_path):
        spec = preset_chsc(2, 1, 8)
        path = tmp_path / "spec.json"
        spec.to_file(path)
        back = PotentialSpec.from_file(path)
        assert back.coeffs == dict(spec.coeffs)
        assert back.sha256() == spec.sha256()


class TestPolarize:
    def test_flat(self):
        psi = polarize(preset_flat(1, 6))
        assert psi == TruncatedSeries(2, 6, {(1, 1): 1})

    def test_chsc_log_series(self):
        psi = polarize(preset_chsc(1, 1, 8))
        expected = TruncatedSeries(
            2, 8, {(j, j): F((-1) ** (j + 1), j) for j in range(1, 5)}
        )
        assert psi == expected

    def test_quartic_monomials(self):
        psi = polarize(preset_quartic(1, F(1, 10), 8))
        assert psi == TruncatedSeries(2, 8, {(1, 1): 1, (2, 2): F(1, 10)})

    def test_psi_restricts_to_phi(self):
        spec = preset_chsc(2, -1, 6)
        psi = polarize(spec)
        for (a, b), v in spec.coeffs.items():
            if sum(a) + sum(b) <= 6:
                assert psi[a + b] == v


class TestTheta:
    def test_flat_theta_is_z(self):
        geom = build_geometry(preset_flat(1, 6))
        assert geom.theta[0] == TruncatedSeries(3, 5, {(0, 0, 1): 1})

    def test_quartic_hand_value(self, quartic_geom):
        # psi = xz + t x^2 z^2 gives theta = z + t z^2 (x + y)
        t = F(1, 10)
        expected = TruncatedSeries(
            3, 9, {(0, 0, 1): 1, (1, 0, 2): t, (0, 1, 2): t}
        )
        assert quartic_geom.theta[0] == expected

    def test_theta_on_diagonal_equals_psi_gradient(self, chsc11_geom):
        n = chsc11_geom.n
        merged = chsc11_geom.theta[0].remap_variables(2 * n, (0, 0, 1))
        assert merged == chsc11_geom.psi_x[0]

    def test_theta_on_diagonal_chsc2(self):
        geom = build_geometry(preset_chsc(2, 1, 8))
        var_map = (0, 1, 0, 1, 2, 3)
        for i in range(2):
            assert geom.theta[i].remap_variables(4, var_map) == geom.psi_x[i]


class TestInvertTheta:
    def test_flat_identity(self):
        geom = build_geometry(preset_flat(2, 6))
        for i in range(2):
            key = tuple(1 if j == 4 + i else 0 for j in range(6))
            assert geom.z_of_theta[i] == TruncatedSeries(6, 5, {key: 1})

    def test_chsc_mobius_on_diagonal(self, chsc11_geom):
        # theta = z/(1+xz) at y = x inverts to z = theta/(1 - x theta)
        D = 9
        z = chsc11_geom.z_of_theta[0].remap_variables(2, (0, 0, 1))
        x = TruncatedSeries.variable(2, D, 0)
        th = TruncatedSeries.variable(2, D, 1)
        geometric = TruncatedSeries.one(2, D)
        acc = TruncatedSeries.one(2, D)
        for _ in range(D):
            acc = acc * (x * th)
            geometric = geometric + acc
        assert z == th * geometric


class TestDelta0:
    def test_flat_is_one(self):
        geom = build_geometry(preset_flat(2, 6))
        assert geom.delta0_xyz == TruncatedSeries.one(6, 4)
        assert geom.delta0_xytheta == TruncatedSeries.one(6, 4)

    @pytest.mark.parametrize("n,c", [(1, 1), (1, -1), (2, 1)])
    def test_chsc_closed_form(self, n, c):
        geom = build_geometry(preset_chsc(n, c, 8))
        D = geom.delta0_xytheta.trunc_degree
        # u = c theta . (x - y)
        u = TruncatedSeries.zero(3 * n, D)
        for i in range(n):
            xi = TruncatedSeries.variable(3 * n, D, i)
            yi = TruncatedSeries.variable(3 * n, D, n + i)
            ti = TruncatedSeries.variable(3 * n, D, 2 * n + i)
            u = u + c * (ti * (xi - yi))
        # g(u) = e^u ((e^u - 1)/u)^(n-1)
        exp1 = TruncatedSeries(1, D, {(j,): F(1, math.factorial(j)) for j in range(D + 1)})
        ratio = TruncatedSeries(1, D, {(j,): F(1, math.factorial(j + 1)) for j in range(D + 1)})
        g = exp1 * ratio ** (n - 1)
        g0 = g - TruncatedSeries.constant(1, D, g.constant_term)
        closed = g0.compose([u]) + 1
        assert geom.delta0_xytheta == closed

    def test_diagonal_collapse_to_one(self):
        for spec in (preset_chsc(2, 1, 8), preset_quartic(1, F(1, 10), 8)):
            geom = build_geometry(spec)
            n = geom.n
            var_map = tuple(range(n)) + tuple(range(n)) + tuple(range(n, 2 * n))
            merged = geom.delta0_xytheta.remap_variables(2 * n, var_map)
            assert merged == TruncatedSeries.one(2 * n, geom.delta0_xytheta.trunc_degree)


class TestDiastasis:
    def test_self_distance_zero(self, chsc11_geom):
        assert diastasis(chsc11_geom.psi, [0.1 + 0.05j], [0.1 + 0.05j]) == pytest.approx(0.0, abs=1e-14)

    def test_flat_squared_distance(self):
        geom = build_geometry(preset_flat(2, 6))
        x = [0.1 + 0.2j, -0.05j]
        y = [0.02, 0.1 + 0.1j]
        expect = sum(abs(a - b) ** 2 for a, b in zip(x, y))
        assert diastasis(geom.psi, x, y) == pytest.approx(expect, abs=1e-14)

    def test_chsc_closed_value(self):
        geom = build_geometry(preset_chsc(1, 1, 20))
        got = diastasis(geom.psi, [0.1], [0.2])
        expect = math.log(1.01) + math.log(1.04) - 2 * math.log(1.02)
        assert got == pytest.approx(expect, abs=1e-10)

    def test_symmetry(self, quartic_geom):
        x, y = [0.1 + 0.02j], [-0.04 + 0.07j]
        assert diastasis(quartic_geom.psi, x, y) == pytest.approx(
            diastasis(quartic_geom.psi, y, x), abs=1e-14
        )

    def test_hessian_lower_bound(self):
        spec = preset_quartic(1, F(1, 10), 10, radius=0.05)
        geom = build_geometry(spec)
        lam = spec.hessian_min_eigenvalue()
        from bergman.sampling import polydisc_points

        xs = polydisc_points(1, 0.05, 40)
        ys = polydisc_points(1, 0.05, 40, skip=40)
        for x, y in zip(xs, ys):
            d = diastasis(geom.psi, x, y)
            assert d >= 0.8 * lam * sum(abs(a - b) ** 2 for a, b in zip(x, y)) - 1e-12


class TestGoodContour:
    def test_flat_delta_one_boundary_tight(self):
        spec = preset_flat(1, 6)
        psi = polarize(spec)
        report = check_good_contour(spec, psi, samples=100, delta=1.0)
        assert report.passed
        assert report.max_excess == pytest.approx(0.0, abs=1e-12)

    def test_flat_delta_too_large_fails(self):
        spec = preset_flat(1, 6)
        psi = polarize(spec)
        report = check_good_contour(spec, psi, samples=100, delta=1.5)
        assert not report.passed
        assert report.max_excess > 0

    def test_chsc_passes_at_half(self):
        spec = preset_chsc(1, 1, 12)
        psi = polarize(spec)
        report = check_good_contour(spec, psi, samples=150, delta=0.5)
        assert report.passed

    def test_report_serializes(self):
        spec = preset_flat(1, 6)
        report = check_good_contour(spec, polarize(spec), samples=10, delta=1.0)
        d = report.to_dict()
        assert set(d) >= {"delta", "samples", "max_excess", "worst_pair", "passed"}


class TestFloatMode:
    def test_float_geometry_tracks_rational(self):
        spec = preset_quartic(1, F(1, 10), 10)
        exact = build_geometry(spec)
        approx = build_geometry(spec, mode="float")
        pairs = [(exact.psi, approx.psi), (exact.theta[0], approx.theta[0]),
                 (exact.delta0_xytheta, approx.delta0_xytheta),
                 (exact.z_of_theta[0], approx.z_of_theta[0])]
        for e, a in pairs:
            for key, val in e.coeffs.items():
                v = float(val)
                if abs(v) >= 1e-6:
                    assert abs(a.coeffs.get(key, 0.0) - v) <= 1e-12 * abs(v)


class TestPresetDispatch:
    def test_make_preset(self):
        assert make_preset("flat", 2, 6).coeffs == preset_flat(2, 6).coeffs
        assert make_preset("chsc", 1, 8, param=-1).coeffs == preset_chsc(1, -1, 8).coeffs
        with pytest.raises(SpecValidationError):
            make_preset("nope", 1, 6)
