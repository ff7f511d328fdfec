"""Transport chain: defining identities, y-independence, cross-method equality."""

from fractions import Fraction

import pytest

from bergman.coefficients import bergman_coefficients
from bergman.potential import (
    DegreeBudgetError,
    build_geometry,
    preset_chsc,
    preset_flat,
    preset_quartic,
)
from bergman.series import TruncatedSeries
from bergman.transport import (
    amplitude_order_xyz,
    division_identity_gap,
    first_amplitude,
    next_amplitude,
    reconstruct_coefficients,
    transport_chain,
)

F = Fraction


@pytest.fixture(scope="module")
def quartic_geom():
    return build_geometry(preset_quartic(1, F(1, 10), 12))


@pytest.fixture(scope="module")
def quartic_chain(quartic_geom):
    return transport_chain(quartic_geom, 4)


class TestFirstOrder:
    def test_flat_vanishes(self):
        geom = build_geometry(preset_flat(2, 8))
        chain = transport_chain(geom, 2)
        for m in (1, 2):
            for comp in chain.A[m]:
                assert comp.is_zero()

    def test_division_identity(self, quartic_geom, quartic_chain):
        assert division_identity_gap(quartic_geom, quartic_chain, 1).is_zero()

    def test_chsc_scalar_closed_form(self):
        # n = 1, c = 1: (x - y) A_1 = e^{theta (x - y)} - 1
        geom = build_geometry(preset_chsc(1, 1, 10))
        chain = transport_chain(geom, 1)
        import math

        D = chain.A[1][0].trunc_degree + 1
        u = TruncatedSeries(3, D, {(1, 0, 1): 1, (0, 1, 1): -1})
        expm1_u = TruncatedSeries(
            1, D, {(j,): F(1, math.factorial(j)) for j in range(1, D + 1)}
        ).compose([u])
        from bergman.series import mul_trunc

        xy = TruncatedSeries(3, 1, {(1, 0, 0): 1, (0, 1, 0): -1})
        assert mul_trunc(xy, chain.A[1][0], D) == expm1_u


class TestSteps:
    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_division_identity_each_order(self, quartic_geom, quartic_chain, m):
        assert division_identity_gap(quartic_geom, quartic_chain, m).is_zero()

    def test_chsc2_division_identity(self):
        geom = build_geometry(preset_chsc(2, 1, 8))
        chain = transport_chain(geom, 2)
        assert division_identity_gap(geom, chain, 1).is_zero()
        assert division_identity_gap(geom, chain, 2).is_zero()

    def test_degree_guard(self):
        geom = build_geometry(preset_flat(1, 5))
        with pytest.raises(DegreeBudgetError):
            transport_chain(geom, 3)

    def test_stepwise_api_matches_chain(self, quartic_geom, quartic_chain):
        a1 = first_amplitude(quartic_geom)
        assert a1 == quartic_chain.A[1]
        a2 = next_amplitude(quartic_geom, a1, 2)
        assert a2 == quartic_chain.A[2]
        with pytest.raises(ValueError):
            next_amplitude(quartic_geom, a1, 1)


class TestReconstruction:
    def test_flat_is_one(self):
        geom = build_geometry(preset_flat(1, 8))
        b = reconstruct_coefficients(geom, transport_chain(geom, 2))
        assert b[0] == TruncatedSeries.one(2, 8)
        assert b[1].is_zero() and b[2].is_zero()

    def test_chsc11_first_coefficient(self):
        geom = build_geometry(preset_chsc(1, 1, 10))
        b = reconstruct_coefficients(geom, transport_chain(geom, 2))
        assert b[1] == TruncatedSeries.constant(2, b[1].trunc_degree, 1)
        assert b[2].is_zero()

    def test_matches_divergence_recursion_on_quartic(self, quartic_geom, quartic_chain):
        direct = bergman_coefficients(quartic_geom, 3)
        via_transport = reconstruct_coefficients(
            quartic_geom, transport_chain(quartic_geom, 3)
        )
        for m in range(4):
            assert via_transport[m] == direct.b[m]

    def test_order_zero_amplitude_is_one(self, quartic_geom, quartic_chain):
        b0 = amplitude_order_xyz(quartic_geom, quartic_chain, 0)
        assert b0 == TruncatedSeries.one(3, b0.trunc_degree)


class TestYIndependence:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_y_block_absent(self, quartic_geom, quartic_chain, m):
        full = amplitude_order_xyz(quartic_geom, quartic_chain, m)
        n = quartic_geom.n
        for key in full.coeffs:
            assert all(e == 0 for e in key[n : 2 * n])

    def test_collapse_matches_recursion(self, quartic_geom, quartic_chain):
        direct = bergman_coefficients(quartic_geom, 3)
        n = quartic_geom.n
        for m in (1, 2, 3):
            full = amplitude_order_xyz(quartic_geom, quartic_chain, m)
            collapsed = full.remap_variables(
                2 * n, tuple(range(n)) + tuple(range(n)) + tuple(range(n, 2 * n))
            )
            assert collapsed == direct.b[m].truncate(collapsed.trunc_degree)


class TestNormGrowthProbe:
    def test_amplitude_norms_stay_under_factorial_squared_envelope(self):
        # grid sup-norms of A_m: the implied constant (norm / (m!)^2)^(1/m)
        # must stabilize rather than keep climbing
        import math

        from bergman.sampling import polydisc_points

        geom = build_geometry(preset_quartic(1, F(1, 10), 18))
        chain = transport_chain(geom, 5)
        xs = polydisc_points(1, 0.1, 5)
        ys = polydisc_points(1, 0.1, 5, skip=5)
        ts = polydisc_points(1, 0.1, 5, skip=10)
        implied = []
        for m in range(1, 6):
            best = 0.0
            for comp in chain.A[m]:
                for a in xs:
                    for b in ys:
                        for t in ts:
                            v = abs(comp.eval(list(a) + list(b) + list(t)))
                            if v > best:
                                best = v
            assert best > 0
            implied.append((best / math.factorial(m) ** 2) ** (1.0 / m))
        assert max(implied) <= 1.10 * max(implied[:3])
