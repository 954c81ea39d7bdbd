"""Closed-form spectral functions vs matrix and quadrature oracles.

Dense finite-volume operators provide the matrix-exponential and
linear-solve oracles; scipy adaptive quadrature provides the integral
oracles.  Boundary-leak allowances follow the p**N * t rule of the
Dirichlet restriction.
"""

import cmath
import math

import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import quad

import hierspec.closedform as cf
from hierspec.errors import (DivergentIntegralError, DomainError,
                             SpectrumProximityError)
from hierspec.hierops import VolumeGrid, assemble_dense, dirichlet_spectrum
from hierspec.lattice import LatticeParams

PA_2_HALF = LatticeParams(2, 0.5)
PA_2_QUARTER = LatticeParams(2, 0.25)
PA_4_HALF = LatticeParams(4, 0.5)


class TestIds:
    def test_above_one(self):
        assert cf.ids(PA_2_HALF, 2.0) == 1.0

    def test_spec_value(self):
        assert cf.ids(PA_2_QUARTER, 0.3) == 0.5

    def test_profile_value(self):
        # N(1/2) lam**(-1/2) = 2**-0.5 and matches nu**({z}-1) at z = 1/2
        val = cf.ids_profile(PA_2_QUARTER, 0.5)
        assert val == pytest.approx(2 ** -0.5, abs=1e-15)
        z = math.log(0.5) / math.log(0.25)
        assert val == pytest.approx(2 ** ((z % 1.0) - 1.0), abs=1e-15)

    def test_staircase_structure(self):
        pa = LatticeParams(3, 0.4)
        for k in range(1, 6):
            atom = pa.p**k
            assert cf.ids(pa, atom * 1.000001) == pytest.approx(3.0**-k)
            assert cf.ids(pa, atom) == pytest.approx(3.0 ** -(k + 1))

    def test_matches_finite_volume_counting(self):
        # exact once p**N < lam: volume-normalized count of closed-form
        # Dirichlet eigenvalues below lam equals the limit staircase
        pa = LatticeParams(2, 0.3)
        for lam in (0.05, 0.2, 0.77):
            g = VolumeGrid(pa, 10)
            values = dirichlet_spectrum(g).expand()
            count = float(np.sum(values < lam)) / g.n_sites
            assert count == pytest.approx(cf.ids(pa, lam), abs=1e-15)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            cf.ids(PA_2_HALF, 0.0)


class TestHeatKernel:
    def test_normalization_at_zero(self):
        assert cf.heat_kernel(PA_2_HALF, 0.0, 0) == 1.0
        assert cf.heat_kernel(LatticeParams(3, 0.77), 0.0, 0) == pytest.approx(
            1.0, abs=1e-15)

    def test_off_diagonal_vanishes_at_zero(self):
        for r in (1, 2, 5):
            assert cf.heat_kernel(PA_2_HALF, 0.0, r) == pytest.approx(
                0.0, abs=1e-14)

    def test_against_matrix_exponential(self):
        g = VolumeGrid(PA_2_HALF, 8)
        m = assemble_dense(g)
        for t in (0.1, 1.0, 5.0, 20.0):
            e_t = scipy.linalg.expm(t * m)
            for r, site in [(0, 0), (1, 1), (2, 2), (3, 4)]:
                allowed = PA_2_HALF.p**8 * t + 1e-9
                assert abs(cf.heat_kernel(PA_2_HALF, t, r)
                           - e_t[0, site]) <= allowed

    def test_range_and_monotone_diag(self):
        ts = np.geomspace(0.01, 1e5, 40)
        vals = [cf.heat_kernel(PA_4_HALF, t, 0) for t in ts]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_stochasticity_with_exterior_tail(self):
        # shell r multiplies the kernel by nu**(r-1)(nu-1), so the
        # kernel tolerance is tightened accordingly
        for pa, t, rank in [(PA_2_HALF, 3.7, 12), (LatticeParams(3, 0.4), 0.9, 8)]:
            nu = pa.nu
            mass = cf.heat_kernel(pa, t, 0, tol=1e-16)
            mass += sum(nu ** (r - 1) * (nu - 1)
                        * cf.heat_kernel(pa, t, r, tol=1e-15 / nu**r)
                        for r in range(1, rank + 1))
            assert mass + cf.heat_exterior_mass(pa, t, rank, tol=1e-15) == \
                pytest.approx(1.0, abs=1e-12)

    def test_semigroup_identity(self):
        # sum_y p(t,x,y) p(s,y,z) over a rank-R volume; exterior bounded
        # by exterior-mass * sup of the second kernel
        pa = PA_2_HALF
        t, s, rank = 1.3, 0.9, 14
        n = 2**rank

        def kernel_row(tt, x):
            from hierspec.lattice import hier_distance
            return np.array([cf.heat_kernel(pa, tt, hier_distance(x, y, 2))
                             for y in range(n)])

        x, z = 3, 9
        total = kernel_row(t, x) @ kernel_row(s, z)
        remainder = cf.heat_exterior_mass(pa, t, rank)  # * sup_y<exterior> p(s,y,z) <= 1
        assert abs(total - cf.heat_kernel(pa, t + s, hier_distance_xz(x, z)))\
            <= remainder + 1e-9

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            cf.heat_kernel(PA_2_HALF, -0.1, 0)


def hier_distance_xz(x, z):
    from hierspec.lattice import hier_distance
    return hier_distance(x, z, 2)


class TestHeatProfile:
    def test_log_periodicity(self):
        for t in 10.0 ** np.arange(2.0, 6.01, 0.3):
            drift = abs(cf.heat_profile(PA_4_HALF, t)
                        - cf.heat_profile(PA_4_HALF, t / PA_4_HALF.p))
            assert drift <= 1e-4

    def test_residual_decreases(self):
        res = [abs(cf.heat_profile(PA_4_HALF, t)
                   - cf.heat_profile(PA_4_HALF, t / PA_4_HALF.p))
               for t in (1e2, 1e4)]
        assert res[1] <= res[0]

    def test_bounded_at_critical_dimension(self):
        vals = [cf.heat_profile(PA_2_HALF, t)
                for t in 10.0 ** np.arange(2.0, 6.01, 0.3)]
        assert 0.0 < min(vals) <= max(vals) < math.inf
        assert max(vals) / min(vals) < 2.0


class TestResolvent:
    def test_large_lambda_limit(self):
        for lam in (1e3, 1e6):
            assert lam * cf.resolvent(PA_2_HALF, lam, 0).real == pytest.approx(
                1.0, abs=2e-3 / lam ** 0)
        assert 1e6 * cf.resolvent(PA_2_HALF, 1e6, 0).real == pytest.approx(
            1.0, abs=1e-5)

    def test_small_lambda_approaches_green_function(self):
        assert cf.resolvent(PA_4_HALF, 1e-8, 0).real == pytest.approx(
            1.5, abs=1e-6)

    def test_against_dense_solve(self):
        pa = PA_2_HALF
        g = VolumeGrid(pa, 10)
        m = assemble_dense(g)
        lam = 0.3
        inv = np.linalg.inv(lam * np.eye(g.n_sites) - m)
        assert abs(cf.resolvent(pa, lam, 2).real - inv[0, 2]) < 1e-8
        assert abs(cf.resolvent(pa, lam, 0).real - inv[0, 0]) < 1e-8

    def test_functional_equation_on_sector_grid(self):
        for pa in (PA_2_HALF, PA_4_HALF, PA_2_QUARTER):
            nu, p = pa.nu, pa.p
            for mag in (0.05, 0.3, 1.0, 4.0):
                for ang in (-2.0, -0.9, 0.0, 0.9, 2.0):
                    lam = mag * cmath.exp(1j * ang)
                    resid = (cf.resolvent(pa, p * lam, 0)
                             - cf.resolvent(pa, lam, 0) / (p * nu)
                             - (nu - 1) / (nu * (p * lam + 1)))
                    assert abs(resid) < 1e-12

    def test_sector_and_spectrum_guards(self):
        with pytest.raises(DomainError):
            cf.resolvent(PA_2_HALF, complex(-1.0, 0.1), 0)  # arg > 3pi/4
        # atoms accumulate at 0, so tiny lam sits within 1e-13 of one
        with pytest.raises(SpectrumProximityError):
            cf.resolvent(PA_2_HALF, 1e-14, 0)
        with pytest.raises(DomainError):
            cf.resolvent(PA_2_HALF, 0.0, 0)

    def test_laplace_transform_of_kernel(self):
        for lam in (0.5, 1.0, 2.0):
            val, _ = quad(lambda t: math.exp(-lam * t)
                          * cf.heat_kernel(PA_2_HALF, t, 0), 0, np.inf,
                          limit=300)
            assert val == pytest.approx(cf.resolvent(PA_2_HALF, lam, 0).real,
                                        abs=1e-9)


class TestGreenFunction:
    def test_spec_values(self):
        assert cf.resolvent_zero(PA_4_HALF, 0) == 1.5
        assert cf.resolvent_zero(PA_4_HALF, 1) == pytest.approx(0.5)
        assert cf.resolvent_zero(PA_4_HALF, 3) == pytest.approx(0.125)

    def test_decay_constant(self):
        # R_0 * (1 + rho)**(s_h - 2) equals c exactly at every distance
        from hierspec.lattice import rho_of_distance
        pa = PA_4_HALF
        c = cf.resolvent_zero_constant(pa)
        for r in (1, 5, 20):
            rho1 = 1.0 + rho_of_distance(r, pa)
            assert cf.resolvent_zero(pa, r) * rho1 ** (pa.s_h - 2) == \
                pytest.approx(c, rel=1e-13)

    def test_asymptotic_ratio_with_rho(self):
        from hierspec.lattice import rho_of_distance
        pa = LatticeParams(4, 0.26)  # transient, s_h barely above 2
        c = cf.resolvent_zero_constant(pa)
        ratio = (cf.resolvent_zero(pa, 30)
                 * rho_of_distance(30, pa) ** (pa.s_h - 2) / c)
        assert ratio == pytest.approx(1.0, abs=1e-8)
        # the deviation follows (1 - p**(r/2))**(s_h-2) - 1
        pa2 = PA_4_HALF
        ratio2 = (cf.resolvent_zero(pa2, 30)
                  * rho_of_distance(30, pa2) ** (pa2.s_h - 2) / 1.0)
        predicted = (1.0 - pa2.p**15.0) ** (pa2.s_h - 2)
        assert ratio2 == pytest.approx(predicted, rel=1e-12)

    def test_recurrent_rejected(self):
        with pytest.raises(DivergentIntegralError):
            cf.resolvent_zero(PA_2_QUARTER, 0)


class TestExpansion:
    def test_constants(self):
        c0, _, _ = cf.resolvent_expansion(PA_2_QUARTER, 0.1)
        assert c0 == pytest.approx(-0.5)
        assert PA_2_QUARTER.alpha == pytest.approx(0.5)

    def test_drift_bounded(self):
        pa = PA_2_QUARTER
        for lam in (0.5, 0.1, 0.02):
            _, u1, bound = cf.resolvent_expansion(pa, lam)
            _, u2, _ = cf.resolvent_expansion(pa, pa.p * lam)
            assert abs(u1 - u2) <= bound

    def test_profile_stabilizes_geometrically(self):
        pa = PA_2_QUARTER
        lams = [0.6 * 0.25**m for m in range(2, 11)]
        us = [cf.resolvent_expansion(pa, lam)[1] for lam in lams]
        diffs = [abs(b - a) for a, b in zip(us, us[1:])]
        ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a > 0]
        # successive differences shrink like p**(1+alpha) = 0.25**1.5
        expected = pa.p ** (1.0 + pa.alpha)
        for got in ratios[:4]:
            assert got == pytest.approx(expected, rel=0.2)

    def test_requires_recurrent_dimension(self):
        with pytest.raises(DomainError):
            cf.resolvent_expansion(PA_4_HALF, 0.1)


class TestThetaZeta:
    def test_theta_at_zero(self):
        assert cf.theta(PA_2_HALF, 0.0) == 1.0

    def test_closed_form_equals_series(self):
        pa = PA_2_HALF
        z = 0.05
        series = (1 - 1 / pa.nu) * sum(
            (pa.p**z * pa.nu) ** -r for r in range(4000))
        assert cf.zeta_spectral(pa, z).real == pytest.approx(series, abs=1e-12)

    def test_pole_locations(self):
        pa = PA_2_HALF
        poles = cf.zeta_poles(pa, 3)
        assert poles[0] == pytest.approx(1.0)
        for z in poles:
            assert abs(pa.nu * cmath.exp(z * math.log(pa.p)) - 1.0) < 1e-12
        # spacing is 2*pi/ln(1/p); the midpoint pi*i/ln(1/p) is regular
        mid = complex(1.0, math.pi / math.log(2.0))
        assert abs(pa.nu * cmath.exp(mid * math.log(pa.p)) + 1.0) < 1e-12
        assert cf.zeta_spectral(pa, mid) == pytest.approx(
            (1 - 1 / pa.nu) / 2.0, abs=1e-13)

    def test_pole_proximity_rejected(self):
        with pytest.raises(SpectrumProximityError):
            cf.zeta_spectral(PA_2_HALF, 1.0)

    def test_spectral_measure(self):
        meas = cf.spectral_measure(LatticeParams(3, 0.4), 40)
        assert meas.total_weight() == pytest.approx(1.0, abs=1e-15)
        assert all(a > b for a, b in zip(meas.locations, meas.locations[1:]))


class TestGreenTail:
    def test_vanishes_at_infinity(self):
        # transient decay is algebraic, ~ 1/T**(s_h/2 - 1)
        values = [cf.green_tail_integral(PA_4_HALF, T, 0.0)
                  for T in (5.0, 500.0, 1e9)]
        assert values[0] > values[1] > values[2]
        assert values[2] < 1e-8

    def test_t_zero_equals_green_function(self):
        assert cf.green_tail_integral(PA_4_HALF, 0.0, 0.0) == pytest.approx(
            1.5, abs=1e-12)

    def test_gamma_against_quadrature(self):
        val = cf.green_tail_integral(PA_2_HALF, 2.0, 0.8)
        oracle = 0.0
        pts = [2.0 * 3**k for k in range(40)]
        for lo, hi in zip(pts, pts[1:]):
            piece, _ = quad(lambda t: t**-0.8 * cf.heat_kernel(PA_2_HALF, t, 0),
                            lo, hi, limit=200)
            oracle += piece
        assert val == pytest.approx(oracle, abs=1e-9)

    def test_gamma_above_one_against_quadrature(self):
        val = cf.green_tail_integral(PA_2_QUARTER, 0.7, 1.6)
        oracle, _ = quad(lambda t: t**-1.6 * cf.heat_kernel(PA_2_QUARTER, t, 0),
                         0.7, np.inf, limit=400)
        assert val == pytest.approx(oracle, abs=1e-8)

    def test_divergence_signals(self):
        with pytest.raises(DivergentIntegralError):
            cf.green_tail_integral(PA_2_QUARTER, 1.0, 0.0)  # p*nu < 1
        with pytest.raises(DivergentIntegralError):
            cf.green_tail_integral(PA_2_HALF, 0.0, 1.2)  # not integrable at 0
        with pytest.raises(DivergentIntegralError):
            cf.green_tail_integral(PA_2_QUARTER, 1.0, 0.4)  # gamma + s_h/2 <= 1

    def test_partial_sums_grow_without_bound(self):
        pa = LatticeParams(2, 0.3)  # p*nu = 0.6 < 1
        sums = [cf.green_tail_partial_sum(pa, 1.0, 0.0, n)
                for n in (10, 20, 40, 80)]
        assert all(b > a for a, b in zip(sums, sums[1:]))
        assert sums[-1] > 1e15
