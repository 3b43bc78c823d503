import math

import numpy as np
import pytest
from scipy.special import y1_zeros

from helmscat.fields import (
    ComplexField,
    Grid,
    IncidentWave,
    NonlinearitySpec,
    make_incident,
)
from helmscat.resolvent import ResolventConfig
from helmscat.solver import SolverConfig, picard_solve
from helmscat.verify import (
    defocusing_inequalities,
    energy_identity,
    fourier_positivity,
    growth_law_fit,
    radial_transform,
    sturm_check,
    truncation_threshold,
)

EQUAL_ARCH = 2.0 * math.sqrt(2.0 / math.pi)  # every arch at order 1/2


class TestSturm:
    def test_half_order_arches_all_equal(self):
        for r in sturm_check(0.5, 20):
            assert r.left_integral == pytest.approx(EQUAL_ARCH, abs=1e-10)
            assert r.right_integral == pytest.approx(EQUAL_ARCH, abs=1e-10)
            assert abs(r.margin) < 1e-10

    @pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.0, 3.0])
    def test_margins_never_negative(self, nu):
        for r in sturm_check(nu, 20):
            assert r.margin >= -1e-9

    @pytest.mark.parametrize("nu", [1.0, 1.5, 2.0])
    def test_margins_strict_above_half(self, nu):
        margins = [r.margin for r in sturm_check(nu, 20)]
        assert min(margins) > 0.0

    def test_margins_decrease_toward_zero(self):
        margins = [r.margin for r in sturm_check(1.5, 20)]
        assert all(m1 > m2 for m1, m2 in zip(margins, margins[1:]))
        assert margins[-1] < 1e-4

    def test_first_arch_against_mpmath(self):
        mp = pytest.importorskip("mpmath")
        from helmscat.specfun import j_zeros
        j1, j2 = j_zeros(1.0, 2).zeros
        left = mp.quad(lambda t: mp.sqrt(t) * mp.besselj(1, t), [0, j1])
        right = -mp.quad(lambda t: mp.sqrt(t) * mp.besselj(1, t), [j1, j2])
        res = sturm_check(1.0, 1)[0]
        # the t^(3/2) behaviour at the origin costs the first panel accuracy
        assert res.left_integral == pytest.approx(float(left), rel=1e-7)
        assert res.right_integral == pytest.approx(float(right), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            sturm_check(0.3, 5)
        with pytest.raises(ValueError):
            sturm_check(1.0, 0)


def closed_form_3d(k, d, xi):
    """Transform of the truncated 3-d kernel cos(k s)/(4 pi s) by elementary
    integrals: (2 pi)^{-3/2} (1/xi) int_0^d cos(k s) sin(xi s) ds."""
    a, b = xi + k, xi - k
    val = (1.0 - math.cos(a * d)) / (2.0 * a)
    if abs(b) > 1e-14:
        val += (1.0 - math.cos(b * d)) / (2.0 * b)
    return (2.0 * math.pi) ** -1.5 / xi * val


class TestRadialTransform:
    def test_matches_elementary_integral_3d(self):
        k, d = 1.3, 1.1
        freqs = np.array([0.4, 1.0, 1.3, 2.7, 9.3, 24.0])
        res = fourier_positivity(3, k=k, delta=d, freqs=freqs)
        for xi, v in zip(res.freqs, res.values):
            assert v == pytest.approx(closed_form_3d(k, d, xi), abs=1e-14)

    def test_zero_frequency_is_scaled_ball_integral(self):
        k, d = 1.3, 1.1
        res = fourier_positivity(3, k=k, delta=d, freqs=np.array([0.0]))
        plain = (math.cos(k * d) - 1.0 + k * d * math.sin(k * d)) / k ** 2
        assert res.values[0] == pytest.approx((2.0 * math.pi) ** -1.5 * plain,
                                              rel=1e-12)

    @pytest.mark.parametrize("dim", [3, 5])
    def test_synthetic_nonincreasing_profile(self, dim):
        freqs = np.concatenate(([0.0], np.geomspace(0.1, 50.0, 60)))
        vals = radial_transform(lambda s: s ** (-(dim - 1) / 2.0), dim, 1.0, freqs)
        assert vals.min() >= -1e-8

    def test_validation(self):
        with pytest.raises(ValueError):
            radial_transform(lambda s: s, 1, 1.0, [1.0])
        with pytest.raises(ValueError):
            radial_transform(lambda s: s, 3, -1.0, [1.0])
        with pytest.raises(ValueError):
            radial_transform(lambda s: s, 3, 1.0, [-1.0])


class TestFourierPositivity:
    def test_threshold_values(self):
        assert truncation_threshold(3) == pytest.approx(math.pi / 2.0, abs=1e-12)
        assert truncation_threshold(4) == pytest.approx(y1_zeros(1)[0][0].real,
                                                        abs=1e-10)
        ts = [truncation_threshold(n) for n in range(3, 10)]
        assert all(a < b for a, b in zip(ts, ts[1:]))

    @pytest.mark.parametrize("dim", [3, 4, 5, 6])
    @pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
    def test_nonnegative_at_threshold(self, dim, k):
        freqs = np.concatenate(([0.0], np.geomspace(0.1, 60.0, 60)))
        delta = truncation_threshold(dim) / k
        res = fourier_positivity(dim, k=k, delta=delta, freqs=freqs / delta)
        assert res.min_value >= -1e-8
        assert res.nonnegative

    def test_nonnegative_below_threshold(self):
        res = fourier_positivity(3, k=1.0, delta=0.5 * truncation_threshold(3))
        assert res.min_value >= -1e-8

    def test_detector_sees_negativity_past_threshold(self):
        # sufficiency only: at 1.2x the threshold the transform happens to
        # stay positive, by 1.5x it dips clearly negative
        res = fourier_positivity(3, k=1.0, delta=1.5 * truncation_threshold(3))
        assert res.min_value < -1e-4
        assert not res.nonnegative

    def test_default_delta_is_threshold(self):
        res = fourier_positivity(3, k=2.0, freqs=np.array([0.0, 1.0]))
        assert res.delta == pytest.approx(truncation_threshold(3) / 2.0, rel=1e-14)

    def test_validation(self):
        with pytest.raises(ValueError):
            fourier_positivity(2, k=1.0)
        with pytest.raises(ValueError):
            fourier_positivity(3, k=-1.0)
        with pytest.raises(ValueError):
            fourier_positivity(3, k=1.0, delta=0.0)


K_REF = 1.0
ALPHA = 3.0


def scattering_setup(points=12, half_width=2.0, amp=-0.8, cutoff=0.45):
    g = Grid(dim=3, half_width=half_width, points_per_axis=points)
    rcfg = ResolventConfig(source_grid=g, eval_grid=g)
    r = g.radius()
    Q = ComplexField(g, (amp * np.exp(-4.0 * r ** 2) * (r <= cutoff)).astype(complex))
    f = NonlinearitySpec.power(Q, p=3.0, alpha=ALPHA, tags=("defocusing",))
    phi = make_incident(IncidentWave.plane(K_REF, (1.0, 0.0, 0.0)), g)
    return rcfg, Q, f, phi


class TestEnergyIdentity:
    def test_zero_field_zero_flux(self):
        g = Grid(dim=3, half_width=2.0, points_per_axis=16)
        res = energy_identity(ComplexField.zeros(g), K_REF, radii=(0.5, 1.0))
        assert res.flux_imag == (0.0, 0.0)
        assert res.within()

    def test_point_source_control(self):
        g = Grid(dim=3, half_width=3.0, points_per_axis=48)
        r = g.radius()
        u = ComplexField(g, np.exp(1j * K_REF * r) / (4.0 * np.pi * r))
        res = energy_identity(u, K_REF, radii=(1.0, 1.5, 2.0))
        target = K_REF / (4.0 * np.pi)
        for flux, tol in zip(res.flux_imag, res.quad_tol):
            assert flux == pytest.approx(target, rel=0.05)
            assert abs(flux - target) <= tol

    def test_scattering_solution_flux_vanishes(self):
        g = Grid(dim=3, half_width=3.0, points_per_axis=32)
        rcfg = ResolventConfig(source_grid=g, eval_grid=g)
        r = g.radius()
        Q = ComplexField(g, (-0.5 * np.exp(-2.0 * r ** 2) * (r <= 1.5)).astype(complex))
        f = NonlinearitySpec.power(Q, p=3.0, alpha=ALPHA)
        phi = make_incident(IncidentWave.plane(K_REF, (1.0, 0.0, 0.0)), g)
        u, rep = picard_solve(f, phi, K_REF, SolverConfig(tol=1e-12), rcfg)
        assert rep.converged
        res = energy_identity(u, K_REF, Q=Q, p=3.0, radii=(1.2, 1.8, 2.4))
        assert res.within()
        for flux in res.flux_imag:
            assert abs(flux) < 5e-3
        flags = [s["encloses_support"] for s in res.context["shells"]]
        assert flags == [False, True, True]

    def test_homogeneous_defocusing_flux(self):
        rcfg, Q, f, _ = scattering_setup()
        phi0 = ComplexField.zeros(rcfg.eval_grid)
        u, rep = picard_solve(f, phi0, K_REF, SolverConfig(), rcfg)
        assert rep.converged
        res = energy_identity(u, K_REF, Q=Q, p=3.0, radii=(0.8, 1.5))
        assert res.within()
        for flux in res.flux_imag:
            assert abs(flux) <= 1e-13

    def test_radius_validation(self):
        g = Grid(dim=3, half_width=2.0, points_per_axis=12)
        with pytest.raises(ValueError):
            energy_identity(ComplexField.zeros(g), K_REF, radii=(2.5,))
        with pytest.raises(ValueError):
            energy_identity(ComplexField.zeros(g), K_REF, radii=(0.0,))


class TestDefocusing:
    def test_chain_holds_on_solve(self):
        rcfg, Q, f, phi = scattering_setup()
        u, rep = picard_solve(f, phi, K_REF, SolverConfig(tol=1e-12), rcfg)
        assert rep.converged
        checks = defocusing_inequalities(u, phi, Q, 3.0, k=K_REF)
        names = [c.name for c in checks]
        assert names == ["defocusing_first_bound", "weighted_mass_p_minus_1",
                         "weighted_mass_p", "source_dual_norm",
                         "support_diameter"]
        for c in checks:
            assert c.satisfied
            assert c.margin >= -1e-10
        assert checks[0].margin > 0.0

    def test_no_admissibility_check_without_k(self):
        rcfg, Q, f, phi = scattering_setup()
        u, _ = picard_solve(f, phi, K_REF, SolverConfig(), rcfg)
        checks = defocusing_inequalities(u, phi, Q, 3.0)
        assert [c.name for c in checks] == [
            "defocusing_first_bound", "weighted_mass_p_minus_1",
            "weighted_mass_p", "source_dual_norm"]

    def test_zero_coefficient_is_tight(self):
        g = Grid(dim=3, half_width=2.0, points_per_axis=10)
        phi = make_incident(IncidentWave.plane(K_REF, (1.0, 0.0, 0.0)), g)
        checks = defocusing_inequalities(phi, phi, ComplexField.zeros(g), 3.0)
        for c in checks:
            assert c.lhs == 0.0
            assert c.rhs == 0.0
            assert c.margin == 0.0
            assert c.satisfied

    def test_sign_and_support_validation(self):
        g = Grid(dim=3, half_width=2.0, points_per_axis=10)
        phi = make_incident(IncidentWave.plane(K_REF, (1.0, 0.0, 0.0)), g)
        r = g.radius()
        pos = ComplexField(g, (0.5 * np.exp(-4.0 * r ** 2) * (r <= 0.5)).astype(complex))
        with pytest.raises(ValueError, match="nonpositive"):
            defocusing_inequalities(phi, phi, pos, 3.0)
        cplx = ComplexField(g, (-0.5j * np.exp(-4.0 * r ** 2) * (r <= 0.5)))
        with pytest.raises(ValueError, match="real"):
            defocusing_inequalities(phi, phi, cplx, 3.0)
        full = ComplexField(g, np.full(g.shape, -1.0, dtype=complex))
        with pytest.raises(ValueError, match="boundary"):
            defocusing_inequalities(phi, phi, full, 3.0)
        ok = ComplexField(g, (-0.5 * np.exp(-4.0 * r ** 2) * (r <= 0.5)).astype(complex))
        with pytest.raises(ValueError, match="p must"):
            defocusing_inequalities(phi, phi, ok, 8.0)

    def test_dim2_rejected(self):
        g = Grid(dim=2, half_width=2.0, points_per_axis=10)
        zero = ComplexField.zeros(g)
        with pytest.raises(ValueError, match="dim"):
            defocusing_inequalities(zero, zero, zero, 3.0)


class TestGrowthFit:
    def test_exact_power_law(self):
        phis = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
        sups = 2.0 * phis ** 3
        fit = growth_law_fit(phis, sups, p=3.0)
        assert fit.exponent == pytest.approx(3.0, rel=1e-10)
        assert fit.m == 2  # (p-1)^2 = 4 >= 3
        assert fit.covers_all
        for ph, su in fit.pairs:
            assert su <= fit.constant * (1.0 + ph ** 4.0) + 1e-12

    def test_linear_family_from_solves(self):
        rcfg, Q, f, phi = scattering_setup()
        amps = (0.5, 1.0, 2.0, 4.0)
        sups = []
        for s in amps:
            u, rep = picard_solve(f, phi * s, K_REF,
                                  SolverConfig(tol=1e-11, max_iters=400), rcfg)
            assert rep.converged
            sups.append(u.sup_norm)
        fit = growth_law_fit(amps, sups, p=3.0)
        assert fit.m == 1
        assert fit.covers_all
        assert fit.exponent == pytest.approx(1.0, abs=0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            growth_law_fit([1.0, 2.0], [1.0, 2.0], p=3.0)
        with pytest.raises(ValueError):
            growth_law_fit([1.0, 2.0, 0.0], [1.0, 2.0, 3.0], p=3.0)
