import numpy as np
import pytest
from scipy.integrate import quad

import edgeburst as eb
from edgeburst.lattice import Site
from edgeburst.perturbation import ExpPoly, final_step_poly

G = 0.8


def poly(terms, gamma=G):
    return ExpPoly(gamma, terms)


class TestExpPoly:
    def test_requires_positive_gamma(self):
        with pytest.raises(ValueError):
            ExpPoly(0.0)

    def test_integrate_constant(self):
        f = ExpPoly.constant(G)
        assert eb.exppoly_integrate0(f)(3.0) == pytest.approx(3.0, abs=1e-15)

    def test_integrate_exponential(self):
        f = poly({(0, 1): 1.0})  # e^{g t}
        t = 1.3
        expect = (np.exp(G * t) - 1.0) / G
        assert eb.exppoly_integrate0(f)(t) == pytest.approx(expect, rel=1e-14)

    def test_integrate_t_times_decay_against_quadrature(self):
        f = poly({(1, -1): 1.0})  # t e^{-g t}
        F = eb.exppoly_integrate0(f)
        val, _ = quad(lambda u: u * np.exp(-G * u), 0.0, 1.0, epsabs=1e-14)
        assert F(1.0) == pytest.approx(val, abs=1e-12)
        closed = (-1 / G - 1 / G ** 2) * np.exp(-G) + 1 / G ** 2
        assert F(1.0) == pytest.approx(closed, abs=1e-14)

    def test_integral_vanishes_at_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            terms = {(int(k), int(m)): complex(rng.normal(), rng.normal())
                     for k in rng.integers(0, 6, 3)
                     for m in rng.integers(-1, 2, 2)}
            F = poly(terms).integrate0()
            assert abs(F(0.0)) < 1e-25

    def test_derivative_inverts_integration(self):
        f = poly({(2, -1): 1.5 - 0.5j, (0, 1): 2.0j, (3, 0): -1.0})
        diff = f.integrate0().derivative() + f * (-1.0)
        assert diff.max_abs_coeff() < 1e-30

    def test_mshift(self):
        f = poly({(1, 0): 2.0})
        g = f.mshift(1)
        t = 0.7
        assert g(t) == pytest.approx(2.0 * t * np.exp(G * t), rel=1e-14)

    def test_addition_merges_terms(self):
        f = poly({(1, 0): 2.0}) + poly({(1, 0): -2.0, (0, 0): 1.0})
        assert len(f) == 1 and f(5.0) == pytest.approx(1.0)

    def test_gamma_mismatch(self):
        with pytest.raises(ValueError):
            poly({(0, 0): 1.0}, gamma=0.8) + poly({(0, 0): 1.0}, gamma=1.0)

    def test_prune(self):
        f = poly({(0, 0): 1.0, (1, 0): 1e-20})
        assert len(f.prune(1e-15)) == 1
        assert len(f.prune(0.0)) == 2

    def test_monomial_terms_round_trip(self):
        f = poly({(3, -1): 2.0 + 1.0j, (1, 1): -0.5})
        t = 1.1
        val = sum(c * t ** k * np.exp(m * G * t)
                  for c, k, m in f.monomial_terms())
        assert val == pytest.approx(f(t), rel=1e-13)

    def test_cancellation_estimate(self):
        mild = poly({(0, 0): 1.0})
        assert mild.cancellation(2.0) == pytest.approx(1.0)
        harsh = poly({(0, 0): 1.0, (0, 1): -1.0})  # 1 - e^{gt} ~ small at t<<1
        assert harsh.cancellation(1e-6) > 1e5


class TestLowOrders:
    @pytest.fixture(scope="class")
    def oa(self):
        p = eb.preset_params("fig3e")  # t1=0.4 t2=0.5 g=0.8 L=8 x0=6
        return eb.solve_perturbation(p, 3)

    def test_order_zero_seed(self, oa):
        assert eb.amplitude(oa, 6, "A", 0.0, upto=0) == 1.0
        assert eb.amplitude(oa, 6, "B", 2.0, upto=0) == 0.0

    def test_first_order_onsite_jump(self, oa):
        t = 1.0
        expect = -1j * 0.4 * (1 - np.exp(-G * t)) / G
        got = eb.amplitude(oa, 6, "B", t, upto=1)
        assert got == pytest.approx(expect, abs=1e-14)
        assert abs(got - (-0.27533551794138925j)) < 1e-10

    def test_first_order_neighbor_hops(self, oa):
        # Coefficients of motion give +t2/2 * t on the right neighbor and
        # -t2/2 * t on the left one.
        assert eb.amplitude(oa, 7, "A", 1.0, upto=1) == pytest.approx(0.25)
        assert eb.amplitude(oa, 5, "A", 1.0, upto=1) == pytest.approx(-0.25)

    def test_support_growth(self, oa):
        for l, sites in enumerate(oa.orders):
            for site in sites:
                assert abs(site.cell - 6) <= l

    def test_first_order_support(self, oa):
        assert eb.amplitude(oa, 4, "A", 3.0, upto=1) == 0.0
        assert eb.amplitude(oa, 8, "B", 3.0, upto=1) == 0.0

    def test_parity_is_exact(self, oa):
        for maps in oa.orders:
            for site, f in maps.items():
                for c in f.scaled.values():
                    if site.sub == "A":
                        assert c.imag == 0
                    else:
                        assert c.real == 0

    def test_amplitude_parity_at_runtime(self, oa):
        for t in (0.3, 1.7, 4.0):
            assert eb.amplitude(oa, 5, "A", t).imag == 0.0
            assert eb.amplitude(oa, 6, "B", t).real == 0.0

    def test_stationary_solution_at_order_zero(self):
        p = eb.preset_params("fig3e")
        oa0 = eb.solve_perturbation(p, 0)
        assert eb.amplitude(oa0, 6, "A", 7.7) == 1.0

    def test_engine_requires_loss(self):
        p = eb.LatticeParams(0.4, 0.5, 0.0, length=4, x0=2)
        with pytest.raises(ValueError):
            eb.solve_perturbation(p, 2)


class TestRecursionIdentity:
    def test_derivative_matches_rhs(self):
        p = eb.preset_params("fig3f")
        oa = eb.solve_perturbation(p, 4)
        for l in (1, 2, 4):
            for site, f in oa.orders[l].items():
                rhs = ExpPoly(p.gamma)
                for src, coup in eb.in_neighbors(site, p):
                    prev = oa.orders[l - 1].get(src)
                    if prev is None:
                        continue
                    shift = 0 if site.sub == src.sub else (
                        1 if site.sub == "B" else -1)
                    rhs = rhs + prev.mshift(shift) * (-1j * coup)
                diff = f.derivative() + rhs * (-1.0)
                assert diff.max_abs_coeff() < 1e-12 * max(
                    1.0, f.max_abs_coeff())


class TestHighOrder:
    def test_series_matches_integration_weak_hopping(self, fig3_engines):
        oa, traj = fig3_engines["fig3e"]
        times = np.arange(0.0, 10.0001, 0.05)
        idx = (times / 0.002).round().astype(int)
        worst = 0.0
        for cell in range(1, 9):
            for sub in "AB":
                pred = eb.amplitude(oa, cell, sub, times)
                ref = traj.states[idx, 2 * (cell - 1) + (sub == "B")]
                worst = max(worst, np.abs(pred - ref).max())
        assert worst < 1e-6  # frozen: measured 1.0e-13

    def test_series_matches_integration_strong_hopping(self, fig3_engines):
        oa, traj = fig3_engines["fig3f"]
        times = np.arange(0.0, 10.0001, 0.05)
        idx = (times / 0.002).round().astype(int)
        worst = 0.0
        for cell in range(1, 9):
            for sub in "AB":
                pred = eb.amplitude(oa, cell, sub, times)
                ref = traj.states[idx, 2 * (cell - 1) + (sub == "B")]
                worst = max(worst, np.abs(pred - ref).max())
        assert worst < 1e-5  # frozen: measured 3.1e-7 (series remainder)

    def test_partial_sums_converge(self, fig3_engines):
        oa, traj = fig3_engines["fig3e"]
        times = np.arange(0.0, 5.0001, 0.1)
        idx = (times / 0.002).round().astype(int)
        ref = traj.states[idx, 1]
        resid = []
        for upto in (10, 20, 30, 40):
            pred = eb.amplitude(oa, 1, "B", times, upto=upto)
            resid.append(np.abs(pred - ref).max())
        assert resid[0] > resid[1] > resid[2] >= resid[3]
        assert resid[3] < 1e-10

    def test_cancellation_monitor_reports_blowup(self, fig3_engines):
        oa, _ = fig3_engines["fig3f"]
        assert oa.worst_cancellation(10.0) > 1e12


class TestFinalStep:
    def test_neighbor_sum_reproduces_amplitude(self, fig3_engines):
        for name in ("fig3e", "fig3f"):
            oa, _ = fig3_engines[name]
            p = oa.params
            times = np.linspace(0.0, 5.0, 11)
            total = np.zeros(len(times), complex)
            for src, _ in eb.in_neighbors(Site(1, "B"), p):
                total += eb.final_step_amplitude(oa, Site(1, "B"), src, times)
            direct = eb.amplitude(oa, 1, "B", times)
            assert np.abs(total - direct).max() < 1e-12

    def test_closure_in_coefficient_space(self, fig3_engines):
        oa, _ = fig3_engines["fig3f"]
        p = oa.params
        total = ExpPoly(p.gamma)
        for src, _ in eb.in_neighbors(Site(1, "B"), p):
            total = total + final_step_poly(oa, Site(1, "B"), src)
        diff = total + oa.psi_poly(1, "B") * (-1.0)
        assert diff.max_abs_coeff() < 1e-12 * oa.psi_poly(1, "B").max_abs_coeff()

    def test_lossy_route_is_subdominant(self, fig3_engines):
        # the hop arriving from the neighboring lossy site contributes far
        # less than the two non-decaying routes
        oa, _ = fig3_engines["fig3e"]
        times = np.arange(0.0, 10.0001, 0.1)
        via_b = eb.final_step_amplitude(oa, Site(1, "B"), Site(2, "B"), times)
        via_a = (eb.final_step_amplitude(oa, Site(1, "B"), Site(1, "A"), times)
                 + eb.final_step_amplitude(oa, Site(1, "B"), Site(2, "A"),
                                           times))
        assert np.abs(via_b).max() < 0.5 * np.abs(via_a).max()

    def test_non_neighbor_rejected(self, fig3_engines):
        oa, _ = fig3_engines["fig3e"]
        with pytest.raises(ValueError):
            eb.final_step_amplitude(oa, Site(1, "B"), Site(3, "A"), 1.0)

    def test_decoupled_neighbor_not_listed(self):
        p = eb.LatticeParams(0.4, 0.0, 0.8, length=4, x0=1)
        oa = eb.solve_perturbation(p, 6)
        assert eb.in_neighbors(Site(1, "B"), p) == [(Site(1, "A"), 0.4)]
        with pytest.raises(ValueError):
            eb.final_step_amplitude(oa, Site(1, "B"), Site(2, "B"), 1.0)


class TestMainPath:
    def test_zero_at_time_zero(self, fig3_engines):
        oa, _ = fig3_engines["fig3e"]
        assert eb.main_path_edge(oa, 0.0) == 0.0

    def test_exact_when_only_one_route(self):
        p = eb.LatticeParams(0.4, 0.0, 0.8, length=4, x0=1)
        oa = eb.solve_perturbation(p, 12)
        times = np.linspace(0.0, 6.0, 13)
        mp = eb.main_path_edge(oa, times)
        full = eb.amplitude(oa, 1, "B", times)
        assert np.abs(mp - full).max() < 1e-15

    def test_frozen_fit_tolerances(self, fig3_engines):
        times = np.arange(0.0, 10.0001, 0.05)
        frozen = {"fig3e": 1.5e-2, "fig3f": 3.0e-2}
        for name, tol in frozen.items():
            oa, _ = fig3_engines[name]
            mp = eb.main_path_edge(oa, times)
            full = eb.amplitude(oa, 1, "B", times)
            assert np.abs(mp - full).max() < tol

    def test_discrepancy_is_the_lossy_route(self, fig3_engines):
        # dropping the hop from the lossy neighbor is the only approximation
        oa, _ = fig3_engines["fig3e"]
        times = np.arange(0.0, 10.0001, 0.5)
        mp = eb.main_path_edge(oa, times)
        full = eb.amplitude(oa, 1, "B", times)
        via_b = eb.final_step_amplitude(oa, Site(1, "B"), Site(2, "B"), times)
        assert np.abs((full - mp) - via_b).max() < 1e-12

    def test_relative_fit_over_burst_window(self):
        # where the edge peak actually develops the approximation tracks the
        # full curve to a tenth of the peak
        p = eb.preset_params("fig3e")
        oa = eb.solve_perturbation(p, 40)
        times = np.arange(0.0, 14.0001, 0.05)
        mp = eb.main_path_edge(oa, times)
        full = eb.amplitude(oa, 1, "B", times)
        assert np.abs(mp - full).max() < 0.1 * np.abs(full).max()


class TestConvergenceWindow:
    def test_order_forty_covers_preset_window(self, fig3_engines):
        for name in ("fig3e", "fig3f"):
            oa, traj = fig3_engines[name]
            assert eb.convergence_window(oa, traj, 1e-2) >= 10.0

    def test_first_order_fails_early(self, fig3_engines):
        oa, traj = fig3_engines["fig3e"]
        oa1 = eb.OrderedAmplitudes(oa.params, oa.orders[:2])
        assert eb.convergence_window(oa1, traj, 1e-2) < 1.0

    def test_window_grows_with_order(self, fig3_engines):
        oa, traj = fig3_engines["fig3e"]
        windows = [eb.convergence_window(
            eb.OrderedAmplitudes(oa.params, oa.orders[:l + 1]), traj, 1e-2)
            for l in (5, 15, 40)]
        assert windows[0] <= windows[1] <= windows[2]

    def test_infinite_tolerance(self, fig3_engines):
        oa, traj = fig3_engines["fig3e"]
        assert eb.convergence_window(oa, traj, np.inf) == traj.times[-1]

    def test_negative_tolerance(self, fig3_engines):
        oa, traj = fig3_engines["fig3e"]
        with pytest.raises(ValueError):
            eb.convergence_window(oa, traj, -1.0)


class TestOverflowGuard:
    def test_is_finite_detects_bad_coefficients(self):
        f = poly({(0, 0): 1.0})
        assert f.is_finite()
        f.scaled[(1, 0)] = f.scaled[(0, 0)] * float("inf")
        assert not f.is_finite()
