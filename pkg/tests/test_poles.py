import math

import numpy as np
import pytest
from scipy.integrate import simpson

from jmscatter.errors import NumericalError
from jmscatter.jmatrix import (
    Rank2Params,
    SeparablePotential,
    build_truncated_hamiltonian,
    rank2_phase_curve,
    rank2_phase_shift,
)
from jmscatter.oscbasis import kinetic_matrix, radial_function
from jmscatter.poles import (
    beta_scan,
    bound_wavefunction,
    delta_derivative,
    find_bound_poles,
    find_resonance,
    rms_radius,
)

from conftest import HW, E_I, TRIPLET_V11_HW


def _deep_params(basis):
    v = np.array([[-3.0, 0.4], [0.4, -1.0]]) * HW
    return Rank2Params.from_potential(SeparablePotential(basis, v))


@pytest.fixture(scope="module")
def deuteron(triplet_params):
    return find_bound_poles(triplet_params)[0]


@pytest.fixture(scope="module")
def deep_poles(basis):
    return find_bound_poles(_deep_params(basis), window=(-2500.0, -1e-3))


class TestDeuteronPole:
    def test_energy_frozen(self, deuteron):
        assert deuteron.energy == pytest.approx(-2.2249634970079812, abs=1e-9)

    def test_momentum_consistent(self, deuteron):
        kappa = math.sqrt(-2.0 * deuteron.energy / HW)
        assert deuteron.momentum == pytest.approx(1j * kappa, rel=1e-14)

    def test_residual_and_tail(self, deuteron):
        assert deuteron.residual <= 1e-10
        assert abs(deuteron.coefficients[-1]) <= 1e-8
        assert np.linalg.norm(deuteron.coefficients) == pytest.approx(1.0, abs=1e-12)

    def test_rms_half_value(self, deuteron):
        assert deuteron.rms_half == pytest.approx(1.8790618393390863, abs=1e-6)
        assert deuteron.rms_relative == pytest.approx(2.0 * deuteron.rms_half, rel=1e-14)

    def test_single_node_near_origin(self, deuteron, basis):
        r = np.linspace(1e-3, 25.0, 4000)
        u = radial_function(basis, deuteron.coefficients, r)
        flips = np.nonzero(np.diff(np.sign(u)) != 0)[0]
        assert flips.size == 1
        assert 0.1 < r[flips[0]] < 2.0

    def test_orthogonal_to_isolated_state(self, deuteron):
        # the decoupled level lives on index 0 alone
        assert deuteron.coefficients[0] == 0.0

    def test_row_equations(self, deuteron, triplet_ham, basis):
        # the eigenvalue rows of the infinite tridiagonal system, checked
        # with banded arithmetic (the full matrix would be 8193^2)
        x = deuteron.coefficients
        e = deuteron.energy
        n = np.arange(x.size, dtype=float)
        diag = 0.5 * (2.0 * n + 1.5) * HW
        off = -0.5 * np.sqrt((n[:-1] + 1.0) * (n[:-1] + 1.5)) * HW
        resid = (diag - e) * x
        resid[:-1] += off * x[1:]
        resid[1:] += off * x[:-1]
        resid[:2] += triplet_ham.potential.v @ x[:2]
        assert np.max(np.abs(resid[:-1])) < 1e-9 * HW * np.max(np.abs(x))


class TestPoleSearch:
    def test_free_potential_has_none(self, basis):
        params = Rank2Params(basis, 0.75 * HW, 0.0, 0.0)
        assert find_bound_poles(params) == []

    def test_singlet_unbound(self, singlet_params):
        assert find_bound_poles(singlet_params) == []

    def test_mesh_refinement_stable(self, triplet_params):
        coarse = find_bound_poles(triplet_params, mesh_points=200)
        fine = find_bound_poles(triplet_params, mesh_points=2000)
        assert len(coarse) == len(fine) == 1
        assert coarse[0].energy == pytest.approx(fine[0].energy, abs=1e-9)

    def test_window_validation(self, triplet_params):
        with pytest.raises(ValueError):
            find_bound_poles(triplet_params, window=(-1.0, 5.0))
        with pytest.raises(ValueError):
            find_bound_poles(triplet_params, window=(-1.0, -2.0))

    def test_edge_root_warns(self, triplet_params):
        with pytest.warns(UserWarning, match="outermost"):
            find_bound_poles(triplet_params, window=(-2.2254, -2.2245), mesh_points=3)

    def test_deep_pair(self, deep_poles):
        assert len(deep_poles) == 2
        assert deep_poles[0].energy == pytest.approx(-1133.2309472, abs=1e-5)
        assert deep_poles[1].energy == pytest.approx(-23.3801712, abs=1e-5)

    def test_rms_invariant_under_decoupled_level(self, basis, triplet_params):
        moved = Rank2Params(basis, 1234.5, 0.0, TRIPLET_V11_HW * HW)
        a = find_bound_poles(triplet_params)[0]
        b = find_bound_poles(moved)[0]
        assert abs(a.energy - b.energy) < 1e-10
        assert abs(a.rms_half - b.rms_half) < 1e-10


class TestDiagonalizationCrossCheck:
    def test_richardson_extrapolation_agrees(self, basis, deep_poles):
        # direct variational eigenvalues at three basis sizes, accelerated;
        # this route never touches the pole-function machinery
        v = np.array([[-3.0, 0.4], [0.4, -1.0]]) * HW
        for pole in deep_poles:
            es = []
            for size in (100, 200, 400):
                h = kinetic_matrix(basis, size)
                h[:2, :2] += v
                ev = np.linalg.eigvalsh(h)
                es.append(float(ev[np.argmin(np.abs(ev - pole.energy))]))
            e1, e2, e3 = es
            denom = (e3 - e2) - (e2 - e1)
            rich = e3 if abs(denom) < 1e-12 else e3 - (e3 - e2) ** 2 / denom
            assert rich == pytest.approx(pole.energy, abs=1e-4)


class TestWavefunction:
    def test_requested_length(self, deuteron, triplet_ham):
        x = bound_wavefunction(deuteron, triplet_ham, 16384)
        assert x.size == 16385
        assert abs(x[-1]) <= 1e-8
        assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-12)

    def test_short_tail_rejected(self, deuteron, triplet_ham):
        with pytest.raises(NumericalError):
            bound_wavefunction(deuteron, triplet_ham, 8)

    def test_minimum_length(self, deuteron, triplet_ham):
        with pytest.raises(ValueError):
            bound_wavefunction(deuteron, triplet_ham, 2)


class TestRmsRadius:
    def test_single_mode_closed_form(self, basis):
        rms, half = rms_radius([1.0, 0.0], basis)
        assert rms == pytest.approx(math.sqrt(1.5) * basis.r0, rel=1e-14)
        assert half == pytest.approx(rms / 2.0, rel=1e-15)

    def test_heavy_tail_warns(self, basis):
        x = np.zeros(30)
        x[-1] = 1.0
        with pytest.warns(UserWarning, match="tail"):
            rms_radius(x, basis)

    def test_quadrature_cross_check_deep(self, basis, deep_poles):
        pole = deep_poles[1]
        r = np.linspace(1e-6, 45.0, 120001)
        u = radial_function(basis, pole.coefficients, r)
        norm = simpson(u * u, x=r)
        rms_q = math.sqrt(simpson(r * r * u * u, x=r) / norm)
        assert abs(norm - 1.0) < 1e-8
        assert rms_q == pytest.approx(pole.rms_relative, rel=1e-8)

    def test_quadrature_cross_check_deuteron(self, basis, deuteron):
        # shallow state: thousands of modes, position-space tail to ~80 fm
        r = np.linspace(1e-6, 80.0, 120001)
        u = radial_function(basis, deuteron.coefficients, r)
        norm = simpson(u * u, x=r)
        rms_q = math.sqrt(simpson(r * r * u * u, x=r) / norm)
        assert abs(norm - 1.0) < 1e-8
        assert rms_q == pytest.approx(deuteron.rms_relative, rel=1e-8)


class TestDeltaDerivative:
    def test_matches_finite_difference(self, triplet_params):
        for e in (7.0, 60.0, 240.0):
            h = 1e-3
            fd = (rank2_phase_shift(triplet_params, e + h)
                  - rank2_phase_shift(triplet_params, e - h)) / (2.0 * h)
            assert delta_derivative(triplet_params, e) == pytest.approx(fd, rel=1e-5)

    def test_threshold_guard(self, triplet_params):
        with pytest.raises(ValueError):
            delta_derivative(triplet_params, 1e-5 * HW)


class TestResonance:
    def test_requires_coupling_and_positive_level(self, basis):
        with pytest.raises(ValueError):
            find_resonance(Rank2Params(basis, E_I, 0.0, 100.0))
        with pytest.raises(ValueError):
            find_resonance(Rank2Params(basis, -50.0, 10.0, 100.0))

    def test_narrowing_track(self, basis):
        v11 = 0.2 * HW
        prev_gap, prev_gamma = None, None
        for b_hat in (1e-2, 1e-4, 1e-6):
            params = Rank2Params(basis, E_I, b_hat * HW * HW, v11)
            e_r, gamma = find_resonance(params)
            assert gamma > 0.0
            gap = abs(e_r - E_I)
            if prev_gap is not None:
                assert gap < prev_gap
                assert gamma < prev_gamma
            prev_gap, prev_gamma = gap, gamma
        assert prev_gap < 1e-2
        assert prev_gamma < 1e-3

    def test_width_matches_phase_rise(self, basis):
        # Gamma should match the energy span of the central pi/2 rise
        params = Rank2Params(basis, E_I, 1e-3 * HW * HW, 0.2 * HW)
        e_r, gamma = find_resonance(params)
        d_r = rank2_phase_shift(params, e_r)
        lo = _phase_crossing(params, d_r - math.pi / 4.0, e_r - gamma, e_r)
        hi = _phase_crossing(params, d_r + math.pi / 4.0, e_r, e_r + gamma)
        assert hi - lo == pytest.approx(gamma, rel=0.05)


def _phase_crossing(params, target, a, b):
    from scipy.optimize import brentq
    return brentq(lambda e: rank2_phase_shift(params, e) - target, a, b, rtol=1e-12)


class TestBetaScan:
    def test_regime_validation(self, basis, triplet_params):
        grid = np.linspace(1.0, 400.0, 30)
        with pytest.raises(ValueError):
            beta_scan(triplet_params, [1e3], grid)  # v11 < 0
        with pytest.raises(ValueError):
            beta_scan(Rank2Params(basis, -10.0, 0.0, 100.0), [1e3], grid)
        good = Rank2Params(basis, E_I, 0.0, 0.2 * HW)
        with pytest.raises(ValueError):
            beta_scan(good, [1e3], grid[::-1])

    def test_tracks_and_curves(self, basis):
        params = Rank2Params(basis, E_I, 0.0, 0.2 * HW)
        betas = [0.0, 1e-2 * HW * HW, 1e-4 * HW * HW]
        grid = np.linspace(1.0, 420.0, 160)
        tracks, curves = beta_scan(params, betas, grid)
        assert len(curves) == 3 and all(c.size == grid.size for c in curves)
        assert len(tracks) == 2
        assert tracks[0].beta == betas[1] and tracks[1].beta == betas[2]
        assert tracks[1].gamma < tracks[0].gamma
        assert abs(tracks[1].e_r - E_I) < abs(tracks[0].e_r - E_I)

    def test_decoupled_curve_smooth_through_level(self, basis):
        params = Rank2Params(basis, E_I, 0.0, 0.2 * HW)
        grid = np.linspace(E_I - 2.0, E_I + 2.0, 400)
        _, curves = beta_scan(params, [0.0], grid)
        assert np.max(np.abs(np.diff(curves[0]))) < 1e-3

    def test_resonance_outside_grid(self, basis):
        params = Rank2Params(basis, E_I, 0.0, 0.2 * HW)
        with pytest.raises(NumericalError):
            beta_scan(params, [1e-4 * HW * HW], np.linspace(1.0, 50.0, 20))
