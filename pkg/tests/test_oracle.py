import math

import numpy as np
import pytest
from scipy.integrate import simpson

from jmscatter.jmatrix import SeparablePotential, build_truncated_hamiltonian, phase_shift
from jmscatter.oracle import MomentumGrid, build_grid, momentum_form_factor, solve_tmatrix
from jmscatter.oscbasis import form_factor

from conftest import HW, random_symmetric


class TestMomentumGrid:
    def test_build_panels(self):
        grid = build_grid(1.0, 10.0, 64)
        assert grid.nodes.size == 192
        assert np.all(grid.weights > 0.0)
        assert np.all(np.diff(grid.nodes) > 0.0)
        assert grid.nodes[0] > 0.0 and grid.nodes[-1] < 10.0
        assert grid.weights.sum() == pytest.approx(10.0, rel=1e-12)

    def test_k0_must_fit(self):
        with pytest.raises(ValueError):
            build_grid(6.0, 10.0, 64)

    def test_validation(self):
        nodes = np.linspace(0.1, 9.9, 64)
        w = np.full(64, 0.1)
        with pytest.raises(ValueError):
            MomentumGrid(nodes[:10], w[:10], 1.0, 10.0)
        with pytest.raises(ValueError):
            MomentumGrid(nodes, w, 11.0, 10.0)
        with pytest.raises(ValueError):
            MomentumGrid(nodes, -w, 1.0, 10.0)


class TestMomentumFormFactor:
    def test_sine_transform_oracle(self, basis):
        # direct sqrt(2/pi) int sin(kr) u_n(r) dr, per-mode, fixes the phase
        r = np.linspace(1e-7, 18.0, 120001)
        for n in range(4):
            u = form_factor(basis, n, r)
            for k in (0.4, 1.0, 2.6):
                direct = math.sqrt(2.0 / math.pi) * simpson(np.sin(k * r) * u, x=r)
                val = float(momentum_form_factor(basis, n, k))
                assert val == pytest.approx(direct, abs=1e-8)

    def test_unit_norm_in_k(self, basis):
        k = np.linspace(1e-7, 30.0, 200001)
        for n in (0, 3, 8):
            f = momentum_form_factor(basis, n, k)
            assert simpson(f * f, x=k) == pytest.approx(1.0, abs=1e-9)

    def test_vanishes_at_origin(self, basis):
        assert float(momentum_form_factor(basis, 5, 0.0)) == 0.0

    def test_rejects_negative_n(self, basis):
        with pytest.raises(ValueError):
            momentum_form_factor(basis, -1, 1.0)


class TestSolveTmatrix:
    def test_free_zero(self, basis):
        pot = SeparablePotential(basis, np.zeros((2, 2)))
        assert abs(solve_tmatrix(pot, 25.0)) < 1e-12

    def test_energy_domain(self, basis):
        pot = SeparablePotential(basis, [[-100.0]])
        with pytest.raises(ValueError):
            solve_tmatrix(pot, 0.0)
        with pytest.raises(ValueError):
            solve_tmatrix(pot, -3.0)
        # k0 above the panel design range
        e_too_high = 0.6 * (20.0 / basis.r0) ** 2 * basis.mass_constant
        with pytest.raises(ValueError):
            solve_tmatrix(pot, e_too_high)

    def test_rank1_agrees_with_algebraic_route(self, basis):
        pot = SeparablePotential(basis, [[-320.0]])
        ham = build_truncated_hamiltonian(pot)
        for e in (2.0, 30.0, 140.0):
            a = solve_tmatrix(pot, e)
            b = phase_shift(ham, e)
            assert math.remainder(a - b, math.pi) == pytest.approx(0.0, abs=1e-7)

    def test_random_rank3_agrees(self, basis, rng):
        pot = SeparablePotential(basis, random_symmetric(rng, 3, 200.0))
        ham = build_truncated_hamiltonian(pot)
        for e in (5.0, 90.0):
            a = solve_tmatrix(pot, e)
            b = phase_shift(ham, e)
            assert math.remainder(a - b, math.pi) == pytest.approx(0.0, abs=1e-7)

    def test_frozen_regressions(self, triplet_params, singlet_params):
        trip = solve_tmatrix(triplet_params.to_potential(), 5.0)
        sing = solve_tmatrix(singlet_params.to_potential(), 5.0)
        assert trip == pytest.approx(-1.3026975498845081, abs=1e-9)
        assert sing == pytest.approx(1.0557267642427683, abs=1e-9)

    def test_converges_across_fit_range(self, triplet_params):
        # every lab energy the fits use maps to a cm energy this must handle
        pot = triplet_params.to_potential()
        for e_lab in (1.0, 175.0, 349.0):
            delta = solve_tmatrix(pot, 0.5 * e_lab)
            assert math.isfinite(delta)
