import numpy as np
import pytest
import scipy.linalg

from disordyn import (
    AndersonBox,
    DimensionError,
    DisorderRealization,
    Hamiltonian,
    LatticeSpec,
    StateVector,
    TimeGrid,
    build_realization_hamiltonian,
    ensemble_average,
    evolve_unitary,
    gaussian_wavepacket,
    purity,
    purity_series,
    sample_realization,
)


class TestTimeGrid:
    def test_regular(self):
        g = TimeGrid.regular(0.0, 1.0, 0.25)
        assert np.allclose(g.times, [0, 0.25, 0.5, 0.75, 1.0])
        assert len(g) == 5

    @pytest.mark.parametrize(
        "times", [[], [-0.1, 0.5], [0.0, 0.5, 0.5], [0.5, 0.2], [0.0, np.inf]]
    )
    def test_invalid(self, times):
        with pytest.raises(ValueError):
            TimeGrid(np.asarray(times, dtype=float))

    def test_index_of(self):
        g = TimeGrid.regular(0.0, 1.0, 0.1)
        assert g.index_of(0.5) == 5
        with pytest.raises(KeyError):
            g.index_of(0.55)


class TestEvolveUnitary:
    def test_t0_returned_exactly(self):
        lat = LatticeSpec(16)
        psi = gaussian_wavepacket(lat, 7.5, 2.0)
        h = build_realization_hamiltonian(lat, sample_realization(AndersonBox(3.0), lat, 0, 0))
        out = evolve_unitary(h, psi, TimeGrid(np.array([0.0, 0.3])))
        assert np.array_equal(out[0].amplitudes, psi.amplitudes)

    def test_diagonal_hamiltonian_phase_evolution(self):
        # zero-hopping Hamiltonian: basis states only pick up phases
        eps = np.array([0.3, -1.2, 2.0, 0.7])
        h = Hamiltonian(diagonal=eps, off_diagonal=0.0)
        psi = StateVector(np.eye(4)[2])
        t = 0.8
        (out,) = evolve_unitary(h, psi, TimeGrid(np.array([t])))
        expected = np.eye(4)[2] * np.exp(-1j * eps[2] * t)
        assert np.allclose(out.amplitudes, expected, atol=1e-12)
        assert np.allclose(out.probabilities, psi.probabilities, atol=1e-14)

    def test_matches_expm_oracle(self):
        # independent scaling-and-squaring matrix exponential
        lat = LatticeSpec(64)
        psi = gaussian_wavepacket(lat, 31.5, 4.0)
        for eps in (np.zeros(64), sample_realization(AndersonBox(5.0), lat, 3, 1).onsite):
            h = build_realization_hamiltonian(lat, DisorderRealization(eps, "o"))
            (out,) = evolve_unitary(h, psi, TimeGrid(np.array([1.0])))
            ref = scipy.linalg.expm(-1j * h.to_dense()) @ psi.amplitudes
            assert np.max(np.abs(out.amplitudes - ref)) < 1e-9

    def test_unit_norm_outputs(self):
        lat = LatticeSpec(32)
        psi = gaussian_wavepacket(lat, 15.5, 3.0)
        h = build_realization_hamiltonian(lat, sample_realization(AndersonBox(10.0), lat, 1, 0))
        for s in evolve_unitary(h, psi, TimeGrid.regular(0.0, 2.0, 0.5)):
            assert abs(np.linalg.norm(s.amplitudes) - 1.0) < 1e-10

    def test_dimension_mismatch(self):
        h = Hamiltonian(diagonal=np.zeros(4), off_diagonal=-1.0)
        with pytest.raises(DimensionError):
            evolve_unitary(h, StateVector(np.eye(5)[0]), TimeGrid(np.array([0.0])))


class TestEnsembleAverage:
    lat = LatticeSpec(32)
    psi = gaussian_wavepacket(lat, 15.5, 3.0)
    grid = TimeGrid(np.array([0.0, 0.1, 0.3]))

    def test_k1_stays_pure(self):
        res = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 1, 42)
        for p in purity_series(res.states):
            assert abs(p - 1.0) < 1e-10

    def test_t0_exact_projector(self):
        res = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 16, 42)
        rho0 = np.outer(self.psi.amplitudes, self.psi.amplitudes.conj())
        assert np.array_equal(res.states[0].elements, rho0)

    def test_repeated_seed_copies_stay_pure(self):
        res = ensemble_average(
            self.lat, AndersonBox(10.0), self.psi, self.grid, 8, 42,
            realization_indices=[5] * 8,
        )
        for p in purity_series(res.states):
            assert abs(p - 1.0) < 1e-10

    def test_trace_and_positivity(self):
        res = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 24, 7)
        for s in res.states:
            assert abs(np.trace(s.elements) - 1.0) < 1e-10
            assert np.linalg.eigvalsh(s.elements)[0] > -1e-10
            assert purity(s) <= 1.0 + 1e-10

    def test_bitwise_determinism(self):
        a = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 24, 7)
        b = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 24, 7)
        for x, y in zip(a.states, b.states):
            assert np.array_equal(x.elements, y.elements)

    def test_thread_count_does_not_change_results(self):
        a = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 23, 7, threads=1)
        b = ensemble_average(self.lat, AndersonBox(10.0), self.psi, self.grid, 23, 7, threads=4)
        for x, y in zip(a.states, b.states):
            assert np.array_equal(x.elements, y.elements)
        assert np.array_equal(a.purity_mc, b.purity_mc)

    def test_gram_purity_matches_trace_purity(self):
        # two independent routes to tr[rho^2]
        res = ensemble_average(self.lat, AndersonBox(5.0), self.psi, self.grid, 30, 3)
        assert np.allclose(res.purity_mc, purity_series(res.states), atol=1e-12)

    def test_purity_statistically_monotone(self):
        lat = LatticeSpec(64)
        psi = gaussian_wavepacket(lat, 31.5, 3.0)
        grid = TimeGrid.regular(0.0, 0.4, 0.05)
        res = ensemble_average(lat, AndersonBox(5.0), psi, grid, 100, 11)
        p, s = res.purity_mc, res.purity_sigma
        for i in range(len(p) - 1):
            assert p[i + 1] <= p[i] + 2.0 * np.hypot(s[i], s[i + 1])

    def test_k_validation(self):
        with pytest.raises(ValueError):
            ensemble_average(self.lat, AndersonBox(1.0), self.psi, self.grid, 0, 1)
        with pytest.raises(DimensionError):
            ensemble_average(
                self.lat, AndersonBox(1.0), self.psi, self.grid, 3, 1, realization_indices=[0]
            )
