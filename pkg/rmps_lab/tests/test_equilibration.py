"""
Tests for equilibration module.
"""

import math

import numpy as np
import pytest
import scipy.stats
from rmps_lab import equilibration
from rmps_lab.equilibration import (GapConditionError, SpectralHamiltonian, effective_dimension,
                                    fluctuation_cap, infinite_time_average, load_observable,
                                    min_gap_difference, pauli_z, sample_gue_hamiltonian,
                                    sample_times, site_operator, time_average_fluctuation,
                                    time_fluctuation_exact)
from rmps_lab.haar_rmps import RngStream, sample_haar_unitary
from rmps_lab.tensor_core import CapacityExceeded

# Levels 0, 1, 3: gaps 1, 2, 3 are all distinct
H3 = np.diag([0.0, 1.0, 3.0])
COUPLING = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def random_state(dim, seed):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


class TestSpectralHamiltonian:
    """Tests for the non-degenerate-gaps check."""

    def test_min_gap_difference(self):
        """Levels 0, 1, 3 have gap differences of at least 1; two levels have none."""
        assert min_gap_difference([0.0, 1.0, 3.0]) == pytest.approx(1.0)
        assert min_gap_difference([0.0, 1.0]) == math.inf

    def test_degenerate_levels(self):
        """Repeated levels fail the spacing check."""
        with pytest.raises(GapConditionError, match="level spacing"):
            SpectralHamiltonian(np.array([0.0, 0.0, 1.0]), np.eye(3), 1e-9)

    def test_degenerate_gaps(self):
        """Equally spaced levels repeat the gap E_1 - E_0 = E_2 - E_1."""
        with pytest.raises(GapConditionError, match="gap difference"):
            SpectralHamiltonian.from_matrix(np.diag([0.0, 1.0, 2.0]))

    def test_shape_mismatch(self):
        """Eigenvalues and eigenvectors must agree in size."""
        with pytest.raises(ValueError):
            SpectralHamiltonian(np.array([0.0, 1.0]), np.eye(3), 1e-9)

    def test_from_matrix_round_trip(self):
        """from_matrix diagonalizes and matrix() rebuilds H."""
        H = SpectralHamiltonian.from_matrix(H3)
        assert np.allclose(H.eigenvalues, [0.0, 1.0, 3.0])
        assert np.allclose(H.matrix(), H3)

    def test_single_level(self):
        """A one-level Hamiltonian is accepted."""
        assert SpectralHamiltonian.from_matrix(np.array([[2.0]])).dim == 1

    def test_to_eigenbasis_shape(self):
        """Operators of the wrong size are rejected."""
        H = SpectralHamiltonian.from_matrix(H3)
        with pytest.raises(ValueError):
            H.to_eigenbasis(np.eye(2))


class TestGue:
    """Tests for random Hamiltonians."""

    def test_hermitian_and_deterministic(self):
        """Draws are Hermitian, non-degenerate and fixed by the stream."""
        a = sample_gue_hamiltonian(8, RngStream(4))
        b = sample_gue_hamiltonian(8, RngStream(4))
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        M = a.matrix()
        assert np.allclose(M, M.conj().T)
        assert np.all(np.diff(a.eigenvalues) > 0)

    def test_unitarily_invariant(self):
        """V^dagger H V keeps the spectrum of H and the entry distribution of the ensemble."""
        V = sample_haar_unitary(3, RngStream(99))
        first = sample_gue_hamiltonian(3, RngStream(0))
        assert np.allclose(np.linalg.eigvalsh(V.conj().T @ first.matrix() @ V), first.eigenvalues)

        plain = np.array([sample_gue_hamiltonian(3, RngStream(s)).matrix() for s in range(1500)])
        rotated = np.array([V.conj().T @ sample_gue_hamiltonian(3, RngStream(5000 + s)).matrix() @ V
                            for s in range(1500)])
        for entry in (lambda M: M[:, 0, 0].real, lambda M: M[:, 0, 1].real,
                      lambda M: np.abs(M[:, 1, 2])):
            assert scipy.stats.ks_2samp(entry(plain), entry(rotated)).pvalue > 0.001

    def test_invalid_dim(self):
        """Dimension 0 is rejected."""
        with pytest.raises(ValueError):
            sample_gue_hamiltonian(0, RngStream(0))

    def test_cap(self):
        """Dimensions past the dense cap raise CapacityExceeded."""
        with pytest.raises(CapacityExceeded):
            sample_gue_hamiltonian(equilibration.HAMILTONIAN_CAP + 1, RngStream(0))

    def test_gives_up(self, monkeypatch):
        """Persistent gap failures surface as GapConditionError."""
        def always_degenerate(cls, H, gap_tol=None):
            raise GapConditionError("degenerate")
        monkeypatch.setattr(SpectralHamiltonian, "from_matrix", classmethod(always_degenerate))
        with pytest.raises(GapConditionError, match="3 attempts"):
            sample_gue_hamiltonian(4, RngStream(0), max_attempts=3)


class TestFluctuations:
    """Tests for effective dimension and time fluctuations."""

    def test_effective_dimension_extremes(self):
        """An eigenstate has D_eff = 1, the uniform superposition D_eff = dim."""
        H = SpectralHamiltonian.from_matrix(H3)
        assert effective_dimension(np.array([0.0, 1.0, 0.0]), H) == pytest.approx(1.0)
        assert effective_dimension(np.ones(3) / math.sqrt(3), H) == pytest.approx(3.0)

    def test_unnormalized_rejected(self):
        """Unnormalized states are rejected."""
        H = SpectralHamiltonian.from_matrix(H3)
        with pytest.raises(ValueError, match="normalized"):
            effective_dimension(np.ones(3), H)

    def test_infinite_time_average_eigenstate(self):
        """An eigenstate's average is its diagonal element."""
        H = SpectralHamiltonian.from_matrix(H3)
        A = np.diag([0.5, -1.0, 2.0])
        assert infinite_time_average(np.array([0.0, 0.0, 1.0]), H, A) == pytest.approx(2.0)

    def test_two_level_fluctuation(self):
        """(|0> + |1>)/sqrt2 under the 0-1 coupling oscillates as cos t."""
        H = SpectralHamiltonian.from_matrix(H3)
        psi = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
        assert time_fluctuation_exact(psi, H, COUPLING) == pytest.approx(0.5)
        assert infinite_time_average(psi, H, COUPLING) == pytest.approx(0.0, abs=1e-14)
        times = 2 * np.pi * np.arange(1000) / 1000
        assert time_average_fluctuation(psi, H, COUPLING, times) == pytest.approx(0.5, abs=1e-12)

    def test_chunking(self):
        """The time chunk size does not change the result."""
        H = sample_gue_hamiltonian(6, RngStream(2))
        psi = random_state(6, seed=1)
        A = np.kron(pauli_z(2), np.eye(3))
        times = sample_times(H, 50, RngStream(3))
        assert time_average_fluctuation(psi, H, A, times, chunk=7) == pytest.approx(
            time_average_fluctuation(psi, H, A, times))

    def test_time_average_converges(self):
        """Long-time sampling approaches the exact infinite-time fluctuation."""
        H = sample_gue_hamiltonian(8, RngStream(12))
        psi = random_state(8, seed=2)
        A = site_operator(pauli_z(2), 1, 3)
        exact = time_fluctuation_exact(psi, H, A)
        sampled = time_average_fluctuation(psi, H, A, sample_times(H, 20000, RngStream(13)))
        assert sampled == pytest.approx(exact, rel=0.1)

    def test_fluctuation_below_caps(self):
        """Delta A_inf is at most max_{j != k} |A_jk|^2 and at most ||A||^2 / D_eff."""
        for seed in range(5):
            H = sample_gue_hamiltonian(8, RngStream(seed))
            psi = random_state(8, seed)
            A = site_operator(pauli_z(2), seed % 3, 3)
            value = time_fluctuation_exact(psi, H, A)
            assert value <= fluctuation_cap(H, A) + 1e-14
            norm_sq = np.max(np.abs(np.linalg.eigvalsh(A))) ** 2
            assert value <= norm_sq / effective_dimension(psi, H) + 1e-14

    def test_fluctuation_cap_is_tight(self):
        """An equal two-level superposition reaches half the off-diagonal cap."""
        H = SpectralHamiltonian.from_matrix(H3)
        psi = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
        assert fluctuation_cap(H, COUPLING) == pytest.approx(1.0)
        assert time_fluctuation_exact(psi, H, COUPLING) == pytest.approx(
            0.5 * fluctuation_cap(H, COUPLING))

    def test_sample_times_window(self):
        """Sample times fall inside the requested window."""
        H = SpectralHamiltonian.from_matrix(H3)
        times = sample_times(H, 100, RngStream(1), window_scale=10.0)
        assert times.shape == (100,)
        assert np.all((0 <= times) & (times <= 10.0))

    def test_no_times(self):
        """An empty time list is rejected."""
        H = SpectralHamiltonian.from_matrix(H3)
        with pytest.raises(ValueError):
            time_average_fluctuation(np.array([1.0, 0.0, 0.0]), H, COUPLING, [])


class TestObservables:
    """Tests for observable helpers."""

    def test_pauli_z(self):
        """Generalized Pauli-Z is traceless with unit operator norm."""
        Z = pauli_z(3)
        assert np.trace(Z) == 0
        assert np.max(np.abs(np.linalg.eigvalsh(Z))) == 1
        with pytest.raises(ValueError):
            pauli_z(1)

    def test_site_operator(self):
        """Site operators are identity-padded Kronecker products."""
        Z = pauli_z(2)
        assert np.allclose(site_operator(Z, 1, 2), np.kron(np.eye(2), Z))
        assert site_operator(Z, 0, 3).shape == (8, 8)
        with pytest.raises(ValueError):
            site_operator(Z, 3, 3)

    def test_load_named(self):
        """pauli-z is a named observable."""
        assert np.array_equal(load_observable("pauli-z", 2), pauli_z(2))

    def test_load_npy(self, tmp_path):
        """Observables load from .npy files."""
        path = tmp_path / "x.npy"
        np.save(path, np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(load_observable(path, 2), [[0, 1], [1, 0]])

    def test_load_text(self, tmp_path):
        """Observables load from whitespace-separated text."""
        path = tmp_path / "x.txt"
        path.write_text("1 0 0\n0 -1 0\n0 0 0\n")
        O = load_observable(str(path), 3)
        assert np.isrealobj(O)
        assert np.allclose(O, pauli_z(3))

    def test_load_wrong_shape(self, tmp_path):
        """A matrix of the wrong size is rejected."""
        path = tmp_path / "x.txt"
        path.write_text("1 0\n0 -1\n")
        with pytest.raises(ValueError, match="shape"):
            load_observable(path, 3)

    def test_load_not_hermitian(self, tmp_path):
        """Non-Hermitian matrices are rejected."""
        path = tmp_path / "x.npy"
        np.save(path, np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(ValueError, match="Hermitian"):
            load_observable(path, 2)

    def test_load_missing(self):
        """A name that is neither known nor a file is rejected."""
        with pytest.raises(ValueError):
            load_observable("no-such-observable", 2)
