"""
Tests for haar_rmps module.
"""

import numpy as np
import pytest
import scipy.stats
from rmps_lab.haar_rmps import (ALL_IDENTITY, TRACELESS_PHASE, Boundary, MpsState,
                                RmpsEnsembleConfig, RngStream, core_from_unitary, fixture_state,
                                materialize, norm_squared_tm, overlap, reduced_density,
                                reduced_density_entries,
                                sample_haar_unitaries, sample_haar_unitary, sample_rmps,
                                state_vector)
from rmps_lab.tensor_core import CapacityExceeded, DensityMatrix, partial_trace, purity_of


def brute_force_amplitudes(state):
    """psi[i1..in] = tr[A_i1 ... A_in] by explicit products."""
    d, n = state.d, state.n
    psi = np.zeros(d ** n, dtype=complex)
    for index in range(d ** n):
        digits = np.unravel_index(index, (d,) * n)
        product = np.eye(state.D, dtype=complex)
        for j, i in enumerate(digits):
            product = product @ state.cores[j][:, i, :]
        psi[index] = np.trace(product)
    return psi


class TestRngStream:
    """Tests for reproducible random streams."""

    def test_deterministic(self):
        """The same (seed, index) gives the same draws."""
        a = RngStream(42, 3).generator().standard_normal(5)
        b = RngStream(42, 3).generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        """Different indices and substreams give different draws."""
        a = RngStream(42, 3).generator().standard_normal(5)
        b = RngStream(42, 4).generator().standard_normal(5)
        c = RngStream(42, 3).substream(0).generator().standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_invalid_seed(self):
        """Seeds must fit in 64 unsigned bits."""
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(2 ** 64)


class TestHaarUnitary:
    """Tests for Haar sampling."""

    def test_unitary(self):
        """Samples are unitary."""
        U = sample_haar_unitary(6, RngStream(1))
        assert np.max(np.abs(U.conj().T @ U - np.eye(6))) < 1e-10

    def test_batched_unitaries(self):
        """Batched draws are unitary with the requested shape."""
        Us = sample_haar_unitaries(4, 10, np.random.default_rng(0))
        assert Us.shape == (10, 4, 4)
        for U in Us:
            assert np.allclose(U @ U.conj().T, np.eye(4), atol=1e-10)

    def test_zero_dimension(self):
        """Dimension 0 is rejected."""
        with pytest.raises(ValueError):
            sample_haar_unitary(0, RngStream(1))

    def test_first_moment(self):
        """E|U_00|^2 = 1/q."""
        Us = sample_haar_unitaries(4, 20000, RngStream(7).generator())
        values = np.abs(Us[:, 0, 0]) ** 2
        stderr = values.std(ddof=1) / np.sqrt(values.size)
        assert abs(values.mean() - 0.25) < 4 * stderr

    def test_u1_phase_uniform(self):
        """Haar on U(1) is a uniform phase."""
        Us = sample_haar_unitaries(1, 10000, RngStream(11).generator())
        assert np.allclose(np.abs(Us[:, 0, 0]), 1.0)
        angles = np.mod(np.angle(Us[:, 0, 0]), 2 * np.pi) / (2 * np.pi)
        assert scipy.stats.kstest(angles, "uniform").pvalue > 0.01

    def test_left_invariance(self):
        """tr[VU] and tr[U] have the same distribution for a fixed unitary V."""
        V = sample_haar_unitary(3, RngStream(21))
        left = np.einsum("ij,sji->s", V, sample_haar_unitaries(3, 4000, RngStream(22).generator()))
        plain = np.einsum("sii->s", sample_haar_unitaries(3, 4000, RngStream(23).generator()))
        for part in (np.real, np.imag):
            assert scipy.stats.ks_2samp(part(left), part(plain)).pvalue > 0.001
        assert scipy.stats.ks_2samp(np.abs(left), np.abs(plain)).pvalue > 0.001


class TestCores:
    """Tests for cores cut out of unitaries."""

    def test_identity_slicing(self):
        """U = 1 gives A_0 = 1_D and A_i = 0 otherwise."""
        core = core_from_unitary(np.eye(6), 2, 3)
        assert core.shape == (3, 2, 3)
        assert np.allclose(core[:, 0, :], np.eye(3))
        assert np.allclose(core[:, 1, :], 0)

    def test_layout(self):
        """core[b', i, b] = U[i*D + b', b]."""
        d, D = 2, 3
        U = sample_haar_unitary(d * D, RngStream(5))
        core = core_from_unitary(U, d, D)
        for bp in range(D):
            for i in range(d):
                for b in range(D):
                    assert core[bp, i, b] == U[i * D + bp, b]

    def test_shape_mismatch(self):
        """The unitary must have size d*D."""
        with pytest.raises(ValueError):
            core_from_unitary(np.eye(5), 2, 3)

    def test_not_unitary(self):
        """Non-unitary matrices are rejected."""
        with pytest.raises(ValueError):
            core_from_unitary(2 * np.eye(4), 2, 2)

    def test_isometry(self):
        """Sampled cores satisfy sum_i A_i^dagger A_i = 1."""
        state = sample_rmps(RmpsEnsembleConfig(3, 4, 2), RngStream(2))
        assert state.is_left_isometric()


class TestSampleRmps:
    """Tests for RMPS sampling and contraction."""

    def test_config_validation(self):
        """Invalid d, n, D and boundary sizes are rejected."""
        with pytest.raises(ValueError):
            RmpsEnsembleConfig(1, 3, 2)
        with pytest.raises(ValueError):
            RmpsEnsembleConfig(2, 0, 2)
        with pytest.raises(ValueError):
            RmpsEnsembleConfig(2, 3, 0)
        with pytest.raises(ValueError):
            RmpsEnsembleConfig(2, 3, 2, Boundary.open([1, 0, 0], [1, 0, 0]))

    def test_deterministic(self):
        """Fixed (seed, index) gives bit-identical cores."""
        cfg = RmpsEnsembleConfig(2, 5, 3)
        a = sample_rmps(cfg, RngStream(9, 4))
        b = sample_rmps(cfg, RngStream(9, 4))
        for x, y in zip(a.cores, b.cores):
            assert np.array_equal(x, y)

    def test_materialize_matches_brute_force(self):
        """Materialized amplitudes match explicit traces of products."""
        state = sample_rmps(RmpsEnsembleConfig(2, 4, 3), RngStream(3))
        assert np.allclose(state_vector(state), brute_force_amplitudes(state), atol=1e-12)

    def test_single_site(self):
        """n = 1 periodic gives (tr A_0, ..., tr A_{d-1})."""
        state = sample_rmps(RmpsEnsembleConfig(3, 1, 2), RngStream(4))
        expected = [np.trace(state.cores[0][:, i, :]) for i in range(3)]
        assert np.allclose(materialize(state), expected)

    def test_open_boundary(self):
        """Open chains close with <l| ... |r>."""
        D = 2
        cfg = RmpsEnsembleConfig(2, 3, D, Boundary.open([1, 0], [0.6, 0.8]))
        state = sample_rmps(cfg, RngStream(8))
        psi = state_vector(state)
        left, right = np.array([1, 0]), np.array([0.6, 0.8])
        i = (1, 0, 1)
        product = state.cores[0][:, i[0], :] @ state.cores[1][:, i[1], :] @ state.cores[2][:, i[2], :]
        assert psi[4 * 1 + 2 * 0 + 1] == pytest.approx(left @ product @ right)
        assert norm_squared_tm(state) == pytest.approx(np.vdot(psi, psi).real)

    def test_norm_transfer_matrix(self):
        """<psi|psi> via transfer operators matches the materialized norm."""
        state = sample_rmps(RmpsEnsembleConfig(2, 4, 3), RngStream(12))
        psi = state_vector(state)
        assert abs(norm_squared_tm(state) - np.vdot(psi, psi).real) < 1e-10

    def test_overlap(self):
        """The chain overlap matches the dense inner product."""
        cfg = RmpsEnsembleConfig(2, 4, 2)
        psi, phi = sample_rmps(cfg, RngStream(1)), sample_rmps(cfg, RngStream(2))
        expected = np.vdot(state_vector(psi), state_vector(phi))
        assert overlap(psi, phi) == pytest.approx(expected, abs=1e-12)

    def test_materialize_cap(self):
        """Materializing past the cap points to the transfer-matrix route."""
        state = sample_rmps(RmpsEnsembleConfig(2, 6, 2), RngStream(0))
        with pytest.raises(CapacityExceeded, match="norm_squared_tm"):
            materialize(state, cap=32)

    def test_mean_norm(self):
        """E<psi|psi> = 1 at (2, 6, 2)."""
        cfg = RmpsEnsembleConfig(2, 6, 2)
        norms = np.array([norm_squared_tm(sample_rmps(cfg, RngStream(21, i))) for i in range(3000)])
        stderr = norms.std(ddof=1) / np.sqrt(norms.size)
        assert abs(norms.mean() - 1.0) < 4 * stderr


class TestReducedDensity:
    """Tests for reduced density matrices computed on the chain."""

    def test_matches_partial_trace(self):
        """Chain reductions match partial traces of the dense state."""
        state = sample_rmps(RmpsEnsembleConfig(2, 5, 2), RngStream(6))
        full = DensityMatrix.from_vector(state_vector(state))
        for subset in ([0], [1, 3], [0, 2, 4], [4]):
            rho = reduced_density(state, subset)
            expected = partial_trace(full, [2] * 5, subset)
            assert np.allclose(rho.matrix, expected.matrix, atol=1e-12)

    def test_all_sites(self):
        """The full subset gives |psi><psi| with trace <psi|psi>."""
        state = sample_rmps(RmpsEnsembleConfig(2, 3, 3), RngStream(13))
        rho = reduced_density(state, range(3))
        assert rho.trace == pytest.approx(norm_squared_tm(state))

    def test_product_chain(self):
        """D = 1 chains are product states; one site reduces to its own vector times the other norms."""
        state = sample_rmps(RmpsEnsembleConfig(2, 3, 1), RngStream(14))
        a = state.cores[1][0, :, 0]
        rho = reduced_density(state, [1])
        scale = norm_squared_tm(state) / np.vdot(a, a).real
        assert np.allclose(rho.matrix, scale * np.outer(a, a.conj()))

    def test_out_of_range(self):
        """Sites outside the chain are rejected."""
        state = sample_rmps(RmpsEnsembleConfig(2, 3, 2), RngStream(0))
        with pytest.raises(ValueError):
            reduced_density(state, [3])

    def test_cap(self):
        """The cap applies to the amplitudes of the kept sites."""
        state = sample_rmps(RmpsEnsembleConfig(2, 4, 2), RngStream(0))
        with pytest.raises(CapacityExceeded):
            reduced_density(state, [0, 1, 2], cap=4)

    def test_cap_counts_doubled_bonds(self):
        """The sweep holds D^4 d^(2|A|) entries, so a cap of d^|A| is not enough."""
        state = sample_rmps(RmpsEnsembleConfig(2, 8, 2), RngStream(0))
        with pytest.raises(CapacityExceeded, match="reduced_density"):
            reduced_density(state, range(6), cap=64)
        needed = reduced_density_entries(2, 2, 2)
        assert needed == 2 ** 4 * 2 ** 4
        assert reduced_density(state, [0, 1], cap=needed).matrix.shape == (4, 4)
        with pytest.raises(CapacityExceeded):
            reduced_density(state, [0, 1], cap=needed - 1)


class TestFixtures:
    """Tests for the deterministic fixture states."""

    def test_all_identity(self):
        """All-identity cores give D|0...0>."""
        state = fixture_state(ALL_IDENTITY, RmpsEnsembleConfig(2, 3, 3))
        expected = np.zeros(8)
        expected[0] = 3
        assert np.allclose(state_vector(state), expected)
        assert norm_squared_tm(state) == pytest.approx(9)

    def test_all_identity_reduced(self):
        """Any reduction is D^2 |0><0|^{(x)|A|}; purity D^4 raw and 1 normalized."""
        D = 2
        state = fixture_state(ALL_IDENTITY, RmpsEnsembleConfig(2, 4, D))
        rho = reduced_density(state, [1, 2])
        expected = np.zeros((4, 4))
        expected[0, 0] = D ** 2
        assert np.allclose(rho.matrix, expected)
        assert purity_of(rho) == pytest.approx(D ** 4)
        assert purity_of(rho.normalized()) == pytest.approx(1.0)

    def test_traceless_phase_vanishes(self):
        """The traceless-phase fixture is the zero state."""
        cfg = RmpsEnsembleConfig(2, 4, 3)
        state = fixture_state(TRACELESS_PHASE, cfg, site=2)
        assert np.allclose(state_vector(state), 0)
        assert norm_squared_tm(state) == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(reduced_density(state, [2, 3]).matrix, 0)

    def test_traceless_phase_needs_bond(self):
        """The traceless phase needs D >= 2."""
        with pytest.raises(ValueError):
            fixture_state(TRACELESS_PHASE, RmpsEnsembleConfig(2, 4, 1))

    def test_unknown_fixture(self):
        """Unknown fixture names are rejected."""
        with pytest.raises(ValueError):
            fixture_state("random", RmpsEnsembleConfig(2, 4, 2))

    def test_mps_state_rejects_mixed_shapes(self):
        """Cores must share d and D."""
        with pytest.raises(ValueError):
            MpsState((np.zeros((2, 2, 2)), np.zeros((3, 2, 3))))
