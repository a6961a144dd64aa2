"""
Hamiltonians with non-degenerate gaps, effective dimension and
infinite-time fluctuations.

For H = sum_j E_j |j><j| with non-degenerate energies and gaps, a state
with c_j = <j|psi> has infinite-time average sum_j |c_j|^2 A_jj and
fluctuations sum_{j != k} |c_j|^2 |c_k|^2 |A_jk|^2.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
import logging

import numpy as np
import scipy.linalg

from .haar_rmps import RngStream
from .tensor_core import NORMALIZATION_TOL, check_capacity

logger = logging.getLogger(__name__)

HAMILTONIAN_CAP = 4096
GAP_RELATIVE_TOL = 1e-9
MAX_ATTEMPTS = 10


class GapConditionError(RuntimeError):
    """The spectrum or its gaps are degenerate within tolerance."""


def _gaps(eigenvalues: np.ndarray) -> np.ndarray:
    """E_n - E_m for every n > m."""
    upper = np.triu_indices(eigenvalues.size, k=1)
    return (eigenvalues[:, None] - eigenvalues[None, :]).T[upper]


def min_gap_difference(eigenvalues: np.ndarray) -> float:
    """Smallest |(E_n - E_m) - (E_j - E_k)| over distinct pairs; inf below three levels."""
    gaps = np.sort(_gaps(np.asarray(eigenvalues, dtype=float)))
    if gaps.size < 2:
        return float("inf")
    return float(np.min(np.diff(gaps)))


@dataclass(frozen=True, eq=False)
class SpectralHamiltonian:
    """
    A Hamiltonian given by its eigendecomposition.

    Attributes:
        eigenvalues: Strictly increasing energies
        eigenvectors: Unitary whose columns are the eigenvectors |j>
        gap_tol: Tolerance of the non-degeneracy checks
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap_tol: float

    def __post_init__(self):
        E = np.array(self.eigenvalues, dtype=float)
        V = np.array(self.eigenvectors, dtype=complex)
        if E.ndim != 1 or V.shape != (E.size, E.size):
            raise ValueError(f"Eigenvectors {V.shape} do not match {E.size} eigenvalues")
        if E.size > 1:
            level_spacing = float(np.min(np.diff(E)))
            if level_spacing <= self.gap_tol:
                raise GapConditionError(
                    f"Spectrum is degenerate: minimal level spacing {level_spacing:.3e} "
                    f"<= {self.gap_tol:.3e}"
                )
            gap_spacing = min_gap_difference(E)
            if gap_spacing <= self.gap_tol:
                raise GapConditionError(
                    f"Spectral gaps are degenerate: minimal gap difference {gap_spacing:.3e} "
                    f"<= {self.gap_tol:.3e}"
                )
        E.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "eigenvalues", E)
        object.__setattr__(self, "eigenvectors", V)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def matrix(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T

    def to_eigenbasis(self, A: np.ndarray) -> np.ndarray:
        """<j|A|k>."""
        A = np.asarray(A)
        if A.shape != (self.dim, self.dim):
            raise ValueError(f"Observable is {A.shape}, Hamiltonian has dim {self.dim}")
        V = self.eigenvectors
        return V.conj().T @ A @ V

    @classmethod
    def from_matrix(cls, H: np.ndarray, gap_tol: Optional[float] = None) -> 'SpectralHamiltonian':
        """Diagonalize a Hermitian matrix; gap_tol defaults to 1e-9 times the spectral range."""
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got shape {H.shape}")
        check_capacity("hamiltonian", H.shape[0], HAMILTONIAN_CAP,
                       f"dimensions up to {HAMILTONIAN_CAP} are supported")
        E, V = scipy.linalg.eigh(H)
        if gap_tol is None:
            gap_tol = GAP_RELATIVE_TOL * float(E[-1] - E[0])
        return cls(E, V, gap_tol)


def sample_gue_hamiltonian(dim: int, rng: RngStream,
                           max_attempts: int = MAX_ATTEMPTS) -> SpectralHamiltonian:
    """
    Draw H = (X + X^dagger) / 2 with X complex Ginibre, resampling until the
    non-degenerate-gaps condition holds.
    """
    if dim < 1:
        raise ValueError(f"Dimension must be >= 1, got {dim}")
    check_capacity("sample_gue_hamiltonian", dim, HAMILTONIAN_CAP,
                   f"dimensions up to {HAMILTONIAN_CAP} are supported")
    generator = rng.generator()
    for attempt in range(1, max_attempts + 1):
        X = (generator.standard_normal((dim, dim))
             + 1j * generator.standard_normal((dim, dim))) / np.sqrt(2)
        try:
            return SpectralHamiltonian.from_matrix((X + X.conj().T) / 2)
        except GapConditionError as e:
            logger.debug("GUE attempt %d/%d rejected: %s", attempt, max_attempts, e)
    raise GapConditionError(f"No GUE draw of dim {dim} passed the gap check in {max_attempts} attempts")


def _amplitudes(psi: np.ndarray, H: SpectralHamiltonian) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != H.dim:
        raise ValueError(f"State has {psi.size} amplitudes, Hamiltonian has dim {H.dim}")
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"State must be normalized, got <psi|psi> = {norm:.10g}")
    return H.eigenvectors.conj().T @ psi


def effective_dimension(psi: np.ndarray, H: SpectralHamiltonian) -> float:
    """D_eff = 1 / sum_j |<j|psi>|^4."""
    p = np.abs(_amplitudes(psi, H)) ** 2
    return float(1.0 / np.sum(p * p))


def infinite_time_average(psi: np.ndarray, H: SpectralHamiltonian, A: np.ndarray) -> float:
    p = np.abs(_amplitudes(psi, H)) ** 2
    return float(np.real(np.sum(p * np.diag(H.to_eigenbasis(A)))))


def time_fluctuation_exact(psi: np.ndarray, H: SpectralHamiltonian, A: np.ndarray) -> float:
    """Infinite-time fluctuation sum_{j != k} |c_j|^2 |c_k|^2 |A_jk|^2."""
    p = np.abs(_amplitudes(psi, H)) ** 2
    W = np.abs(H.to_eigenbasis(A)) ** 2
    value = p @ W @ p - np.sum(p * p * np.diag(W))
    return max(0.0, float(value))


def fluctuation_cap(H: SpectralHamiltonian, A: np.ndarray) -> float:
    """max_{j != k} |A_jk|^2."""
    W = np.abs(H.to_eigenbasis(A)) ** 2
    np.fill_diagonal(W, 0.0)
    return float(np.max(W))


def time_average_fluctuation(psi: np.ndarray, H: SpectralHamiltonian, A: np.ndarray,
                             times: np.ndarray, chunk: int = 4096) -> float:
    """Mean of |<psi|A(t)|psi> - A_inf|^2 over the given times."""
    c = _amplitudes(psi, H)
    A_e = H.to_eigenbasis(A)
    average = float(np.real(np.sum(np.abs(c) ** 2 * np.diag(A_e))))
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise ValueError("Need at least one sample time")

    total = 0.0
    for start in range(0, times.size, chunk):
        t = times[start:start + chunk]
        a = np.exp(-1j * np.outer(t, H.eigenvalues)) * c
        values = np.einsum('tj,jk,tk->t', a.conj(), A_e, a).real
        total += float(np.sum((values - average) ** 2))
    return total / times.size


def sample_times(H: SpectralHamiltonian, count: int, rng: RngStream,
                 window_scale: float = 1e3) -> np.ndarray:
    """Uniform times on [0, window_scale / min gap difference]."""
    window = window_scale / min_gap_difference(H.eigenvalues)
    logger.debug("time window %.3g for %d sample times", window, count)
    return rng.generator().uniform(0.0, window, size=count)


def pauli_z(d: int) -> np.ndarray:
    """diag(1, -1, 0, ..., 0); traceless with unit operator norm."""
    if d < 2:
        raise ValueError(f"pauli_z needs d >= 2, got {d}")
    Z = np.zeros((d, d))
    Z[0, 0], Z[1, 1] = 1.0, -1.0
    return Z


def site_operator(O: np.ndarray, site: int, n: int) -> np.ndarray:
    """O on `site` tensored with identities on the other n - 1 sites."""
    O = np.asarray(O)
    d = O.shape[0]
    if not 0 <= site < n:
        raise ValueError(f"Site {site} out of range for n={n}")
    return np.kron(np.kron(np.eye(d ** site), O), np.eye(d ** (n - site - 1)))


def load_observable(spec: Union[str, Path], d: int) -> np.ndarray:
    """
    Resolve an observable name or file.

    'pauli-z' gives pauli_z(d); otherwise spec is a .npy file or a
    whitespace-separated text matrix. The result must be a Hermitian d x d matrix.
    """
    if str(spec) == "pauli-z":
        return pauli_z(d)
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"Observable {spec!r} is neither 'pauli-z' nor an existing file")
    if path.suffix == ".npy":
        O = np.load(path)
    else:
        O = np.loadtxt(path, dtype=complex, ndmin=2)
    O = np.asarray(O, dtype=complex)
    if O.shape != (d, d):
        raise ValueError(f"Observable in {path} has shape {O.shape}, expected ({d}, {d})")
    if np.max(np.abs(O - O.conj().T)) > 1e-10:
        raise ValueError(f"Observable in {path} is not Hermitian")
    if np.max(np.abs(O.imag)) == 0:
        return O.real
    return O
