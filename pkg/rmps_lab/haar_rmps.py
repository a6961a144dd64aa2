"""
Haar-random unitaries and the random matrix product states built from them.

Each site tensor is cut out of a unitary U on C^d (x) C^D by feeding |0> into
the physical input:  A_i = (<i| (x) 1_D) U (|0> (x) 1_D).  Cores are stored as
(left bond, physical, right bond) arrays, so core[b', i, b] = U[i*D + b', b].
States are kept unnormalized.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple
import logging

import numpy as np

from .tensor_core import DensityMatrix, check_capacity, memory_cap

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-10

ALL_IDENTITY = "all-identity"
TRACELESS_PHASE = "traceless-phase"
FIXTURE_KINDS = (ALL_IDENTITY, TRACELESS_PHASE)


@dataclass(frozen=True)
class RngStream:
    """
    A reproducible random stream keyed by (seed, ..., index).

    Streams are derived with numpy's SeedSequence spawn keys, so the draws
    of one sample never depend on which worker produced the others.
    """
    seed: int
    index: int = 0
    parent: Tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.index < 0:
            raise ValueError(f"Stream index must be non-negative, got {self.index}")

    @property
    def spawn_key(self) -> Tuple[int, ...]:
        return self.parent + (self.index,)

    def substream(self, index: int) -> 'RngStream':
        return RngStream(self.seed, index, self.spawn_key)

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        )


@dataclass(frozen=True)
class Boundary:
    """Periodic trace closure, or open with explicit left/right bond vectors."""
    kind: str = "periodic"
    left: Tuple[complex, ...] = ()
    right: Tuple[complex, ...] = ()

    def __post_init__(self):
        if self.kind not in ("periodic", "open"):
            raise ValueError(f"Unknown boundary kind {self.kind!r}")
        if self.kind == "open" and (not self.left or not self.right):
            raise ValueError("Open boundary needs left and right bond vectors")
        object.__setattr__(self, "left", tuple(complex(x) for x in self.left))
        object.__setattr__(self, "right", tuple(complex(x) for x in self.right))

    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"

    @property
    def left_vector(self) -> np.ndarray:
        return np.array(self.left, dtype=complex)

    @property
    def right_vector(self) -> np.ndarray:
        return np.array(self.right, dtype=complex)

    @classmethod
    def periodic(cls) -> 'Boundary':
        return cls("periodic")

    @classmethod
    def open(cls, left: Sequence[complex], right: Sequence[complex]) -> 'Boundary':
        return cls("open", tuple(left), tuple(right))

    @classmethod
    def open_zero(cls, D: int) -> 'Boundary':
        """Open chain closed by |0> on both ends."""
        e0 = [1.0] + [0.0] * (D - 1)
        return cls.open(e0, e0)


@dataclass(frozen=True)
class RmpsEnsembleConfig:
    """Parameters (d, n, D, boundary) of the RMPS ensemble."""
    d: int
    n: int
    D: int
    boundary: Boundary = field(default_factory=Boundary.periodic)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"Physical dimension d must be >= 2, got {self.d}")
        if self.n < 1:
            raise ValueError(f"Number of sites n must be >= 1, got {self.n}")
        if self.D < 1:
            raise ValueError(f"Bond dimension D must be >= 1, got {self.D}")
        if not self.boundary.is_periodic:
            if len(self.boundary.left) != self.D or len(self.boundary.right) != self.D:
                raise ValueError(
                    f"Open boundary vectors must have dimension D={self.D}, got "
                    f"{len(self.boundary.left)} and {len(self.boundary.right)}"
                )

    @property
    def q(self) -> int:
        """Dimension d*D of the unitaries."""
        return self.d * self.D


@dataclass(frozen=True)
class MpsState:
    """Site cores of shape (D, d, D) plus the boundary closure."""
    cores: Tuple[np.ndarray, ...]
    boundary: Boundary = field(default_factory=Boundary.periodic)

    def __post_init__(self):
        if not self.cores:
            raise ValueError("An MPS needs at least one core")
        frozen = []
        shape = np.shape(self.cores[0])
        for j, core in enumerate(self.cores):
            core = np.array(core, dtype=complex)
            if core.ndim != 3 or core.shape[0] != core.shape[2]:
                raise ValueError(f"Core {j} must have shape (D, d, D), got {core.shape}")
            if core.shape != shape:
                raise ValueError(f"Core {j} has shape {core.shape}, expected {shape}")
            core.setflags(write=False)
            frozen.append(core)
        object.__setattr__(self, "cores", tuple(frozen))
        if not self.boundary.is_periodic and len(self.boundary.left) != shape[0]:
            raise ValueError("Boundary vectors do not match the bond dimension")

    @property
    def n(self) -> int:
        return len(self.cores)

    @property
    def d(self) -> int:
        return self.cores[0].shape[1]

    @property
    def D(self) -> int:
        return self.cores[0].shape[0]

    def is_left_isometric(self, tol: float = UNITARITY_TOL) -> bool:
        eye = np.eye(self.D)
        for core in self.cores:
            gram = np.einsum('aib,aic->bc', core.conj(), core)
            if np.max(np.abs(gram - eye)) > tol:
                return False
        return True


def sample_haar_unitaries(q: int, count: int, generator: np.random.Generator) -> np.ndarray:
    """
    Draw count Haar unitaries of size q, shape (count, q, q).

    Ginibre matrices are QR-factored and each column of Q is multiplied by
    the phase of the matching diagonal entry of R.
    """
    if q < 1:
        raise ValueError(f"Unitary dimension must be >= 1, got {q}")
    z = (generator.standard_normal((count, q, q))
         + 1j * generator.standard_normal((count, q, q))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(z)
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return Q * phases[:, np.newaxis, :]


def sample_haar_unitary(q: int, rng: RngStream) -> np.ndarray:
    """One Haar unitary of size q drawn from the given stream."""
    return sample_haar_unitaries(q, 1, rng.generator())[0]


def core_from_unitary(U: np.ndarray, d: int, D: int) -> np.ndarray:
    """Site core (D, d, D) with A_i = (<i| (x) 1) U (|0> (x) 1)."""
    U = np.asarray(U, dtype=complex)
    q = d * D
    if U.shape != (q, q):
        raise ValueError(f"Unitary must be {q}x{q} for d={d}, D={D}, got {U.shape}")
    deviation = float(np.max(np.abs(U.conj().T @ U - np.eye(q))))
    if deviation > UNITARITY_TOL:
        raise ValueError(f"Matrix is not unitary (deviation {deviation:.3e})")
    return U[:, :D].reshape(d, D, D).transpose(1, 0, 2).copy()


def sample_rmps(cfg: RmpsEnsembleConfig, rng: RngStream) -> MpsState:
    """Draw one RMPS: n i.i.d. Haar unitaries, one per site."""
    unitaries = sample_haar_unitaries(cfg.q, cfg.n, rng.generator())
    cores = unitaries[:, :, :cfg.D].reshape(cfg.n, cfg.d, cfg.D, cfg.D).transpose(0, 2, 1, 3)
    return MpsState(tuple(cores), cfg.boundary)


def fixture_state(kind: str, cfg: RmpsEnsembleConfig, site: int = 0) -> MpsState:
    """
    Deterministic constructions that pin the purity's Lipschitz behaviour.

    all-identity: every unitary is 1_d (x) 1_D, so psi = tr[1_D] |0...0>.
    traceless-phase: additionally U at `site` is 1_d (x) V with
    V = diag(exp(2 pi i j / D)), which makes the state vanish.
    """
    if kind not in FIXTURE_KINDS:
        raise ValueError(f"Unknown fixture {kind!r}, expected one of {FIXTURE_KINDS}")
    identity_core = core_from_unitary(np.eye(cfg.q), cfg.d, cfg.D)
    cores = [identity_core] * cfg.n

    if kind == TRACELESS_PHASE:
        if cfg.D < 2:
            raise ValueError("traceless-phase fixture needs D >= 2 (V must be traceless)")
        if not 0 <= site < cfg.n:
            raise ValueError(f"Site {site} out of range for n={cfg.n}")
        V = np.diag(np.exp(2j * np.pi * np.arange(cfg.D) / cfg.D))
        cores[site] = core_from_unitary(np.kron(np.eye(cfg.d), V), cfg.d, cfg.D)

    return MpsState(tuple(cores), cfg.boundary)


def materialize(state: MpsState, cap: Optional[int] = None) -> np.ndarray:
    """Full amplitude tensor of shape (d,)*n."""
    cap = memory_cap() if cap is None else cap
    d, n, D = state.d, state.n, state.D
    check_capacity("materialize", d ** n, cap,
                   "use the transfer-matrix paths (norm_squared_tm, reduced_density) instead")

    T = state.cores[0]
    for core in state.cores[1:]:
        T = np.einsum('aPb,bic->aPic', T, core).reshape(D, -1, D)

    if state.boundary.is_periodic:
        amplitudes = np.einsum('aPa->P', T)
    else:
        amplitudes = np.einsum('a,aPb,b->P', state.boundary.left_vector, T,
                               state.boundary.right_vector)
    return amplitudes.reshape((d,) * n)


def state_vector(state: MpsState, cap: Optional[int] = None) -> np.ndarray:
    return materialize(state, cap).reshape(-1)


def _close_chain(product: np.ndarray, boundary_pair: Optional[Tuple[np.ndarray, np.ndarray]]) -> complex:
    if boundary_pair is None:
        return complex(np.trace(product))
    left, right = boundary_pair
    return complex(left @ product @ right)


def transfer_operator(core: np.ndarray) -> np.ndarray:
    """E = sum_i A_i (x) conj(A_i) as a D^2 x D^2 matrix."""
    D = core.shape[0]
    return np.einsum('aib,cid->acbd', core, core.conj()).reshape(D * D, D * D)


def norm_squared_tm(state: MpsState) -> float:
    """<psi|psi> as a product of transfer operators, without materializing."""
    product = transfer_operator(state.cores[0])
    for core in state.cores[1:]:
        product = product @ transfer_operator(core)

    boundary_pair = None
    if not state.boundary.is_periodic:
        L, R = state.boundary.left_vector, state.boundary.right_vector
        boundary_pair = (np.kron(L, L.conj()), np.kron(R, R.conj()))
    return _close_chain(product, boundary_pair).real


def overlap(psi: MpsState, phi: MpsState) -> complex:
    """<psi|phi> through the mixed transfer operator sum_i conj(A_i) (x) B_i."""
    if psi.n != phi.n or psi.d != phi.d:
        raise ValueError(f"Cannot overlap states with (n, d) = {(psi.n, psi.d)} and {(phi.n, phi.d)}")
    if psi.boundary.is_periodic != phi.boundary.is_periodic:
        raise ValueError("Cannot overlap a periodic and an open state")

    Da, Db = psi.D, phi.D
    product = np.eye(Da * Db)
    for a, b in zip(psi.cores, phi.cores):
        mixed = np.einsum('aib,cid->acbd', a.conj(), b).reshape(Da * Db, Da * Db)
        product = product @ mixed

    boundary_pair = None
    if not psi.boundary.is_periodic:
        boundary_pair = (np.kron(psi.boundary.left_vector.conj(), phi.boundary.left_vector),
                         np.kron(psi.boundary.right_vector.conj(), phi.boundary.right_vector))
    return _close_chain(product, boundary_pair)


def reduced_density_entries(d: int, D: int, kept: int) -> int:
    """Largest intermediate of the reduced-density sweep: a (D, D, K, K, D, D) array, K = d^kept."""
    return d ** (2 * kept) * D ** 4


def reduced_density(state: MpsState, subset: Iterable[int],
                    cap: Optional[int] = None) -> DensityMatrix:
    """
    Unnormalized reduced density matrix of |psi><psi| on subset.

    Sites are swept left to right with a doubled (ket, bra) bond; kept sites
    open a physical index pair, the others are traced through the transfer
    operator. The output follows ascending site order.
    """
    cap = memory_cap() if cap is None else cap
    kept = sorted(set(subset))
    for site in kept:
        if not 0 <= site < state.n:
            raise ValueError(f"Site {site} out of range for n={state.n}")
    d, D = state.d, state.D
    check_capacity("reduced_density", reduced_density_entries(d, D, len(kept)), cap,
                   "choose a smaller subset or its complement")

    eye = np.eye(D)
    X = np.einsum('xa,yb->xyab', eye, eye)[:, :, np.newaxis, np.newaxis, :, :]
    keep_set = set(kept)
    for j, core in enumerate(state.cores):
        if j in keep_set:
            K = X.shape[2] * d
            X = np.einsum('xyPQab,aic,bjd->xyPiQjcd', X, core, core.conj())
            X = X.reshape(D, D, K, K, D, D)
        else:
            X = np.einsum('xyPQab,aic,bid->xyPQcd', X, core, core.conj())

    if state.boundary.is_periodic:
        rho = np.einsum('xyPQxy->PQ', X)
    else:
        L, R = state.boundary.left_vector, state.boundary.right_vector
        rho = np.einsum('xyPQab,x,y,a,b->PQ', X, L, L.conj(), R, R.conj())
    return DensityMatrix((rho + rho.conj().T) / 2)
