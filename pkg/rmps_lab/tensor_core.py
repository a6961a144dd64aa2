"""
Dense complex tensor arithmetic.

Tensors are plain numpy arrays in row-major order; every contraction names
its axis pairs explicitly. Density matrices carry their own validation since
the states handled here are in general not normalized.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

# A tensor is a numpy array of any rank (rank 0 for scalars).
DenseTensor = np.ndarray

HERMITIAN_TOL = 1e-10
NORMALIZATION_TOL = 1e-8
DEFAULT_MEMORY_CAP = 1 << 24


class CapacityExceeded(ValueError):
    """A request would materialize more entries than the configured cap allows."""

    def __init__(self, what: str, requested: int, cap: int, advice: str = ""):
        self.what = what
        self.requested = requested
        self.cap = cap
        message = f"{what} needs {requested} entries, cap is {cap}"
        if advice:
            message += f"; {advice}"
        super().__init__(message)


def memory_cap() -> int:
    """Materialization cap in amplitudes; RMPS_LAB_MEMORY_CAP overrides the default 2**24."""
    raw = os.environ.get("RMPS_LAB_MEMORY_CAP")
    if raw is None:
        return DEFAULT_MEMORY_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"RMPS_LAB_MEMORY_CAP must be an integer, got {raw!r}")
    if cap < 1:
        raise ValueError(f"RMPS_LAB_MEMORY_CAP must be positive, got {cap}")
    return cap


def check_capacity(what: str, requested: int, cap: int, advice: str = "") -> None:
    if requested > cap:
        raise CapacityExceeded(what, requested, cap, advice)


def contract(a: DenseTensor, b: DenseTensor,
             pairs: Sequence[Tuple[int, int]]) -> DenseTensor:
    """
    Contract axis pairs of two tensors.

    Args:
        a, b: Input tensors
        pairs: (axis of a, axis of b) pairs to sum over

    Returns:
        Tensor whose axes are the free axes of a followed by the free axes of b.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    axes_a = [p[0] for p in pairs]
    axes_b = [p[1] for p in pairs]

    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise ValueError(f"An axis appears twice in contraction pairs {list(pairs)}")
    for ax_a, ax_b in pairs:
        if not 0 <= ax_a < a.ndim:
            raise ValueError(f"Axis {ax_a} of a is out of range for rank {a.ndim}")
        if not 0 <= ax_b < b.ndim:
            raise ValueError(f"Axis {ax_b} of b is out of range for rank {b.ndim}")
        if a.shape[ax_a] != b.shape[ax_b]:
            raise ValueError(
                f"Dimension mismatch: axis {ax_a} of a has {a.shape[ax_a]}, "
                f"axis {ax_b} of b has {b.shape[ax_b]}"
            )

    return np.tensordot(a, b, axes=(axes_a, axes_b))


def contract_network(tensors: Sequence[DenseTensor],
                     edges: Iterable[Tuple[Tuple[int, int], Tuple[int, int]]]) -> DenseTensor:
    """
    Contract a network given as wires between (tensor, axis) slots.

    Open slots become output axes, ordered by tensor then axis. A wire may
    not join two axes of the same tensor.
    """
    tensors = [np.asarray(t) for t in tensors]
    labels: Dict[Tuple[int, int], int] = {}
    next_label = 0

    for (i, ax_i), (j, ax_j) in edges:
        if i == j:
            raise ValueError(f"Tensor {i} would self-contract axes {ax_i} and {ax_j}")
        for slot in ((i, ax_i), (j, ax_j)):
            if slot in labels:
                raise ValueError(f"Slot {slot} is wired twice")
            t, ax = slot
            if not 0 <= t < len(tensors) or not 0 <= ax < tensors[t].ndim:
                raise ValueError(f"Slot {slot} does not exist")
        if tensors[i].shape[ax_i] != tensors[j].shape[ax_j]:
            raise ValueError(
                f"Dimension mismatch on wire ({i}, {ax_i})-({j}, {ax_j}): "
                f"{tensors[i].shape[ax_i]} vs {tensors[j].shape[ax_j]}"
            )
        labels[(i, ax_i)] = next_label
        labels[(j, ax_j)] = next_label
        next_label += 1

    operands: List[object] = []
    output: List[int] = []
    for t, tensor in enumerate(tensors):
        sub = []
        for ax in range(tensor.ndim):
            if (t, ax) not in labels:
                labels[(t, ax)] = next_label
                output.append(next_label)
                next_label += 1
            sub.append(labels[(t, ax)])
        operands.extend([tensor, sub])

    return np.einsum(*operands, output, optimize=True)


def frobenius_norm(t: DenseTensor) -> float:
    return float(np.sqrt(np.sum(np.abs(t) ** 2)))


@dataclass(frozen=True)
class DensityMatrix:
    """
    Hermitian operator on a dim-dimensional space.

    The trace is real but not necessarily 1: reduced states of an unnormalized
    RMPS carry the norm of the state.
    """
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Density matrix must be square, got shape {m.shape}")
        deviation = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if deviation > HERMITIAN_TOL:
            raise ValueError(f"Density matrix is not Hermitian (deviation {deviation:.3e})")
        if abs(np.trace(m).imag) > HERMITIAN_TOL:
            raise ValueError(f"Density matrix trace is not real: {np.trace(m)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> 'DensityMatrix':
        tr = self.trace
        if tr <= 0:
            raise ValueError(f"Cannot normalize a density matrix with trace {tr}")
        return DensityMatrix(self.matrix / tr)

    @classmethod
    def from_vector(cls, psi: np.ndarray) -> 'DensityMatrix':
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(np.outer(psi, psi.conj()))


def partial_trace(rho: DensityMatrix, local_dims: Sequence[int],
                  keep: Iterable[int]) -> DensityMatrix:
    """
    Trace out every site not in keep.

    Args:
        rho: Operator on the product space of local_dims
        local_dims: Dimension of each site
        keep: Site indices to keep; output follows ascending site order
    """
    local_dims = [int(x) for x in local_dims]
    n = len(local_dims)
    if int(np.prod(local_dims)) != rho.dim:
        raise ValueError(f"Local dims {local_dims} do not multiply to {rho.dim}")
    kept = sorted(set(keep))
    for site in kept:
        if not 0 <= site < n:
            raise ValueError(f"Site {site} out of range for {n} sites")

    t = rho.matrix.reshape(local_dims + local_dims)
    ket = list(range(n))
    bra = [n + i if i in kept else i for i in range(n)]
    out = kept + [n + i for i in kept]
    reduced = np.einsum(t, ket + bra, out)

    m = int(np.prod([local_dims[i] for i in kept])) if kept else 1
    return DensityMatrix(reduced.reshape(m, m))


def purity_of(rho: DensityMatrix) -> float:
    """tr[rho^2]."""
    m = rho.matrix
    return float(np.real(np.sum(m * m.T)))


def swap_purity(rho: DensityMatrix) -> float:
    """tr[F rho (x) rho], wired through contract rather than a matrix product."""
    value = contract(rho.matrix, rho.matrix, [(0, 1), (1, 0)])
    return float(np.real(value))


def renyi2(rho: DensityMatrix) -> float:
    """Second Renyi entropy in nats; rho must be normalized."""
    if abs(rho.trace - 1.0) > NORMALIZATION_TOL:
        raise ValueError(
            f"renyi2 needs a normalized state (trace {rho.trace:.6g}); "
            "call rho.normalized() first"
        )
    return float(-np.log(purity_of(rho)))
