"""
Exact Haar moments and a brute-force second-moment oracle.

For t <= 2 the moment operator E U^{(x)t} (x) conj(U)^{(x)t} is

    sum_{sigma, pi in S_t} Wg(sigma^-1 pi, q) |sigma><pi|

with |sigma> wiring ket copy a to bra copy sigma(a).  The oracle replaces
every site unitary of the doubled-and-conjugated RMPS network by this
operator and contracts the result directly, with no spin-chain reduction.
"""

from dataclasses import dataclass
from typing import Dict, Tuple
import itertools
import logging
import threading

import numpy as np

from .patterns import BLUE, GREEN, SpinChainPattern, SiteTag
from .permutation import Permutation
from .tensor_core import check_capacity, memory_cap

logger = logging.getLogger(__name__)

ORACLE_CAP = 4096

_lock = threading.Lock()
_moment_cache: Dict[Tuple[int, int], 'MomentOperator'] = {}
_core_cache: Dict[Tuple[int, int], np.ndarray] = {}


def wg(sigma: Permutation, q: int, t: int) -> float:
    """Weingarten function of U(q) for t = 1, 2."""
    if sigma.t != t:
        raise ValueError(f"Permutation acts on {sigma.t} copies, expected t={t}")
    if t == 1:
        if q < 1:
            raise ValueError(f"Dimension must be >= 1, got {q}")
        return 1.0 / q
    if t == 2:
        if q < 2:
            raise ValueError(f"Wg at t=2 is singular for q={q} (q^2 - 1 = 0)")
        if sigma.is_identity():
            return 1.0 / (q * q - 1)
        return -1.0 / (q * (q * q - 1))
    raise ValueError(f"Only t in (1, 2) is supported, got t={t}")


def permutation_state(sigma: Permutation, q: int) -> np.ndarray:
    """
    |sigma> on (C^q)^{(x)2t}, axes ordered (ket copies, bra copies).

    Entry (r, rbar) is 1 iff r[a] == rbar[sigma(a)] for every copy a.
    """
    t = sigma.t
    state = np.zeros((q,) * (2 * t))
    for r in itertools.product(range(q), repeat=t):
        rbar = [0] * t
        for a in range(t):
            rbar[sigma(a)] = r[a]
        state[tuple(r) + tuple(rbar)] = 1.0
    return state.reshape(-1)


@dataclass(frozen=True, eq=False)
class MomentOperator:
    """E U^{(x)t} (x) conj(U)^{(x)t} as a q^{2t} x q^{2t} real matrix."""
    q: int
    t: int
    matrix: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        """The twirl X -> E U^{(x)t} X U^{dagger (x)t} for X on (C^q)^{(x)t}."""
        m = self.q ** self.t
        X = np.asarray(X)
        if X.shape != (m, m):
            raise ValueError(f"Operator must be {m}x{m}, got {X.shape}")
        return (self.matrix @ X.reshape(-1)).reshape(m, m)


def moment_operator(q: int, t: int) -> MomentOperator:
    """The t-th moment operator of U(q), memoized by (q, t)."""
    if t not in (1, 2):
        raise ValueError(f"Only t in (1, 2) is supported, got t={t}")
    if q < 1:
        raise ValueError(f"Dimension must be >= 1, got {q}")
    check_capacity("moment_operator", q ** (2 * t), ORACLE_CAP,
                   f"the oracle supports q^(2t) <= {ORACLE_CAP}")

    key = (q, t)
    with _lock:
        cached = _moment_cache.get(key)
        if cached is not None:
            return cached

        logger.debug("building moment operator q=%d t=%d", q, t)
        perms = Permutation.all(t)
        states = {sigma: permutation_state(sigma, q) for sigma in perms}
        dim = q ** (2 * t)
        matrix = np.zeros((dim, dim))
        for sigma in perms:
            for pi in perms:
                weight = wg(sigma.inverse() * pi, q, t)
                matrix += weight * np.outer(states[sigma], states[pi])
        matrix.setflags(write=False)
        op = MomentOperator(q, t, matrix)
        _moment_cache[key] = op
        return op


def averaged_core(d: int, D: int) -> np.ndarray:
    """
    E[A (x) A (x) conj(A) (x) conj(A)] for one RMPS site.

    Shape (D^4, d^4, D^4): left bonds, physical legs, right bonds, each
    grouped as (ket 1, ket 2, bra 1, bra 2).
    """
    key = (d, D)
    with _lock:
        cached = _core_cache.get(key)
    if cached is not None:
        return cached

    M = moment_operator(d * D, 2).matrix
    M16 = M.reshape((d, D) * 8)
    # physical inputs are fed |0> on all four copies
    sliced = M16[..., 0, :, 0, :, 0, :, 0, :]
    W = sliced.transpose(1, 3, 5, 7, 0, 2, 4, 6, 8, 9, 10, 11).reshape(D ** 4, d ** 4, D ** 4)
    W = np.ascontiguousarray(W)
    W.setflags(write=False)
    with _lock:
        _core_cache[key] = W
    return W


def physical_cap(tag: SiteTag, d: int) -> np.ndarray:
    """Closure of one site's four physical legs (ket 1, ket 2, bra 1, bra 2)."""
    eye = np.eye(d)
    if tag.kind == BLUE:
        cap = np.einsum('ac,bd->abcd', eye, eye)
    elif tag.kind == GREEN:
        cap = np.einsum('ad,bc->abcd', eye, eye)
    else:
        O = tag.observable
        if O.shape != (d, d):
            raise ValueError(f"Observable is {O.shape[0]}-dimensional, site has d={d}")
        cap = np.einsum('ca,db->abcd', O, O)
    return cap.reshape(-1)


def oracle_second_moment(pattern: SpinChainPattern, d: int, D: int) -> float:
    """Exact E[functional] for a coloured ring, by direct contraction of averaged cores."""
    W = averaged_core(d, D)
    product = np.eye(D ** 4, dtype=complex)
    for tag in pattern.sites:
        product = product @ np.einsum('apb,p->ab', W, physical_cap(tag, d))
    return float(np.trace(product).real)


def _sites_of(vector_length: int, d: int) -> int:
    n = int(round(np.log(vector_length) / np.log(d)))
    if d ** n != vector_length:
        raise ValueError(f"Vector length {vector_length} is not a power of d={d}")
    return n


def oracle_overlap_fourth_moment(phi: np.ndarray, d: int, D: int) -> float:
    """E |<psi|phi>|^4 over the periodic RMPS ensemble, for an arbitrary vector phi."""
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    n = _sites_of(phi.size, d)
    P = d ** 4
    check_capacity("oracle_overlap_fourth_moment", D ** 8 * P ** (n - 1), memory_cap(),
                   "reduce n or D")

    W = averaged_core(d, D)
    t = phi.reshape((d,) * n)
    weights = np.einsum(t.conj(), list(range(n)), t.conj(), list(range(n, 2 * n)),
                        t, list(range(2 * n, 3 * n)), t, list(range(3 * n, 4 * n)),
                        list(range(4 * n)))
    order = [c * n + j for j in range(n) for c in range(4)]
    weights = weights.transpose(order).reshape(P, -1)

    L = D ** 4
    Y = np.tensordot(W, weights, axes=([1], [0]))
    for _ in range(1, n):
        Y = Y.reshape(L, L, P, -1)
        Y = np.einsum('LRpX,RpS->LSX', Y, W)
    return float(np.trace(Y.reshape(L, L)).real)


def oracle_moment_state(d: int, n: int, D: int) -> np.ndarray:
    """
    Dense E(|psi><psi|)^{(x)2}, rows (ket copy 1 sites, ket copy 2 sites),
    columns (bra copy 1 sites, bra copy 2 sites).
    """
    check_capacity("oracle_moment_state", D ** 8 * d ** (4 * n), memory_cap(),
                   "use statmech.ensemble_moment_operator for larger chains")
    W = averaged_core(d, D)
    L = D ** 4
    X = W
    for _ in range(1, n):
        X = np.einsum('aXb,bpc->aXpc', X, W).reshape(L, -1, L)
    vec = np.einsum('aXa->X', X).reshape((d,) * (4 * n))
    order = [4 * j + c for c in range(4) for j in range(n)]
    half = d ** (2 * n)
    return vec.transpose(order).reshape(half, half)
