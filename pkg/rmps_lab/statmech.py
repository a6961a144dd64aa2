"""
Second moments of RMPS as a two-state spin chain.

Averaging two copies of the network site by site leaves, on every bond, a
spin in {1, F}.  Summing the spin between a site's input and output legs
gives one 2x2 plaquette per site, indexed (left spin, right spin) in the
basis (1, F).  A periodic second moment is the trace of the chain of
plaquettes.  With this labelling

    Blue  = [[eta(d,D), 0], [eta(D,d), 1]]
    Green = [[1, eta(D,d)], [0, eta(d,D)]]

and the chain is read against site order: the value of sites 1..n is
tr[T_n ... T_1].  Blue/Green words are invariant under that reversal, so
only mixed rings with asymmetric Obs placements can tell the difference.
"""

from dataclasses import dataclass
from functools import reduce
from typing import Dict, Optional, Tuple
import itertools
import logging
import math

import numpy as np

from .haar_rmps import RmpsEnsembleConfig, RngStream, norm_squared_tm, overlap, sample_rmps
from .patterns import BLUE, GREEN, SiteTag, SpinChainPattern
from .permutation import IDENTITY, SWAP
from .tensor_core import check_capacity
from .weingarten import ORACLE_CAP, wg

logger = logging.getLogger(__name__)

TRACELESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TransferMatrix2:
    """A 2x2 plaquette; entries[a, b] is the weight for left spin a, right spin b (0 = 1, 1 = F)."""
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (2, 2):
            raise ValueError(f"Transfer matrix must be 2x2, got {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def entry(self, left: str, right: str) -> float:
        """Entry by spin names '1' / 'F'."""
        index = {"1": 0, "F": 1}
        return float(self.entries[index[left], index[right]])

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvals(self.entries).real)


def eta(x: float, y: float) -> float:
    """(x y^2 - x) / (x^2 y^2 - 1)."""
    denominator = x * x * y * y - 1
    if denominator == 0:
        raise ValueError(f"eta({x}, {y}) is singular (x*y must exceed 1)")
    return (x * y * y - x) / denominator


def alpha(d: int, D: int) -> float:
    """Decay rate of the expected inverse effective dimension."""
    if d < 1 or D < 1:
        raise ValueError(f"alpha needs d, D >= 1, got d={d}, D={D}")
    numerator = d - 1.0 / (d * D * D)
    if numerator <= 0:
        raise ValueError("alpha is undefined for d = D = 1 (the chain is a single product state)")
    denominator = (1 + 1.0 / D) * (1 + 1.0 / (d * D))
    return math.log(numerator / denominator)


def _plaquette(f_identity: float, f_swap: float, d: int, D: int) -> np.ndarray:
    """
    Plaquette for a site whose physical legs contribute f_identity when the
    site spin is 1 and f_swap when it is F.

    Entries are grouped over the common denominator q^2 - 1, q = dD.
    """
    q2 = (d * D) ** 2 - 1
    return np.array([
        [(D * D * f_swap - f_identity / d) / q2, D * (f_swap - f_identity / d) / q2],
        [D * (f_identity - f_swap / d) / q2, (D * D * f_identity - f_swap / d) / q2],
    ])


def site_transfer_matrix(tag: SiteTag, d: int, D: int) -> TransferMatrix2:
    """Plaquette of one site tag."""
    if tag.kind == BLUE:
        return TransferMatrix2(np.array([[eta(d, D), 0.0], [eta(D, d), 1.0]]))
    if tag.kind == GREEN:
        return TransferMatrix2(np.array([[1.0, eta(D, d)], [0.0, eta(d, D)]]))

    O = tag.observable
    if O.shape != (d, d):
        raise ValueError(f"Observable is {O.shape[0]}-dimensional, site has d={d}")
    tr_o = np.trace(O)
    tr_o2 = np.trace(O @ O)
    return TransferMatrix2(_plaquette(float(abs(tr_o) ** 2), float(tr_o2.real), d, D))


def exact_chain_value(pattern: SpinChainPattern, d: int, D: int) -> float:
    """Trace of the plaquette chain of a periodic pattern."""
    matrices = [site_transfer_matrix(tag, d, D).entries for tag in reversed(pattern.sites)]
    return float(np.trace(reduce(np.matmul, matrices)))


def norm_second_moment(d: int, n: int, D: int) -> float:
    """E <psi|psi>^2 = 1 + eta(d,D)^n."""
    return 1.0 + eta(d, D) ** n


def connected_purity_expectation(d: int, n: int, D: int, l: int) -> float:
    """
    E tr[rho_A^2] for A a contiguous block of l sites in a ring of n.

    e^l + e^(n-l) + e'^2 (1 - e^l)(1 - e^(n-l)) / (1 - e)^2 with
    e = eta(d,D), e' = eta(D,d).
    """
    if not 1 <= l <= n - 1:
        raise ValueError(f"Block length l={l} must satisfy 1 <= l <= n-1 (n={n})")
    e = eta(d, D)
    if e == 1.0:
        return exact_chain_value(SpinChainPattern.green_block(n, l), d, D)
    ep = eta(D, d)
    return (e ** l + e ** (n - l)
            + ep * ep * (1 - e ** l) * (1 - e ** (n - l)) / (1 - e) ** 2)


def block_transfer_matrix(d: int, D: int, k: int) -> TransferMatrix2:
    """
    One Green plaquette followed by k-1 Blue ones, multiplied in chain order.

    Closed form, with e = eta(d,D), e' = eta(D,d), s = (1 - e^(k-1)) / (1 - e):
        1->1 = e^(k-1) + e'^2 s    1->F = e'
        F->1 = e e' s              F->F = e
    """
    if k < 2:
        raise ValueError(f"Block size k must be >= 2, got {k}")
    G = site_transfer_matrix(SiteTag.green(), d, D).entries
    B = site_transfer_matrix(SiteTag.blue(), d, D).entries
    return TransferMatrix2(G @ np.linalg.matrix_power(B, k - 1))


def disconnected_purity_expectation(d: int, n: int, D: int, k: int) -> float:
    """E tr[rho_A^2] with every k-th site traced out."""
    if k < 2 or n % k != 0:
        raise ValueError(f"k={k} must be >= 2 and divide n={n}")
    block = block_transfer_matrix(d, D, k).entries
    return float(np.trace(np.linalg.matrix_power(block, n // k)))


def extensivity_purity_bound(d: int, n: int, D: int, k: int) -> float:
    """(eta(d,D)^(k-1) + eta(D,d) + eta(d,D))^(n/k)."""
    if k < 1 or n % k != 0:
        raise ValueError(f"k={k} must divide n={n}")
    e, ep = eta(d, D), eta(D, d)
    return (e ** (k - 1) + ep + e) ** (n // k)


def overlap_fourth_moment_bound(d: int, n: int, D: int) -> float:
    """Upper bound on E |<psi|phi>|^4 for any normalized phi."""
    ratio = (1 + 1.0 / D) * (1 + 1.0 / (d * D)) / (d * d - 1.0 / (D * D))
    return 2.0 * ratio ** n


def _check_traceless(O: np.ndarray) -> None:
    tr = np.trace(O)
    if abs(tr) > TRACELESS_TOL:
        raise ValueError(
            f"Observable must be traceless (tr O = {tr:.3g}); subtract tr(O)/d times "
            "the identity first, which shifts every expectation value by a constant"
        )


def local_observable_second_moment(d: int, n: int, D: int,
                                   O: np.ndarray) -> Tuple[float, float]:
    """
    (E <psi|O (x) 1|psi>^2, 2 D^-2 tr O^2) for traceless Hermitian O on site 0.

    The bound does not hold at every size: at d = 2, n = 2, D = 4 the exact
    value exceeds it slightly (0.25019 vs 0.25).
    """
    O = np.asarray(O, dtype=complex)
    if n < 2:
        raise ValueError(f"Local observable moments need n >= 2, got {n}")
    _check_traceless(O)
    bound = 2.0 * float(np.trace(O @ O).real) / D ** 2
    if not np.any(O):
        return 0.0, bound
    exact = exact_chain_value(SpinChainPattern.single_obs(n, O), d, D)
    return exact, bound


def local_observable_refined_bound(d: int, n: int, D: int, O: np.ndarray) -> float:
    """tr O^2 (D^-2 (1 - d^(1-n)) / (1 - 1/d) + D^(1-n))."""
    O = np.asarray(O, dtype=complex)
    _check_traceless(O)
    tr_o2 = float(np.trace(O @ O).real)
    return tr_o2 * ((1 - d ** (1.0 - n)) / (D * D * (1 - 1.0 / d)) + D ** (1.0 - n))


def markov_tail(expectation_upper_bound: float, threshold: float) -> float:
    """Markov's inequality, clamped to 1."""
    if expectation_upper_bound <= 0 or threshold <= 0:
        raise ValueError("markov_tail needs positive arguments")
    return min(1.0, expectation_upper_bound / threshold)


def normalized_threshold(raw_threshold: float, norm_deviation: float) -> float:
    """If X <= raw and |N - 1| <= eps then X / N^2 <= raw / (1 - eps)^2."""
    if not 0 <= norm_deviation < 1:
        raise ValueError(f"Norm deviation must lie in [0, 1), got {norm_deviation}")
    return raw_threshold / (1 - norm_deviation) ** 2


@dataclass(frozen=True)
class EquilibrationTailChain:
    """Expectation -> Markov -> union bound for the normalized fluctuation."""
    raw_threshold: float
    normalized_threshold: float
    fluctuation_tail: float
    norm_tail: float
    success_probability: float


def equilibration_tail_chain(d: int, n: int, D: int, k1: float = 0.25,
                             observable_norm: float = 1.0) -> EquilibrationTailChain:
    """
    Probability that the normalized state's fluctuation stays below
    delta / (1 - delta)^2 with delta = exp(-k1 alpha n).

    Uses E[dA] <= |A|^2 E[1/D_eff] <= |A|^2 2 exp(-alpha n) and
    Pr(|N - 1| >= delta) <= d^-n / delta^2.
    """
    if not 0 < k1 < 0.5:
        raise ValueError(f"k1 must lie in (0, 1/2), got {k1}")
    a = alpha(d, D)
    delta = math.exp(-k1 * a * n)
    expectation = observable_norm ** 2 * 2.0 * math.exp(-a * n)
    fluctuation_tail = markov_tail(expectation, delta)
    norm_tail = markov_tail(float(d) ** -n, delta * delta)
    normalized = normalized_threshold(delta, delta) if delta < 1 else math.inf
    return EquilibrationTailChain(
        raw_threshold=delta,
        normalized_threshold=normalized,
        fluctuation_tail=fluctuation_tail,
        norm_tail=norm_tail,
        success_probability=max(0.0, 1.0 - fluctuation_tail - norm_tail),
    )


def purity_excess_expectation(d: int, n: int, D: int, l: int) -> float:
    """E(tr rho_A^2 - N^2 d^-l) for a contiguous block of l sites."""
    return connected_purity_expectation(d, n, D, l) - norm_second_moment(d, n, D) / d ** l


def purity_excess_bound(d: int, n: int, D: int, l: int) -> float:
    """4 / D^2 + d^(l-n) + d^(-n-l)."""
    return 4.0 / D ** 2 + float(d) ** (l - n) + float(d) ** (-n - l)


def purity_excess_regime(d: int, n: int, D: int, l: int) -> bool:
    """n >= 2 log D / log d + l, where the excess bound drops below 6 / D^2."""
    return n >= 2 * math.log(D) / math.log(d) + l


def haar_frame_potential(d: int, n: int) -> float:
    """2 / (d^n (d^n + 1))."""
    N = float(d) ** n
    return 2.0 / (N * (N + 1))


def two_design_exclusion_threshold(d: int, n: int, D: int) -> float:
    """d^-n / D."""
    return float(d) ** -n / D


def two_design_purity_ceiling(d: int, n: int, eps: float) -> float:
    """Purity ceiling 2 d^(3n/2) / (d^n (d^n + 1)) + d^n eps of an eps-approximate 2-design."""
    N = float(d) ** n
    return 2.0 * N ** 1.5 / (N * (N + 1)) + N * eps


def bond_kernel(d: int, D: int) -> np.ndarray:
    """
    K[s, s'] = sum_pi Wg(s, pi) <pi|s'>_D for s, s', pi in {1, F}.

    E(|psi><psi|)^{(x)2} = sum over spins s_j of prod_j K[s_j, s_{j+1}]
    times the tensor product of the physical permutation operators P(s_j).
    """
    q = d * D
    spins = (IDENTITY, SWAP)
    K = np.zeros((2, 2))
    for a, s in enumerate(spins):
        for b, s_next in enumerate(spins):
            K[a, b] = sum(wg(s.inverse() * pi, q, 2) * D ** (pi.inverse() * s_next).n_cycles()
                          for pi in spins)
    return K


def ensemble_moment_operator(d: int, n: int, D: int) -> np.ndarray:
    """
    Exact E(|psi><psi|)^{(x)2} as a d^2n x d^2n matrix.

    Rows are (copy 1 sites, copy 2 sites), columns the matching bra copies.
    """
    half = d ** (2 * n)
    check_capacity("ensemble_moment_operator", half, ORACLE_CAP,
                   "the exact path needs d^(2n) within the oracle cap; use Monte Carlo")
    K = bond_kernel(d, D)
    eye = np.eye(d * d)
    swap = np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)
    local = (eye, swap)

    site_major = np.zeros((half, half))
    for spins in itertools.product((0, 1), repeat=n):
        weight = 1.0
        for j in range(n):
            weight *= K[spins[j], spins[(j + 1) % n]]
        operator = reduce(np.kron, [local[s] for s in spins])
        site_major += weight * operator

    # site-major axes (site j: copy 1, copy 2) -> copy-major
    t = site_major.reshape((d,) * (4 * n))
    order = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    order = order + [2 * n + x for x in order]
    return t.transpose(order).reshape(half, half)


def symmetric_projector(d: int, n: int) -> np.ndarray:
    """Projector onto the symmetric subspace of (C^(d^n))^{(x)2}."""
    N = d ** n
    eye = np.eye(N * N)
    swap = eye.reshape(N, N, N, N).transpose(1, 0, 2, 3).reshape(N * N, N * N)
    return (eye + swap) / 2


def frame_potential_2(d: int, n: int, D: int, samples: int = 10000,
                      rng: Optional[RngStream] = None) -> float:
    """
    F_2 = E |<psi|phi>|^4 over independent RMPS pairs (raw, unnormalized).

    Exact through the moment operator when d^2n is within the oracle cap,
    otherwise a Monte Carlo average over `samples` pairs drawn from rng.
    """
    if d ** (2 * n) <= ORACLE_CAP:
        M = ensemble_moment_operator(d, n, D)
        return float(np.sum(M * M))

    if rng is None:
        rng = RngStream(0)
    logger.info("frame potential beyond exact cap; averaging %d pairs", samples)
    cfg = RmpsEnsembleConfig(d, n, D)
    values = np.empty(samples)
    for i in range(samples):
        stream = rng.substream(i)
        psi = sample_rmps(cfg, stream.substream(0))
        phi = sample_rmps(cfg, stream.substream(1))
        values[i] = abs(overlap(psi, phi)) ** 4
    return float(np.mean(values))


def design_distance_sq(d: int, n: int, D: int) -> float:
    """|| E(|psi><psi|)^{(x)2} - 2 P_sym / (d^n (d^n + 1)) ||_F^2, computed directly."""
    M = ensemble_moment_operator(d, n, D)
    return design_distance_sq_of(M, d, n)


def design_distance_sq_of(moment: np.ndarray, d: int, n: int) -> float:
    """Squared Frobenius distance of a second-moment operator from the Haar one."""
    N = float(d) ** n
    difference = moment - 2.0 * symmetric_projector(d, n) / (N * (N + 1))
    return float(np.sum(np.abs(difference) ** 2))


def closed_forms(d: int, n: int, D: int, k: Optional[int] = None,
                 l: Optional[int] = None) -> Dict[str, float]:
    """Every closed form applicable to (d, n, D, k, l), keyed by name."""
    table: Dict[str, float] = {
        "eta": eta(d, D),
        "eta_swapped": eta(D, d),
        "alpha": alpha(d, D),
        "norm_second_moment": norm_second_moment(d, n, D),
        "overlap_fourth_moment_bound": overlap_fourth_moment_bound(d, n, D),
        "inverse_effective_dimension_bound": 2.0 * math.exp(-alpha(d, D) * n),
        "haar_frame_potential": haar_frame_potential(d, n),
        "two_design_exclusion_threshold": two_design_exclusion_threshold(d, n, D),
    }
    if n >= 2:
        Z = np.zeros((d, d))
        Z[0, 0], Z[1, 1] = 1.0, -1.0
        exact, bound = local_observable_second_moment(d, n, D, Z)
        table["local_observable_second_moment"] = exact
        table["local_observable_bound"] = bound
    if l is not None:
        table["connected_purity"] = connected_purity_expectation(d, n, D, l)
        table["connected_purity_bound"] = d ** -float(l) + d ** -float(n - l) + 4.0 / D ** 2
        table["purity_excess"] = purity_excess_expectation(d, n, D, l)
        table["purity_excess_bound"] = purity_excess_bound(d, n, D, l)
    if k is not None:
        table["disconnected_purity"] = disconnected_purity_expectation(d, n, D, k)
        table["extensivity_bound"] = extensivity_purity_bound(d, n, D, k)
    if d ** (2 * n) <= ORACLE_CAP:
        table["frame_potential"] = frame_potential_2(d, n, D)
        table["design_distance_sq"] = design_distance_sq(d, n, D)
    return table
