"""
Monte Carlo estimation over the RMPS ensemble.

A functional maps one sampled state to a (quantities x 2) array holding the
raw value (unnormalized state) and the value on the normalized state.  NaN
marks a variant that does not exist, e.g. the raw Renyi entropy.

Sample i is drawn from stream.substream(i).substream(0); anything else the
functional needs (a second state, say) comes from substream(1).  Values are
gathered in sample order, so results do not depend on the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple
import logging
import math
import os

import numpy as np

from .equilibration import SpectralHamiltonian, effective_dimension, time_fluctuation_exact
from .haar_rmps import (MpsState, RmpsEnsembleConfig, RngStream, norm_squared_tm, overlap,
                        reduced_density, sample_rmps, state_vector)
from .tensor_core import purity_of, renyi2

logger = logging.getLogger(__name__)

RAW = 0
NORMALIZED = 1


@dataclass(frozen=True)
class EstimatorSummary:
    mean: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError(f"An estimate needs at least 2 samples, got {self.samples}")
        if not self.stderr >= 0:
            raise ValueError(f"Standard error must be non-negative, got {self.stderr}")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> 'EstimatorSummary':
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size < 2:
            raise ValueError(f"An estimate needs at least 2 samples, got {v.size}")
        return cls(float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size)), int(v.size))


class Functional:
    """Base class; subclasses set `quantities` and implement __call__."""
    quantities: Tuple[str, ...] = ()

    def __call__(self, state: MpsState, aux: RngStream) -> np.ndarray:
        raise NotImplementedError

    def index(self, quantity: str) -> int:
        try:
            return self.quantities.index(quantity)
        except ValueError:
            raise ValueError(f"{type(self).__name__} has no quantity {quantity!r}; "
                             f"available: {self.quantities}")


class NormFunctional(Functional):
    quantities = ("norm", "norm_squared")

    def __call__(self, state, aux):
        N = norm_squared_tm(state)
        return np.array([[N, 1.0], [N * N, 1.0]])


class PurityFunctional(Functional):
    """tr[rho_A^2] and S_2 for a subsystem A; evaluated on the smaller side of the cut."""
    quantities = ("purity", "renyi2")

    def __init__(self, subset: Iterable[int], n: int):
        self.subset = tuple(sorted(set(subset)))
        complement = tuple(j for j in range(n) if j not in self.subset)
        self.traced_side = min(self.subset, complement, key=len)
        self.n = n

    def __call__(self, state, aux):
        if not self.traced_side:
            N = norm_squared_tm(state)
            return np.array([[N * N, 1.0], [np.nan, 0.0]])
        rho = reduced_density(state, self.traced_side)
        raw = purity_of(rho)
        return np.array([[raw, raw / rho.trace ** 2], [np.nan, renyi2(rho.normalized())]])


class ObservableFunctional(Functional):
    """<psi|O_site|psi>, its square, and the Hoelder slack |rho' - 1/d|_inf |O|_1 - |tr O rho'|."""
    quantities = ("expectation", "expectation_squared", "holder_slack")

    def __init__(self, observable: np.ndarray, site: int = 0):
        self.observable = np.asarray(observable)
        self.site = site
        self.trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(self.observable))))

    def __call__(self, state, aux):
        rho = reduced_density(state, [self.site]).matrix
        N = float(np.trace(rho).real)
        raw = float(np.real(np.trace(self.observable @ rho)))
        normalized = raw / N
        d = rho.shape[0]
        deviation = np.max(np.abs(np.linalg.eigvalsh(rho / N - np.eye(d) / d)))
        slack = deviation * self.trace_norm - abs(normalized)
        return np.array([[raw, normalized], [raw * raw, normalized * normalized],
                         [np.nan, slack]])


class EquilibrationFunctional(Functional):
    """
    Effective dimension and infinite-time fluctuation against a fixed Hamiltonian.

    The raw overlap sum is sum_j |<j|psi>|^4 on the unnormalized state.
    """
    quantities = ("inverse_effective_dimension", "effective_dimension",
                  "fluctuation", "fluctuation_norm_bound")

    def __init__(self, hamiltonian: SpectralHamiltonian, observable: np.ndarray):
        self.hamiltonian = hamiltonian
        self.observable = np.asarray(observable)
        self.operator_norm_sq = float(np.max(np.abs(np.linalg.eigvalsh(self.observable)))) ** 2

    def __call__(self, state, aux):
        psi = state_vector(state)
        N = float(np.vdot(psi, psi).real)
        c = self.hamiltonian.eigenvectors.conj().T @ psi
        raw_sum = float(np.sum(np.abs(c) ** 4))
        psi_n = psi / math.sqrt(N)
        d_eff = effective_dimension(psi_n, self.hamiltonian)
        fluctuation = time_fluctuation_exact(psi_n, self.hamiltonian, self.observable)
        return np.array([[raw_sum, 1.0 / d_eff], [np.nan, d_eff],
                         [np.nan, fluctuation], [np.nan, self.operator_norm_sq / d_eff]])


class OverlapFunctional(Functional):
    """|<psi|phi>|^4 for phi drawn independently from the same ensemble."""
    quantities = ("overlap_fourth_power",)

    def __init__(self, cfg: RmpsEnsembleConfig):
        self.cfg = cfg

    def __call__(self, state, aux):
        phi = sample_rmps(self.cfg, aux)
        raw = abs(overlap(state, phi)) ** 4
        normalized = raw / (norm_squared_tm(state) * norm_squared_tm(phi)) ** 2
        return np.array([[raw, normalized]])


def resolve_workers(requested: Optional[int] = None) -> int:
    """min(requested or cpu_count, RMPS_LAB_THREADS)."""
    workers = requested or os.cpu_count() or 1
    limit = os.environ.get("RMPS_LAB_THREADS")
    if limit is not None:
        try:
            workers = min(workers, max(1, int(limit)))
        except ValueError:
            raise ValueError(f"RMPS_LAB_THREADS must be an integer, got {limit!r}")
    return max(1, workers)


def _evaluate_chunk(functional: Functional, cfg: RmpsEnsembleConfig, stream: RngStream,
                    start: int, stop: int) -> np.ndarray:
    rows = []
    for i in range(start, stop):
        sample_stream = stream.substream(i)
        state = sample_rmps(cfg, sample_stream.substream(0))
        rows.append(np.asarray(functional(state, sample_stream.substream(1)), dtype=float))
    return np.stack(rows)


def sample_values(functional: Functional, cfg: RmpsEnsembleConfig, samples: int,
                  stream: RngStream, workers: int = 1) -> np.ndarray:
    """
    Evaluate a functional on `samples` i.i.d. draws.

    Returns:
        Array of shape (samples, len(functional.quantities), 2)
    """
    if samples < 1:
        raise ValueError(f"Need at least one sample, got {samples}")
    workers = max(1, min(workers, samples))
    if workers == 1:
        return _evaluate_chunk(functional, cfg, stream, 0, samples)

    chunk = math.ceil(samples / (4 * workers))
    bounds = [(s, min(s + chunk, samples)) for s in range(0, samples, chunk)]
    logger.debug("sampling %d states in %d chunks on %d workers", samples, len(bounds), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_evaluate_chunk, functional, cfg, stream, s, e) for s, e in bounds]
        return np.concatenate([f.result() for f in futures])


def monte_carlo_estimate(functional: Functional, cfg: RmpsEnsembleConfig, samples: int,
                         rng: RngStream, quantity: Optional[str] = None,
                         normalized: bool = False, workers: int = 1) -> EstimatorSummary:
    """Mean and standard error of one quantity of a functional over i.i.d. draws."""
    if samples < 2:
        raise ValueError(f"monte_carlo_estimate needs samples >= 2, got {samples}")
    q = 0 if quantity is None else functional.index(quantity)
    values = sample_values(functional, cfg, samples, rng, workers)
    return EstimatorSummary.from_values(values[:, q, NORMALIZED if normalized else RAW])
