"""
End-to-end experiments over the RMPS ensemble.

Each kind samples states, compares Monte Carlo means with the exact
spin-chain values and the analytic bounds, and collects the outcome in an
ExperimentReport.  A record passes when

    |mean - exact| <= 3 stderr,  mean <= bound + 3 stderr,  mean >= lower - 3 stderr

for whichever references it carries (plus 1e-12 absolute slack for exact
records with no sampling error).
"""

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import csv
import json
import logging
import math
import time

import numpy as np
import scipy.stats

from . import statmech
from .config import ExperimentConfig
from .equilibration import (HAMILTONIAN_CAP, fluctuation_cap, load_observable,
                            sample_gue_hamiltonian, site_operator)
from .estimators import (NORMALIZED, RAW, EquilibrationFunctional, EstimatorSummary,
                         NormFunctional, ObservableFunctional, OverlapFunctional,
                         PurityFunctional, resolve_workers, sample_values)
from .haar_rmps import (ALL_IDENTITY, TRACELESS_PHASE, Boundary, RmpsEnsembleConfig, RngStream,
                        fixture_state, reduced_density_entries, state_vector)
from .patterns import SpinChainPattern
from .tensor_core import check_capacity, memory_cap
from .weingarten import ORACLE_CAP, oracle_second_moment

logger = logging.getLogger(__name__)

SIGMAS = 3.0
EXACT_ATOL = 1e-12
PER_SAMPLE_TOL = 1e-10

EXPERIMENT_KINDS = ("equilibration", "norm-concentration", "extensivity", "max-entropy",
                    "local-obs", "frame-potential")


@dataclass
class QuantityRecord:
    name: str
    mean: float
    stderr: float = 0.0
    n_samples: int = 0
    exact_value: Optional[float] = None
    bound_value: Optional[float] = None
    lower_bound_value: Optional[float] = None

    @property
    def passed(self) -> bool:
        slack = SIGMAS * self.stderr + EXACT_ATOL
        if not math.isfinite(self.mean):
            return False
        if self.exact_value is not None and abs(self.mean - self.exact_value) > slack:
            return False
        if self.bound_value is not None and self.mean > self.bound_value + slack:
            return False
        if self.lower_bound_value is not None and self.mean < self.lower_bound_value - slack:
            return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["pass"] = self.passed
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'QuantityRecord':
        return cls(**{k: v for k, v in d.items() if k != "pass"})

    @classmethod
    def from_summary(cls, name: str, summary: EstimatorSummary, **refs) -> 'QuantityRecord':
        return cls(name, summary.mean, summary.stderr, summary.samples, **refs)

    @classmethod
    def violations(cls, name: str, margins: np.ndarray) -> 'QuantityRecord':
        """Fraction of samples whose margin is below -PER_SAMPLE_TOL; passes only at zero."""
        margins = np.asarray(margins, dtype=float)
        fraction = float(np.mean(margins < -PER_SAMPLE_TOL))
        return cls(name, fraction, 0.0, int(margins.size), exact_value=0.0)


@dataclass
class SampleTable:
    """Per-sample values of one quantity: seed indices and (raw, normalized) pairs."""
    quantity: str
    seed_indices: np.ndarray
    values: np.ndarray


@dataclass
class ExperimentReport:
    kind: str
    config: Dict[str, Any]
    seed: int
    records: List[QuantityRecord] = field(default_factory=list)
    sweep: List[Dict[str, Any]] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    samples: List[SampleTable] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    def record(self, name: str) -> QuantityRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(f"Report has no record {name!r}")

    def failed(self) -> List[str]:
        return [r.name for r in self.records if not r.passed]

    def to_dict(self) -> Dict[str, Any]:
        return _json_safe({
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "wall_clock_seconds": self.wall_clock_seconds,
            "all_passed": self.all_passed,
            "records": [r.to_dict() for r in self.records],
            "sweep": self.sweep,
            "extras": self.extras,
        })

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> 'ExperimentReport':
        return cls(
            kind=d["kind"],
            config=d["config"],
            seed=d["seed"],
            records=[QuantityRecord.from_dict(r) for r in d["records"]],
            sweep=d.get("sweep", []),
            extras=d.get("extras", {}),
            wall_clock_seconds=d.get("wall_clock_seconds", 0.0),
        )


def _json_safe(value: Any) -> Any:
    """Non-finite floats become null; numpy scalars and arrays become plain Python."""
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


# ---------------------------------------------------------------------------
# Experiment points
# ---------------------------------------------------------------------------

@dataclass
class PointResult:
    records: List[QuantityRecord]
    headline: str
    samples: List[SampleTable] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)


def _ensemble(cfg: ExperimentConfig) -> RmpsEnsembleConfig:
    boundary = Boundary.periodic() if cfg.boundary == "periodic" else Boundary.open_zero(cfg.D)
    return RmpsEnsembleConfig(cfg.d, cfg.n, cfg.D, boundary)


def _summary(values: np.ndarray, q: int, variant: int) -> EstimatorSummary:
    return EstimatorSummary.from_values(values[:, q, variant])


def _tables(functional, values: np.ndarray) -> List[SampleTable]:
    seeds = np.arange(values.shape[0])
    return [SampleTable(name, seeds, values[:, q, :]) for q, name in enumerate(functional.quantities)]


def _equilibration_point(cfg: ExperimentConfig, stream: RngStream, workers: int) -> PointResult:
    d, n, D = cfg.d, cfg.n, cfg.D
    periodic = cfg.boundary == "periodic"
    O = load_observable(cfg.observable, d)
    A = site_operator(O, 0, n)
    H = sample_gue_hamiltonian(d ** n, stream.substream(0))
    functional = EquilibrationFunctional(H, A)
    values = sample_values(functional, _ensemble(cfg), cfg.samples, stream.substream(1), workers)

    a = statmech.alpha(d, D)
    inverse_bound = 2.0 * math.exp(-a * n) if periodic else None
    norm_sq = functional.operator_norm_sq
    fluctuation = values[:, functional.index("fluctuation"), NORMALIZED]
    norm_bound = values[:, functional.index("fluctuation_norm_bound"), NORMALIZED]
    d_eff = values[:, functional.index("effective_dimension"), NORMALIZED]

    records = [
        QuantityRecord.from_summary(
            "inverse_effective_dimension",
            _summary(values, functional.index("inverse_effective_dimension"), NORMALIZED),
            bound_value=inverse_bound),
        QuantityRecord.from_summary(
            "overlap_fourth_power_sum_raw",
            _summary(values, functional.index("inverse_effective_dimension"), RAW),
            bound_value=d ** n * statmech.overlap_fourth_moment_bound(d, n, D) if periodic else None),
        QuantityRecord.from_summary(
            "fluctuation", EstimatorSummary.from_values(fluctuation),
            bound_value=norm_sq * inverse_bound if periodic else None),
        QuantityRecord.violations("fluctuation_norm_bound_violations", norm_bound - fluctuation),
        QuantityRecord.violations("fluctuation_cap_violations",
                                  fluctuation_cap(H, A) - fluctuation),
    ]
    counts, edges = np.histogram(d_eff, bins=min(20, max(1, cfg.samples // 5)))
    extras = {
        "effective_dimension_histogram": {"counts": counts, "edges": edges},
        "alpha": a,
        "hamiltonian_min_gap": float(np.min(np.diff(H.eigenvalues))) if H.dim > 1 else None,
    }
    if periodic:
        extras["tail_chain"] = asdict(statmech.equilibration_tail_chain(
            d, n, D, observable_norm=math.sqrt(norm_sq)))
    return PointResult(records, "inverse_effective_dimension", _tables(functional, values), extras)


def _norm_point(cfg: ExperimentConfig, stream: RngStream, workers: int) -> PointResult:
    d, n, D = cfg.d, cfg.n, cfg.D
    periodic = cfg.boundary == "periodic"
    functional = NormFunctional()
    values = sample_values(functional, _ensemble(cfg), cfg.samples, stream, workers)
    norms = values[:, 0, RAW]
    tail = (np.abs(norms - 1.0) >= cfg.epsilon).astype(float)

    records = [
        QuantityRecord.from_summary("norm", _summary(values, 0, RAW),
                                    exact_value=1.0 if periodic else None),
        QuantityRecord.from_summary(
            "norm_squared", _summary(values, 1, RAW),
            exact_value=statmech.norm_second_moment(d, n, D) if periodic else None),
        QuantityRecord.from_summary(
            "norm_tail", EstimatorSummary.from_values(tail),
            bound_value=float(d) ** -n / cfg.epsilon ** 2 if periodic else None),
    ]
    extras = {"epsilon": cfg.epsilon,
              "chebyshev_tail": statmech.eta(d, D) ** n / cfg.epsilon ** 2 if periodic else None}
    return PointResult(records, "norm_tail", _tables(functional, values), extras)


def _purity_check_capacity(d: int, D: int, side: int) -> None:
    check_capacity("reduced_density", reduced_density_entries(d, D, side), memory_cap(),
                   "the smaller side of the cut must fit in memory")


def _extensivity_point(cfg: ExperimentConfig, stream: RngStream, workers: int) -> PointResult:
    d, n, D, k = cfg.d, cfg.n, cfg.D, cfg.k
    if n % k != 0:
        raise ValueError(f"k={k} must divide n={n}")
    periodic = cfg.boundary == "periodic"
    traced = list(range(0, n, k))
    kept = [j for j in range(n) if j not in traced]
    _purity_check_capacity(d, D, min(len(traced), len(kept)))
    functional = PurityFunctional(kept, n)
    values = sample_values(functional, _ensemble(cfg), cfg.samples, stream, workers)

    exact = statmech.disconnected_purity_expectation(d, n, D, k) if periodic else None
    bound = statmech.extensivity_purity_bound(d, n, D, k) if periodic else None
    records = [
        QuantityRecord.from_summary("purity_raw", _summary(values, 0, RAW), exact_value=exact),
        QuantityRecord.from_summary("purity", _summary(values, 0, NORMALIZED), bound_value=bound),
        QuantityRecord.from_summary("renyi2", _summary(values, 1, NORMALIZED)),
    ]
    if periodic:
        records.append(QuantityRecord("exact_below_extensivity_bound", exact, bound_value=bound))
    return PointResult(records, "purity", _tables(functional, values),
                       {"blocks": n // k, "traced_sites": traced})


def _max_entropy_point(cfg: ExperimentConfig, stream: RngStream, workers: int) -> PointResult:
    d, n, D, l = cfg.d, cfg.n, cfg.D, cfg.l
    if not 1 <= l <= n - 1:
        raise ValueError(f"Block length l={l} must satisfy 1 <= l <= n-1 (n={n})")
    periodic = cfg.boundary == "periodic"
    _purity_check_capacity(d, D, min(l, n - l))
    functional = PurityFunctional(range(l), n)
    values = sample_values(functional, _ensemble(cfg), cfg.samples, stream, workers)

    raw = values[:, 0, RAW]
    normalized = values[:, 0, NORMALIZED]
    norm_sq = raw / normalized
    excess = raw - norm_sq * float(d) ** -l
    cuts = 2 if periodic else 1
    floor = 1.0 / min(float(D) ** cuts, float(d) ** l, float(d) ** (n - l))

    records = [
        QuantityRecord.from_summary(
            "purity_raw", _summary(values, 0, RAW),
            exact_value=statmech.connected_purity_expectation(d, n, D, l) if periodic else None),
        QuantityRecord.from_summary(
            "purity", _summary(values, 0, NORMALIZED),
            bound_value=(float(d) ** -l + float(d) ** -(n - l) + 4.0 / D ** 2) if periodic else None),
        QuantityRecord.from_summary(
            "purity_excess", EstimatorSummary.from_values(excess),
            exact_value=statmech.purity_excess_expectation(d, n, D, l) if periodic else None,
            bound_value=statmech.purity_excess_bound(d, n, D, l) if periodic else None),
        QuantityRecord.from_summary("renyi2", _summary(values, 1, NORMALIZED)),
        QuantityRecord.violations("schmidt_floor_violations", normalized - floor),
    ]
    extras = {"purity_floor": floor,
              "purity_excess_regime": statmech.purity_excess_regime(d, n, D, l)}
    return PointResult(records, "purity", _tables(functional, values), extras)


def _local_obs_point(cfg: ExperimentConfig, stream: RngStream, workers: int) -> PointResult:
    d, n, D = cfg.d, cfg.n, cfg.D
    periodic = cfg.boundary == "periodic"
    O = load_observable(cfg.observable, d)
    functional = ObservableFunctional(O, 0)
    values = sample_values(functional, _ensemble(cfg), cfg.samples, stream, workers)

    exact = bound = refined = None
    if periodic and n >= 2:
        exact, bound = statmech.local_observable_second_moment(d, n, D, O)
        refined = statmech.local_observable_refined_bound(d, n, D, O)
    records = [
        QuantityRecord.from_summary("expectation", _summary(values, 0, RAW),
                                    exact_value=0.0 if periodic else None),
        QuantityRecord.from_summary("expectation_squared_raw", _summary(values, 1, RAW),
                                    exact_value=exact),
        QuantityRecord.from_summary("expectation_squared", _summary(values, 1, NORMALIZED),
                                    bound_value=bound),
        QuantityRecord.violations("holder_violations", values[:, 2, NORMALIZED]),
    ]
    return PointResult(records, "expectation_squared", _tables(functional, values),
                       {"refined_bound": refined})


def _frame_potential_point(cfg: ExperimentConfig, stream: RngStream, workers: int) -> PointResult:
    d, n, D = cfg.d, cfg.n, cfg.D
    periodic = cfg.boundary == "periodic"
    ensemble = _ensemble(cfg)
    functional = OverlapFunctional(ensemble)
    values = sample_values(functional, ensemble, cfg.samples, stream, workers)

    floor = statmech.haar_frame_potential(d, n)
    exact_path = periodic and d ** (2 * n) <= ORACLE_CAP
    records = [
        QuantityRecord.from_summary(
            "frame_potential_raw", _summary(values, 0, RAW),
            exact_value=statmech.frame_potential_2(d, n, D) if exact_path else None,
            lower_bound_value=floor),
        QuantityRecord.from_summary("frame_potential", _summary(values, 0, NORMALIZED),
                                    lower_bound_value=floor),
    ]
    extras: Dict[str, Any] = {"haar_frame_potential": floor,
                              "exclusion_threshold": statmech.two_design_exclusion_threshold(d, n, D)}
    if exact_path:
        M = statmech.ensemble_moment_operator(d, n, D)
        N = float(d) ** n
        distance_sq = statmech.design_distance_sq_of(M, d, n)
        trace = float(np.trace(M))
        expanded = float(np.sum(M * M)) - 4 * trace / (N * (N + 1)) + 2 / (N * (N + 1))
        records.append(QuantityRecord("design_distance_sq", distance_sq,
                                      lower_bound_value=2 * (trace - 1) ** 2 / (N * (N + 1))))
        records.append(QuantityRecord("design_distance_expansion", distance_sq,
                                      exact_value=expanded))
        extras["design_distance"] = math.sqrt(distance_sq)
        extras["design_distance_exceeds_threshold"] = (
            math.sqrt(distance_sq) > extras["exclusion_threshold"])
    else:
        logger.info("d^(2n) = %d beyond the exact cap; frame potential is Monte Carlo only",
                    d ** (2 * n))
    return PointResult(records, "frame_potential", _tables(functional, values), extras)


POINTS = {
    "equilibration": _equilibration_point,
    "norm-concentration": _norm_point,
    "extensivity": _extensivity_point,
    "max-entropy": _max_entropy_point,
    "local-obs": _local_obs_point,
    "frame-potential": _frame_potential_point,
}


def _check_caps(kind: str, cfg: ExperimentConfig) -> None:
    """Cap violations surface before any state is drawn."""
    for n in _sweep_points(kind, cfg):
        if kind == "equilibration":
            check_capacity("equilibration", cfg.d ** n, min(HAMILTONIAN_CAP, memory_cap()),
                           f"equilibration needs d^n <= {HAMILTONIAN_CAP}")
        elif kind == "extensivity":
            traced = len(range(0, n, cfg.k))
            _purity_check_capacity(cfg.d, cfg.D, min(traced, n - traced))
        elif kind == "max-entropy":
            _purity_check_capacity(cfg.d, cfg.D, min(cfg.l, max(n - cfg.l, 0)))


def _sweep_points(kind: str, cfg: ExperimentConfig) -> Tuple[int, ...]:
    if cfg.sweep is not None:
        return tuple(cfg.sweep)
    if kind == "extensivity":
        return tuple(sorted({cfg.k, 2 * cfg.k, 3 * cfg.k, cfg.n}))
    return (cfg.n,)


def run_experiment(kind: str, cfg: ExperimentConfig, rng: Optional[RngStream] = None,
                   workers: Optional[int] = None) -> ExperimentReport:
    """
    Run one experiment kind, over every sweep point.

    Sweep point p draws from rng.substream(p); with a single point the
    records keep their plain names, otherwise they are suffixed [n=...].
    """
    if kind not in POINTS:
        raise ValueError(f"Unknown experiment kind {kind!r}, expected one of {EXPERIMENT_KINDS}")
    rng = RngStream(cfg.seed) if rng is None else rng
    workers = resolve_workers(workers if workers is not None else cfg.workers)
    _check_caps(kind, cfg)

    points = _sweep_points(kind, cfg)
    logger.info("running %s at %s over n=%s with %d samples on %d workers",
                kind, (cfg.d, cfg.D), list(points), cfg.samples, workers)
    start = time.perf_counter()
    report = ExperimentReport(kind=kind, config=asdict(cfg), seed=rng.seed)

    for p, n in enumerate(points):
        point_cfg = replace(cfg, n=n)
        result = POINTS[kind](point_cfg, rng.substream(p), workers)
        suffix = f"[n={n}]" if len(points) > 1 else ""
        for r in result.records:
            r.name += suffix
            report.records.append(r)
        for table in result.samples:
            table.quantity += suffix
            report.samples.append(table)
        if result.extras:
            report.extras[f"n={n}"] = result.extras

        headline = report.record(result.headline + suffix)
        report.sweep.append({
            "x": n,
            "quantity": result.headline,
            "mean": headline.mean,
            "stderr": headline.stderr,
            "exact": headline.exact_value,
            "bound": headline.bound_value,
        })

    if kind == "extensivity":
        _fit_renyi_slope(report, cfg, points)

    report.wall_clock_seconds = time.perf_counter() - start
    logger.info("%s finished in %.2fs: %d/%d records pass", kind, report.wall_clock_seconds,
                sum(r.passed for r in report.records), len(report.records))
    return report


def _fit_renyi_slope(report: ExperimentReport, cfg: ExperimentConfig,
                     points: Sequence[int]) -> None:
    """S_2 against the number of blocks n/k; the slope must be positive."""
    if len(points) < 2:
        return
    blocks = np.array([n / cfg.k for n in points])
    suffix = (lambda n: f"[n={n}]")
    entropies = np.array([report.record("renyi2" + suffix(n)).mean for n in points])
    fit = scipy.stats.linregress(blocks, entropies)
    report.extras["renyi2_slope"] = {"slope": float(fit.slope), "intercept": float(fit.intercept),
                                     "stderr": float(fit.stderr), "rvalue": float(fit.rvalue)}
    report.records.append(QuantityRecord("renyi2_slope", float(fit.slope),
                                         lower_bound_value=0.0))


# ---------------------------------------------------------------------------
# Exact queries and self-test
# ---------------------------------------------------------------------------

def oracle_patterns(n: int, d: int) -> List[Tuple[str, SpinChainPattern]]:
    """The patterns checked against the brute-force oracle at one chain length."""
    patterns = [("all-blue", SpinChainPattern.all_blue(n))]
    patterns += [(f"green-block-l{l}", SpinChainPattern.green_block(n, l)) for l in range(1, n)]
    patterns += [(f"every-{k}-green", SpinChainPattern.every_kth_green(n, k))
                 for k in range(2, n + 1) if n % k == 0]
    Z = np.zeros((d, d))
    Z[0, 0], Z[1, 1] = 1.0, -1.0
    patterns.append(("single-obs-z", SpinChainPattern.single_obs(n, Z)))
    return patterns


def run_exact(cfg: ExperimentConfig) -> ExperimentReport:
    """Every applicable closed form, cross-checked against the oracle when it fits."""
    d, n, D = cfg.d, cfg.n, cfg.D
    start = time.perf_counter()
    report = ExperimentReport(kind="exact", config=asdict(cfg), seed=cfg.seed)
    table = statmech.closed_forms(d, n, D, k=cfg.k, l=cfg.l)
    report.extras["closed_forms"] = table

    refs = {
        "norm_second_moment": {},
        "connected_purity": {"bound_value": table.get("connected_purity_bound")},
        "disconnected_purity": {"bound_value": table.get("extensivity_bound")},
        "local_observable_second_moment": {"bound_value": table.get("local_observable_bound")},
        "purity_excess": {"bound_value": table.get("purity_excess_bound")},
        "frame_potential": {"lower_bound_value": table.get("haar_frame_potential")},
    }
    for name, value in table.items():
        report.records.append(QuantityRecord(name, value, **refs.get(name, {})))

    if (d * D) ** 4 <= ORACLE_CAP:
        for label, pattern in oracle_patterns(n, d):
            report.records.append(QuantityRecord(
                f"oracle:{label}", statmech.exact_chain_value(pattern, d, D),
                exact_value=oracle_second_moment(pattern, d, D)))
    else:
        logger.info("(dD)^4 = %d beyond the oracle cap; skipping oracle checks", (d * D) ** 4)
    report.wall_clock_seconds = time.perf_counter() - start
    return report


def selftest_grid() -> List[Tuple[int, int, int]]:
    """(d, D, n) with d >= 2, dD <= 6 and n <= 5."""
    return [(d, D, n) for d in range(2, 7) for D in range(1, 7) if d * D <= 6
            for n in range(1, 6)]


def run_selftest(seed: int = 0) -> ExperimentReport:
    """Oracle grid plus the pinned closed-form and fixture values."""
    start = time.perf_counter()
    report = ExperimentReport(kind="selftest", config={"kind": "selftest"}, seed=seed)

    for d, D, n in selftest_grid():
        for label, pattern in oracle_patterns(n, d):
            report.records.append(QuantityRecord(
                f"oracle[d={d},D={D},n={n}]:{label}", statmech.exact_chain_value(pattern, d, D),
                exact_value=oracle_second_moment(pattern, d, D)))

    pinned = [
        ("eta(2,2)", statmech.eta(2, 2), 0.4),
        ("alpha(2,2)", statmech.alpha(2, 2), 0.0),
        ("alpha(2,3)", statmech.alpha(2, 3), math.log(1.25)),
        ("norm_second_moment(2,4,2)", statmech.norm_second_moment(2, 4, 2), 1.0256),
        ("connected_purity(2,4,2,1)", statmech.connected_purity_expectation(2, 4, 2, 1), 0.7136),
        ("overlap_bound(2,1,2)", statmech.overlap_fourth_moment_bound(2, 1, 2), 1.0),
        ("haar_frame_potential(2,2)", statmech.haar_frame_potential(2, 2), 0.1),
    ]
    for name, value, expected in pinned:
        report.records.append(QuantityRecord(name, value, exact_value=expected))

    for D in (1, 2, 3):
        psi = state_vector(fixture_state(ALL_IDENTITY, RmpsEnsembleConfig(2, 4, D)))
        expected = np.zeros(16)
        expected[0] = D
        report.records.append(QuantityRecord(
            f"fixture:{ALL_IDENTITY}(D={D})", float(np.max(np.abs(psi - expected))), exact_value=0.0))
    for D in (2, 3):
        psi = state_vector(fixture_state(TRACELESS_PHASE, RmpsEnsembleConfig(2, 4, D), site=1))
        report.records.append(QuantityRecord(
            f"fixture:{TRACELESS_PHASE}(D={D})", float(np.max(np.abs(psi))), exact_value=0.0))

    report.wall_clock_seconds = time.perf_counter() - start
    logger.info("selftest: %d records, %d failed", len(report.records), len(report.failed()))
    return report


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

REPORT_FILE = "report.json"
SAMPLES_FILE = "samples.csv"
CSV_COLUMNS = ("sample_index", "seed_index", "quantity", "raw_value", "normalized_value")


def write_report(report: ExperimentReport, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / REPORT_FILE
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2)
    return path


def load_report(path: Path) -> ExperimentReport:
    with open(path) as f:
        return ExperimentReport.from_dict(json.load(f))


def _csv_float(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else "nan"


def write_samples_csv(report: ExperimentReport, path: Path) -> Path:
    """One row per (sample, quantity); floats in repr form, '.' decimal separator."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        row = 0
        for table in report.samples:
            for seed_index, (raw, normalized) in zip(table.seed_indices, table.values):
                writer.writerow([row, int(seed_index), table.quantity,
                                 _csv_float(raw), _csv_float(normalized)])
                row += 1
    return path
