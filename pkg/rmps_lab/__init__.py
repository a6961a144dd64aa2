"""
Random Matrix Product States laboratory
Haar-random MPS, Weingarten oracles and transfer-matrix second moments
"""

__version__ = "0.1.0"
__all__ = [
    'Permutation', 'RngStream', 'RmpsEnsembleConfig', 'MpsState',
    'SiteTag', 'SpinChainPattern', 'TransferMatrix2',
    'SpectralHamiltonian', 'EstimatorSummary',
    'ExperimentConfig', 'ExperimentReport', 'CapacityExceeded',
]

from .permutation import Permutation
from .tensor_core import CapacityExceeded
from .haar_rmps import RngStream, RmpsEnsembleConfig, MpsState
from .patterns import SiteTag, SpinChainPattern
from .statmech import TransferMatrix2
from .equilibration import SpectralHamiltonian
from .estimators import EstimatorSummary
from .config import ExperimentConfig
from .experiments import ExperimentReport
