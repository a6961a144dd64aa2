"""
Site colourings of the second-moment spin chain.

Each site of the doubled network is closed on the physical legs in one of
three ways:

    Blue   ket copy a wired to bra copy a         (norm-like)
    Green  ket copy a wired to bra copy 1 - a     (swap, region A of a purity)
    Obs    as Blue with an observable O on both copies
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

BLUE = "blue"
GREEN = "green"
OBS = "obs"


@dataclass(frozen=True, eq=False)
class SiteTag:
    kind: str
    observable: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (BLUE, GREEN, OBS):
            raise ValueError(f"Unknown site tag {self.kind!r}")
        if self.kind == OBS:
            if self.observable is None:
                raise ValueError("Obs tag needs an observable matrix")
            O = np.array(self.observable, dtype=complex)
            if O.ndim != 2 or O.shape[0] != O.shape[1]:
                raise ValueError(f"Observable must be square, got shape {O.shape}")
            if np.max(np.abs(O - O.conj().T)) > 1e-10:
                raise ValueError("Observable must be Hermitian")
            O.setflags(write=False)
            object.__setattr__(self, "observable", O)
        elif self.observable is not None:
            raise ValueError(f"{self.kind} tag takes no observable")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SiteTag):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.kind != OBS:
            return True
        return (self.observable.shape == other.observable.shape
                and bool(np.allclose(self.observable, other.observable)))

    def __hash__(self) -> int:
        return hash(self.kind)

    def __repr__(self) -> str:
        return f"SiteTag({self.kind})"

    @classmethod
    def blue(cls) -> 'SiteTag':
        return cls(BLUE)

    @classmethod
    def green(cls) -> 'SiteTag':
        return cls(GREEN)

    @classmethod
    def obs(cls, observable: np.ndarray) -> 'SiteTag':
        return cls(OBS, observable)


@dataclass(frozen=True)
class SpinChainPattern:
    """An ordered, periodically closed sequence of site tags."""
    sites: Tuple[SiteTag, ...]

    def __post_init__(self):
        sites = tuple(self.sites)
        if not sites:
            raise ValueError("A pattern needs at least one site")
        object.__setattr__(self, "sites", sites)

    @property
    def n(self) -> int:
        return len(self.sites)

    def green_sites(self) -> Tuple[int, ...]:
        return tuple(j for j, tag in enumerate(self.sites) if tag.kind == GREEN)

    @classmethod
    def all_blue(cls, n: int) -> 'SpinChainPattern':
        """E <psi|psi>^2."""
        return cls(tuple(SiteTag.blue() for _ in range(n)))

    @classmethod
    def green_region(cls, n: int, region: Iterable[int]) -> 'SpinChainPattern':
        """E tr[rho_A^2] for A = region."""
        region = set(region)
        for site in region:
            if not 0 <= site < n:
                raise ValueError(f"Site {site} out of range for n={n}")
        return cls(tuple(SiteTag.green() if j in region else SiteTag.blue() for j in range(n)))

    @classmethod
    def green_block(cls, n: int, l: int, start: int = 0) -> 'SpinChainPattern':
        """l consecutive Green sites starting at `start` (wrapping around the ring)."""
        if not 0 <= l <= n:
            raise ValueError(f"Block length {l} out of range for n={n}")
        return cls.green_region(n, [(start + j) % n for j in range(l)])

    @classmethod
    def every_kth_green(cls, n: int, k: int) -> 'SpinChainPattern':
        """Green on sites 0, k, 2k, ...; the traced-out set of the disconnected purity."""
        if k < 1 or n % k != 0:
            raise ValueError(f"k={k} must divide n={n}")
        return cls.green_region(n, range(0, n, k))

    @classmethod
    def single_obs(cls, n: int, observable: np.ndarray, site: int = 0) -> 'SpinChainPattern':
        """E <psi|O_site (x) 1|psi>^2."""
        if not 0 <= site < n:
            raise ValueError(f"Site {site} out of range for n={n}")
        return cls(tuple(SiteTag.obs(observable) if j == site else SiteTag.blue()
                         for j in range(n)))
