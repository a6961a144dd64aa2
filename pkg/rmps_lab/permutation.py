"""
Permutations of tensor copies.

The t-fold moment of a Haar unitary is spanned by the states |sigma> for
sigma in S_t, where sigma says which bra copy each ket copy is wired to.
Only t <= 2 is used by the oracle, but the class is generic.
"""

from typing import List, Optional, Tuple
import itertools


class Permutation:
    """
    A permutation of t tensor copies.
    Internally stored as a mapping: copy -> copy
    """

    def __init__(self, t: int, mapping: Optional[List[int]] = None):
        """
        Initialize a permutation.

        Args:
            t: Number of copies permuted
            mapping: List where mapping[a] = b means ket copy a is wired to
                     bra copy b. If None, creates the identity.
        """
        if t < 1:
            raise ValueError(f"Number of copies must be positive, got {t}")
        self.t = t

        if mapping is None:
            self._map = list(range(t))
        else:
            if len(mapping) != t:
                raise ValueError(f"Mapping must have {t} elements")
            if set(mapping) != set(range(t)):
                raise ValueError("Mapping must be a valid permutation")
            self._map = list(mapping)

    def __call__(self, a: int) -> int:
        return self._map[a]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.t == other.t and self._map == other._map

    def __hash__(self) -> int:
        return hash((self.t, tuple(self._map)))

    def __repr__(self) -> str:
        if self.t == 2:
            return "Permutation.swap()" if self._map == [1, 0] else "Permutation.identity(2)"
        return f"Permutation({self.t}, {self._map})"

    def __mul__(self, other: 'Permutation') -> 'Permutation':
        """
        Compose permutations: (self * other)(a) = self(other(a))
        """
        if self.t != other.t:
            raise ValueError("Permutations must act on the same number of copies")
        return Permutation(self.t, [self._map[other._map[a]] for a in range(self.t)])

    def inverse(self) -> 'Permutation':
        inv_map = [0] * self.t
        for a, b in enumerate(self._map):
            inv_map[b] = a
        return Permutation(self.t, inv_map)

    def is_identity(self) -> bool:
        return self._map == list(range(self.t))

    def to_cycles(self) -> List[Tuple[int, ...]]:
        """
        Return cycle notation, fixed points included as 1-cycles.
        """
        visited = [False] * self.t
        cycles = []

        for start in range(self.t):
            if visited[start]:
                continue
            cycle = []
            current = start
            while not visited[current]:
                visited[current] = True
                cycle.append(current)
                current = self._map[current]
            cycles.append(tuple(cycle))

        return cycles

    def n_cycles(self) -> int:
        """Number of cycles; <sigma|pi> on C^q equals q ** (sigma^-1 pi).n_cycles()."""
        return len(self.to_cycles())

    @property
    def mapping(self) -> Tuple[int, ...]:
        return tuple(self._map)

    @classmethod
    def identity(cls, t: int) -> 'Permutation':
        return cls(t)

    @classmethod
    def swap(cls) -> 'Permutation':
        """The non-trivial element of S_2 (the flip F)."""
        return cls(2, [1, 0])

    @classmethod
    def all(cls, t: int) -> List['Permutation']:
        """All t! elements of S_t, identity first."""
        return [cls(t, list(p)) for p in itertools.permutations(range(t))]


# The two elements of S_2 used throughout the second-moment machinery.
IDENTITY = Permutation.identity(2)
SWAP = Permutation.swap()
