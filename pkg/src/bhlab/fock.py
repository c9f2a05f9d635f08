"""Truncated bosonic Fock basis: all occupation vectors with total <= M.

States are grouped by total particle number (sector-major), lexicographic
inside each sector. With this ordering the basis for cutoff M is a prefix of
the basis for any larger cutoff, so indices are cutoff independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

from .errors import DimensionCapError, OutOfTruncationError, ValidationError

DEFAULT_DIM_CAP = 20000


def sector_dim(L: int, m: int) -> int:
    """Number of occupation vectors on ``L`` sites with total exactly ``m``."""
    if L < 1 or m < 0:
        raise ValidationError(f"need L >= 1 and m >= 0, got L={L}, m={m}")
    return comb(m + L - 1, L - 1)


def truncated_dim(L: int, M: int) -> int:
    return comb(M + L, L)


def _compositions(m: int, L: int):
    """All length-L non-negative vectors summing to m, lexicographic ascending."""
    if L == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in _compositions(m - first, L - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class TruncatedBasis:
    L: int
    M: int
    states: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    _lookup: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def sector_range(self, m: int) -> range:
        if not 0 <= m <= self.M:
            raise OutOfTruncationError(f"sector {m} outside cutoff {self.M}")
        return range(int(self.offsets[m]), int(self.offsets[m + 1]))

    def sub_dim(self, m: int) -> int:
        """Dimension of D^(m) for m <= M; 0 for m < 0."""
        if m < 0:
            return 0
        return int(self.offsets[min(m, self.M) + 1])

    @property
    def totals(self) -> np.ndarray:
        return np.repeat(np.arange(self.M + 1), np.diff(self.offsets))

    def state_at(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.states[i])

    def index_of(self, s) -> int:
        s = tuple(int(v) for v in s)
        if len(s) != self.L:
            raise ValidationError(f"state has length {len(s)}, basis has {self.L} sites")
        try:
            return self._lookup[s]
        except KeyError:
            if min(s) < 0:
                raise ValidationError(f"negative occupation in {s}") from None
            raise OutOfTruncationError(
                f"state {s} has total {sum(s)} > cutoff {self.M}") from None

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Indices of many states at once; -1 for states outside the truncation."""
        get = self._lookup.get
        return np.fromiter((get(tuple(r), -1) for r in rows.tolist()), dtype=np.int64,
                           count=len(rows))


def enumerate_basis(L: int, M: int, cap: int = DEFAULT_DIM_CAP) -> TruncatedBasis:
    if L < 1 or M < 0:
        raise ValidationError(f"need L >= 1 and M >= 0, got L={L}, M={M}")
    dim = truncated_dim(L, M)
    if dim > cap:
        raise DimensionCapError(f"basis dimension {dim} (L={L}, M={M}) exceeds cap {cap}")
    states = np.zeros((dim, L), dtype=np.int64)
    offsets = np.zeros(M + 2, dtype=np.int64)
    i = 0
    for m in range(M + 1):
        offsets[m] = i
        for s in _compositions(m, L):
            states[i] = s
            i += 1
    offsets[M + 1] = i
    states.setflags(write=False)
    offsets.setflags(write=False)
    lookup = {tuple(r): j for j, r in enumerate(states.tolist())}
    return TruncatedBasis(L, M, states, offsets, lookup)


@lru_cache(maxsize=128)
def basis_for(L: int, M: int, cap: int = DEFAULT_DIM_CAP) -> TruncatedBasis:
    """Shared basis instance; operator caches key on basis identity."""
    return enumerate_basis(L, M, cap)
