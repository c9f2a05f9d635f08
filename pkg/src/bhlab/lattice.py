"""Periodic cubic lattice and its Brillouin-zone momenta.

Sites and momenta are integer tuples ordered lexicographically. Momenta are
kept as the integers ``n`` with ``k = 2*pi*n/N`` so plane-wave phases can be
reduced modulo ``N`` before any floating point enters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
import math

import numpy as np

from .errors import InvalidSiteError, ValidationError

Site = tuple[int, ...]


@dataclass(frozen=True)
class LatticeSpec:
    """Cubic lattice ``{0..N-1}^d`` with torus arithmetic."""

    d: int
    N: int

    def __post_init__(self):
        if not (1 <= self.d <= 3):
            raise ValidationError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 2:
            raise ValidationError(f"linear size must be >= 2, got {self.N}")

    @property
    def size(self) -> int:
        return self.N ** self.d

    @cached_property
    def sites(self) -> tuple[Site, ...]:
        return tuple(product(range(self.N), repeat=self.d))

    @cached_property
    def _site_index(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.sites)}

    def site_index(self, x) -> int:
        return self._site_index[self.check_site(x)]

    def check_site(self, x) -> Site:
        x = tuple(int(c) for c in np.atleast_1d(x))
        if len(x) != self.d or any(c < 0 or c >= self.N for c in x):
            raise InvalidSiteError(f"{x} is not a site of the {self.d}-d lattice with N={self.N}")
        return x

    def reduce(self, z) -> Site:
        """Map an arbitrary integer displacement onto its torus representative."""
        z = tuple(int(c) for c in np.atleast_1d(z))
        if len(z) != self.d:
            raise InvalidSiteError(f"displacement {z} has wrong length for d={self.d}")
        return tuple(c % self.N for c in z)

    def minimal_image(self, z) -> Site:
        """Representative of ``z`` with every component in (-N/2, N/2]."""
        out = []
        for c in self.reduce(z):
            if c > self.N / 2:
                c -= self.N
            out.append(c)
        return tuple(out)


def torus_add(spec: LatticeSpec, x, y) -> Site:
    x, y = spec.check_site(x), spec.check_site(y)
    return tuple((a + b) % spec.N for a, b in zip(x, y))


def torus_sub(spec: LatticeSpec, x, y) -> Site:
    x, y = spec.check_site(x), spec.check_site(y)
    return tuple((a - b) % spec.N for a, b in zip(x, y))


@dataclass(frozen=True)
class Momentum:
    """Brillouin-zone momentum ``k_i = 2*pi*n_i/N``."""

    n: tuple[int, ...]
    N: int

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(self.n, dtype=float) / self.N

    @property
    def k_squared(self) -> float:
        # components taken in [0, 2pi), not folded to (-pi, pi]
        return float(np.dot(self.k, self.k))

    @property
    def is_zero(self) -> bool:
        return not any(self.n)


def brillouin_momenta(spec: LatticeSpec) -> list[Momentum]:
    return [Momentum(n, spec.N) for n in product(range(spec.N), repeat=spec.d)]


def zero_momentum(spec: LatticeSpec) -> Momentum:
    return Momentum((0,) * spec.d, spec.N)


def plane_wave(k: Momentum, x) -> complex:
    """``exp(i k.x)`` with the phase reduced modulo N in integer arithmetic."""
    x = tuple(int(c) for c in np.atleast_1d(x))
    if len(x) != len(k.n):
        raise InvalidSiteError(f"site {x} and momentum {k.n} differ in dimension")
    r = sum(a * b for a, b in zip(k.n, x)) % k.N
    return _root_of_unity(r, k.N)


def _root_of_unity(r: int, N: int) -> complex:
    # exact values on the axes keep sums like sum_k e^{ikx} clean
    if (4 * r) % N == 0:
        return (1.0, 1j, -1.0, -1j)[(4 * r) // N]
    theta = 2.0 * math.pi * r / N
    return complex(math.cos(theta), math.sin(theta))


def phase_vector(spec: LatticeSpec, k: Momentum, sign: int = 1) -> np.ndarray:
    """``exp(sign * i k.x)`` for every site in lattice order."""
    return np.array([plane_wave(k, x) if sign > 0 else plane_wave(k, x).conjugate()
                     for x in spec.sites], dtype=complex)
