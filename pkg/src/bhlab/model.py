"""Hopping amplitudes and full model parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .errors import ValidationError
from .lattice import LatticeSpec, Site

HERMITIAN_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class HoppingSpec:
    """Hopping ``t_xy`` on a lattice.

    Normally built from a translation-invariant map ``z -> t~_z`` (keys are
    torus displacements, ``t_xy = t~_{y-x}``). ``from_matrix`` accepts a general
    Hermitian ``t_xy`` for identity checks that do not need translation
    invariance; ``M2`` is then undefined.
    """

    lattice: LatticeSpec
    amplitudes: dict[Site, complex] | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.amplitudes is None and self._matrix is None:
            object.__setattr__(self, "amplitudes", {})
        if self.amplitudes is not None:
            reduced: dict[Site, complex] = {}
            for z, t in self.amplitudes.items():
                zr = self.lattice.reduce(z)
                t = complex(t)
                if zr in reduced and reduced[zr] != t:
                    raise ValidationError(
                        f"displacements {z} and an earlier key both reduce to {zr} "
                        f"with different amplitudes ({reduced[zr]} vs {t})")
                reduced[zr] = t
            reduced = {z: t for z, t in reduced.items() if t != 0}
            object.__setattr__(self, "amplitudes", reduced)
            for z, t in reduced.items():
                back = reduced.get(self.lattice.reduce(tuple(-c for c in z)), 0j)
                if abs(back - t.conjugate()) > HERMITIAN_TOL:
                    raise ValidationError(
                        f"hopping is not Hermitian: t~{z} = {t} but t~(-z) = {back}")
        else:
            t = np.asarray(self._matrix, dtype=complex)
            n = self.lattice.size
            if t.shape != (n, n):
                raise ValidationError(f"hopping matrix must be {n}x{n}, got {t.shape}")
            if np.max(np.abs(t - t.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise ValidationError("hopping matrix is not Hermitian")
            t = t.copy()
            t.setflags(write=False)
            object.__setattr__(self, "_matrix", t)

    @classmethod
    def nearest_neighbor(cls, lattice: LatticeSpec, t: float, onsite: float = 0.0):
        amps: dict = {}
        for i in range(lattice.d):
            for s in (1, -1):
                z = [0] * lattice.d
                z[i] = s
                amps[tuple(z)] = t
        if onsite:
            amps[(0,) * lattice.d] = onsite
        return cls(lattice, amps)

    @classmethod
    def from_matrix(cls, lattice: LatticeSpec, t) -> "HoppingSpec":
        return cls(lattice, None, np.asarray(t, dtype=complex))

    @property
    def translation_invariant(self) -> bool:
        return self.amplitudes is not None

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense ``t_xy`` indexed by lattice site order."""
        if self._matrix is not None:
            return self._matrix
        lat = self.lattice
        t = np.zeros((lat.size, lat.size), dtype=complex)
        for i, x in enumerate(lat.sites):
            for z, amp in self.amplitudes.items():
                y = tuple((a + b) % lat.N for a, b in zip(x, z))
                t[i, lat.site_index(y)] += amp
        t.setflags(write=False)
        return t

    @property
    def M(self) -> float:
        """``max_x sum_y |t_xy|``."""
        return float(np.max(np.abs(self.matrix).sum(axis=1)))

    @property
    def M_d(self) -> float:
        return float(np.max(np.abs(np.diag(self.matrix))))

    @property
    def M2(self) -> float:
        """``sum_z |t~_z| |z|^2`` with ``|z|`` the minimal-image torus length."""
        if not self.translation_invariant:
            raise ValidationError("M2 needs a translation-invariant hopping")
        return float(sum(abs(t) * sum(c * c for c in self.lattice.minimal_image(z))
                         for z, t in self.amplitudes.items()))

    def is_zero(self) -> bool:
        return not np.any(self.matrix)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Grand-canonical Bose-Hubbard parameters ``H = U N2 + T - mu N + lam L``."""

    lattice: LatticeSpec
    hopping: HoppingSpec
    U: float
    mu: float = 0.0
    lam: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.U > 0:
            raise ValidationError(f"U must be > 0, got {self.U}")
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        if self.hopping.lattice != self.lattice:
            raise ValidationError("hopping was built for a different lattice")

    def replace(self, **kw) -> "ModelSpec":
        args = dict(lattice=self.lattice, hopping=self.hopping, U=self.U, mu=self.mu,
                    lam=self.lam, beta=self.beta)
        args.update(kw)
        return ModelSpec(**args)
