"""Sparse matrices of the lattice boson operators on a truncated basis.

Every builder returns the compression ``P_M B P_M`` of the operator onto
``D^(M)``. Identities that hold on the full Fock space survive compression
only away from the top sectors; see ``SparseComplexOperator.interior``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import InvalidSiteError, ValidationError
from .fock import TruncatedBasis
from .lattice import LatticeSpec, Momentum, phase_vector
from .model import HoppingSpec, ModelSpec

PRUNE_TOL = 1e-15

_SHIFT_NAMES = {0: "preserves", 1: "raises", -1: "lowers", None: "mixed"}


def _canonical(mat) -> sp.csr_matrix:
    m = sp.csr_matrix(mat, dtype=complex)
    m.sum_duplicates()
    if m.nnz:
        m.data[np.abs(m.data) <= PRUNE_TOL] = 0
        m.eliminate_zeros()
    m.sort_indices()
    return m


def _combine_shift(a, b):
    if a is None or b is None:
        return None
    return a + b


@dataclass(frozen=True, eq=False)
class SparseComplexOperator:
    """Complex sparse matrix plus the sector shift it applies.

    ``shift`` is the change in total particle number (0, +1, -1, ...) or
    ``None`` for operators that mix several shifts, like ``L``.
    """

    matrix: sp.csr_matrix
    shift: int | None = 0

    def __post_init__(self):
        object.__setattr__(self, "matrix", _canonical(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def tag(self) -> str:
        if self.shift in _SHIFT_NAMES:
            return _SHIFT_NAMES[self.shift]
        return f"shift{self.shift:+d}"

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def H(self) -> "SparseComplexOperator":
        s = None if self.shift is None else -self.shift
        return SparseComplexOperator(self.matrix.conj().T.tocsr(), s)

    def _check(self, other):
        if self.dim != other.dim:
            raise ValidationError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __matmul__(self, other):
        self._check(other)
        return SparseComplexOperator(self.matrix @ other.matrix,
                                     _combine_shift(self.shift, other.shift))

    def __add__(self, other):
        self._check(other)
        s = self.shift if self.shift == other.shift else None
        if self.matrix.nnz == 0:
            s = other.shift
        elif other.matrix.nnz == 0:
            s = self.shift
        return SparseComplexOperator(self.matrix + other.matrix, s)

    def __neg__(self):
        return SparseComplexOperator(-self.matrix, self.shift)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return SparseComplexOperator(self.matrix * complex(c), self.shift)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return SparseComplexOperator(self.matrix / complex(c), self.shift)

    def interior(self, n: int) -> np.ndarray:
        """Dense block on the first ``n`` basis states (rows and columns)."""
        return self.matrix[:n, :n].toarray()

    def compress(self, n: int) -> "SparseComplexOperator":
        """Restriction to the first ``n`` basis states, as an operator."""
        return SparseComplexOperator(self.matrix[:n, :n], self.shift)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix.data), initial=0.0))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs((self.matrix - self.matrix.conj().T).data), initial=0.0))

    def shift_consistent(self, basis: TruncatedBasis) -> bool:
        """Every stored entry connects sectors differing by ``shift``."""
        coo = self.matrix.tocoo()
        tot = basis.totals
        diff = tot[coo.row] - tot[coo.col]
        if self.shift is None:
            return True
        return bool(np.all(diff == self.shift))


def commutator(X: SparseComplexOperator, Y: SparseComplexOperator) -> SparseComplexOperator:
    return X @ Y - Y @ X


def identity(basis: TruncatedBasis) -> SparseComplexOperator:
    return SparseComplexOperator(sp.identity(basis.dim, dtype=complex, format="csr"), 0)


def zero(basis: TruncatedBasis, shift=0) -> SparseComplexOperator:
    return SparseComplexOperator(sp.csr_matrix((basis.dim, basis.dim), dtype=complex), shift)


def _diag(values) -> SparseComplexOperator:
    return SparseComplexOperator(sp.diags(np.asarray(values, dtype=complex), format="csr"), 0)


# --- single-site operators --------------------------------------------------

@lru_cache(maxsize=64)
def _annihilators(basis: TruncatedBasis) -> tuple[sp.csr_matrix, ...]:
    out = []
    states = basis.states
    for x in range(basis.L):
        cols = np.nonzero(states[:, x] > 0)[0]
        target = states[cols].copy()
        target[:, x] -= 1
        rows = basis.lookup(target)
        vals = np.sqrt(states[cols, x].astype(float))
        out.append(sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim),
                                 dtype=complex))
    return tuple(out)


def _site(basis: TruncatedBasis, x) -> int:
    if not isinstance(x, (int, np.integer)) or not 0 <= x < basis.L:
        raise InvalidSiteError(f"site index {x!r} outside 0..{basis.L - 1}")
    return int(x)


def op_annihilate(basis: TruncatedBasis, x: int) -> SparseComplexOperator:
    return SparseComplexOperator(_annihilators(basis)[_site(basis, x)], -1)


def op_create(basis: TruncatedBasis, x: int) -> SparseComplexOperator:
    return op_annihilate(basis, x).H


def op_number(basis: TruncatedBasis, x: int) -> SparseComplexOperator:
    return _diag(basis.states[:, _site(basis, x)])


def op_hop_pair(basis: TruncatedBasis, x: int, y: int) -> SparseComplexOperator:
    """``P_M c^dag_x c_y P_M`` (sector preserving, so exact on D^(M))."""
    return _bilinear(basis, _pair_weights(basis.L, x, y))


def _pair_weights(L, x, y):
    w = np.zeros((L, L), dtype=complex)
    w[x, y] = 1.0
    return w


def _bilinear(basis: TruncatedBasis, W: np.ndarray) -> SparseComplexOperator:
    """``sum_xy W_xy c^dag_x c_y`` built entry by entry on the basis."""
    states = basis.states
    rows, cols, vals = [], [], []
    diag = states.astype(complex) @ np.diag(W)
    rows.append(np.arange(basis.dim))
    cols.append(np.arange(basis.dim))
    vals.append(diag)
    xs, ys = np.nonzero(W)
    for x, y in zip(xs, ys):
        if x == y:
            continue
        src = np.nonzero(states[:, y] > 0)[0]
        target = states[src].copy()
        target[:, y] -= 1
        target[:, x] += 1
        dst = basis.lookup(target)
        amp = np.sqrt(states[src, y] * (states[src, x] + 1.0))
        rows.append(dst)
        cols.append(src)
        vals.append(W[x, y] * amp)
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(basis.dim, basis.dim), dtype=complex)
    return SparseComplexOperator(mat, 0)


def _linear(basis: TruncatedBasis, a_create, b_annihilate) -> SparseComplexOperator:
    """``sum_x a_x c^dag_x + b_x c_x``."""
    cs = _annihilators(basis)
    mat = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    a_create = np.broadcast_to(np.asarray(a_create, dtype=complex), (basis.L,))
    b_annihilate = np.broadcast_to(np.asarray(b_annihilate, dtype=complex), (basis.L,))
    for x in range(basis.L):
        if a_create[x]:
            mat = mat + a_create[x] * cs[x].conj().T
        if b_annihilate[x]:
            mat = mat + b_annihilate[x] * cs[x]
    if not np.any(a_create):
        shift = -1
    elif not np.any(b_annihilate):
        shift = 1
    else:
        shift = None
    return SparseComplexOperator(mat, shift)


# --- global operators -------------------------------------------------------

class GlobalOperators(NamedTuple):
    N: SparseComplexOperator
    N2: SparseComplexOperator
    T: SparseComplexOperator
    L: SparseComplexOperator
    T_off: SparseComplexOperator
    T_diag: SparseComplexOperator


def _check_hopping(basis: TruncatedBasis, hopping: HoppingSpec):
    if hopping.lattice.size != basis.L:
        raise ValidationError(
            f"hopping lattice has {hopping.lattice.size} sites, basis has {basis.L}")


@lru_cache(maxsize=32)
def _global_cached(basis: TruncatedBasis, hopping: HoppingSpec) -> GlobalOperators:
    _check_hopping(basis, hopping)
    states = basis.states
    t = hopping.matrix
    t_off = t - np.diag(np.diag(t))
    T_off = _bilinear(basis, t_off)
    T_diag = _bilinear(basis, np.diag(np.diag(t)))
    return GlobalOperators(
        N=_diag(states.sum(axis=1)),
        N2=_diag((states ** 2).sum(axis=1)),
        T=T_off + T_diag,
        L=_linear(basis, 1.0, 1.0),
        T_off=T_off,
        T_diag=T_diag,
    )


def op_global(basis: TruncatedBasis, hopping: HoppingSpec) -> GlobalOperators:
    """``N``, ``N2``, ``T = T' + T''`` and ``L = sum_x (c^dag_x + c_x)``."""
    return _global_cached(basis, hopping)


def op_hamiltonian(model: ModelSpec, basis: TruncatedBasis) -> SparseComplexOperator:
    g = op_global(basis, model.hopping)
    H = g.N2 * model.U + g.T - g.N * model.mu
    if model.lam:
        H = H + g.L * model.lam
    return H


def hamiltonian_without_mu(model: ModelSpec, basis: TruncatedBasis) -> SparseComplexOperator:
    return op_hamiltonian(model.replace(mu=0.0), basis)


# --- momentum-space operators ----------------------------------------------

class MomentumOperators(NamedTuple):
    c: SparseComplexOperator   # c(k)
    A: SparseComplexOperator   # c^dag(k)
    C: SparseComplexOperator   # |Lambda|^{-1/2} sum_x e^{ikx} n_x


def _check_lattice(basis: TruncatedBasis, lattice: LatticeSpec):
    if lattice.size != basis.L:
        raise ValidationError(f"lattice has {lattice.size} sites, basis has {basis.L}")


@lru_cache(maxsize=256)
def op_momentum(basis: TruncatedBasis, lattice: LatticeSpec, k: Momentum) -> MomentumOperators:
    _check_lattice(basis, lattice)
    norm = np.sqrt(lattice.size)
    ph = phase_vector(lattice, k)
    c = _linear(basis, 0.0, ph / norm)
    C = _diag(basis.states.astype(complex) @ ph / norm)
    return MomentumOperators(c=c, A=c.H, C=C)


# --- closed-form commutators ----------------------------------------------

def _cos_weights(lattice: LatticeSpec, hopping: HoppingSpec, k: Momentum) -> np.ndarray:
    """``t_xy (1 - cos(k.(x - y)))`` using the embedded difference ``x - y``."""
    X = np.array(lattice.sites, dtype=float)
    kv = k.k
    dots = (X @ kv)[:, None] - (X @ kv)[None, :]
    return hopping.matrix * (1.0 - np.cos(dots))


def closed_form_commutators(basis: TruncatedBasis, model: ModelSpec,
                            k: Momentum) -> dict[str, SparseComplexOperator]:
    """Commutators of ``C(k)`` with ``A(k)``, ``L``, ``T`` and ``H`` from their
    explicit expressions, keyed ``CA, CL, CLC, CT, CTC, CHC``.
    """
    lat = model.lattice
    _check_lattice(basis, lat)
    n = lat.size
    ph = phase_vector(lat, k)
    t = model.hopping.matrix
    CA = _linear(basis, np.full(n, 1.0 / n), 0.0)
    CL = _linear(basis, ph / np.sqrt(n), -ph / np.sqrt(n))
    CLC = _linear(basis, 1.0, 1.0) * (-1.0 / n)
    CT = _bilinear(basis, t * (ph[:, None] - ph[None, :]) / np.sqrt(n))
    CTC = _bilinear(basis, _cos_weights(lat, model.hopping, k) * (-2.0 / n))
    CHC = CTC + CLC * model.lam if model.lam else CTC
    return {"CA": CA, "CL": CL, "CLC": CLC, "CT": CT, "CTC": CTC, "CHC": CHC}


def direct_commutators(basis: TruncatedBasis, model: ModelSpec,
                       k: Momentum) -> dict[str, SparseComplexOperator]:
    """Same keys as ``closed_form_commutators`` by matrix multiplication."""
    g = op_global(basis, model.hopping)
    mo = op_momentum(basis, model.lattice, k)
    C, Cd = mo.C, mo.C.H
    H = op_hamiltonian(model, basis)
    CL = commutator(C, g.L)
    CT = commutator(C, g.T)
    return {
        "CA": commutator(C, mo.A),
        "CL": CL,
        "CLC": commutator(CL, Cd),
        "CT": CT,
        "CTC": commutator(CT, Cd),
        "CHC": commutator(commutator(C, H), Cd),
    }
