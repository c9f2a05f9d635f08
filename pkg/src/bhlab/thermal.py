"""Exact diagonalization and Gibbs averages on the truncated space.

All averages use weights ``exp(-beta (E_i - E_0))`` so that nothing overflows
and adding a constant to ``H`` changes nothing. Before the eigensolve the
smallest diagonal entry is subtracted; when that shift is exact in floating
point (dyadic parameters) the results for ``H`` and ``H + w`` are identical
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import mpmath
import numpy as np
import scipy.linalg as sla

from .errors import DimensionCapError, ValidationError
from .fock import DEFAULT_DIM_CAP, TruncatedBasis
from .lattice import zero_momentum
from .model import ModelSpec
from .operators import SparseComplexOperator, op_global, op_hamiltonian, op_momentum

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""

    shifted: np.ndarray = field(repr=False)   # eigenvalues of H - shift*I
    vectors: np.ndarray = field(repr=False)
    shift: float = 0.0

    @property
    def energies(self) -> np.ndarray:
        return self.shifted + self.shift

    @property
    def dim(self) -> int:
        return len(self.shifted)

    def residual(self, H: SparseComplexOperator) -> np.ndarray:
        V = self.vectors
        R = H.matrix @ V - V * self.energies
        return np.linalg.norm(R, axis=0)

    def unitarity_defect(self) -> float:
        V = self.vectors
        return float(np.max(np.abs(V.conj().T @ V - np.eye(self.dim))))


def _fix_phases(V: np.ndarray) -> np.ndarray:
    # first component above tolerance made real positive
    big = np.abs(V) > 1e-10
    first = np.argmax(big, axis=0)
    ph = V[first, np.arange(V.shape[1])]
    ph = ph / np.abs(ph)
    return V * ph.conj()


def diagonalize(H: SparseComplexOperator, cap: int = DEFAULT_DIM_CAP,
                blocks=None) -> SpectralDecomposition:
    """Full Hermitian eigendecomposition of ``H``.

    ``blocks`` may give sector offsets; for a sector-preserving ``H`` each
    block is solved separately, which keeps cross-sector components exactly 0.
    """
    if H.dim > cap:
        raise DimensionCapError(f"matrix dimension {H.dim} exceeds cap {cap}")
    if H.hermiticity_defect() > HERMITIAN_TOL:
        raise ValidationError(f"matrix is not Hermitian (defect {H.hermiticity_defect():.3g})")
    dense = H.dense()
    n = H.dim
    diag = dense.diagonal().real
    shift = float(diag.min()) if n else 0.0
    dense[np.diag_indices(n)] -= shift
    real = not np.any(dense.imag)
    if real:
        dense = dense.real

    if blocks is not None and H.shift == 0:
        offs = np.asarray(blocks)
        evals = np.empty(n)
        V = np.zeros((n, n), dtype=dense.dtype)
        for a, b in zip(offs[:-1], offs[1:]):
            if b > a:
                w, v = sla.eigh(dense[a:b, a:b], driver="evd")
                evals[a:b] = w
                V[a:b, a:b] = v
    else:
        evals, V = sla.eigh(dense, driver="evd")
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    V = _fix_phases(V[:, order].astype(complex))
    return SpectralDecomposition(evals, V, shift)


@dataclass(frozen=True, eq=False)
class ThermalState:
    beta: float
    ground_energy: float
    weights: np.ndarray = field(repr=False)
    partition: float

    @property
    def log_partition(self) -> float:
        """``log Tr exp(-beta H)``, without forming the trace itself."""
        return -self.beta * self.ground_energy + math.log(self.partition)


def thermal_state(spec: SpectralDecomposition, beta: float) -> ThermalState:
    if not beta > 0:
        raise ValidationError(f"beta must be > 0, got {beta}")
    rel = spec.shifted - spec.shifted[0]
    w = np.exp(-beta * rel)
    return ThermalState(beta, float(spec.energies[0]), w, float(w.sum()))


def thermal_average(state: ThermalState, spec: SpectralDecomposition,
                    B: SparseComplexOperator) -> complex:
    """``sum_i w_i <v_i|B|v_i> / Z``."""
    if B.dim != spec.dim:
        raise ValidationError(f"operator dimension {B.dim} != spectrum dimension {spec.dim}")
    V = spec.vectors
    diag = np.einsum("ij,ij->j", V.conj(), B.matrix @ V)
    return complex(state.weights @ diag / state.partition)


class Ensemble:
    """Gibbs state of one Hamiltonian, with its density matrix cached."""

    def __init__(self, H: SparseComplexOperator, beta: float, cap: int = DEFAULT_DIM_CAP,
                 blocks=None):
        self.H = H
        self.spectrum = diagonalize(H, cap=cap, blocks=blocks)
        self.state = thermal_state(self.spectrum, beta)

    @classmethod
    def from_model(cls, model: ModelSpec, basis: TruncatedBasis, cap: int = DEFAULT_DIM_CAP):
        H = op_hamiltonian(model, basis)
        return cls(H, model.beta, cap=cap, blocks=basis.offsets)

    @cached_property
    def rho(self) -> np.ndarray:
        V = self.spectrum.vectors
        p = self.state.weights / self.state.partition
        return (V * p) @ V.conj().T

    def average(self, B: SparseComplexOperator) -> complex:
        if B.dim != self.spectrum.dim:
            raise ValidationError(f"operator dimension {B.dim} != {self.spectrum.dim}")
        coo = B.matrix.tocoo()
        return complex(np.sum(coo.data * self.rho[coo.col, coo.row]))

    @property
    def log_partition(self) -> float:
        return self.state.log_partition


@dataclass(frozen=True)
class Observables:
    N_avg: float
    cdag0: complex
    rho: float
    m: float


def observables(model: ModelSpec, basis: TruncatedBasis, ensemble: Ensemble | None = None,
                cap: int = DEFAULT_DIM_CAP) -> Observables:
    ens = ensemble or Ensemble.from_model(model, basis, cap=cap)
    g = op_global(basis, model.hopping)
    n_sites = model.lattice.size
    N_avg = ens.average(g.N).real
    a0 = op_momentum(basis, model.lattice, zero_momentum(model.lattice)).A
    cd = ens.average(a0)
    return Observables(N_avg, cd, N_avg / n_sites, abs(cd) ** 2 / n_sites)


def density(model: ModelSpec, basis: TruncatedBasis, cap: int = DEFAULT_DIM_CAP) -> float:
    """``rho_M = <N_M>_M / |Lambda|``."""
    return observables(model, basis, cap=cap).rho


def order_parameter(model: ModelSpec, basis: TruncatedBasis, cap: int = DEFAULT_DIM_CAP) -> float:
    """``m_M = |<(c^dag(0))_M>_M|^2 / |Lambda|``."""
    return observables(model, basis, cap=cap).m


# --- log-trace in mu ----------------------------------------------------------

@dataclass(frozen=True)
class LogTraceProfile:
    mu: np.ndarray
    log_f: np.ndarray
    R: np.ndarray


def log_trace_profile(model: ModelSpec, basis: TruncatedBasis, mu_grid,
                      cap: int = DEFAULT_DIM_CAP) -> LogTraceProfile:
    """``log f_M(mu)`` and ``R(mu) = log f_M / (beta |Lambda|)``; ``model.mu`` is ignored."""
    mus = np.asarray(mu_grid, dtype=float)
    logs = np.empty_like(mus)
    g = op_global(basis, model.hopping)
    G = op_hamiltonian(model.replace(mu=0.0), basis)
    for i, mu in enumerate(mus):
        ens = Ensemble(G - g.N * mu, model.beta, cap=cap, blocks=basis.offsets)
        logs[i] = ens.log_partition
    return LogTraceProfile(mus, logs, logs / (model.beta * model.lattice.size))


def log_partition_mp(H: SparseComplexOperator, beta: float, dps: int | None = None):
    """``log Tr exp(-beta H)`` in multiprecision (mpmath), for increments that
    are invisible in double precision. Returns an ``mpf``; ``dps`` defaults to a
    value that resolves the full Boltzmann range of the spectrum.
    """
    dense = H.dense()
    if dps is None:
        w = np.linalg.eigvalsh(dense)
        dps = int(beta * (w[-1] - w[0]) / math.log(10)) + 30
    with mpmath.workdps(dps):
        if np.any(dense.imag):
            E = mpmath.eighe(mpmath.matrix(dense.tolist()), eigvals_only=True)
        else:
            E = mpmath.eigsy(mpmath.matrix(dense.real.tolist()), eigvals_only=True)
        E = [E[i] for i in range(len(E))]
        e0 = min(E)
        s = mpmath.fsum(mpmath.exp(-beta * (e - e0)) for e in E)
        return -beta * e0 + mpmath.log(s)


def log_partition_increments(model: ModelSpec, cutoffs, basis_factory,
                             cap: int = DEFAULT_DIM_CAP):
    """``log f_{M'} - log f_M`` for consecutive cutoffs in multiprecision.

    Returned as ``(M, M', increment)`` triples with the increment an ``mpf``.
    """
    cutoffs = list(cutoffs)
    H_top = op_hamiltonian(model, basis_factory(cutoffs[-1]))
    w = np.linalg.eigvalsh(H_top.dense())
    dps = int(model.beta * (w[-1] - w[0]) / math.log(10)) + 30
    logs = []
    for M in cutoffs:
        H = op_hamiltonian(model, basis_factory(M))
        logs.append(log_partition_mp(H, model.beta, dps))
    with mpmath.workdps(dps):
        return [(a, b, lb - la) for a, b, la, lb in
                zip(cutoffs[:-1], cutoffs[1:], logs[:-1], logs[1:])]


# --- convergence in the cutoff -------------------------------------------------

@dataclass
class ConvergenceRow:
    M: int
    N_avg: float
    cdag0: complex
    rho: float
    m: float
    d_N: float = math.nan
    d_cdag0: float = math.nan
    d_rho: float = math.nan
    d_m: float = math.nan


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    tol: float
    cauchy: bool


def convergence_study(model: ModelSpec, cutoffs, basis_factory, tol: float = 1e-8,
                      cap: int = DEFAULT_DIM_CAP) -> ConvergenceTable:
    """Observables at increasing cutoff with successive absolute increments.

    ``basis_factory(M)`` supplies the basis for each cutoff.
    """
    cutoffs = list(cutoffs)
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValidationError("cutoff list must be strictly ascending")
    rows: list[ConvergenceRow] = []
    for M in cutoffs:
        obs = observables(model, basis_factory(M), cap=cap)
        row = ConvergenceRow(M, obs.N_avg, obs.cdag0, obs.rho, obs.m)
        if rows:
            p = rows[-1]
            row.d_N = abs(row.N_avg - p.N_avg)
            row.d_cdag0 = abs(row.cdag0 - p.cdag0)
            row.d_rho = abs(row.rho - p.rho)
            row.d_m = abs(row.m - p.m)
        rows.append(row)
    last = rows[-1]
    cauchy = len(rows) > 1 and max(last.d_N, last.d_cdag0, last.d_rho, last.d_m) < tol
    return ConvergenceTable(rows, tol, cauchy)
