"""Checks of the finite-dimensional Bogolyubov inequality and the estimates
built on it, evaluated with exact diagonalization at one parameter point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError, ValidationError
from .fock import DEFAULT_DIM_CAP, TruncatedBasis, basis_for
from .lattice import Momentum, brillouin_momenta, zero_momentum
from .model import ModelSpec
from .operators import (SparseComplexOperator, closed_form_commutators, commutator,
                        direct_commutators, op_global, op_hamiltonian, op_momentum)
from .thermal import Ensemble

IDENTITY_TOL = 1e-12
RELATIVE_TOL = 1e-9
CLOSED_FORM_TOL = 1e-11
POSITIVITY_TOL = 1e-12


@dataclass
class ProjectionIdentityReport:
    M: int
    k: tuple[int, ...]
    delta_CA: float
    delta_CHC: float
    delta_anticommutator: float
    q_term_min_eig: float
    passed: bool


def verify_projection_identities(model: ModelSpec, M: int, k: Momentum,
                                 cap: int = DEFAULT_DIM_CAP) -> ProjectionIdentityReport:
    """Compare products of compressed operators with compressions of products.

    The right-hand sides are computed on a basis with cutoff ``M + 2`` and then
    compressed to ``D^(M)``, so they are the exact ``P_M X P_M``.
    """
    if M < 2:
        raise DomainError(f"projection identities need M >= 2, got {M}")
    L = model.lattice.size
    big = basis_for(L, M + 2, cap)
    n = big.sub_dim(M)
    lo, hi = big.sector_range(M).start, big.sector_range(M).stop

    mo = op_momentum(big, model.lattice, k)
    H = op_hamiltonian(model, big)
    C, A = mo.C, mo.A
    CM, AM, HM = C.compress(n), A.compress(n), H.compress(n)

    lhs1 = commutator(CM, AM)
    rhs1 = commutator(C, A).compress(n)
    lhs2 = commutator(commutator(CM, HM), CM.H)
    rhs2 = commutator(commutator(C, H), C.H).compress(n)
    lhs3 = AM @ AM.H + AM.H @ AM
    full = (A @ A.H + A.H @ A).compress(n)
    AdA = (A.H @ A).compress(n)
    q = np.zeros((n, n), dtype=complex)
    q[lo:hi, lo:hi] = AdA.dense()[lo:hi, lo:hi]
    rhs3 = full.dense() - q

    d1 = _maxdiff(lhs1.dense(), rhs1.dense())
    d2 = _maxdiff(lhs2.dense(), rhs2.dense())
    d3 = _maxdiff(lhs3.dense(), rhs3)
    qmin = float(np.linalg.eigvalsh(q[lo:hi, lo:hi]).min()) if hi > lo else 0.0
    ok = max(d1, d2, d3) <= IDENTITY_TOL and qmin >= -POSITIVITY_TOL
    return ProjectionIdentityReport(M, k.n, d1, d2, d3, qmin, ok)


def _maxdiff(a, b) -> float:
    return float(np.max(np.abs(a - b), initial=0.0))


@dataclass
class ClosedFormReport:
    k: tuple[int, ...]
    deltas: dict[str, float]
    dc_average: float
    passed: bool


def verify_closed_forms(model: ModelSpec, basis: TruncatedBasis, k: Momentum,
                        ensemble: Ensemble | None = None) -> ClosedFormReport:
    """Frobenius-relative gap between closed-form and multiplied-out
    commutators on ``D^(M-2)``, plus positivity of ``<[[C,H],C^dag]>``.

    The relative gap divides by ``max(||closed form||_F, 1)`` so that
    vanishing closed forms are compared in absolute terms.
    """
    n = basis.sub_dim(basis.M - 2)
    cf = closed_form_commutators(basis, model, k)
    dr = direct_commutators(basis, model, k)
    deltas = {}
    for key in cf:
        a, b = cf[key].interior(n), dr[key].interior(n)
        deltas[key] = float(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1.0))
    ens = ensemble or Ensemble.from_model(model, basis)
    dc = ens.average(cf["CHC"])
    ok = max(deltas.values()) <= CLOSED_FORM_TOL and dc.real >= -POSITIVITY_TOL
    return ClosedFormReport(k.n, deltas, dc.real, ok)


@dataclass
class BogolyubovReport:
    U: float
    mu: float
    lam: float
    beta: float
    k: tuple[int, ...]
    anticomm_avg: float          # <(A A^dag + A^dag A)_M>
    dc_direct: float             # <[[C_M,H_M],C_M^dag]>
    dc_closed: float             # <([[C,H],C^dag])_M> from the closed form
    lhs: float
    rhs: float
    slack: float
    lhs_with_q: float            # uses <A_M A_M^dag + A_M^dag A_M> instead
    passed: bool
    notes: list[str] = field(default_factory=list)


def verify_finite_bogolyubov(model: ModelSpec, basis: TruncatedBasis, k: Momentum,
                             ensemble: Ensemble | None = None) -> BogolyubovReport:
    ens = ensemble or Ensemble.from_model(model, basis)
    lat = model.lattice
    mo = op_momentum(basis, lat, k)
    nk = ens.average(mo.A @ mo.c).real
    anticomm = 2.0 * nk + 1.0
    # compressed A: top sector contributes only through A_M^dag A_M
    AM = mo.A
    with_q = ens.average(AM @ AM.H + AM.H @ AM).real

    H = ens.H
    direct = commutator(commutator(mo.C, H), mo.C.H)
    dc_direct = ens.average(direct).real
    dc_closed = ens.average(closed_form_commutators(basis, model, k)["CHC"]).real

    a0 = op_momentum(basis, lat, zero_momentum(lat)).A
    ca = ens.average(a0) / math.sqrt(lat.size)
    rhs = abs(ca) ** 2
    lhs = 0.5 * model.beta * anticomm * dc_closed
    lhs_q = 0.5 * model.beta * with_q * dc_closed
    slack = lhs - rhs
    notes = []
    ok = True
    if slack < -RELATIVE_TOL * max(1.0, lhs):
        ok = False
        notes.append("bogolyubov inequality violated")
    if min(dc_direct, dc_closed) < -POSITIVITY_TOL:
        ok = False
        notes.append("double commutator average negative")
    if lhs_q > lhs + RELATIVE_TOL * max(1.0, lhs):
        ok = False
        notes.append("q_M correction did not weaken the inequality")
    if abs(dc_direct - dc_closed) > 1e-12 * max(1.0, abs(dc_closed)):
        ok = False
        notes.append("direct and closed-form double commutator averages differ")
    return BogolyubovReport(model.U, model.mu, model.lam, model.beta, k.n, anticomm,
                            dc_direct, dc_closed, lhs, rhs, slack, lhs_q, ok, notes)


@dataclass
class LBoundReport:
    L_avg: float
    N_avg: float
    bound: float
    slack: float
    passed: bool


def verify_L_average_bound(model: ModelSpec, basis: TruncatedBasis,
                           ensemble: Ensemble | None = None) -> LBoundReport:
    """``|<L_M>_M| <= <N_M>_M + |Lambda|``."""
    ens = ensemble or Ensemble.from_model(model, basis)
    g = op_global(basis, model.hopping)
    L_avg = ens.average(g.L)
    N_avg = ens.average(g.N).real
    bound = N_avg + model.lattice.size
    slack = bound - abs(L_avg)
    return LBoundReport(L_avg.real, N_avg, bound, slack,
                        slack >= -1e-10 * model.lattice.size)


@dataclass
class ChainKRow:
    k: tuple[int, ...]
    k2: float
    lhs: float              # m / (|lam| + rho (M2 |k|^2 + |lam|))
    rhs: float              # beta/2 (<2 c^dag(k) c(k)> + 1)
    dc_average: float
    dc_estimate: float      # |lam| + rho (M2 |k|^2 + |lam|)
    passed: bool


@dataclass
class ChainReport:
    m: float
    rho: float
    M2: float
    lhs: float
    rhs: float
    slack: float
    per_k: list[ChainKRow]
    passed: bool


def verify_chain_inequality(model: ModelSpec, basis: TruncatedBasis,
                            ensemble: Ensemble | None = None) -> ChainReport:
    """Per-momentum Bogolyubov estimate and its average over the zone:
    ``m (1/|Lambda|) sum_k [rho M2 |k|^2 + |lam|(rho+1)]^-1 <= beta (rho + 1/2)``.
    """
    lat = model.lattice
    M2 = model.hopping.M2
    lam = abs(model.lam)
    if lam == 0:
        raise DomainError("chain inequality needs lambda != 0 (k = 0 denominator vanishes)")
    ens = ensemble or Ensemble.from_model(model, basis)
    g = op_global(basis, model.hopping)
    n_sites = lat.size
    rho = ens.average(g.N).real / n_sites
    a0 = op_momentum(basis, lat, zero_momentum(lat)).A
    m = abs(ens.average(a0)) ** 2 / n_sites

    rows = []
    total = 0.0
    for k in brillouin_momenta(lat):
        mo = op_momentum(basis, lat, k)
        nk = ens.average(mo.A @ mo.c).real
        dc = ens.average(closed_form_commutators(basis, model, k)["CHC"]).real
        est = lam + rho * (M2 * k.k_squared + lam)
        lhs = m / est
        rhs = 0.5 * model.beta * (2.0 * nk + 1.0)
        total += 1.0 / (rho * M2 * k.k_squared + lam * (rho + 1.0))
        ok = lhs <= rhs * (1 + RELATIVE_TOL) and dc <= est * (1 + RELATIVE_TOL)
        rows.append(ChainKRow(k.n, k.k_squared, lhs, rhs, dc, est, ok))
    lhs = m * total / n_sites
    rhs = model.beta * (rho + 0.5)
    ok = lhs <= rhs * (1 + RELATIVE_TOL) and all(r.passed for r in rows)
    return ChainReport(m, rho, M2, lhs, rhs, rhs - lhs, rows, ok)
