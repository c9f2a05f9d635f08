"""Norm estimates, spectral lower bound, density band and window, the
momentum-sum/integral comparison and the condensation scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate, optimize

from .errors import DimensionCapError, DomainError, ValidationError
from .fock import DEFAULT_DIM_CAP, TruncatedBasis, basis_for, truncated_dim
from .lattice import LatticeSpec
from .model import HoppingSpec, ModelSpec
from .operators import op_global, op_hamiltonian, op_hop_pair
from .thermal import Ensemble, diagonalize, log_trace_profile, observables

SQRT3 = math.sqrt(3.0)


# --- sector norms ---------------------------------------------------------------

def hop_pair_norm_formula(m: int) -> float:
    """Exact ``||c^dag_x c_y restricted to D_m||`` for ``x != y``."""
    if m == 0:
        return 0.0
    if m % 2:
        return (m + 1) / 2.0
    return math.sqrt(m * (m + 2) / 4.0)


@dataclass
class SectorNormReport:
    m: int
    pair_norm_max_error: float     # max over pairs of |exact - formula|
    pair_norm: float
    pair_formula: float
    T_off_norm: float
    T_off_bound: float
    T_diag_norm: float
    T_diag_bound: float
    N2_min: float
    N2_bound: float
    passed: bool


def _sector_norm(op, rng: range) -> float:
    if len(rng) == 0:
        return 0.0
    block = op.matrix[rng.start:rng.stop, rng.start:rng.stop].toarray()
    return float(np.linalg.norm(block, 2))


def sector_norm_checks(basis: TruncatedBasis, hopping: HoppingSpec, m: int,
                       tol: float = 1e-10) -> SectorNormReport:
    if m > basis.M:
        raise DomainError(f"sector {m} above basis cutoff {basis.M}")
    L = basis.L
    rng = basis.sector_range(m)
    formula = hop_pair_norm_formula(m)
    worst, exact = 0.0, 0.0
    for x in range(L):
        for y in range(L):
            if x != y:
                nrm = _sector_norm(op_hop_pair(basis, x, y), rng)
                exact = max(exact, nrm)
                worst = max(worst, abs(nrm - formula))
    g = op_global(basis, hopping)
    t_off = _sector_norm(g.T_off, rng)
    t_off_bound = hopping.M * (m + 1) * L / 2.0
    t_diag = _sector_norm(g.T_diag, rng)
    t_diag_bound = hopping.M_d * m
    n2_min = float((basis.states[rng.start:rng.stop] ** 2).sum(axis=1).min())
    n2_bound = m * m / L
    ok = (worst <= tol and formula <= (m + 1) / 2.0 + tol
          and t_off <= t_off_bound + tol and t_diag <= t_diag_bound + tol
          and n2_min >= n2_bound - tol)
    return SectorNormReport(m, worst, exact, formula, t_off, t_off_bound, t_diag,
                            t_diag_bound, n2_min, n2_bound, ok)


# --- relative bounds --------------------------------------------------------------

@dataclass
class RelativeBoundRow:
    sample: int
    K: int
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool


def random_states(basis: TruncatedBasis, count: int, seed: int, support_cutoff: int):
    """Normalized complex Gaussian vectors supported on ``D^(support_cutoff)``.

    Uses numpy's PCG64 bit generator seeded with ``seed``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = basis.sub_dim(support_cutoff)
    out = np.zeros((count, basis.dim), dtype=complex)
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    out[:, :n] = z / np.linalg.norm(z, axis=1, keepdims=True)
    return out


def relative_bound_checks(basis: TruncatedBasis, model: ModelSpec, K_values, samples: int,
                          seed: int) -> list[RelativeBoundRow]:
    """The four relative-boundedness estimates of ``T'``, ``N``, ``T''`` and ``L``
    against ``N2`` on random vectors from ``D^(M-1)`` (where ``L`` acts exactly).
    """
    if basis.M < 1:
        raise DomainError("relative bound checks need cutoff >= 1")
    g = op_global(basis, model.hopping)
    h = model.hopping
    lam_sites = model.lattice.size
    psis = random_states(basis, samples, seed, basis.M - 1)
    rows = []

    def norm(op, v):
        return float(np.linalg.norm(op.matrix @ v))

    for i, psi in enumerate(psis):
        p = float(np.linalg.norm(psi))
        n2 = norm(g.N2, psi)
        t1 = norm(g.T_off, psi)
        nn = norm(g.N, psi)
        t2 = norm(g.T_diag, psi)
        ll = norm(g.L, psi)
        for K in K_values:
            K1 = K + 1.0
            checks = (
                ("T_off", t1 ** 2, 0.25 * h.M ** 2 * lam_sites ** 2 * K1 ** 2 * p ** 2
                 + 0.75 * h.M ** 2 * lam_sites ** 4 / K1 ** 2 * n2 ** 2),
                ("N", nn ** 2, K ** 2 * p ** 2 + lam_sites ** 2 / K1 ** 2 * n2 ** 2),
                ("T_diag", t2 ** 2, h.M_d ** 2 * K ** 2 * p ** 2
                 + h.M_d ** 2 * lam_sites ** 2 / K1 ** 2 * n2 ** 2),
                ("L", ll, 2 * lam_sites * K1 * p + 2 * lam_sites ** 2 / K1 * n2),
            )
            for name, lhs, rhs in checks:
                slack = rhs - lhs
                rows.append(RelativeBoundRow(i, K, name, lhs, rhs, slack,
                                             slack >= -1e-12 * max(1.0, rhs)))
    return rows


# --- spectral lower bound ----------------------------------------------------------

def admissibility_threshold(model: ModelSpec) -> float:
    """``(|Lambda|/U)(|Lambda|(sqrt(3)/2 M + 2|lam|) + M_d + |mu|)``; K must exceed it."""
    n = model.lattice.size
    h = model.hopping
    return n / model.U * (n * (SQRT3 / 2 * h.M + 2 * abs(model.lam)) + h.M_d + abs(model.mu))


def smallest_admissible_K(model: ModelSpec) -> int:
    return int(math.floor(admissibility_threshold(model))) + 1


def gamma_bound(model: ModelSpec, K: int) -> float:
    """Lower bound on the spectrum of ``H`` valid for every admissible integer K."""
    thr = admissibility_threshold(model)
    if not K > thr:
        raise DomainError(f"K={K} is not admissible: need K > {thr:.6g}")
    n = model.lattice.size
    h = model.hopping
    num = n * (h.M / 2 + 2 * abs(model.lam)) + h.M_d + abs(model.mu)
    return -K * num / (1.0 - thr / K)


@dataclass
class GroundEnergyRow:
    M: int
    K: int
    bound: float
    ground_energy: float
    slack: float
    passed: bool


def ground_energy_bound(model: ModelSpec, cutoffs, K: int | None = None,
                        cap: int = DEFAULT_DIM_CAP) -> list[GroundEnergyRow]:
    """Check ``lambda_min(H_M) >= gamma`` for each cutoff and for K, K+1, K+10
    (K defaults to the smallest admissible value).
    """
    K0 = smallest_admissible_K(model) if K is None else K
    gammas = [(Kv, gamma_bound(model, Kv)) for Kv in (K0, K0 + 1, K0 + 10)]
    rows = []
    for M in cutoffs:
        basis = basis_for(model.lattice.size, M, cap)
        H = op_hamiltonian(model, basis)
        e0 = float(diagonalize(H, cap=cap, blocks=basis.offsets).energies[0])
        for Kv, gam in gammas:
            slack = e0 - gam
            rows.append(GroundEnergyRow(M, Kv, gam, e0, slack,
                                        slack >= -1e-10 * max(1.0, abs(gam))))
    return rows


# --- g series -----------------------------------------------------------------------

@dataclass(frozen=True)
class GSeries:
    """``g(r) = (1/beta) log sum_n exp(-beta (U n^2 - r n))`` and ``g'(r)``."""

    U: float
    beta: float
    r: float
    value: float
    derivative: float
    terms: int


def g_series(U: float, beta: float, r: float) -> GSeries:
    if not (U > 0 and beta > 0):
        raise ValidationError("g series needs U > 0 and beta > 0")

    def expo(n):
        return -beta * (U * n * n - r * n)

    # largest term, then sum outward from it in units of that term
    top = max(0, int(round(r / (2 * U))))
    a_max = expo(top)
    rest, first, count = 0.0, float(top), 1
    for direction in (1, -1):
        n = top + direction
        while n >= 0:
            t = math.exp(expo(n) - a_max)
            rest += t
            first += n * t
            count += 1
            if t < 1e-16 * (1.0 + rest):
                break
            n += direction
    value = (a_max + math.log1p(rest)) / beta
    return GSeries(U, beta, r, value, first / (1.0 + rest), count)


def g(U: float, beta: float, r: float) -> float:
    return g_series(U, beta, r).value


# --- density band ---------------------------------------------------------------------

@dataclass
class DensityBandRow:
    mu: float
    M: int
    R: float
    lower: float
    upper: float
    increment: float           # relative f_M increment from M-1 to M
    upper_ok: bool
    lower_status: str          # pass, fail or inconclusive


def density_band_check(model: ModelSpec, M: int, mu_grid, gate: float = 1e-8,
                       cap: int = DEFAULT_DIM_CAP) -> list[DensityBandRow]:
    """``-|lam| + g(r1) <= R(mu) <= |lam| + g(r2)`` with ``r1,2 = mu -+ (M + |lam|)``.

    The upper bound is checked at the given cutoff (``f_M`` only grows with
    M). The lower bound is only meaningful for the limit, so it is checked
    when the last relative increment of ``f_M`` is below ``gate`` and reported
    inconclusive otherwise.
    """
    if M < 1:
        raise DomainError("density band needs cutoff >= 1")
    n_sites = model.lattice.size
    prof = log_trace_profile(model, basis_for(n_sites, M, cap), mu_grid, cap=cap)
    prev = log_trace_profile(model, basis_for(n_sites, M - 1, cap), mu_grid, cap=cap)
    lam = abs(model.lam)
    Mh = model.hopping.M
    rows = []
    for mu, R, lf, lf0 in zip(prof.mu, prof.R, prof.log_f, prev.log_f):
        upper = lam + g(model.U, model.beta, mu + Mh + lam)
        lower = -lam + g(model.U, model.beta, mu - Mh - lam)
        inc = -math.expm1(lf0 - lf)
        tol = 1e-12 * max(1.0, abs(R))
        up_ok = R <= upper + tol
        if inc < gate:
            # remaining truncation error in R is of the order of the last increment
            slack = 2.0 * inc / (model.beta * n_sites) + tol
            status = "pass" if R + slack >= lower else "fail"
        else:
            status = "inconclusive"
        rows.append(DensityBandRow(float(mu), M, float(R), lower, upper, inc, up_ok, status))
    return rows


# --- density window ----------------------------------------------------------------------

@dataclass
class DensityWindow:
    mu0: float
    M: float
    lam0: float
    rho1: float
    rho2: float
    P1: float
    P2: float
    C: float
    Q1: float
    mu_tilde: float
    lam0_limit: float
    halvings: int
    diagnostics: list[str] = field(default_factory=list)

    def G0(self, U, beta, mu):
        return g(U, beta, mu + self.M + self.lam0) + self.lam0


def density_window(U: float, beta: float, M: float, mu0: float,
                   fraction: float = 0.5) -> DensityWindow:
    """Constructive version of the uniform density bounds near ``mu0``.

    ``lam0`` is taken as ``fraction`` of its admissible limit
    ``(P1 - C)/(2 + g'(mu0 - M))``. ``mu_tilde`` is found by stepping left in
    unit steps, bracketing the crossing ``G0 = Q1`` by bisection and then
    maximizing ``(Q1 - G0(mu))/(mu0 - mu)`` below the crossing.
    """
    C = 0.0
    P1 = g(U, beta, mu0 - M)
    P2 = g(U, beta, mu0 + M)
    gp = g_series(U, beta, mu0 - M).derivative
    limit = (P1 - C) / (2.0 + gp)
    lam0 = fraction * limit
    diags = []
    for halving in range(41):
        Q1 = g(U, beta, mu0 - M - lam0) - lam0

        def G0(mu, lam0=lam0):
            return g(U, beta, mu + M + lam0) + lam0

        mu_t = None
        prev = mu0
        for step in range(1, 201):
            cand = mu0 - step
            if G0(cand) < Q1:
                mu_t = cand
                break
            prev = cand
        if mu_t is None:
            diags.append(f"no mu_tilde within 200 steps for lam0={lam0:.6g}; halving")
            lam0 /= 2.0
            continue
        cross = optimize.brentq(lambda mu: G0(mu) - Q1, mu_t, prev, xtol=1e-14)
        ratio = lambda mu: -(Q1 - G0(mu)) / (mu0 - mu)
        res = optimize.minimize_scalar(ratio, bounds=(cross - 200.0, cross),
                                       method="bounded", options={"xatol": 1e-10})
        best = float(res.x) if -res.fun > -ratio(mu_t) else mu_t
        rho1 = (Q1 - G0(best)) / (mu0 - best)
        rho2 = G0(mu0 + 1.0) - Q1
        return DensityWindow(mu0, M, lam0, rho1, rho2, P1, P2, C, Q1, best, limit,
                             halving, diags)
    raise DomainError("density window construction failed after 40 halvings: "
                      + "; ".join(diags[-3:]))


@dataclass
class WindowSample:
    lam: float
    rho: float
    lower: float
    upper: float
    passed: bool


def density_window_check(window: DensityWindow, model: ModelSpec, M: int, lam_values,
                         tol: float = 1e-9, cap: int = DEFAULT_DIM_CAP) -> list[WindowSample]:
    """ED density at ``mu0`` for each ``|lam| < lam0`` compared with ``[rho1, rho2]``."""
    if abs(model.hopping.M - window.M) > 1e-14:
        raise ValidationError("window was built for a different hopping constant")
    basis = basis_for(model.lattice.size, M, cap)
    out = []
    for lam in lam_values:
        if not abs(lam) < window.lam0:
            raise DomainError(f"|lambda|={abs(lam)} not below lam0={window.lam0}")
        obs = observables(model.replace(mu=window.mu0, lam=lam), basis, cap=cap)
        ok = window.rho1 - tol <= obs.rho <= window.rho2 + tol
        out.append(WindowSample(float(lam), float(obs.rho), window.rho1, window.rho2, ok))
    return out


def g_shape_check(U: float, beta: float, r_grid, h: float = 0.1,
                  tol: float = 1e-12) -> tuple[bool, bool]:
    """(strictly increasing with step h, midpoint convex within tol) on ``r_grid``."""
    inc = all(g(U, beta, r + h) > g(U, beta, r) for r in r_grid)
    cvx = all(g(U, beta, r) <= 0.5 * (g(U, beta, r - h) + g(U, beta, r + h)) + tol
              for r in r_grid)
    return inc, cvx


# --- momentum sums ----------------------------------------------------------------------

def ksum(d: int, N: int, M2: float, alpha: float) -> float:
    """``(2 pi/N)^d sum_k 1/(M2 |k|^2 + alpha)`` over the zone, ``k_i in [0, 2 pi)``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    k = 2.0 * np.pi * np.arange(N) / N
    k2 = k ** 2
    grid = k2
    for _ in range(d - 1):
        grid = np.add.outer(grid, k2)
    return float((2.0 * np.pi / N) ** d * np.sum(1.0 / (M2 * grid + alpha)))


def ksum_limit(d: int, M2: float, alpha: float) -> float:
    """``int_{[0, 2 pi]^d} dk / (M2 |k|^2 + alpha)``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    two_pi = 2.0 * np.pi
    if M2 == 0:
        return two_pi ** d / alpha

    def inner(a):
        # int_0^{2pi} dy / (a + M2 y^2)
        return math.atan(two_pi * math.sqrt(M2 / a)) / math.sqrt(M2 * a)

    if d == 1:
        return inner(alpha)
    if d == 2:
        val, _ = integrate.quad(lambda x: inner(alpha + M2 * x * x), 0.0, two_pi,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        return val
    if d == 3:
        val, _ = integrate.dblquad(lambda y, x: inner(alpha + M2 * (x * x + y * y)),
                                   0.0, two_pi, 0.0, two_pi, epsabs=1e-11, epsrel=1e-10)
        return val
    raise ValidationError(f"unsupported dimension {d}")


def d2_lower_bound(M2: float, alpha: float) -> float:
    return math.pi / (4.0 * M2) * math.log1p(4.0 * M2 * math.pi ** 2 / alpha)


@dataclass
class KSumRow:
    N: int
    S: float
    limit: float
    error: float


def ksum_vs_integral(d: int, N_list, M2: float, alpha: float) -> list[KSumRow]:
    if M2 < 0:
        raise DomainError("M2 must be >= 0")
    lim = ksum_limit(d, M2, alpha)
    return [KSumRow(N, s, lim, abs(s - lim)) for N in N_list
            for s in [ksum(d, N, M2, alpha)]]


# --- condensation scan --------------------------------------------------------------------

@dataclass
class ScanRow:
    d: int
    N: int
    M_final: int
    U: float
    mu: float
    lam: float
    beta: float
    rho: float = math.nan
    m: float = math.nan
    S: float = math.nan
    bound: float = math.nan
    slack: float = math.nan
    status: str = ""


@dataclass
class CutoffPolicy:
    """Increase M from ``start`` until rho_M and m_M move less than ``tol``."""

    start: int = 2
    tol: float = 1e-6
    max_M: int = 40
    cap: int = DEFAULT_DIM_CAP


def adaptive_observables(model: ModelSpec, policy: CutoffPolicy):
    """Returns ``(M, observables, converged)`` at the final cutoff, or raises
    DimensionCapError when even the starting cutoff is too large."""
    n = model.lattice.size
    M = policy.start
    if truncated_dim(n, M) > policy.cap:
        raise DimensionCapError(f"starting cutoff {M} already exceeds cap {policy.cap}")
    prev = observables(model, basis_for(n, M, policy.cap), cap=policy.cap)
    while M < policy.max_M and truncated_dim(n, M + 1) <= policy.cap:
        M += 1
        cur = observables(model, basis_for(n, M, policy.cap), cap=policy.cap)
        if abs(cur.rho - prev.rho) < policy.tol and abs(cur.m - prev.m) < policy.tol:
            return M, cur, True
        prev = cur
    return M, prev, False


def scan_point(d: int, N: int, lam: float, U: float, mu: float, beta: float,
               t: float, policy: CutoffPolicy) -> ScanRow:
    row = ScanRow(d, N, 0, U, mu, lam, beta)
    if lam == 0:
        row.status = "excluded"
        return row
    lat = LatticeSpec(d, N)
    hop = HoppingSpec.nearest_neighbor(lat, t)
    model = ModelSpec(lat, hop, U, mu, lam, beta)
    try:
        M, obs, converged = adaptive_observables(model, policy)
    except DimensionCapError:
        row.status = "skipped_cap"
        return row
    alpha = abs(lam) * (1.0 + 1.0 / obs.rho)
    S = ksum(d, N, hop.M2, alpha)
    rhs = (2 * np.pi) ** d * beta * obs.rho * (obs.rho + 0.5)
    bound = rhs / S
    ok = obs.m * S <= rhs * (1 + 1e-9)
    row.M_final = M
    row.rho, row.m, row.S, row.bound, row.slack = obs.rho, obs.m, S, bound, bound - obs.m
    row.status = ("pass" if converged else "pass_unconverged") if ok else "fail"
    return row


def condensation_scan(d: int, N_list, lam_list, U: float = 1.0, mu: float = 0.0,
                      beta: float = 1.0, t: float = -0.5,
                      policy: CutoffPolicy | None = None) -> list[ScanRow]:
    """Bound ``m <= (2 pi)^d beta rho (rho + 1/2) / S(N, lam)`` on a grid."""
    policy = policy or CutoffPolicy()
    return [scan_point(d, N, lam, U, mu, beta, t, policy) for N in N_list for lam in lam_list]


def bound_trend(rows: list[ScanRow]) -> dict[tuple[int, int], bool]:
    """Per ``(d, N)``: does the bound on m decrease as lambda decreases?"""
    out = {}
    keys = sorted({(r.d, r.N) for r in rows})
    for key in keys:
        pts = sorted((r.lam, r.bound) for r in rows
                     if (r.d, r.N) == key and r.status.startswith("pass"))
        out[key] = all(b1 < b2 for (_, b1), (_, b2) in zip(pts, pts[1:]))
    return out
