import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bhlab.bounds import (CutoffPolicy, condensation_scan, d2_lower_bound,
                          density_band_check, density_window, density_window_check, g,
                          g_series, g_shape_check, gamma_bound, ground_energy_bound,
                          hop_pair_norm_formula, ksum, ksum_limit, ksum_vs_integral,
                          relative_bound_checks, random_states, scan_point,
                          sector_norm_checks, smallest_admissible_K)
from bhlab.errors import DomainError, ValidationError
from bhlab.fock import basis_for
from bhlab.lattice import LatticeSpec
from bhlab.model import HoppingSpec, ModelSpec
from bhlab.operators import op_global

from conftest import make_model


def brute_g(U, beta, r, nmax=400):
    return math.log(sum(math.exp(-beta * (U * n * n - r * n)) for n in range(nmax))) / beta


# --- sector norms ---

def test_pair_norm_formula_values():
    assert [hop_pair_norm_formula(m) for m in range(4)] == [0, 1, math.sqrt(2), 2]
    for m in range(1, 12):
        assert hop_pair_norm_formula(m) <= (m + 1) / 2


@pytest.mark.parametrize("d,N", [(1, 2), (1, 3), (1, 4), (2, 2)])
def test_sector_norms(d, N):
    lat = LatticeSpec(d, N)
    h = HoppingSpec.nearest_neighbor(lat, -0.5, onsite=0.3)
    b = basis_for(lat.size, 6)
    for m in range(7):
        r = sector_norm_checks(b, h, m)
        assert r.passed and r.pair_norm_max_error <= 1e-10


def test_sector_norm_domain():
    b = basis_for(2, 3)
    with pytest.raises(DomainError):
        sector_norm_checks(b, HoppingSpec.nearest_neighbor(LatticeSpec(1, 2), -0.5), 4)


# --- relative bounds ---

def test_relative_bounds_default_model():
    model = make_model(N=3)
    rows = relative_bound_checks(basis_for(3, 6), model, [1, 2, 5], 100, seed=7)
    assert len(rows) == 100 * 3 * 4
    assert all(r.passed for r in rows)


def test_relative_bounds_zero_hopping():
    lat = LatticeSpec(1, 3)
    model = ModelSpec(lat, HoppingSpec(lat, {}), 1.0)
    rows = relative_bound_checks(basis_for(3, 4), model, [1], 5, seed=1)
    assert all(r.lhs == 0 for r in rows if r.name in ("T_off", "T_diag"))


def test_number_bound_in_low_sector():
    # psi in D_m with m <= K: first term alone suffices
    b = basis_for(2, 4)
    g = op_global(b, HoppingSpec.nearest_neighbor(LatticeSpec(1, 2), -0.5))
    psi = np.zeros(b.dim)
    psi[list(b.sector_range(2))] = 1.0
    assert np.linalg.norm(g.N.matrix @ psi) <= 2 * np.linalg.norm(psi) + 1e-14


def test_random_states_reproducible_and_supported():
    b = basis_for(2, 5)
    a1, a2 = random_states(b, 3, 11, 4), random_states(b, 3, 11, 4)
    assert np.array_equal(a1, a2)
    assert not np.any(a1[:, b.sub_dim(4):])
    assert np.allclose(np.linalg.norm(a1, axis=1), 1)


# --- ground energy ---

def test_gamma_trivial_case():
    lat = LatticeSpec(1, 2)
    model = ModelSpec(lat, HoppingSpec(lat, {}), 1.0)
    K = smallest_admissible_K(model)
    assert gamma_bound(model, K) == 0.0
    rows = ground_energy_bound(model, [4])
    assert rows[0].ground_energy == 0.0 and all(r.passed for r in rows)


def test_gamma_admissibility():
    model = make_model(lam=0.5, mu=1.0)
    K = smallest_admissible_K(model)
    with pytest.raises(DomainError, match="admissible"):
        gamma_bound(model, K - 1)
    values = [gamma_bound(model, k) for k in (K, K + 1, K + 10)]
    assert all(v < 0 for v in values)
    rows = ground_energy_bound(model, [4, 6])
    assert len(rows) == 6 and all(r.passed for r in rows)


# --- g series ---

@pytest.mark.parametrize("U,beta,r", [(1, 1, 0), (0.5, 2, 3), (2, 0.3, 10), (1, 1, -3)])
def test_g_matches_brute_force(U, beta, r):
    gs = g_series(U, beta, r)
    assert gs.value == pytest.approx(brute_g(U, beta, r), rel=1e-14, abs=1e-16)
    h = 1e-6
    num = (brute_g(U, beta, r + h) - brute_g(U, beta, r - h)) / (2 * h)
    assert gs.derivative == pytest.approx(num, rel=1e-6, abs=1e-9)


def test_g_examples():
    assert g(1, 1, 0) == pytest.approx(math.log(sum(math.exp(-n * n) for n in range(30))))
    assert 0 < g(1, 1, -50) < 1e-12
    with pytest.raises(ValidationError):
        g_series(0, 1, 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(-5, 5))
def test_g_positive_increasing_convex(U, beta, r):
    assert g(U, beta, r) > 0
    assert g(U, beta, r + 0.1) > g(U, beta, r)
    assert g(U, beta, r) <= 0.5 * (g(U, beta, r - 0.1) + g(U, beta, r + 0.1)) + 1e-12


def test_g_shape_on_grid():
    assert g_shape_check(1.0, 1.0, np.arange(-5, 5.01, 0.1)) == (True, True)


# --- density band ---

def test_band_tight_without_hopping():
    lat = LatticeSpec(1, 2)
    model = ModelSpec(lat, HoppingSpec(lat, {}), 1.0, 0.0, 0.0, 1.0)
    rows = density_band_check(model, 30, [-1.0, 0.0, 1.0])
    for r in rows:
        assert abs(r.R - g(1, 1, r.mu)) <= 1e-12
        assert r.upper_ok and r.lower_status == "pass"


def test_band_default_model():
    rows = density_band_check(make_model(lam=0.5), 16, [-1.0, 0.0, 1.0])
    assert all(r.upper_ok and r.lower_status == "pass" for r in rows)
    rows = density_band_check(make_model(lam=0.5), 3, [1.0])
    assert rows[0].upper_ok and rows[0].lower_status == "inconclusive"


# --- density window ---

@pytest.mark.parametrize("mu0", [-2.0, 0.0, 1.5])
def test_window_invariants(mu0):
    w = density_window(1.0, 1.0, 0.5, mu0)
    assert w.C == 0 and w.lam0 > 0 and 0 < w.rho1 < w.rho2
    assert w.lam0 < (w.P1 - w.C) / (2 + g_series(1.0, 1.0, mu0 - 0.5).derivative)
    assert w.G0(1.0, 1.0, w.mu_tilde) < w.Q1


def test_window_reference_point():
    w = density_window(1.0, 1.0, 0.5, 0.0)
    model = make_model()
    rows = density_window_check(w, model, 8, [w.lam0 / 2, w.lam0 / 4])
    assert all(r.passed for r in rows)
    with pytest.raises(DomainError):
        density_window_check(w, model, 8, [2 * w.lam0])


# --- k sums ---

def test_ksum_without_dispersion():
    for d in (1, 2):
        for N in (3, 8):
            assert ksum(d, N, 0.0, 0.5) == pytest.approx((2 * np.pi) ** d / 0.5, rel=1e-14)


def test_ksum_d1_first_order_convergence():
    rows = ksum_vs_integral(1, [8, 16, 32, 64], 1.0, 1.0)
    assert rows[0].limit == pytest.approx(math.atan(2 * math.pi), rel=1e-15)
    for a, b in zip(rows, rows[1:]):
        assert a.error / b.error >= 1.8


@pytest.mark.parametrize("alpha", [1.0, 0.1, 0.01])
def test_ksum_d2_lower_bound(alpha):
    assert ksum_limit(2, 1.0, alpha) > d2_lower_bound(1.0, alpha)
    assert d2_lower_bound(1.0, alpha) == pytest.approx(
        math.pi / 4 * math.log(1 + 4 * math.pi ** 2 / alpha))


def test_ksum_limit_against_fine_sum():
    lim = ksum_limit(2, 0.5, 0.3)
    # midpoint-rule oracle
    n = 2000
    x = (np.arange(n) + 0.5) * 2 * np.pi / n
    mid = (2 * np.pi / n) ** 2 * np.sum(1 / (0.5 * np.add.outer(x ** 2, x ** 2) + 0.3))
    assert lim == pytest.approx(mid, rel=1e-5)


def test_ksum_domain():
    with pytest.raises(DomainError):
        ksum(1, 4, 1.0, 0.0)
    with pytest.raises(DomainError):
        ksum_vs_integral(1, [4], -1.0, 1.0)


# --- condensation scan ---

def test_scan_excludes_zero_lambda_and_skips_cap():
    rows = condensation_scan(1, [2], [0.5, 0.0], policy=CutoffPolicy(tol=1e-4))
    assert rows[0].status.startswith("pass") and rows[0].m > 0
    assert rows[1].status == "excluded"
    tiny = scan_point(2, 3, 0.5, 1.0, 0.0, 1.0, -0.5, CutoffPolicy(start=4, cap=100))
    assert tiny.status == "skipped_cap"


def test_scan_bound_holds():
    rows = condensation_scan(1, [3], [0.5, 0.1], policy=CutoffPolicy(tol=1e-5))
    for r in rows:
        assert r.m * r.S <= (2 * np.pi) * r.beta * r.rho * (r.rho + 0.5) * (1 + 1e-9)
    assert rows[1].bound < rows[0].bound


def test_two_by_two_torus_equals_four_ring():
    # collapsed keys make the 2x2 torus the same graph as the 4-site ring
    pol = CutoffPolicy(tol=1e-6)
    a = scan_point(1, 4, 0.2, 1.0, 0.0, 1.0, -0.5, pol)
    b = scan_point(2, 2, 0.2, 1.0, 0.0, 1.0, -0.5, pol)
    assert a.rho == pytest.approx(b.rho, abs=1e-12) and a.m == pytest.approx(b.m, abs=1e-12)
