"""The verification suite: grid jobs, per-family tables and the overall result."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

from .bogolyubov import (CLOSED_FORM_TOL, IDENTITY_TOL, verify_chain_inequality,
                         verify_closed_forms, verify_finite_bogolyubov,
                         verify_L_average_bound, verify_projection_identities)
from .bounds import (density_band_check, gamma_bound, relative_bound_checks,
                     sector_norm_checks, smallest_admissible_K)
from .config import RunConfig, parse_hopping
from .fock import basis_for
from .lattice import LatticeSpec, brillouin_momenta
from .model import ModelSpec
from .reports import versions, write_csv, write_manifest
from .thermal import Ensemble

CTX = ["d", "N", "M", "U", "mu", "lambda", "beta"]

FAMILIES: dict[str, list[str]] = {
    "projection_identities": CTX + ["k", "delta_CA", "delta_CHC", "delta_anticommutator",
                                    "q_term_min_eig", "status"],
    "commutator_closed_forms": CTX + ["k", "delta_CA", "delta_CL", "delta_CLC", "delta_CT",
                                      "delta_CTC", "delta_CHC", "dc_average", "status"],
    "bogolyubov": CTX + ["k", "anticomm_avg", "dc_direct", "dc_closed", "lhs", "rhs",
                         "slack", "lhs_with_q", "status"],
    "chain_inequality": CTX + ["k", "k2", "lhs", "rhs", "slack", "dc_average",
                               "dc_estimate", "status"],
    "l_average_bound": CTX + ["L_avg", "N_avg", "bound", "slack", "status"],
    "sector_norms": ["d", "N", "M", "m", "pair_norm", "pair_formula", "pair_norm_max_error",
                     "T_off_norm", "T_off_bound", "T_diag_norm", "T_diag_bound", "N2_min",
                     "N2_bound", "status"],
    "relative_bounds": ["d", "N", "M", "sample", "K", "inequality", "lhs", "rhs", "slack",
                        "status"],
    "ground_energy_bound": ["d", "N", "M", "U", "mu", "lambda", "K", "bound",
                            "ground_energy", "slack", "status"],
    "density_band": ["d", "N", "M", "U", "lambda", "beta", "mu", "R", "lower", "upper",
                     "increment", "upper_status", "lower_status", "status"],
}


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# --- jobs (module-level so they pickle for the process pool) ----------------------

@dataclass(frozen=True)
class PointJob:
    d: int
    N: int
    M: int
    U: float
    mu: float
    lam: float
    beta: float
    hopping: dict
    cap: int
    ground: bool            # emit ground-energy rows (beta-independent)


@dataclass(frozen=True)
class BasisJob:
    d: int
    N: int
    M: int
    hopping: dict
    cap: int
    max_m: int
    samples: int
    K: tuple[int, ...]
    seed: int


@dataclass(frozen=True)
class BandJob:
    d: int
    N: int
    M: int
    U: float
    lam: float
    beta: float
    mu_grid: tuple[float, ...]
    hopping: dict
    cap: int
    gate: float


def _model(job) -> ModelSpec:
    lat = LatticeSpec(job.d, job.N)
    hop = parse_hopping(lat, job.hopping)
    return ModelSpec(lat, hop, job.U, getattr(job, "mu", 0.0), job.lam, job.beta)


def run_point(job: PointJob) -> tuple[dict, dict]:
    out = {k: [] for k in ("projection_identities", "commutator_closed_forms", "bogolyubov",
                           "chain_inequality", "l_average_bound", "ground_energy_bound")}
    times = dict.fromkeys(out, 0.0)
    model = _model(job)
    ctx = {"d": job.d, "N": job.N, "M": job.M, "U": job.U, "mu": job.mu,
           "lambda": job.lam, "beta": job.beta}
    basis = basis_for(model.lattice.size, job.M, job.cap)
    t0 = time.perf_counter()
    ens = Ensemble.from_model(model, basis, cap=job.cap)
    t_ens = time.perf_counter() - t0

    for k in brillouin_momenta(model.lattice):
        t = time.perf_counter()
        r = verify_projection_identities(model, job.M, k, cap=job.cap)
        out["projection_identities"].append({
            **ctx, "k": k.n, "delta_CA": r.delta_CA, "delta_CHC": r.delta_CHC,
            "delta_anticommutator": r.delta_anticommutator,
            "q_term_min_eig": r.q_term_min_eig, "status": _status(r.passed),
            "_slack": IDENTITY_TOL - max(r.delta_CA, r.delta_CHC, r.delta_anticommutator)})
        times["projection_identities"] += time.perf_counter() - t

        t = time.perf_counter()
        c = verify_closed_forms(model, basis, k, ens)
        out["commutator_closed_forms"].append({
            **ctx, "k": k.n, **{f"delta_{key}": v for key, v in c.deltas.items()},
            "dc_average": c.dc_average, "status": _status(c.passed),
            "_slack": CLOSED_FORM_TOL - max(c.deltas.values())})
        times["commutator_closed_forms"] += time.perf_counter() - t

        t = time.perf_counter()
        b = verify_finite_bogolyubov(model, basis, k, ens)
        out["bogolyubov"].append({
            **ctx, "k": k.n, "anticomm_avg": b.anticomm_avg, "dc_direct": b.dc_direct,
            "dc_closed": b.dc_closed, "lhs": b.lhs, "rhs": b.rhs, "slack": b.slack,
            "lhs_with_q": b.lhs_with_q, "status": _status(b.passed), "_slack": b.slack})
        times["bogolyubov"] += time.perf_counter() - t

    t = time.perf_counter()
    if job.lam == 0:
        out["chain_inequality"].append({**ctx, "k": "all", "status": "skipped"})
    else:
        ch = verify_chain_inequality(model, basis, ens)
        for r in ch.per_k:
            out["chain_inequality"].append({
                **ctx, "k": r.k, "k2": r.k2, "lhs": r.lhs, "rhs": r.rhs,
                "slack": r.rhs - r.lhs, "dc_average": r.dc_average,
                "dc_estimate": r.dc_estimate, "status": _status(r.passed),
                "_slack": r.rhs - r.lhs})
        out["chain_inequality"].append({
            **ctx, "k": "all", "lhs": ch.lhs, "rhs": ch.rhs, "slack": ch.slack,
            "status": _status(ch.passed), "_slack": ch.slack})
    times["chain_inequality"] += time.perf_counter() - t

    t = time.perf_counter()
    lb = verify_L_average_bound(model, basis, ens)
    out["l_average_bound"].append({
        **ctx, "L_avg": lb.L_avg, "N_avg": lb.N_avg, "bound": lb.bound, "slack": lb.slack,
        "status": _status(lb.passed), "_slack": lb.slack})
    times["l_average_bound"] += time.perf_counter() - t

    if job.ground:
        t = time.perf_counter()
        e0 = float(ens.spectrum.energies[0])
        K0 = smallest_admissible_K(model)
        for K in (K0, K0 + 1, K0 + 10):
            gam = gamma_bound(model, K)
            slack = e0 - gam
            out["ground_energy_bound"].append({
                "d": job.d, "N": job.N, "M": job.M, "U": job.U, "mu": job.mu,
                "lambda": job.lam, "K": K, "bound": gam, "ground_energy": e0,
                "slack": slack, "status": _status(slack >= -1e-10 * max(1.0, abs(gam))),
                "_slack": slack})
        times["ground_energy_bound"] += time.perf_counter() - t + t_ens
    return out, times


def run_basis(job: BasisJob) -> tuple[dict, dict]:
    out = {"sector_norms": [], "relative_bounds": []}
    times = dict.fromkeys(out, 0.0)
    lat = LatticeSpec(job.d, job.N)
    hop = parse_hopping(lat, job.hopping)
    basis = basis_for(lat.size, job.M, job.cap)
    base = {"d": job.d, "N": job.N, "M": job.M}
    t = time.perf_counter()
    for m in range(min(job.max_m, job.M) + 1):
        r = sector_norm_checks(basis, hop, m)
        out["sector_norms"].append({
            **base, "m": m, "pair_norm": r.pair_norm, "pair_formula": r.pair_formula,
            "pair_norm_max_error": r.pair_norm_max_error, "T_off_norm": r.T_off_norm,
            "T_off_bound": r.T_off_bound, "T_diag_norm": r.T_diag_norm,
            "T_diag_bound": r.T_diag_bound, "N2_min": r.N2_min, "N2_bound": r.N2_bound,
            "status": _status(r.passed), "_slack": 1e-10 - r.pair_norm_max_error})
    times["sector_norms"] = time.perf_counter() - t

    t = time.perf_counter()
    # the inequalities involve neither U, mu, beta nor lambda
    model = ModelSpec(lat, hop, 1.0)
    seed = job.seed + 1000 * job.N + job.M
    for r in relative_bound_checks(basis, model, job.K, job.samples, seed):
        out["relative_bounds"].append({
            **base, "sample": r.sample, "K": r.K, "inequality": r.name, "lhs": r.lhs,
            "rhs": r.rhs, "slack": r.slack, "status": _status(r.passed), "_slack": r.slack})
    times["relative_bounds"] = time.perf_counter() - t
    return out, times


def run_band(job: BandJob) -> tuple[dict, dict]:
    t = time.perf_counter()
    model = _model(job)
    rows = []
    for r in density_band_check(model, job.M, job.mu_grid, gate=job.gate, cap=job.cap):
        status = "fail" if (not r.upper_ok or r.lower_status == "fail") else (
            "inconclusive" if r.lower_status == "inconclusive" else "pass")
        rows.append({"d": job.d, "N": job.N, "M": job.M, "U": job.U, "lambda": job.lam,
                     "beta": job.beta, "mu": r.mu, "R": r.R, "lower": r.lower,
                     "upper": r.upper, "increment": r.increment,
                     "upper_status": _status(r.upper_ok), "lower_status": r.lower_status,
                     "status": status, "_slack": r.upper - r.R})
    return {"density_band": rows}, {"density_band": time.perf_counter() - t}


# --- suite ------------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    status: str
    slack: float
    runtime: float
    rows: int
    failures: int
    inconclusive: int


@dataclass
class SuiteResult:
    checks: list[CheckResult]
    tables: dict[str, list[dict]] = field(repr=False, default_factory=dict)
    files: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(c.status == "fail" for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def status_of(self, name: str) -> str:
        return next(c.status for c in self.checks if c.name == name)


def _summarize(name: str, rows: list[dict], runtime: float) -> CheckResult:
    statuses = [r["status"] for r in rows]
    fails = statuses.count("fail")
    inconc = statuses.count("inconclusive")
    slacks = [r["_slack"] for r in rows if "_slack" in r]
    if not rows or all(s == "skipped" for s in statuses):
        status = "skipped"
    elif fails:
        status = "fail"
    elif inconc:
        status = "inconclusive"
    else:
        status = "pass"
    return CheckResult(name, status, min(slacks) if slacks else float("nan"), runtime,
                       len(rows), fails, inconc)


def _map(fn, jobs: list, n_jobs: int):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))


def build_jobs(cfg: RunConfig):
    hop = cfg.raw["model"]["hopping"]
    d, cap = cfg.d, cfg.cap
    U, mu, lam, beta = (cfg.grid(n) for n in ("U", "mu", "lambda", "beta"))
    points = [PointJob(d, N, M, u, m, l, b, hop, cap, ib == 0)
              for N, M, u, m, l, (ib, b) in product(cfg.N_list, cfg.M_list, U, mu, lam,
                                                    enumerate(beta))]
    rb = cfg.check("relative_bounds")
    bases = [BasisJob(d, N, M, hop, cap, int(cfg.check("sector_norms")["max_m"]),
                      int(rb["samples"]), tuple(int(k) for k in rb["K"]), cfg.seed)
             for N, M in product(cfg.N_list, cfg.M_list)]
    gate = float(cfg.check("density_band")["gate"])
    bands = [BandJob(d, N, M, u, l, b, tuple(mu), hop, cap, gate)
             for N, M, u, l, b in product(cfg.N_list, cfg.M_list, U, lam, beta)]
    return points, bases, bands


def run_suite(cfg: RunConfig, out_dir: Path | None = None, log=print) -> SuiteResult:
    start = time.perf_counter()
    points, bases, bands = build_jobs(cfg)
    tables = {name: [] for name in FAMILIES}
    runtime = dict.fromkeys(FAMILIES, 0.0)
    for fn, jobs in ((run_point, points), (run_basis, bases), (run_band, bands)):
        for rows, times in _map(fn, jobs, cfg.jobs):
            for name, r in rows.items():
                tables[name].extend(r)
                runtime[name] += times[name]
    checks = [_summarize(name, tables[name], runtime[name]) for name in FAMILIES]
    result = SuiteResult(checks, tables)
    if out_dir is not None:
        out_dir = Path(out_dir)
        for name, cols in FAMILIES.items():
            p = write_csv(out_dir / f"{name}.csv", cols, tables[name])
            result.files.append(p.name)
        write_manifest(out_dir / "manifest.json", {
            "command": "verify", "config_hash": cfg.hash(), "seed": cfg.seed,
            "versions": versions(), "files": result.files, "exit_code": result.exit_code,
            "total_runtime": time.perf_counter() - start,
            "checks": [c.__dict__ for c in checks]})
    if log:
        for c in checks:
            log(f"{c.name:26s} {c.status:12s} rows={c.rows:<6d} failures={c.failures:<4d} "
                f"min_slack={c.slack:.3e} time={c.runtime:.2f}s")
    return result
